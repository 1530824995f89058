#pragma once

#include "camoscore/image.hpp"
#include "camoscore/morphology.hpp"
#include "camoscore/patch_index.hpp"

namespace camo {

struct ReconstructionParams {
  int patch_side = 7;
  /// Foreground tiling step; side 7 with an overlap of 3 gives 4.
  int stride = 4;
  /// Step of the background patch index.
  int bg_stride = 1;
  double lambda = 0.2;
  SearchParams search;
};

struct Reconstruction {
  /// Input image with every foreground patch replaced by its nearest
  /// background patch, overlaps averaged.
  ImagePlane image;
  /// Foreground pixels that passed the relative-error test.
  BinaryMask hits;
  double s_rf = 0.0;
  long fg_pixels = 0;
};

/// Fraction of `fg` pixels whose RGB vector p satisfies
/// ||p - p_hat|| < lambda ||p||. A black pixel never passes.
double fidelity_score(const ImagePlane& original, const ImagePlane& rebuilt,
                      const BinaryMask& fg, double lambda,
                      BinaryMask* hits = nullptr);

/// Rebuilds the trimap foreground from background patches and scores it.
/// Throws InsufficientBackgroundError when the background holds no full patch.
Reconstruction reconstruct_foreground(const ImagePlane& img, const Trimap& trimap,
                                      const ReconstructionParams& params = {});

}  // namespace camo
