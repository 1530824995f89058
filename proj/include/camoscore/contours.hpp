#pragma once

#include <filesystem>

#include "camoscore/image.hpp"
#include "camoscore/morphology.hpp"

namespace camo {

enum class ContourSource { Builtin, External };

/// Single-channel contour strength in [0, 1].
struct ContourMap {
  ImagePlane plane;
  ContourSource source = ContourSource::Builtin;
  double threshold = 0.5;

  BinaryMask binary() const {
    return BinaryMask(MaskArray(plane.channel(0) > static_cast<float>(threshold)));
  }
};

/// Hysteresis thresholds relative to the maximum gradient magnitude.
struct EdgeParams {
  double high = 0.2;
  double low = 0.08;
};

/// Sobel magnitude with non-maximum suppression and hysteresis. Output pixels
/// are 1 on contours and 0 elsewhere. A step edge yields a single line on its
/// brighter side.
ContourMap detect_edges(const ImagePlane& img, const EdgeParams& params = {});

/// Runs the same detector on the mask rendered as a 0/1 image, which traces
/// the inner perimeter of each blob.
ContourMap ground_truth_contours(const BinaryMask& mask, const EdgeParams& params = {});

/// Reads an externally computed contour map (grayscale PNG, any colour input
/// is reduced to luminance) and checks its size.
ContourMap load_contour_map(const std::filesystem::path& path, int width, int height);

struct BoundaryF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long matched = 0;
  long predicted = 0;
  long truth = 0;
};

struct BoundaryParams {
  EdgeParams edges;
  /// Side of the window inside which two contour pixels may be paired.
  int tolerance_kernel = 3;
};

/// Contour agreement restricted to `band`. Predicted and truth pixels are
/// paired one-to-one when within the tolerance window (side
/// `tolerance_kernel`); precision and recall are the matched count over each
/// side's count. With both maps empty in the band the F1 is 0.
BoundaryF1 boundary_f1(const ContourMap& truth, const ContourMap& predicted,
                       const BinaryMask& band, int tolerance_kernel = 3);

struct BoundaryResult {
  double s_b = 1.0;
  BoundaryF1 f1;
};

/// 1 - F1 between the mask's contours and `image_contours` inside the
/// trimap band.
BoundaryResult boundary_score(const ContourMap& image_contours, const BinaryMask& mask,
                              const Trimap& trimap, const BoundaryParams& params = {});

/// Same, with contours detected on `img` by the built-in detector.
BoundaryResult boundary_score(const ImagePlane& img, const BinaryMask& mask,
                              const Trimap& trimap, const BoundaryParams& params = {});

}  // namespace camo
