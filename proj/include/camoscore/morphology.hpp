#pragma once

#include <string>
#include <vector>

#include "camoscore/image.hpp"

namespace camo {

/// Binary erosion with a square structuring element of side `kernel`.
/// Pixels outside the frame count as background.
BinaryMask erode(const BinaryMask& mask, int kernel);
/// Binary dilation, square element, zero padding.
BinaryMask dilate(const BinaryMask& mask, int kernel);

/// Inclusive range of candidate kernel sides; only odd values are scanned.
struct KernelRange {
  int min = 1;
  int max = 21;
};

struct KernelChoice {
  int erode = 1;
  int dilate = 1;
};

/// Picks, independently for erosion and dilation, the kernel whose output
/// area is closest to `erode_ratio` (resp. `dilate_ratio`) times the mask
/// area. Erosions that empty the mask are never chosen. Ties go to the
/// smaller kernel.
KernelChoice select_kernels(const BinaryMask& mask, KernelRange range = {},
                            double erode_ratio = 0.8,
                            double dilate_ratio = 1.2);

/// Foreground / background / boundary-band partition of a frame.
struct Trimap {
  BinaryMask fg;
  BinaryMask bg;
  BinaryMask band;
  int erode_kernel = 1;
  int dilate_kernel = 1;
  std::vector<std::string> warnings;
};

Trimap make_trimap(const BinaryMask& mask, const KernelChoice& kernels);
Trimap make_trimap(const BinaryMask& mask, KernelRange range = {});

/// Mask bounding box grown by `margin` times its width/height on each side,
/// clamped to the frame.
CropBox object_crop_box(const BinaryMask& mask, double margin = 0.5);

struct CroppedPair {
  ImagePlane image;
  BinaryMask mask;
  CropBox box;
};

CroppedPair crop_to_object(const ImagePlane& img, const BinaryMask& mask,
                           double margin = 0.5);

}  // namespace camo
