#pragma once

#include <Eigen/Core>
#include <vector>

namespace camo {

/// Row-major 2-D array, indexed (row = y, col = x).
template <typename Scalar>
using PlaneArray =
    Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Plane = PlaneArray<float>;
using GrayImage = PlaneArray<double>;
using MaskArray = PlaneArray<bool>;

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct CropBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool contains(const CropBox& other) const {
    return other.x0 >= x0 && other.y0 >= y0 && other.x1 <= x1 &&
           other.y1 <= y1;
  }
  bool operator==(const CropBox&) const = default;
};

class BinaryMask;

/// Multi-channel image with intensities in [0, 1], stored as one plane per
/// channel.
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(int width, int height, int channels);
  explicit ImagePlane(std::vector<Plane> planes);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return static_cast<int>(planes_.size()); }
  bool empty() const { return planes_.empty(); }

  Plane& channel(int c) { return planes_[c]; }
  const Plane& channel(int c) const { return planes_[c]; }

  float operator()(int y, int x, int c) const { return planes_[c](y, x); }
  float& operator()(int y, int x, int c) { return planes_[c](y, x); }

  /// Throws FormatError if any value lies outside [0, 1] or is not finite.
  void check_range() const;

  ImagePlane crop(const CropBox& box) const;

  /// Replicates a single channel into three; three-channel input is returned
  /// unchanged.
  ImagePlane to_rgb() const;

  /// 0.299 R + 0.587 G + 0.114 B, or the sole channel of a gray image.
  GrayImage luminance() const;

  static ImagePlane from_mask(const BinaryMask& mask);
  static ImagePlane from_gray(const GrayImage& gray);

  bool operator==(const ImagePlane& other) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Plane> planes_;
};

/// One boolean per pixel.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool value = false);
  explicit BinaryMask(MaskArray bits) : bits_(std::move(bits)) {}

  int width() const { return static_cast<int>(bits_.cols()); }
  int height() const { return static_cast<int>(bits_.rows()); }
  long count() const { return static_cast<long>(bits_.count()); }
  bool none() const { return !bits_.any(); }

  bool operator()(int y, int x) const { return bits_(y, x); }
  bool& operator()(int y, int x) { return bits_(y, x); }

  MaskArray& bits() { return bits_; }
  const MaskArray& bits() const { return bits_; }

  /// Tight bounding box of the set pixels; all-zero box when none are set.
  CropBox bbox() const;
  BinaryMask crop(const CropBox& box) const;
  /// Places this mask at `box` inside an all-false frame.
  BinaryMask paste_into(int frame_width, int frame_height,
                        const CropBox& box) const;

  bool same_size(const BinaryMask& other) const {
    return width() == other.width() && height() == other.height();
  }

  BinaryMask operator!() const { return BinaryMask(MaskArray(!bits_)); }
  BinaryMask operator&(const BinaryMask& o) const {
    return BinaryMask(MaskArray(bits_ && o.bits_));
  }
  BinaryMask operator|(const BinaryMask& o) const {
    return BinaryMask(MaskArray(bits_ || o.bits_));
  }
  /// Set difference: this AND NOT other.
  BinaryMask minus(const BinaryMask& o) const {
    return BinaryMask(MaskArray(bits_ && !o.bits_));
  }
  bool subset_of(const BinaryMask& o) const { return !(bits_ && !o.bits_).any(); }

  bool operator==(const BinaryMask& o) const {
    return same_size(o) && (bits_ == o.bits_).all();
  }

 private:
  MaskArray bits_;
};

/// Bit set iff value > 0.5. Requires a single-channel plane.
BinaryMask binarize(const ImagePlane& img);

}  // namespace camo
