#include "camoscore/image.hpp"

#include <algorithm>
#include <cmath>

#include "camoscore/error.hpp"

namespace camo {

ImagePlane::ImagePlane(int width, int height, int channels)
    : width_(width), height_(height) {
  if (width < 0 || height < 0 || channels < 1) {
    throw ShapeError("invalid image dimensions");
  }
  planes_.assign(channels, Plane::Zero(height, width));
}

ImagePlane::ImagePlane(std::vector<Plane> planes) : planes_(std::move(planes)) {
  if (planes_.empty()) throw ShapeError("image needs at least one channel");
  height_ = static_cast<int>(planes_.front().rows());
  width_ = static_cast<int>(planes_.front().cols());
  for (const auto& p : planes_) {
    if (p.rows() != height_ || p.cols() != width_) {
      throw ShapeError("channel planes differ in size");
    }
  }
}

void ImagePlane::check_range() const {
  for (const auto& p : planes_) {
    if (!p.isFinite().all() || (p < 0.0f).any() || (p > 1.0f).any()) {
      throw FormatError("image intensities must lie in [0, 1]");
    }
  }
}

ImagePlane ImagePlane::crop(const CropBox& box) const {
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > width_ || box.y1 > height_ ||
      box.width() <= 0 || box.height() <= 0) {
    throw ShapeError("crop box outside the frame");
  }
  std::vector<Plane> out;
  out.reserve(planes_.size());
  for (const auto& p : planes_) {
    out.emplace_back(p.block(box.y0, box.x0, box.height(), box.width()));
  }
  return ImagePlane(std::move(out));
}

ImagePlane ImagePlane::to_rgb() const {
  if (channels() == 3) return *this;
  if (channels() != 1) {
    throw ShapeError("expected a 1- or 3-channel image, got " +
                     std::to_string(channels()));
  }
  return ImagePlane({planes_[0], planes_[0], planes_[0]});
}

GrayImage ImagePlane::luminance() const {
  if (channels() == 1) return planes_[0].cast<double>();
  if (channels() < 3) throw ShapeError("luminance needs 1 or 3 channels");
  return 0.299 * planes_[0].cast<double>() + 0.587 * planes_[1].cast<double>() +
         0.114 * planes_[2].cast<double>();
}

ImagePlane ImagePlane::from_mask(const BinaryMask& mask) {
  return ImagePlane({mask.bits().cast<float>()});
}

ImagePlane ImagePlane::from_gray(const GrayImage& gray) {
  return ImagePlane({gray.cast<float>()});
}

bool ImagePlane::operator==(const ImagePlane& other) const {
  if (width_ != other.width_ || height_ != other.height_ ||
      channels() != other.channels()) {
    return false;
  }
  for (int c = 0; c < channels(); ++c) {
    if (!(planes_[c] == other.planes_[c]).all()) return false;
  }
  return true;
}

BinaryMask::BinaryMask(int width, int height, bool value)
    : bits_(MaskArray::Constant(height, width, value)) {}

CropBox BinaryMask::bbox() const {
  CropBox box{width(), height(), 0, 0};
  bool any = false;
  for (int y = 0; y < height(); ++y) {
    for (int x = 0; x < width(); ++x) {
      if (!bits_(y, x)) continue;
      any = true;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x + 1);
      box.y1 = std::max(box.y1, y + 1);
    }
  }
  return any ? box : CropBox{};
}

BinaryMask BinaryMask::crop(const CropBox& box) const {
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > width() || box.y1 > height() ||
      box.width() <= 0 || box.height() <= 0) {
    throw ShapeError("crop box outside the frame");
  }
  return BinaryMask(
      MaskArray(bits_.block(box.y0, box.x0, box.height(), box.width())));
}

BinaryMask BinaryMask::paste_into(int frame_width, int frame_height,
                                  const CropBox& box) const {
  if (box.width() != width() || box.height() != height() || box.x0 < 0 ||
      box.y0 < 0 || box.x1 > frame_width || box.y1 > frame_height) {
    throw ShapeError("paste box does not match the mask");
  }
  BinaryMask out(frame_width, frame_height);
  out.bits().block(box.y0, box.x0, box.height(), box.width()) = bits_;
  return out;
}

BinaryMask binarize(const ImagePlane& img) {
  if (img.channels() != 1) {
    throw ShapeError("binarize expects a single-channel plane, got " +
                     std::to_string(img.channels()) + " channels");
  }
  return BinaryMask(MaskArray(img.channel(0) > 0.5f));
}

}  // namespace camo
