#include "camoscore/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "camoscore/error.hpp"

namespace camo {
namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_png(const std::vector<unsigned char>& b) {
  static constexpr unsigned char kSig[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  return b.size() >= 8 && std::equal(std::begin(kSig), std::end(kSig), b.begin());
}

bool is_jpeg(const std::vector<unsigned char>& b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

Plane to_plane(const cv::Mat& m, double scale) {
  cv::Mat f;
  m.convertTo(f, CV_32F, 1.0 / scale);
  Plane p(f.rows, f.cols);
  for (int y = 0; y < f.rows; ++y) {
    const float* row = f.ptr<float>(y);
    std::copy(row, row + f.cols, p.row(y).data());
  }
  return p;
}

cv::Mat to_u8(const Plane& p) {
  cv::Mat m(static_cast<int>(p.rows()), static_cast<int>(p.cols()), CV_8U);
  for (int y = 0; y < m.rows; ++y) {
    auto* row = m.ptr<unsigned char>(y);
    for (int x = 0; x < m.cols; ++x) {
      const float v = std::clamp(p(y, x), 0.0f, 1.0f);
      row[x] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
  }
  return m;
}

}  // namespace

ImagePlane load_image(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  if (!is_png(bytes) && !is_jpeg(bytes)) {
    throw FormatError(path.string() + ": not a PNG or JPEG file");
  }
  cv::Mat raw;
  try {
    raw = cv::imdecode(bytes, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (raw.empty()) throw FormatError(path.string() + ": cannot decode image");

  double scale = 255.0;
  if (raw.depth() == CV_16U) {
    scale = 65535.0;
  } else if (raw.depth() != CV_8U) {
    throw FormatError(path.string() + ": unsupported bit depth");
  }

  std::vector<cv::Mat> split;
  cv::split(raw, split);
  std::vector<Plane> planes;
  switch (raw.channels()) {
    case 1:
    case 2:  // gray + alpha
      planes.push_back(to_plane(split[0], scale));
      break;
    case 3:
    case 4:  // OpenCV order is BGR(A)
      planes.push_back(to_plane(split[2], scale));
      planes.push_back(to_plane(split[1], scale));
      planes.push_back(to_plane(split[0], scale));
      break;
    default:
      throw FormatError(path.string() + ": unsupported channel count");
  }
  return ImagePlane(std::move(planes));
}

BinaryMask load_mask(const std::filesystem::path& path) {
  const ImagePlane img = load_image(path);
  if (img.channels() == 1) return binarize(img);
  return binarize(ImagePlane::from_gray(img.luminance()));
}

void save_png(const std::filesystem::path& path, const ImagePlane& img) {
  cv::Mat out;
  if (img.channels() == 1) {
    out = to_u8(img.channel(0));
  } else if (img.channels() == 3) {
    std::vector<cv::Mat> bgr = {to_u8(img.channel(2)), to_u8(img.channel(1)),
                                to_u8(img.channel(0))};
    cv::merge(bgr, out);
  } else {
    throw ShapeError("PNG output supports 1 or 3 channels");
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), out);
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok) throw IoError("cannot write " + path.string());
}

void save_png(const std::filesystem::path& path, const BinaryMask& mask) {
  save_png(path, ImagePlane::from_mask(mask));
}

}  // namespace camo
