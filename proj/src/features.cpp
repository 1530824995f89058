#include "camoscore/features.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "camoscore/error.hpp"

namespace camo {
namespace {

static_assert(std::endian::native == std::endian::little,
              "feature file I/O assumes a little-endian host");

constexpr char kMagic[4] = {'C', 'A', 'M', 'F'};
constexpr std::uint32_t kVersion = 1;

struct Gradients {
  GrayImage magnitude;
  GrayImage angle;
};

Gradients gradients(const GrayImage& g) {
  const int h = static_cast<int>(g.rows());
  const int w = static_cast<int>(g.cols());
  auto at = [&](int y, int x) {
    return g(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1));
  };
  Gradients out{GrayImage::Zero(h, w), GrayImage::Zero(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = ((at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                         (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1))) /
                        8.0;
      const double gy = ((at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                         (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1))) /
                        8.0;
      out.magnitude(y, x) = std::sqrt(gx * gx + gy * gy);
      out.angle(y, x) = std::atan2(gy, gx);
    }
  }
  return out;
}

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool read_raw(std::ifstream& in, T& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

}  // namespace

FeatureMap extract_features(const ImagePlane& source, const FeatureParams& params) {
  if (params.stride < 1 || params.radius < 0) throw ParameterError("invalid feature parameters");
  if (source.empty() || source.width() == 0 || source.height() == 0) {
    throw ShapeError("cannot extract features from an empty image");
  }
  const ImagePlane img = source.to_rgb();
  const int h = img.height();
  const int w = img.width();
  const GrayImage lum = img.luminance();
  const Gradients grad = gradients(lum);

  FeatureMap fm;
  fm.width = (w + params.stride - 1) / params.stride;
  fm.height = (h + params.stride - 1) / params.stride;
  fm.extractor_id = kBuiltinExtractorId;
  fm.vectors.setZero(feature::kDim, static_cast<Eigen::Index>(fm.width) * fm.height);

  constexpr double kSector = std::numbers::pi / 4.0;
  const int r = params.radius;
  for (int gy = 0; gy < fm.height; ++gy) {
    for (int gx = 0; gx < fm.width; ++gx) {
      const int cy = gy * params.stride;
      const int cx = gx * params.stride;
      const int y0 = std::max(0, cy - r), y1 = std::min(h, cy + r + 1);
      const int x0 = std::max(0, cx - r), x1 = std::min(w, cx + r + 1);
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      auto f = fm.at(gy, gx);

      for (int c = 0; c < 3; ++c) {
        const auto win = img.channel(c).block(y0, x0, y1 - y0, x1 - x0).cast<double>();
        const double mean = win.sum() / n;
        f(feature::kMean + c) = mean;
        f(feature::kStd + c) = std::sqrt((win - mean).square().sum() / n);
      }

      std::array<int, 16> lum_bins{};
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      double mag_sum = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          const double m = grad.magnitude(y, x);
          mag_sum += m;
          if (m > 0.0) {
            // Linear split between the two nearest bin centres (k * 45 deg).
            double pos = grad.angle(y, x) / kSector;
            if (pos < 0.0) pos += 8.0;
            const int b0 = static_cast<int>(std::floor(pos)) % 8;
            const double t = pos - std::floor(pos);
            f(feature::kOrientation + b0) += m * (1.0 - t) / n;
            f(feature::kOrientation + (b0 + 1) % 8) += m * t / n;
          }
          const double l = lum(y, x);
          lo = std::min(lo, l);
          hi = std::max(hi, l);
          lum_bins[std::clamp(static_cast<int>(l * 16.0), 0, 15)] += 1;
        }
      }
      f(feature::kGradient) = mag_sum / n;
      double entropy = 0.0;
      for (int count : lum_bins) {
        if (count == 0) continue;
        const double p = count / n;
        entropy -= p * std::log(p);
      }
      f(feature::kEntropy) = entropy;
      f(feature::kContrast) = hi - lo;
    }
  }
  return fm;
}

FeatureMap read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file " + path.string());
  char magic[4];
  std::uint32_t version = 0, h = 0, w = 0, d = 0;
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path.string() + ": missing CAMF magic");
  }
  if (!read_raw(in, version) || !read_raw(in, h) || !read_raw(in, w) || !read_raw(in, d)) {
    throw FormatError(path.string() + ": truncated header");
  }
  if (version != kVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  if (h == 0 || w == 0 || d == 0) throw FormatError(path.string() + ": invalid dimensions");
  FeatureMap fm;
  fm.width = static_cast<int>(w);
  fm.height = static_cast<int>(h);
  fm.extractor_id = "external:" + path.filename().string();
  const std::size_t count = static_cast<std::size_t>(h) * w * d;
  std::vector<float> raw(count);
  if (!in.read(reinterpret_cast<char*>(raw.data()),
               static_cast<std::streamsize>(count * sizeof(float)))) {
    throw FormatError(path.string() + ": truncated payload");
  }
  const Eigen::Map<const Eigen::MatrixXf> view(raw.data(), d,
                                               static_cast<Eigen::Index>(h) * w);
  if (!view.allFinite()) throw FormatError(path.string() + ": non-finite feature values");
  fm.vectors = view.cast<double>();
  return fm;
}

void write_feature_file(const std::filesystem::path& path, const FeatureMap& fm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file " + path.string());
  out.write(kMagic, 4);
  write_raw(out, kVersion);
  write_raw(out, static_cast<std::uint32_t>(fm.height));
  write_raw(out, static_cast<std::uint32_t>(fm.width));
  write_raw(out, static_cast<std::uint32_t>(fm.dim()));
  const Eigen::MatrixXf values = fm.vectors.cast<float>();
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!out) throw IoError("failed writing feature file " + path.string());
}

BinaryMask downsample_region(const BinaryMask& region, int grid_w, int grid_h) {
  if (grid_w < 1 || grid_h < 1) throw ShapeError("empty feature grid");
  const long h = region.height();
  const long w = region.width();
  BinaryMask out(grid_w, grid_h);
  for (int gy = 0; gy < grid_h; ++gy) {
    const long y0 = gy * h / grid_h, y1 = (gy + 1) * h / grid_h;
    for (int gx = 0; gx < grid_w; ++gx) {
      const long x0 = gx * w / grid_w, x1 = (gx + 1) * w / grid_w;
      const long cells = (y1 - y0) * (x1 - x0);
      if (cells == 0) continue;
      const long on = region.bits().block(y0, x0, y1 - y0, x1 - x0).count();
      out(gy, gx) = 2 * on > cells;
    }
  }
  return out;
}

}  // namespace camo
