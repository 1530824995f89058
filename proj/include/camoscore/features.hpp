#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>

#include "camoscore/image.hpp"

namespace camo {

/// Per-location feature vectors on a grid, one column per location in
/// row-major order.
struct FeatureMap {
  int width = 0;
  int height = 0;
  Eigen::MatrixXd vectors;  // dim x (width * height)
  std::string extractor_id;

  int dim() const { return static_cast<int>(vectors.rows()); }
  auto at(int y, int x) { return vectors.col(static_cast<Eigen::Index>(y) * width + x); }
  auto at(int y, int x) const {
    return vectors.col(static_cast<Eigen::Index>(y) * width + x);
  }
};

/// Layout of the built-in 17-dimensional descriptor.
namespace feature {
inline constexpr int kMean = 0;         // 3: window mean R, G, B
inline constexpr int kStd = 3;          // 3: window std R, G, B
inline constexpr int kOrientation = 6;  // 8: magnitude-weighted orientation bins
inline constexpr int kGradient = 14;    // mean gradient magnitude
inline constexpr int kEntropy = 15;     // 16-bin luminance entropy (nats)
inline constexpr int kContrast = 16;    // max - min luminance
inline constexpr int kDim = 17;
}  // namespace feature

struct FeatureParams {
  int stride = 2;
  int radius = 2;  // 5x5 window
};

inline constexpr const char* kBuiltinExtractorId = "builtin-handcrafted-17";

/// Handcrafted local descriptor sampled every `stride` pixels. Window
/// statistics use only the in-frame pixels of each window.
FeatureMap extract_features(const ImagePlane& img, const FeatureParams& params = {});

/// Feature tensor file: "CAMF", u32 version = 1, u32 H, u32 W, u32 D, then
/// H*W*D little-endian float32 in row-major (H, W, D) order.
FeatureMap read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const FeatureMap& fm);

/// Majority vote of `region` (image resolution) onto a grid_w x grid_h grid
/// covering the same extent. A cell exactly half covered is left out.
BinaryMask downsample_region(const BinaryMask& region, int grid_w, int grid_h);

}  // namespace camo
