#pragma once

// Synthetic images and independent reference implementations shared by the
// unit tests and the acceptance binary.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <random>
#include <vector>

#include "camoscore/dataset.hpp"
#include "camoscore/image.hpp"
#include "camoscore/kendall.hpp"
#include "camoscore/synth.hpp"

namespace camo::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("camoscore-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline BinaryMask square_mask(int w, int h, int x0, int y0, int side) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) m(y, x) = true;
  return m;
}

inline BinaryMask disk_mask(int w, int h, double cx, double cy, double r) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m(y, x) = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
  return m;
}

inline ImagePlane solid(int w, int h, float r, float g, float b) {
  ImagePlane img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img(y, x, 0) = r;
      img(y, x, 1) = g;
      img(y, x, 2) = b;
    }
  return img;
}

/// Colour noise tile of side `period` repeated over the frame, values in
/// [0.2, 0.8].
inline ImagePlane periodic_texture(int w, int h, int period, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<float> tile(static_cast<std::size_t>(period) * period * 3);
  for (auto& v : tile) v = 0.2f + 0.6f * static_cast<float>(uniform_int(rng, 0, 1000)) / 1000.0f;
  ImagePlane img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img(y, x, c) = tile[((y % period) * period + (x % period)) * 3 + c];
  return img;
}

/// Copies `src` into `dst` where `mask` is set.
inline ImagePlane paste(ImagePlane dst, const ImagePlane& src, const BinaryMask& mask) {
  for (int y = 0; y < dst.height(); ++y)
    for (int x = 0; x < dst.width(); ++x)
      if (mask(y, x))
        for (int c = 0; c < dst.channels(); ++c) dst(y, x, c) = src(y, x, c);
  return dst;
}

/// Matched texture: the object is cut from the same periodic texture as its
/// surround, so every foreground patch has an exact background twin.
struct Fixture {
  ImagePlane image;
  BinaryMask mask;
};

inline Fixture matched_texture_fixture() {
  return {periodic_texture(96, 96, 8, 11), disk_mask(96, 96, 48, 48, 16)};
}

inline Fixture red_on_blue_fixture() {
  const BinaryMask m = disk_mask(96, 96, 48, 48, 16);
  return {paste(solid(96, 96, 0.1f, 0.1f, 0.9f), solid(96, 96, 0.9f, 0.1f, 0.1f), m), m};
}

inline ImagePlane checkerboard(int w, int h, int square, float dark, float light) {
  ImagePlane img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img(y, x, c) = ((x / square + y / square) % 2) ? light : dark;
  return img;
}

/// Object whose outline does not show: a disk cut from a coarse checkerboard
/// and left in place, so only the board's own edges cross the band.
inline Fixture hidden_edge_fixture() {
  return {checkerboard(128, 128, 24, 0.4f, 0.7f), disk_mask(128, 128, 64.5, 64.5, 16)};
}

/// Bright disk on a dark plain field.
inline Fixture high_contrast_fixture() {
  const BinaryMask m = disk_mask(96, 96, 48, 48, 16);
  return {paste(solid(96, 96, 0.1f, 0.1f, 0.1f), solid(96, 96, 0.95f, 0.95f, 0.95f), m), m};
}

// Reference erosion: direct window enumeration with zero padding.
inline BinaryMask erode_reference(const BinaryMask& m, int k) {
  const int r = k / 2;
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool all = true;
      for (int dy = -r; dy <= r && all; ++dy)
        for (int dx = -r; dx <= r && all; ++dx) {
          const int yy = y + dy, xx = x + dx;
          all = yy >= 0 && xx >= 0 && yy < m.height() && xx < m.width() && m(yy, xx);
        }
      out(y, x) = all;
    }
  return out;
}

inline BinaryMask dilate_reference(const BinaryMask& m, int k) {
  const int r = k / 2;
  BinaryMask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      bool any = false;
      for (int dy = -r; dy <= r && !any; ++dy)
        for (int dx = -r; dx <= r && !any; ++dx) {
          const int yy = y + dy, xx = x + dx;
          any = yy >= 0 && xx >= 0 && yy < m.height() && xx < m.width() && m(yy, xx);
        }
      out(y, x) = any;
    }
  return out;
}

/// Random blobby mask: a few rectangles and disks.
inline BinaryMask random_mask(std::mt19937_64& rng, int w, int h) {
  BinaryMask m(w, h);
  const int shapes = uniform_int(rng, 1, 4);
  for (int s = 0; s < shapes; ++s) {
    const int cx = uniform_int(rng, 0, w - 1), cy = uniform_int(rng, 0, h - 1);
    const int r = uniform_int(rng, 1, std::max(2, std::min(w, h) / 4));
    const bool disk = uniform_int(rng, 0, 1) == 1;
    for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y)
      for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x)
        if (!disk || (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m(y, x) = true;
  }
  return m;
}

/// Square root of an SPD matrix through its eigendecomposition.
inline Eigen::MatrixXd eigen_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

/// Random SPD matrix of size n with condition number `cond`.
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, int n, double cond) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(n, n);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd ev(n);
  for (int i = 0; i < n; ++i) ev(i) = n == 1 ? 1.0 : std::pow(cond, -static_cast<double>(i) / (n - 1));
  return q * ev.asDiagonal() * q.transpose();
}

/// Kendall tau-b from its textbook definition over all pairs.
inline double tau_b_reference(const std::vector<double>& a, const std::vector<double>& b) {
  long long conc = 0, disc = 0, ta = 0, tb = 0, n0 = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      ++n0;
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0) ++ta;
      if (db == 0) ++tb;
      if (da * db > 0) ++conc;
      if (da * db < 0) ++disc;
    }
  return static_cast<double>(conc - disc) / std::sqrt(static_cast<double>(n0 - ta) * (n0 - tb));
}

/// Validation set whose S_alpha ranking matches the human ranking only at
/// `alpha`: pairs of items whose order flips 0.025 below and above it. Pairs
/// sit in separate score bands so their relative order never changes.
struct PlantedAlpha {
  std::vector<ComponentScores> scores;
  HumanRanking human;
};

inline PlantedAlpha planted_alpha_fixture(double alpha) {
  PlantedAlpha f;
  f.human.column = "score";
  const double w = 0.1;
  auto add_pair = [&](const std::string& tag, double base, double crossing, bool above) {
    // Item "hi" beats "lo" for alpha > crossing when `above`, else below it.
    const double sign = above ? 1.0 : -1.0;
    f.scores.push_back({tag + "-hi", base - sign * crossing * w, base + sign * (1 - crossing) * w});
    f.scores.push_back({tag + "-lo", base, base});
    f.human.entries.push_back({tag + "-hi", base + 0.01});
    f.human.entries.push_back({tag + "-lo", base});
  };
  if (alpha - 0.025 > 0.0) add_pair("a", 0.8, alpha - 0.025, true);
  if (alpha + 0.025 < 1.0) add_pair("b", 0.5, alpha + 0.025, false);
  // An anchor item keeps at least three examples at the grid ends.
  f.scores.push_back({"z", 0.1, 0.1});
  f.human.entries.push_back({"z", 0.0});
  return f;
}

}  // namespace camo::testing
