#include "camoscore/contours.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "camoscore/error.hpp"
#include "camoscore/image_io.hpp"

namespace camo {
namespace {

struct Gradient {
  GrayImage gx;
  GrayImage gy;
};

// 3x3 Sobel derivatives with replicated borders.
Gradient sobel(const GrayImage& g) {
  const int h = static_cast<int>(g.rows());
  const int w = static_cast<int>(g.cols());
  auto at = [&](int y, int x) {
    return g(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1));
  };
  Gradient out{GrayImage::Zero(h, w), GrayImage::Zero(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.gx(y, x) = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1)) -
                     (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
      out.gy(y, x) = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1)) -
                     (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
    }
  }
  return out;
}

}  // namespace

ContourMap detect_edges(const ImagePlane& img, const EdgeParams& params) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw ShapeError("edge detection needs a 1- or 3-channel image");
  }
  const int h = img.height();
  const int w = img.width();
  const Gradient grad = sobel(img.luminance());
  GrayImage mag = (grad.gx.square() + grad.gy.square()).sqrt();
  const double peak = mag.size() ? mag.maxCoeff() : 0.0;

  ContourMap out{ImagePlane(w, h, 1), ContourSource::Builtin, 0.5};
  if (peak <= 0.0) return out;
  mag /= peak;

  auto m = [&](int y, int x) {
    return (y < 0 || x < 0 || y >= h || x >= w) ? 0.0 : mag(y, x);
  };
  // Unit steps for the eight quantized gradient directions, counter-clockwise
  // from +x (y grows downwards, matching gy).
  static constexpr int kStep[8][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1},
                                      {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  GrayImage thin = GrayImage::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = mag(y, x);
      if (v < params.low) continue;
      const double angle = std::atan2(grad.gy(y, x), grad.gx(y, x));
      int sector = static_cast<int>(std::lround(angle / (std::numbers::pi / 4.0)));
      sector = ((sector % 8) + 8) % 8;
      const int sx = kStep[sector][0];
      const int sy = kStep[sector][1];
      // Towards the brighter side strictly, towards the darker side weakly:
      // a plateau of two equal responses keeps the brighter pixel.
      if (v > m(y + sy, x + sx) && v >= m(y - sy, x - sx)) thin(y, x) = v;
    }
  }

  // Hysteresis: keep weak pixels 8-connected to a strong one.
  Plane& edges = out.plane.channel(0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (thin(y, x) >= params.high && edges(y, x) == 0.0f) {
        edges(y, x) = 1.0f;
        stack.emplace_back(y, x);
        while (!stack.empty()) {
          const auto [cy, cx] = stack.back();
          stack.pop_back();
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int ny = cy + dy;
              const int nx = cx + dx;
              if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
              if (edges(ny, nx) == 0.0f && thin(ny, nx) >= params.low) {
                edges(ny, nx) = 1.0f;
                stack.emplace_back(ny, nx);
              }
            }
          }
        }
      }
    }
  }
  return out;
}

ContourMap ground_truth_contours(const BinaryMask& mask, const EdgeParams& params) {
  if (mask.none()) throw DegenerateInputError("cannot trace contours of an empty mask");
  return detect_edges(ImagePlane::from_mask(mask), params);
}

ContourMap load_contour_map(const std::filesystem::path& path, int width, int height) {
  ImagePlane img = load_image(path);
  if (img.channels() != 1) img = ImagePlane::from_gray(img.luminance());
  if (img.width() != width || img.height() != height) {
    throw ShapeError(path.string() + ": contour map is " + std::to_string(img.width()) +
                     "x" + std::to_string(img.height()) + ", expected " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
  return ContourMap{std::move(img), ContourSource::External, 0.5};
}

namespace {

// Size of a maximum one-to-one matching between predicted and truth pixels
// lying within Chebyshev distance `radius` of each other. Candidates are tried
// exact match first, then in raster order, so the result is deterministic.
long match_contours(const BinaryMask& gt, const BinaryMask& c, int radius) {
  const int h = gt.height();
  const int w = gt.width();
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> gt_id(h, w);
  gt_id.setConstant(-1);
  int n_gt = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (gt(y, x)) gt_id(y, x) = n_gt++;

  std::vector<std::vector<int>> adjacency;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!c(y, x)) continue;
      std::vector<int> near;
      if (gt(y, x)) near.push_back(gt_id(y, x));
      for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius); ++yy)
        for (int xx = std::max(0, x - radius); xx <= std::min(w - 1, x + radius); ++xx)
          if ((yy != y || xx != x) && gt(yy, xx)) near.push_back(gt_id(yy, xx));
      if (!near.empty()) adjacency.push_back(std::move(near));
    }
  }

  // Augmenting paths (Kuhn), iterative to keep the stack flat.
  std::vector<int> owner(n_gt, -1);
  std::vector<int> stamp(n_gt, -1);
  long matched = 0;
  struct Frame {
    int pred;
    std::size_t next;
    int via;  // truth pixel that led here
  };
  std::vector<Frame> stack;
  for (int p = 0; p < static_cast<int>(adjacency.size()); ++p) {
    stack.assign(1, Frame{p, 0, -1});
    bool found = false;
    while (!stack.empty() && !found) {
      Frame& f = stack.back();
      if (f.next == adjacency[f.pred].size()) {
        stack.pop_back();
        continue;
      }
      const int g = adjacency[f.pred][f.next++];
      if (stamp[g] == p) continue;
      stamp[g] = p;
      if (owner[g] < 0) {
        // Flip the path: each frame takes the truth pixel its child came by.
        int take = g;
        for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
          owner[take] = it->pred;
          take = it->via;
        }
        found = true;
      } else {
        stack.push_back(Frame{owner[g], 0, g});
      }
    }
    if (found) ++matched;
  }
  return matched;
}

}  // namespace

BoundaryF1 boundary_f1(const ContourMap& truth, const ContourMap& predicted,
                       const BinaryMask& band, int tolerance_kernel) {
  if (tolerance_kernel < 1 || tolerance_kernel % 2 == 0) {
    throw ParameterError("match tolerance kernel must be odd and >= 1");
  }
  const BinaryMask gt = truth.binary();
  const BinaryMask c = predicted.binary();
  if (!gt.same_size(band) || !c.same_size(band)) {
    throw ShapeError("contour maps and band differ in size");
  }
  BoundaryF1 r;
  const BinaryMask gt_band = gt & band;
  const BinaryMask c_band = c & band;
  r.truth = gt_band.count();
  r.predicted = c_band.count();
  r.matched = match_contours(gt_band, c_band, tolerance_kernel / 2);
  if (r.predicted > 0) {
    r.precision = static_cast<double>(r.matched) / static_cast<double>(r.predicted);
  }
  if (r.truth > 0) r.recall = static_cast<double>(r.matched) / static_cast<double>(r.truth);
  if (r.precision + r.recall > 0.0) {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

BoundaryResult boundary_score(const ContourMap& image_contours, const BinaryMask& mask,
                              const Trimap& trimap, const BoundaryParams& params) {
  const ContourMap truth = ground_truth_contours(mask, params.edges);
  BoundaryResult r;
  r.f1 = boundary_f1(truth, image_contours, trimap.band, params.tolerance_kernel);
  r.s_b = 1.0 - r.f1.f1;
  return r;
}

BoundaryResult boundary_score(const ImagePlane& img, const BinaryMask& mask,
                              const Trimap& trimap, const BoundaryParams& params) {
  return boundary_score(detect_edges(img, params.edges), mask, trimap, params);
}

}  // namespace camo
