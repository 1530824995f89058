#include "camoscore/patch_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <unordered_set>

#include "camoscore/error.hpp"

namespace camo {
namespace {

// Summed-area table of a mask, (h+1) x (w+1).
PlaneArray<int> integral(const BinaryMask& m) {
  PlaneArray<int> s = PlaneArray<int>::Zero(m.height() + 1, m.width() + 1);
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      s(y + 1, x + 1) = s(y, x + 1) + s(y + 1, x) - s(y, x) + m(y, x);
    }
  }
  return s;
}

int window_count(const PlaneArray<int>& s, int x, int y, int side) {
  return s(y + side, x + side) - s(y, x + side) - s(y + side, x) + s(y, x);
}

// Squared distance between `q` and column `col`, abandoned once it exceeds
// `bound`. Returns +inf when abandoned.
float bounded_distance(const Eigen::Ref<const Eigen::VectorXf>& q,
                       const Eigen::MatrixXf& patches, Eigen::Index col,
                       float bound) {
  constexpr Eigen::Index kChunk = 21;
  const Eigen::Index dim = q.size();
  float acc = 0.0f;
  for (Eigen::Index i = 0; i < dim; i += kChunk) {
    const Eigen::Index n = std::min(kChunk, dim - i);
    acc += (patches.col(col).segment(i, n) - q.segment(i, n)).squaredNorm();
    if (acc > bound) return std::numeric_limits<float>::infinity();
  }
  return acc;
}

}  // namespace

std::vector<int> axis_anchors(int lo, int hi, int side, int stride, int extent) {
  std::vector<int> out;
  if (hi <= lo || side > extent) return out;
  int a = std::min(lo, extent - side);
  while (true) {
    out.push_back(a);
    if (a + side >= hi) break;
    a += stride;
    if (a + side > extent) {
      out.push_back(extent - side);
      break;
    }
  }
  return out;
}

Eigen::VectorXf patch_at(const ImagePlane& img, Anchor a, int side) {
  const int c = img.channels();
  Eigen::VectorXf v(side * side * c);
  Eigen::Index k = 0;
  for (int dy = 0; dy < side; ++dy) {
    for (int dx = 0; dx < side; ++dx) {
      for (int ch = 0; ch < c; ++ch) v(k++) = img(a.y + dy, a.x + dx, ch);
    }
  }
  return v;
}

PatchGrid extract_patches(const ImagePlane& img, const BinaryMask& region,
                          int patch_side, int stride, GridKind kind) {
  if (patch_side < 1 || stride < 1 || stride > patch_side) {
    throw ParameterError("patch side and stride must satisfy 1 <= stride <= side");
  }
  if (img.width() != region.width() || img.height() != region.height()) {
    throw ShapeError("patch region does not match the image size");
  }
  const bool fits = patch_side <= std::min(img.width(), img.height());
  if (kind == GridKind::Background) {
    if (!fits || region.count() < static_cast<long>(patch_side) * patch_side) {
      throw InsufficientBackgroundError("background cannot host a single " +
                                        std::to_string(patch_side) + "x" +
                                        std::to_string(patch_side) + " patch");
    }
  } else {
    if (region.none()) throw DegenerateInputError("foreground region is empty");
    if (!fits) throw ParameterError("patch side exceeds the image size");
  }

  const auto sat = integral(region);
  const int full = patch_side * patch_side;
  PatchGrid grid;
  grid.patch_side = patch_side;
  grid.stride = stride;
  grid.channels = img.channels();

  const CropBox span = kind == GridKind::Foreground
                           ? region.bbox()
                           : CropBox{0, 0, img.width(), img.height()};
  const auto xs = axis_anchors(span.x0, span.x1, patch_side, stride, img.width());
  const auto ys = axis_anchors(span.y0, span.y1, patch_side, stride, img.height());
  for (int y : ys) {
    for (int x : xs) {
      const int n = window_count(sat, x, y, patch_side);
      const bool keep = kind == GridKind::Foreground ? n > 0 : n == full;
      if (keep) grid.anchors.push_back({x, y});
    }
  }
  if (grid.anchors.empty()) {
    throw InsufficientBackgroundError("background cannot host a single full patch");
  }

  grid.patches.resize(static_cast<Eigen::Index>(full) * grid.channels, grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    grid.patches.col(i) = patch_at(img, grid.anchors[i], patch_side);
  }
  return grid;
}

PatchIndex::PatchIndex(PatchGrid grid, SearchParams params)
    : grid_(std::move(grid)), params_(params) {
  if (grid_.size() == 0) throw InsufficientBackgroundError("empty patch index");
  if (params_.mode == SearchMode::Approximate) build_forest();
}

void PatchIndex::build_forest() {
  if (params_.trees < 1 || params_.checks < 1 || params_.leaf_size < 1) {
    throw ParameterError("invalid approximate search parameters");
  }
  std::mt19937_64 rng(params_.seed);
  forest_.resize(params_.trees);
  for (auto& tree : forest_) {
    tree.order.resize(grid_.size());
    std::iota(tree.order.begin(), tree.order.end(), 0);
    std::uint64_t state = rng();
    build_node(tree, 0, static_cast<int>(grid_.size()), state);
  }
}

int PatchIndex::build_node(Tree& tree, int begin, int end, std::uint64_t& state) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.push_back(Node{-1, 0.0f, -1, -1, begin, end});
  if (end - begin <= params_.leaf_size) return id;

  // Split on a random dimension among the five of highest variance, estimated
  // from at most 128 points.
  const Eigen::Index dim = grid_.dim();
  const int sample = std::min(end - begin, 128);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < sample; ++i) {
    const auto col = grid_.patches.col(tree.order[begin + i]).cast<double>();
    mean += col;
    sq += col.cwiseAbs2();
  }
  mean /= sample;
  const Eigen::VectorXd var = sq / sample - mean.cwiseAbs2();

  std::vector<int> dims(dim);
  std::iota(dims.begin(), dims.end(), 0);
  const int top = static_cast<int>(std::min<Eigen::Index>(5, dim));
  std::partial_sort(dims.begin(), dims.begin() + top, dims.end(),
                    [&](int a, int b) { return var(a) > var(b); });
  std::mt19937_64 rng(state);
  state = rng();
  const int split_dim = dims[state % top];
  const float split = static_cast<float>(mean(split_dim));

  auto first = tree.order.begin() + begin;
  auto last = tree.order.begin() + end;
  auto middle = std::partition(first, last, [&](int i) {
    return grid_.patches(split_dim, i) < split;
  });
  int mid = static_cast<int>(middle - tree.order.begin());
  float split_value = split;
  if (mid == begin || mid == end) {
    // Every sampled value along split_dim is identical; any halving keeps the
    // single-axis bound valid for both children.
    mid = begin + (end - begin) / 2;
    split_value = grid_.patches(split_dim, tree.order[begin]);
    const bool constant = std::all_of(first, last, [&](int i) {
      return grid_.patches(split_dim, i) == split_value;
    });
    if (!constant) {
      std::nth_element(first, tree.order.begin() + mid, last, [&](int a, int b) {
        return grid_.patches(split_dim, a) < grid_.patches(split_dim, b);
      });
      split_value = grid_.patches(split_dim, tree.order[mid]);
      middle = std::partition(first, last, [&](int i) {
        return grid_.patches(split_dim, i) < split_value;
      });
      mid = static_cast<int>(middle - tree.order.begin());
      if (mid == begin || mid == end) return id;
    }
  }
  const int left = build_node(tree, begin, mid, state);
  const int right = build_node(tree, mid, end, state);
  tree.nodes[id].dim = split_dim;
  tree.nodes[id].split = split_value;
  tree.nodes[id].left = left;
  tree.nodes[id].right = right;
  return id;
}

PatchMatch PatchIndex::nearest(const Eigen::Ref<const Eigen::VectorXf>& query) const {
  return params_.mode == SearchMode::Exact ? nearest_exact(query)
                                           : nearest_approx(query);
}

PatchMatch PatchIndex::nearest_exact(const Eigen::Ref<const Eigen::VectorXf>& query) const {
  if (query.size() != grid_.dim()) throw ShapeError("query patch has the wrong length");
  PatchMatch best{-1, std::numeric_limits<float>::infinity()};
  for (Eigen::Index i = 0; i < grid_.size(); ++i) {
    const float d = bounded_distance(query, grid_.patches, i, best.distance2);
    if (d < best.distance2) best = {i, d};
  }
  if (best.index < 0) best = {0, (grid_.patches.col(0) - query).squaredNorm()};
  return best;
}

PatchMatch PatchIndex::nearest_approx(const Eigen::Ref<const Eigen::VectorXf>& query) const {
  if (forest_.empty()) return nearest_exact(query);
  if (query.size() != grid_.dim()) throw ShapeError("query patch has the wrong length");

  struct Branch {
    float bound;
    int tree;
    int node;
    bool operator>(const Branch& o) const { return bound > o.bound; }
  };
  std::priority_queue<Branch, std::vector<Branch>, std::greater<>> heap;
  for (int t = 0; t < static_cast<int>(forest_.size()); ++t) heap.push({0.0f, t, 0});

  std::unordered_set<int> seen;
  seen.reserve(static_cast<std::size_t>(params_.checks) * 2);
  PatchMatch best{-1, std::numeric_limits<float>::infinity()};
  int checks = 0;
  while (!heap.empty() && checks < params_.checks) {
    const Branch b = heap.top();
    heap.pop();
    if (b.bound > best.distance2) continue;
    const Tree& tree = forest_[b.tree];
    int n = b.node;
    while (tree.nodes[n].dim >= 0) {
      const Node& node = tree.nodes[n];
      const float diff = query(node.dim) - node.split;
      const int near = diff < 0.0f ? node.left : node.right;
      const int far = diff < 0.0f ? node.right : node.left;
      heap.push({std::max(b.bound, diff * diff), b.tree, far});
      n = near;
    }
    const Node& leaf = tree.nodes[n];
    for (int k = leaf.begin; k < leaf.end; ++k) {
      const int idx = tree.order[k];
      if (!seen.insert(idx).second) continue;
      ++checks;
      const float d = bounded_distance(query, grid_.patches, idx, best.distance2);
      if (d < best.distance2 || (d == best.distance2 && idx < best.index)) {
        best = {idx, d};
      }
    }
  }
  if (best.index < 0) return nearest_exact(query);
  return best;
}

PatchMatch PatchIndex::nearest_masked(const Eigen::Ref<const Eigen::VectorXf>& query,
                                      std::span<const int> active) const {
  if (query.size() != grid_.dim()) throw ShapeError("query patch has the wrong length");
  PatchMatch best{-1, std::numeric_limits<float>::infinity()};
  for (Eigen::Index i = 0; i < grid_.size(); ++i) {
    const auto col = grid_.patches.col(i);
    float acc = 0.0f;
    for (int k : active) {
      const float d = col(k) - query(k);
      acc += d * d;
      if (acc > best.distance2) break;
    }
    if (acc < best.distance2) best = {i, acc};
  }
  if (best.index < 0) best = {0, best.distance2};
  return best;
}

}  // namespace camo
