#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "camoscore/image.hpp"

namespace camo {

struct Anchor {
  int x = 0;
  int y = 0;
  bool operator==(const Anchor&) const = default;
};

/// Square patches sampled from an image, one column per anchor. A column
/// stores the patch row by row, pixel by pixel, channel-interleaved.
struct PatchGrid {
  int patch_side = 7;
  int stride = 4;
  int channels = 3;
  std::vector<Anchor> anchors;  // sorted by (y, x)
  Eigen::MatrixXf patches;

  Eigen::Index size() const { return static_cast<Eigen::Index>(anchors.size()); }
  Eigen::Index dim() const { return patches.rows(); }
};

enum class GridKind {
  /// Every tiling position whose patch touches the region.
  Foreground,
  /// Tiling positions whose patch lies entirely inside the region.
  Background,
};

/// Anchor positions along one axis that tile [lo, hi) with windows of `side`
/// pixels every `stride` pixels. The last window is pulled back so that it
/// ends inside a frame of `extent` pixels.
std::vector<int> axis_anchors(int lo, int hi, int side, int stride, int extent);

PatchGrid extract_patches(const ImagePlane& img, const BinaryMask& region,
                          int patch_side, int stride, GridKind kind);

/// Copies the patch anchored at `a` into a column vector.
Eigen::VectorXf patch_at(const ImagePlane& img, Anchor a, int side);

enum class SearchMode { Exact, Approximate };

struct SearchParams {
  SearchMode mode = SearchMode::Exact;
  int trees = 4;
  int checks = 512;
  int leaf_size = 8;
  std::uint64_t seed = 0x5eed;
};

struct PatchMatch {
  Eigen::Index index = -1;
  float distance2 = 0.0f;  // squared Euclidean distance
};

/// Nearest-neighbour search over the columns of a PatchGrid. Exact search
/// breaks ties by the lowest anchor (y, then x). The approximate mode walks a
/// forest of randomized k-d trees best-bin-first within a budget of distance
/// evaluations.
class PatchIndex {
 public:
  explicit PatchIndex(PatchGrid grid, SearchParams params = {});

  const PatchGrid& grid() const { return grid_; }
  const SearchParams& params() const { return params_; }

  PatchMatch nearest(const Eigen::Ref<const Eigen::VectorXf>& query) const;
  PatchMatch nearest_exact(const Eigen::Ref<const Eigen::VectorXf>& query) const;
  PatchMatch nearest_approx(const Eigen::Ref<const Eigen::VectorXf>& query) const;

  /// Exact search comparing only the listed vector entries.
  PatchMatch nearest_masked(const Eigen::Ref<const Eigen::VectorXf>& query,
                            std::span<const int> active) const;

 private:
  struct Node {
    int dim = -1;  // -1 marks a leaf
    float split = 0.0f;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };
  struct Tree {
    std::vector<Node> nodes;
    std::vector<int> order;
  };

  void build_forest();
  int build_node(Tree& tree, int begin, int end, std::uint64_t& state);

  PatchGrid grid_;
  SearchParams params_;
  std::vector<Tree> forest_;
};

}  // namespace camo
