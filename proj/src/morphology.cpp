#include "camoscore/morphology.hpp"

#include <cmath>
#include <limits>

#include "camoscore/error.hpp"

namespace camo {
namespace {

void check_kernel(int kernel) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ParameterError("morphology kernel must be odd and >= 1, got " +
                         std::to_string(kernel));
  }
}

// One separable pass along each row. With `require_all` a pixel survives only
// if the whole window (including out-of-frame pixels, which are zero) is set;
// otherwise it is set if any window pixel is.
MaskArray row_pass(const MaskArray& in, int radius, bool require_all) {
  const Eigen::Index h = in.rows();
  const Eigen::Index w = in.cols();
  const int window = 2 * radius + 1;
  MaskArray out(h, w);
  std::vector<int> prefix(w + 1);
  for (Eigen::Index y = 0; y < h; ++y) {
    prefix[0] = 0;
    for (Eigen::Index x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + in(y, x);
    for (Eigen::Index x = 0; x < w; ++x) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, x - radius);
      const Eigen::Index hi = std::min<Eigen::Index>(w, x + radius + 1);
      const int n = prefix[hi] - prefix[lo];
      out(y, x) = require_all ? n == window : n > 0;
    }
  }
  return out;
}

BinaryMask separable(const BinaryMask& mask, int kernel, bool require_all) {
  check_kernel(kernel);
  if (kernel == 1) return mask;
  const int radius = kernel / 2;
  MaskArray rows = row_pass(mask.bits(), radius, require_all);
  MaskArray cols = row_pass(MaskArray(rows.transpose()), radius, require_all);
  return BinaryMask(MaskArray(cols.transpose()));
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, int kernel) {
  return separable(mask, kernel, true);
}

BinaryMask dilate(const BinaryMask& mask, int kernel) {
  return separable(mask, kernel, false);
}

KernelChoice select_kernels(const BinaryMask& mask, KernelRange range,
                            double erode_ratio, double dilate_ratio) {
  const long area = mask.count();
  if (area == 0) throw DegenerateInputError("cannot select kernels for an empty mask");
  if (range.max < range.min || range.max < 1) {
    throw ParameterError("invalid kernel range");
  }
  const int first = std::max(1, range.min % 2 == 0 ? range.min + 1 : range.min);
  if (first > range.max) throw ParameterError("kernel range holds no odd value");

  const double erode_target = erode_ratio * static_cast<double>(area);
  const double dilate_target = dilate_ratio * static_cast<double>(area);
  KernelChoice best;
  double best_erode = std::numeric_limits<double>::infinity();
  double best_dilate = std::numeric_limits<double>::infinity();
  bool erode_found = false;
  for (int k = first; k <= range.max; k += 2) {
    const long eroded = erode(mask, k).count();
    if (eroded > 0) {
      const double gap = std::abs(static_cast<double>(eroded) - erode_target);
      if (gap < best_erode) {
        best_erode = gap;
        best.erode = k;
        erode_found = true;
      }
    }
    const double gap =
        std::abs(static_cast<double>(dilate(mask, k).count()) - dilate_target);
    if (gap < best_dilate) {
      best_dilate = gap;
      best.dilate = k;
    }
  }
  if (!erode_found) best.erode = 1;
  return best;
}

Trimap make_trimap(const BinaryMask& mask, const KernelChoice& kernels) {
  if (mask.none()) throw DegenerateInputError("cannot build a trimap from an empty mask");
  Trimap t;
  t.erode_kernel = kernels.erode;
  t.dilate_kernel = kernels.dilate;
  t.fg = erode(mask, kernels.erode);
  t.bg = !dilate(mask, kernels.dilate);
  t.band = !(t.fg | t.bg);
  if (t.bg.none()) t.warnings.emplace_back("degenerate-input: trimap background is empty");
  if (t.fg.none()) t.warnings.emplace_back("degenerate-input: trimap foreground is empty");
  return t;
}

Trimap make_trimap(const BinaryMask& mask, KernelRange range) {
  return make_trimap(mask, select_kernels(mask, range));
}

CropBox object_crop_box(const BinaryMask& mask, double margin) {
  if (mask.none()) throw DegenerateInputError("cannot crop around an empty mask");
  if (!(margin >= 0.0)) throw ParameterError("crop margin must be >= 0");
  const CropBox b = mask.bbox();
  const int mx = static_cast<int>(std::ceil(margin * b.width()));
  const int my = static_cast<int>(std::ceil(margin * b.height()));
  return CropBox{std::max(0, b.x0 - mx), std::max(0, b.y0 - my),
                 std::min(mask.width(), b.x1 + mx),
                 std::min(mask.height(), b.y1 + my)};
}

CroppedPair crop_to_object(const ImagePlane& img, const BinaryMask& mask,
                           double margin) {
  if (img.width() != mask.width() || img.height() != mask.height()) {
    throw ShapeError("image and mask sizes differ");
  }
  const CropBox box = object_crop_box(mask, margin);
  return CroppedPair{img.crop(box), mask.crop(box), box};
}

}  // namespace camo
