#include "camoscore/reconstruction.hpp"

#include <cmath>

#include "camoscore/error.hpp"

namespace camo {

double fidelity_score(const ImagePlane& original, const ImagePlane& rebuilt,
                      const BinaryMask& fg, double lambda, BinaryMask* hits) {
  if (original.width() != rebuilt.width() || original.height() != rebuilt.height() ||
      original.channels() != rebuilt.channels() || original.width() != fg.width() ||
      original.height() != fg.height()) {
    throw ShapeError("fidelity inputs differ in size");
  }
  const long n_fg = fg.count();
  if (n_fg == 0) throw DegenerateInputError("trimap foreground is empty");
  BinaryMask out(fg.width(), fg.height());
  long passed = 0;
  for (int y = 0; y < fg.height(); ++y) {
    for (int x = 0; x < fg.width(); ++x) {
      if (!fg(y, x)) continue;
      double err = 0.0;
      double norm = 0.0;
      for (int c = 0; c < original.channels(); ++c) {
        const double p = original(y, x, c);
        const double d = p - rebuilt(y, x, c);
        err += d * d;
        norm += p * p;
      }
      if (std::sqrt(err) < lambda * std::sqrt(norm)) {
        out(y, x) = true;
        ++passed;
      }
    }
  }
  if (hits) *hits = std::move(out);
  return static_cast<double>(passed) / static_cast<double>(n_fg);
}

Reconstruction reconstruct_foreground(const ImagePlane& img, const Trimap& trimap,
                                      const ReconstructionParams& params) {
  const int side = params.patch_side;
  const PatchIndex index(
      extract_patches(img, trimap.bg, side, params.bg_stride, GridKind::Background),
      params.search);
  const PatchGrid fg_grid =
      extract_patches(img, trimap.fg, side, params.stride, GridKind::Foreground);

  const int channels = img.channels();
  std::vector<Plane> sum(channels, Plane::Zero(img.height(), img.width()));
  Plane count = Plane::Zero(img.height(), img.width());
  for (Eigen::Index i = 0; i < fg_grid.size(); ++i) {
    const PatchMatch m = index.nearest(fg_grid.patches.col(i));
    const auto best = index.grid().patches.col(m.index);
    const Anchor a = fg_grid.anchors[i];
    Eigen::Index k = 0;
    for (int dy = 0; dy < side; ++dy) {
      for (int dx = 0; dx < side; ++dx) {
        for (int c = 0; c < channels; ++c) sum[c](a.y + dy, a.x + dx) += best(k++);
        count(a.y + dy, a.x + dx) += 1.0f;
      }
    }
  }

  Reconstruction r;
  r.image = img;
  for (int c = 0; c < channels; ++c) {
    r.image.channel(c) = (count > 0.0f).select(sum[c] / count.max(1.0f), img.channel(c));
  }
  r.fg_pixels = trimap.fg.count();
  r.s_rf = fidelity_score(img, r.image, trimap.fg, params.lambda, &r.hits);
  return r;
}

}  // namespace camo
