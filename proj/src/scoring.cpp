#include "camoscore/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "camoscore/config.hpp"
#include "camoscore/error.hpp"
#include "camoscore/image_io.hpp"

namespace camo {
namespace {

std::filesystem::path find_sidecar(const std::filesystem::path& dir, const std::string& id,
                                   const std::filesystem::path& image_path,
                                   const std::string& suffix) {
  std::vector<std::filesystem::path> tried;
  if (!id.empty()) tried.push_back(dir / (id + suffix));
  if (!image_path.empty()) tried.push_back(dir / (image_path.stem().string() + suffix));
  for (const auto& p : tried) {
    if (std::filesystem::exists(p)) return p;
  }
  throw IoError("missing sidecar " +
                (tried.empty() ? (dir / suffix).string() : tried.back().string()));
}

std::string file_safe(std::string id) {
  if (id.empty()) return "example";
  std::replace_if(id.begin(), id.end(), [](char c) { return c == '/' || c == '\\'; }, '_');
  return id;
}

}  // namespace

double combined_score(double s_rf, double s_b, double alpha) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(s_rf) || !in_unit(s_b) || !in_unit(alpha)) {
    throw ParameterError("combined_score inputs must lie in [0, 1]");
  }
  return (1.0 - alpha) * s_rf + alpha * s_b;
}

Sidecars load_sidecars(const ScoreConfig& config, const std::string& example_id,
                       const std::filesystem::path& image_path) {
  Sidecars s;
  if (config.contours.external) {
    const auto path = find_sidecar(config.contours.dir, example_id, image_path, ".contour.png");
    ImagePlane img = load_image(path);
    if (img.channels() != 1) img = ImagePlane::from_gray(img.luminance());
    s.contours = ContourMap{std::move(img), ContourSource::External, 0.5};
  }
  if (config.features.external) {
    s.features = read_feature_file(
        find_sidecar(config.features.dir, example_id, image_path, ".feat"));
  }
  return s;
}

ScoreReport score_example(const ImagePlane& image, const BinaryMask& mask,
                          const ScoreConfig& config, const Sidecars& sidecars,
                          const std::string& example_id) {
  validate_config(config);
  if (image.width() != mask.width() || image.height() != mask.height()) {
    throw ShapeError("image is " + std::to_string(image.width()) + "x" +
                     std::to_string(image.height()) + " but mask is " +
                     std::to_string(mask.width()) + "x" + std::to_string(mask.height()));
  }
  if (mask.none()) throw DegenerateInputError("mask is empty");
  if (config.contours.external && !sidecars.contours) {
    throw ConfigError("external contours requested but none supplied");
  }
  if (config.features.external && !sidecars.features) {
    throw ConfigError("external features requested but none supplied");
  }

  ScoreReport r;
  r.example_id = example_id;
  r.alpha = config.alpha;
  r.config_hash = config_hash(config);

  const ImagePlane rgb = image.to_rgb();
  r.crop = config.crop ? object_crop_box(mask, config.crop_margin)
                       : CropBox{0, 0, image.width(), image.height()};
  const ImagePlane img = rgb.crop(r.crop);
  const BinaryMask m = mask.crop(r.crop);

  const Trimap trimap =
      config.kernels ? make_trimap(m, *config.kernels) : make_trimap(m, config.kernel_range);
  r.kernels = {trimap.erode_kernel, trimap.dilate_kernel};
  r.warnings = trimap.warnings;

  // Reconstruction fidelity.
  try {
    const Reconstruction rec = reconstruct_foreground(img, trimap, config.recon);
    r.s_rf = rec.s_rf;
    r.fg_pixels = rec.fg_pixels;
    if (!config.dump_recon.empty()) {
      std::filesystem::create_directories(config.dump_recon);
      const std::string stem = file_safe(example_id);
      save_png(config.dump_recon / (stem + ".recon.png"), rec.image);
      save_png(config.dump_recon / (stem + ".hits.png"), rec.hits);
    }
  } catch (const InsufficientBackgroundError& e) {
    r.s_rf = 0.0;
    r.fg_pixels = trimap.fg.count();
    r.warnings.push_back(std::string("insufficient-background: ") + e.what() +
                         "; s_rf set to 0");
  }

  // Boundary visibility.
  ContourMap contours;
  if (sidecars.contours) {
    const ContourMap& ext = *sidecars.contours;
    if (ext.plane.width() != image.width() || ext.plane.height() != image.height()) {
      throw ShapeError("external contour map does not match the image size");
    }
    contours = ContourMap{ext.plane.crop(r.crop), ContourSource::External, ext.threshold};
    r.contour_source = "external";
  } else {
    contours = detect_edges(img, config.boundary.edges);
    r.contour_source = "builtin";
  }
  const BoundaryResult boundary = boundary_score(contours, m, trimap, config.boundary);
  r.s_b = boundary.s_b;
  r.precision = boundary.f1.precision;
  r.recall = boundary.f1.recall;
  if (boundary.f1.truth == 0) {
    r.warnings.emplace_back("boundary: mask contour does not reach the band; s_b set to 1");
  }

  // Intra-image Frechet distance.
  try {
    FeatureMap fm;
    BinaryMask fg_region, bg_region;
    if (sidecars.features) {
      fm = *sidecars.features;
      fg_region = trimap.fg.paste_into(image.width(), image.height(), r.crop);
      bg_region = trimap.bg.paste_into(image.width(), image.height(), r.crop);
    } else {
      fm = extract_features(img, config.feature_params);
      fg_region = trimap.fg;
      bg_region = trimap.bg;
    }
    r.extractor_id = fm.extractor_id;
    r.feature_dim = fm.dim();
    const RegionStats fg_stats = region_stats(fm, fg_region);
    const RegionStats bg_stats = region_stats(fm, bg_region);
    for (const auto* s : {&fg_stats, &bg_stats}) {
      r.warnings.insert(r.warnings.end(), s->warnings.begin(), s->warnings.end());
    }
    const FrechetResult fr = frechet_distance(fg_stats, bg_stats, config.sqrt);
    r.d2 = fr.d2;
    r.mean_term = fr.mean_term;
    r.cov_term = fr.cov_term;
    r.sqrt_iterations = fr.sqrt_iterations;
    r.warnings.insert(r.warnings.end(), fr.warnings.begin(), fr.warnings.end());
  } catch (const DegenerateInputError& e) {
    r.warnings.push_back(std::string("d2 unavailable: ") + e.what());
  } catch (const ConvergenceError& e) {
    r.warnings.push_back(std::string("d2 unavailable: ") + e.what());
  }

  r.s_alpha = combined_score(r.s_rf, r.s_b, config.alpha);
  return r;
}

}  // namespace camo
