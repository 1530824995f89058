#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "camoscore/contours.hpp"
#include "camoscore/features.hpp"
#include "camoscore/frechet.hpp"
#include "camoscore/image.hpp"
#include "camoscore/morphology.hpp"
#include "camoscore/reconstruction.hpp"

namespace camo {

/// Where contour maps or feature maps come from: computed in-process, or
/// read from sidecar files in `dir`.
struct SourceSpec {
  bool external = false;
  std::filesystem::path dir;
};

/// Every tunable of the scoring pipeline. Defaults: alpha 0.35, lambda 0.2,
/// 7x7 patches with an overlap of 3, 100 Newton-Schulz iterations.
struct ScoreConfig {
  double alpha = 0.35;
  ReconstructionParams recon;
  KernelRange kernel_range;
  std::optional<KernelChoice> kernels;  // forced kernels bypass the search
  bool crop = true;
  double crop_margin = 0.5;
  BoundaryParams boundary;
  SourceSpec contours;
  SourceSpec features;
  FeatureParams feature_params;
  NewtonSchulzParams sqrt;
  int threads = 0;  // 0: hardware concurrency
  std::filesystem::path dump_recon;
};

/// Externally computed inputs for one example, already loaded.
struct Sidecars {
  std::optional<ContourMap> contours;  // full-frame size
  std::optional<FeatureMap> features;  // any grid covering the full frame
};

struct ScoreReport {
  std::string example_id;
  std::string group;
  bool ok = true;
  std::string error;

  double s_rf = std::numeric_limits<double>::quiet_NaN();
  double s_b = std::numeric_limits<double>::quiet_NaN();
  double s_alpha = std::numeric_limits<double>::quiet_NaN();
  double d2 = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0.35;

  CropBox crop;
  KernelChoice kernels;
  std::vector<std::string> warnings;
  std::string config_hash;

  // Provenance and intermediate quantities.
  std::string contour_source;
  std::string extractor_id;
  int feature_dim = 0;
  long fg_pixels = 0;
  double precision = 0.0;
  double recall = 0.0;
  double mean_term = std::numeric_limits<double>::quiet_NaN();
  double cov_term = std::numeric_limits<double>::quiet_NaN();
  int sqrt_iterations = 0;
};

/// (1 - alpha) s_rf + alpha s_b. All inputs must lie in [0, 1].
double combined_score(double s_rf, double s_b, double alpha = 0.35);

/// Loads the sidecar files requested by `config` for an example. Contour maps
/// are looked up as `<id>.contour.png`, then `<image-stem>.contour.png`;
/// feature maps as `<id>.feat`, then `<image-stem>.feat`.
Sidecars load_sidecars(const ScoreConfig& config, const std::string& example_id,
                       const std::filesystem::path& image_path);

/// Crop, trimap, reconstruction fidelity, boundary visibility, Frechet
/// distance and their combination for one image/mask pair.
///
/// Throws ShapeError on a size mismatch and DegenerateInputError on an empty
/// mask. A background too small for one patch gives s_rf = 0 and a warning;
/// a region too small for statistics leaves d2 as NaN with a warning.
ScoreReport score_example(const ImagePlane& image, const BinaryMask& mask,
                          const ScoreConfig& config, const Sidecars& sidecars = {},
                          const std::string& example_id = {});

}  // namespace camo
