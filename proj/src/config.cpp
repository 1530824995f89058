#include "camoscore/config.hpp"

#include <cstdint>
#include <cstdio>

#include "camoscore/error.hpp"

namespace camo {

SourceSpec parse_source_spec(const std::string& text) {
  if (text == "builtin") return {};
  constexpr std::string_view kPrefix = "external:";
  if (text.rfind(kPrefix, 0) == 0 && text.size() > kPrefix.size()) {
    return SourceSpec{true, text.substr(kPrefix.size())};
  }
  throw ConfigError("source must be `builtin` or `external:DIR`, got `" + text + "`");
}

std::string format_source_spec(const SourceSpec& spec) {
  return spec.external ? "external:" + spec.dir.string() : "builtin";
}

nlohmann::json config_to_json(const ScoreConfig& c) {
  nlohmann::json j;
  j["alpha"] = c.alpha;
  j["lambda"] = c.recon.lambda;
  j["patch_side"] = c.recon.patch_side;
  j["stride"] = c.recon.stride;
  j["bg_stride"] = c.recon.bg_stride;
  j["nn"] = c.recon.search.mode == SearchMode::Exact ? "exact" : "approx";
  j["nn_trees"] = c.recon.search.trees;
  j["nn_checks"] = c.recon.search.checks;
  j["nn_seed"] = c.recon.search.seed;
  j["kernel_range"] = {c.kernel_range.min, c.kernel_range.max};
  j["kernels"] = c.kernels ? nlohmann::json{c.kernels->erode, c.kernels->dilate}
                           : nlohmann::json(nullptr);
  j["crop"] = c.crop;
  j["crop_margin"] = c.crop_margin;
  j["edge_high"] = c.boundary.edges.high;
  j["edge_low"] = c.boundary.edges.low;
  j["match_tolerance"] = c.boundary.tolerance_kernel;
  j["contours"] = format_source_spec(c.contours);
  j["features"] = format_source_spec(c.features);
  j["feature_stride"] = c.feature_params.stride;
  j["sqrt_iterations"] = c.sqrt.max_iterations;
  j["sqrt_tolerance"] = c.sqrt.tolerance;
  j["threads"] = c.threads;
  return j;
}

void apply_config_json(ScoreConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "lambda") c.recon.lambda = v.get<double>();
      else if (key == "patch_side") c.recon.patch_side = v.get<int>();
      else if (key == "stride") c.recon.stride = v.get<int>();
      else if (key == "bg_stride") c.recon.bg_stride = v.get<int>();
      else if (key == "nn") {
        const auto mode = v.get<std::string>();
        if (mode == "exact") c.recon.search.mode = SearchMode::Exact;
        else if (mode == "approx") c.recon.search.mode = SearchMode::Approximate;
        else throw ConfigError("nn must be `exact` or `approx`");
      } else if (key == "nn_trees") c.recon.search.trees = v.get<int>();
      else if (key == "nn_checks") c.recon.search.checks = v.get<int>();
      else if (key == "nn_seed") c.recon.search.seed = v.get<std::uint64_t>();
      else if (key == "kernel_range") {
        const auto r = v.get<std::vector<int>>();
        if (r.size() != 2) throw ConfigError("kernel_range needs two values");
        c.kernel_range = {r[0], r[1]};
      } else if (key == "kernels") {
        if (v.is_null()) {
          c.kernels.reset();
        } else {
          const auto k = v.get<std::vector<int>>();
          if (k.size() != 2) throw ConfigError("kernels needs two values");
          c.kernels = KernelChoice{k[0], k[1]};
        }
      } else if (key == "crop") c.crop = v.get<bool>();
      else if (key == "crop_margin") c.crop_margin = v.get<double>();
      else if (key == "edge_high") c.boundary.edges.high = v.get<double>();
      else if (key == "edge_low") c.boundary.edges.low = v.get<double>();
      else if (key == "match_tolerance") c.boundary.tolerance_kernel = v.get<int>();
      else if (key == "contours") c.contours = parse_source_spec(v.get<std::string>());
      else if (key == "features") c.features = parse_source_spec(v.get<std::string>());
      else if (key == "feature_stride") c.feature_params.stride = v.get<int>();
      else if (key == "sqrt_iterations") c.sqrt.max_iterations = v.get<int>();
      else if (key == "sqrt_tolerance") c.sqrt.tolerance = v.get<double>();
      else if (key == "threads") c.threads = v.get<int>();
      else throw ConfigError("unknown config key `" + key + "`");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
}

void validate_config(const ScoreConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.alpha >= 0.0 && c.alpha <= 1.0, "alpha must lie in [0, 1]");
  require(c.recon.lambda > 0.0, "lambda must be positive");
  require(c.recon.patch_side >= 1, "patch_side must be >= 1");
  require(c.recon.stride >= 1 && c.recon.stride <= c.recon.patch_side,
          "stride must lie in [1, patch_side]");
  require(c.recon.bg_stride >= 1, "bg_stride must be >= 1");
  require(c.recon.search.trees >= 1 && c.recon.search.checks >= 1,
          "nn_trees and nn_checks must be >= 1");
  require(c.kernel_range.min >= 1 && c.kernel_range.max >= c.kernel_range.min,
          "kernel_range must satisfy 1 <= min <= max");
  if (c.kernels) {
    require(c.kernels->erode >= 1 && c.kernels->erode % 2 == 1 && c.kernels->dilate >= 1 &&
                c.kernels->dilate % 2 == 1,
            "kernels must be odd and >= 1");
  }
  require(c.crop_margin >= 0.0, "crop_margin must be >= 0");
  require(c.boundary.edges.low >= 0.0 && c.boundary.edges.low <= c.boundary.edges.high,
          "edge thresholds must satisfy 0 <= low <= high");
  require(c.boundary.tolerance_kernel >= 1 && c.boundary.tolerance_kernel % 2 == 1,
          "match_tolerance must be odd and >= 1");
  require(c.feature_params.stride >= 1, "feature_stride must be >= 1");
  require(c.sqrt.max_iterations >= 1, "sqrt_iterations must be >= 1");
  require(c.threads >= 0, "threads must be >= 0");
}

std::string config_hash(const ScoreConfig& config) {
  nlohmann::json j = config_to_json(config);
  j.erase("threads");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace camo
