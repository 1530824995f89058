// camoscore: command-line front end of the camouflage scoring library.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>

#include "camoscore/config.hpp"
#include "camoscore/dataset.hpp"
#include "camoscore/error.hpp"
#include "camoscore/image_io.hpp"
#include "camoscore/kendall.hpp"
#include "camoscore/scoring.hpp"
#include "camoscore/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Scoring flags. Each one that is set overrides the config file entry of the
// same name.
struct ScoreFlags {
  std::string config_file;
  json overrides = json::object();
  std::string dump_recon;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file (flags take precedence)");
    number<double>(app, "--alpha", "alpha", "Weight of the boundary score in S_alpha");
    number<double>(app, "--lambda", "lambda", "Relative reconstruction tolerance");
    number<int>(app, "--patch-side", "patch_side", "Patch side in pixels");
    number<int>(app, "--stride", "stride", "Foreground patch stride");
    number<int>(app, "--bg-stride", "bg_stride", "Background index stride");
    number<double>(app, "--crop-margin", "crop_margin", "Crop margin as a fraction of the box");
    number<int>(app, "--checks", "nn_checks", "Leaf checks of the approximate search");
    number<int>(app, "--threads", "threads", "Worker threads (0: all cores)");
    text(app, "--nn", "nn", "Nearest-neighbour search: exact or approx")
        ->check(CLI::IsMember({"exact", "approx"}));
    text(app, "--contours", "contours", "builtin or external:DIR");
    text(app, "--features", "features", "builtin or external:DIR");
    app->add_option_function<std::string>(
        "--kernel-range",
        [this](const std::string& v) { overrides["kernel_range"] = pair_of(v, "--kernel-range"); },
        "Kernel search range MIN,MAX (odd sides are scanned)");
    app->add_option_function<std::string>(
        "--kernels",
        [this](const std::string& v) { overrides["kernels"] = pair_of(v, "--kernels"); },
        "Fixed erosion,dilation kernels; skips the search");
    app->add_flag_callback("--no-crop", [this] { overrides["crop"] = false; },
                           "Score the full frame instead of the object crop");
    app->add_option("--dump-recon", dump_recon, "Directory for reconstruction images");
  }

  template <typename T>
  void number(CLI::App* app, const std::string& flag, const std::string& key,
              const std::string& help) {
    app->add_option_function<T>(flag, [this, key](const T& v) { overrides[key] = v; }, help);
  }

  CLI::Option* text(CLI::App* app, const std::string& flag, const std::string& key,
                    const std::string& help) {
    return app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { overrides[key] = v; }, help);
  }

  static json pair_of(const std::string& v, const std::string& flag) {
    const auto comma = v.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument(v);
      const int a = std::stoi(v.substr(0, comma));
      const int b = std::stoi(v.substr(comma + 1));
      return json{a, b};
    } catch (const std::exception&) {
      throw camo::ConfigError(flag + " expects two integers `A,B`, got `" + v + "`");
    }
  }

  camo::ScoreConfig resolve() const {
    camo::ScoreConfig config;
    if (const char* env = std::getenv("CAMOSCORE_THREADS")) {
      try {
        config.threads = std::stoi(env);
      } catch (const std::exception&) {
        throw camo::ConfigError(std::string("CAMOSCORE_THREADS is not an integer: ") + env);
      }
    }
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw camo::IoError("cannot open config file " + config_file);
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        throw camo::ConfigError("config file " + config_file + ": " + e.what());
      }
      camo::apply_config_json(config, j);
    }
    camo::apply_config_json(config, overrides);
    config.dump_recon = dump_recon;
    camo::validate_config(config);
    return config;
  }
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw camo::IoError("cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw camo::FormatError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw camo::IoError("cannot write " + path.string());
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

struct RankFlags {
  std::string key = "s_alpha";
  int top = 0;
  int bottom = 0;

  void attach(CLI::App* app) {
    app->add_option("--rank-by", key, "s_rf, s_b, s_alpha or d2")
        ->check(CLI::IsMember({"s_rf", "s_b", "s_alpha", "d2"}));
    app->add_option("--top", top, "Best-camouflaged entries to list")->check(CLI::NonNegativeNumber);
    app->add_option("--bottom", bottom, "Worst-camouflaged entries to list")
        ->check(CLI::NonNegativeNumber);
  }
};

// Ranked listing; top and bottom of zero list everything.
std::string ranking_listing(const std::vector<camo::ScoreReport>& reports, const RankFlags& f) {
  const camo::RankKey key = camo::parse_rank_key(f.key);
  const auto ranked = camo::rank(reports, key);
  std::ostringstream out;
  out << "# ranked by " << f.key << (key == camo::RankKey::D2 ? " ascending" : " descending")
      << ", best camouflage first\n";
  auto line = [&](std::size_t i) {
    out << std::setw(6) << i + 1 << "  " << format_value(ranked[i].value) << "  " << ranked[i].id
        << '\n';
  };
  const std::size_t n = ranked.size();
  if (f.top == 0 && f.bottom == 0) {
    for (std::size_t i = 0; i < n; ++i) line(i);
    return out.str();
  }
  const std::size_t top = std::min<std::size_t>(f.top, n);
  const std::size_t bottom_start = n - std::min<std::size_t>(f.bottom, n);
  if (top > 0) out << "## top " << top << '\n';
  for (std::size_t i = 0; i < top; ++i) line(i);
  if (bottom_start < n) out << "## bottom " << n - bottom_start << '\n';
  for (std::size_t i = bottom_start; i < n; ++i) line(i);
  return out.str();
}

// Grid of nearest-neighbour thumbnails with the mask outline in red.
void write_contact_sheet(const fs::path& path, const camo::Manifest& manifest,
                         const std::vector<std::string>& ids, int tile) {
  std::map<std::string, const camo::ManifestEntry*> by_id;
  for (const auto& e : manifest.examples) by_id[e.id] = &e;
  const int cols = std::max(1, std::min<int>(8, static_cast<int>(ids.size())));
  const int rows = std::max(1, (static_cast<int>(ids.size()) + cols - 1) / cols);
  camo::ImagePlane sheet(cols * tile, rows * tile, 3);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto* e = by_id.at(ids[k]);
    const camo::ImagePlane img = camo::load_image(e->image).to_rgb();
    const camo::BinaryMask mask = camo::load_mask(e->mask);
    const int ox = static_cast<int>(k % cols) * tile;
    const int oy = static_cast<int>(k / cols) * tile;
    for (int y = 0; y < tile; ++y) {
      for (int x = 0; x < tile; ++x) {
        const int sy = y * img.height() / tile;
        const int sx = x * img.width() / tile;
        const bool edge = mask(sy, sx) && (sy == 0 || sx == 0 || sy + 1 == img.height() ||
                                           sx + 1 == img.width() || !mask(sy - 1, sx) ||
                                           !mask(sy + 1, sx) || !mask(sy, sx - 1) ||
                                           !mask(sy, sx + 1));
        for (int c = 0; c < 3; ++c) {
          sheet(oy + y, ox + x, c) = edge ? (c == 0 ? 1.0f : 0.0f) : img(sy, sx, c);
        }
      }
    }
  }
  camo::save_png(path, sheet);
}

std::vector<camo::ScoreReport> level_reports(const camo::DatasetReport& report,
                                             const std::string& level) {
  if (level == "group") return camo::group_reports(report);
  return report.per_example;
}

std::vector<camo::ComponentScores> components(const std::vector<camo::ScoreReport>& reports) {
  std::vector<camo::ComponentScores> out;
  for (const auto& r : reports) {
    if (r.ok && !std::isnan(r.s_rf) && !std::isnan(r.s_b)) out.push_back({r.example_id, r.s_rf, r.s_b});
  }
  return out;
}

std::string calibration_table(const camo::CalibrationResult& c) {
  std::ostringstream out;
  out << "alpha   tau\n";
  for (const auto& [alpha, tau] : c.grid) {
    out << std::fixed << std::setprecision(2) << alpha << "    " << format_value(tau) << '\n';
  }
  out << "best alpha " << std::fixed << std::setprecision(2) << c.alpha << "  tau "
      << format_value(c.tau) << '\n';
  return out.str();
}

// Plate lookup for synthesis: `<id>.png`, then `<image-stem>.png`.
std::optional<camo::ImagePlane> find_plate(const camo::SourceSpec& plates,
                                           const camo::ManifestEntry& e) {
  if (!plates.external) return std::nullopt;
  std::string id = e.id;
  std::replace(id.begin(), id.end(), '/', '_');
  for (const fs::path& p : {plates.dir / (id + ".png"), plates.dir / (e.image.stem().string() + ".png")}) {
    if (fs::exists(p)) return camo::load_image(p);
  }
  throw camo::IoError("no plate for " + e.id + " in " + plates.dir.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Camouflage assessment: reconstruction fidelity, boundary visibility and "
               "intra-image Frechet distance"};
  app.require_subcommand(1);

  // score
  auto* score = app.add_subcommand("score", "Score one image/mask pair; JSON on stdout");
  std::string image_path, mask_path;
  score->add_option("image", image_path, "Image file (PNG or JPEG)")->required();
  score->add_option("mask", mask_path, "Binary mask file")->required();
  ScoreFlags score_flags;
  score_flags.attach(score);

  // score-dataset
  auto* score_ds = app.add_subcommand("score-dataset", "Score every entry of a manifest");
  std::string manifest_path, out_dir = "camoscore-out";
  score_ds->add_option("manifest", manifest_path, "Dataset manifest JSON")->required();
  score_ds->add_option("--out", out_dir, "Output directory");
  ScoreFlags ds_flags;
  ds_flags.attach(score_ds);
  RankFlags ds_rank;
  ds_rank.attach(score_ds);
  bool contact_sheet = false;
  score_ds->add_flag("--contact-sheet", contact_sheet, "Also write ranking.png thumbnails");

  // rank
  auto* rank_cmd = app.add_subcommand("rank", "Rank the examples of a report");
  std::string report_path;
  rank_cmd->add_option("report", report_path, "report.json")->required();
  RankFlags rank_flags;
  rank_flags.attach(rank_cmd);
  std::string rank_level = "example";
  rank_cmd->add_option("--level", rank_level, "example or group")
      ->check(CLI::IsMember({"example", "group"}));

  // compare-human
  auto* compare = app.add_subcommand("compare-human", "Kendall tau against a human ranking");
  std::string human_path, level = "example";
  bool calibrate = false, tau_a = false;
  compare->add_option("report", report_path, "report.json")->required();
  compare->add_option("human", human_path, "CSV with id,score or id,time_seconds")->required();
  compare->add_flag("--calibrate", calibrate, "Also search the alpha grid");
  compare->add_flag("--tau-a", tau_a, "Use tau-a instead of tau-b");
  compare->add_option("--level", level, "example or group")
      ->check(CLI::IsMember({"example", "group"}));

  // calibrate-alpha
  auto* calib = app.add_subcommand("calibrate-alpha", "Fit alpha to a human ranking");
  double step = 0.05;
  calib->add_option("report", report_path, "report.json")->required();
  calib->add_option("human", human_path, "CSV with id,score or id,time_seconds")->required();
  calib->add_option("--step", step, "Grid step")->check(CLI::Range(1e-3, 1.0));
  calib->add_flag("--tau-a", tau_a, "Use tau-a instead of tau-b");
  calib->add_option("--level", level, "example or group")
      ->check(CLI::IsMember({"example", "group"}));

  // synth-video
  auto* synth = app.add_subcommand("synth-video", "Generate synthetic camouflage sequences");
  camo::SynthParams synth_params;
  std::string source_manifest, plates = "builtin", synth_out;
  synth->add_option("out", synth_out, "Output directory")->required();
  synth->add_option("--source", source_manifest, "Manifest of image/mask pairs")->required();
  synth->add_option("--count", synth_params.count, "Number of sequences")->check(CLI::PositiveNumber);
  synth->add_option("--length", synth_params.length, "Frames per sequence")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_params.seed, "Random seed");
  synth->add_option("--plates", plates, "builtin or external:DIR");
  synth->add_option("--threads", synth_params.threads, "Worker threads (0: all cores)");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 3;
    }

    if (*score) {
      const camo::ScoreConfig config = score_flags.resolve();
      const camo::ImagePlane image = camo::load_image(image_path);
      const camo::BinaryMask mask = camo::load_mask(mask_path);
      const std::string id = fs::path(image_path).stem().string();
      const camo::Sidecars sidecars = camo::load_sidecars(config, id, image_path);
      camo::ScoreReport r = camo::score_example(image, mask, config, sidecars, id);
      json j = camo::to_json(r);
      j["config"] = camo::config_to_json(config);
      std::cout << j.dump(2) << '\n';
      return 0;
    }

    if (*score_ds) {
      const camo::ScoreConfig config = ds_flags.resolve();
      const camo::Manifest manifest = camo::read_manifest(manifest_path);
      const camo::DatasetReport report = camo::score_dataset(manifest, config);
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (!fs::is_directory(out_dir)) throw camo::IoError("cannot create " + out_dir);
      const fs::path out(out_dir);
      write_text(out / "report.json", camo::to_json(report).dump(2) + "\n");
      {
        std::ofstream csv(out / "report.csv");
        camo::write_csv(csv, report);
        if (!csv) throw camo::IoError("cannot write " + (out / "report.csv").string());
      }
      std::ostringstream table;
      camo::write_summary_table(table, {report});
      write_text(out / "summary.txt", table.str());
      std::cout << table.str();
      if (score_ds->count("--rank-by") || ds_rank.top || ds_rank.bottom || contact_sheet) {
        write_text(out / "ranking.txt", ranking_listing(report.per_example, ds_rank));
        if (contact_sheet) {
          const auto ranked = camo::rank(report.per_example, camo::parse_rank_key(ds_rank.key));
          std::vector<std::string> ids;
          const std::size_t n = ranked.size();
          const std::size_t top = ds_rank.top || ds_rank.bottom ? std::min<std::size_t>(ds_rank.top, n) : n;
          for (std::size_t i = 0; i < top; ++i) ids.push_back(ranked[i].id);
          for (std::size_t i = n - std::min<std::size_t>(ds_rank.bottom, n); i < n; ++i) {
            if (i >= top) ids.push_back(ranked[i].id);
          }
          if (!ids.empty()) write_contact_sheet(out / "ranking.png", manifest, ids, 96);
        }
      }
      if (report.summary.failed > 0) {
        std::cerr << "camoscore: " << report.summary.failed << " of " << report.summary.examples
                  << " examples failed; see report.json\n";
      }
      return 0;
    }

    if (*rank_cmd) {
      const auto report = camo::dataset_report_from_json(read_json(report_path));
      std::cout << ranking_listing(level_reports(report, rank_level), rank_flags);
      return 0;
    }

    const camo::TauVariant variant = tau_a ? camo::TauVariant::A : camo::TauVariant::B;

    if (*compare) {
      const auto report = camo::dataset_report_from_json(read_json(report_path));
      const auto human = camo::read_human_ranking(human_path);
      const auto reports = level_reports(report, level);
      std::cout << "score     tau" << (tau_a ? "-a" : "-b") << "   (human column: " << human.column
                << ")\n";
      for (const auto key : {camo::RankKey::SRf, camo::RankKey::Sb, camo::RankKey::SAlpha,
                             camo::RankKey::D2}) {
        std::string value;
        try {
          value = format_value(camo::kendall_tau(camo::camouflage_values(reports, key),
                                                 human.entries, variant));
        } catch (const camo::DegenerateInputError& e) {
          value = std::string("undefined (") + e.what() + ")";
        }
        std::cout << std::left << std::setw(9) << camo::to_string(key) << " " << value << '\n';
      }
      if (calibrate) {
        std::cout << '\n' << calibration_table(camo::calibrate_alpha(components(reports), human, 0.05, variant));
      }
      return 0;
    }

    if (*calib) {
      const auto report = camo::dataset_report_from_json(read_json(report_path));
      const auto human = camo::read_human_ranking(human_path);
      std::cout << calibration_table(
          camo::calibrate_alpha(components(level_reports(report, level)), human, step, variant));
      return 0;
    }

    if (*synth) {
      const camo::SourceSpec plate_spec = camo::parse_source_spec(plates);
      const camo::Manifest manifest = camo::read_manifest(source_manifest);
      std::vector<camo::SynthSource> sources;
      for (const auto& e : manifest.examples) {
        sources.push_back({e.id, camo::load_image(e.image), camo::load_mask(e.mask),
                           find_plate(plate_spec, e)});
      }
      std::cout << camo::synthesize_dataset(sources, synth_out, synth_params).string() << '\n';
      return 0;
    }
  } catch (const camo::Error& e) {
    std::cerr << "camoscore: " << e.what() << '\n';
    return camo::exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "camoscore: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "camoscore: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
