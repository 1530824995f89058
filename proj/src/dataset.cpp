#include "camoscore/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "camoscore/config.hpp"
#include "camoscore/error.hpp"
#include "camoscore/image_io.hpp"
#include "camoscore/parallel.hpp"

namespace camo {
namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_nan(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.at(key).get<double>();
}

// Mean of the finite values produced by `get`; NaN when there are none.
template <typename Range, typename Get>
double finite_mean(const Range& items, Get get) {
  double sum = 0.0;
  long n = 0;
  for (const auto& item : items) {
    const double v = get(item);
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

template <typename Range, typename Means>
ScoreMeans means_of(const Range& items, Means means) {
  ScoreMeans m;
  m.s_rf = finite_mean(items, [&](const auto& i) { return means(i).s_rf; });
  m.s_b = finite_mean(items, [&](const auto& i) { return means(i).s_b; });
  m.s_alpha = finite_mean(items, [&](const auto& i) { return means(i).s_alpha; });
  m.d2 = finite_mean(items, [&](const auto& i) { return means(i).d2; });
  return m;
}

ScoreMeans means_of_report(const ScoreReport& r) {
  if (!r.ok) return ScoreMeans{};
  return ScoreMeans{r.s_rf, r.s_b, r.s_alpha, r.d2};
}

json means_json(const ScoreMeans& m) {
  return json{{"s_rf", number_or_null(m.s_rf)},
              {"s_b", number_or_null(m.s_b)},
              {"s_alpha", number_or_null(m.s_alpha)},
              {"d2", number_or_null(m.d2)}};
}

ScoreMeans means_from_json(const json& j) {
  return ScoreMeans{number_or_nan(j, "s_rf"), number_or_nan(j, "s_b"),
                    number_or_nan(j, "s_alpha"), number_or_nan(j, "d2")};
}

double key_value(const ScoreReport& r, RankKey key) {
  switch (key) {
    case RankKey::SRf: return r.s_rf;
    case RankKey::Sb: return r.s_b;
    case RankKey::SAlpha: return r.s_alpha;
    case RankKey::D2: return r.d2;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string format_cell(double v, int precision) {
  if (!std::isfinite(v)) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

}  // namespace

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Image: return "image";
    case DatasetKind::Video: return "video";
    case DatasetKind::Multiview: return "multiview";
  }
  return "image";
}

DatasetKind parse_dataset_kind(const std::string& text) {
  if (text == "image") return DatasetKind::Image;
  if (text == "video") return DatasetKind::Video;
  if (text == "multiview") return DatasetKind::Multiview;
  throw FormatError("unknown dataset kind `" + text + "`");
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  Manifest m;
  try {
    m.dataset_id = j.at("dataset_id").get<std::string>();
    m.kind = parse_dataset_kind(j.at("kind").get<std::string>());
    for (const auto& e : j.at("examples")) {
      ManifestEntry entry;
      entry.id = e.at("id").get<std::string>();
      entry.image = base / e.at("image").get<std::string>();
      entry.mask = base / e.at("mask").get<std::string>();
      if (e.contains("group") && !e.at("group").is_null()) {
        entry.group = e.at("group").get<std::string>();
      }
      m.examples.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    return (base.empty() ? p : p.lexically_relative(base)).generic_string();
  };
  json examples = json::array();
  for (const auto& e : manifest.examples) {
    json item{{"id", e.id}, {"image", rel(e.image)}, {"mask", rel(e.mask)}};
    if (!e.group.empty()) item["group"] = e.group;
    examples.push_back(std::move(item));
  }
  const json j{{"dataset_id", manifest.dataset_id},
               {"kind", to_string(manifest.kind)},
               {"examples", std::move(examples)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest " + path.string());
}

DatasetReport aggregate(const std::string& dataset_id, DatasetKind kind,
                        std::vector<ScoreReport> reports) {
  DatasetReport d;
  d.dataset_id = dataset_id;
  d.kind = kind;
  d.per_example = std::move(reports);
  d.summary.examples = static_cast<long>(d.per_example.size());
  for (const auto& r : d.per_example) d.summary.failed += r.ok ? 0 : 1;
  if (!d.per_example.empty()) {
    d.alpha = d.per_example.front().alpha;
    d.config_hash = d.per_example.front().config_hash;
  }

  if (kind == DatasetKind::Image) {
    d.summary.means = means_of(d.per_example, means_of_report);
    return d;
  }

  // Groups in order of first appearance.
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<const ScoreReport*>> members;
  for (const auto& r : d.per_example) {
    const std::string& g = r.group.empty() ? r.example_id : r.group;
    auto [it, fresh] = slot.emplace(g, d.per_group.size());
    if (fresh) {
      GroupSummary fresh_group;
      fresh_group.group = g;
      d.per_group.push_back(std::move(fresh_group));
      members.emplace_back();
    }
    members[it->second].push_back(&r);
  }
  for (std::size_t i = 0; i < d.per_group.size(); ++i) {
    auto& g = d.per_group[i];
    g.count = static_cast<long>(members[i].size());
    for (const auto* r : members[i]) g.failed += r->ok ? 0 : 1;
    g.means = means_of(members[i], [](const ScoreReport* r) { return means_of_report(*r); });
  }
  d.summary.groups = static_cast<long>(d.per_group.size());
  d.summary.means = means_of(d.per_group, [](const GroupSummary& g) { return g.means; });
  return d;
}

DatasetReport score_dataset(const Manifest& manifest, const ScoreConfig& config) {
  validate_config(config);
  if (manifest.examples.empty()) throw DegenerateInputError("manifest lists no examples");
  std::vector<std::string> missing;
  for (const auto& e : manifest.examples) {
    for (const auto* p : {&e.image, &e.mask}) {
      if (!std::filesystem::exists(*p)) missing.push_back(p->string());
    }
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " missing file(s):";
    for (const auto& p : missing) msg += "\n  " + p;
    throw IoError(msg);
  }

  std::vector<ScoreReport> reports(manifest.examples.size());
  parallel_for(manifest.examples.size(), config.threads, [&](std::size_t i) {
    const ManifestEntry& e = manifest.examples[i];
    ScoreReport r;
    try {
      const ImagePlane image = load_image(e.image);
      const BinaryMask mask = load_mask(e.mask);
      r = score_example(image, mask, config, load_sidecars(config, e.id, e.image), e.id);
    } catch (const std::exception& ex) {
      r = ScoreReport{};
      r.example_id = e.id;
      r.alpha = config.alpha;
      r.config_hash = config_hash(config);
      r.ok = false;
      r.error = ex.what();
    }
    r.group = e.group;
    reports[i] = std::move(r);
  });

  // Feature dimension must agree across the run; the first scored example in
  // manifest order sets it.
  int dim = 0;
  for (auto& r : reports) {
    if (!r.ok || r.feature_dim == 0) continue;
    if (dim == 0) {
      dim = r.feature_dim;
    } else if (r.feature_dim != dim) {
      r.ok = false;
      r.error = "consistency: feature dimension " + std::to_string(r.feature_dim) +
                " differs from " + std::to_string(dim) + " used by this run";
    }
  }

  DatasetReport d = aggregate(manifest.dataset_id, manifest.kind, std::move(reports));
  d.alpha = config.alpha;
  d.config_hash = config_hash(config);
  d.config = config_to_json(config);
  return d;
}

RankKey parse_rank_key(const std::string& text) {
  if (text == "s_rf") return RankKey::SRf;
  if (text == "s_b") return RankKey::Sb;
  if (text == "s_alpha") return RankKey::SAlpha;
  if (text == "d2") return RankKey::D2;
  throw ParameterError("unknown rank key `" + text + "` (expected s_rf, s_b, s_alpha or d2)");
}

std::string to_string(RankKey key) {
  switch (key) {
    case RankKey::SRf: return "s_rf";
    case RankKey::Sb: return "s_b";
    case RankKey::SAlpha: return "s_alpha";
    case RankKey::D2: return "d2";
  }
  return "s_alpha";
}

std::vector<Scored> camouflage_values(const std::vector<ScoreReport>& reports, RankKey key) {
  std::vector<Scored> out;
  for (const auto& r : reports) {
    const double v = key_value(r, key);
    if (!r.ok || !std::isfinite(v)) continue;
    out.push_back({r.example_id, key == RankKey::D2 ? -v : v});
  }
  return out;
}

std::vector<Scored> rank(const std::vector<ScoreReport>& reports, RankKey key) {
  if (reports.empty()) throw DegenerateInputError("nothing to rank");
  std::vector<Scored> out;
  for (const auto& r : reports) {
    const double v = key_value(r, key);
    if (r.ok && std::isfinite(v)) out.push_back({r.example_id, v});
  }
  const bool ascending = key == RankKey::D2;
  std::sort(out.begin(), out.end(), [&](const Scored& a, const Scored& b) {
    if (a.value != b.value) return ascending ? a.value < b.value : a.value > b.value;
    return a.id < b.id;
  });
  return out;
}

std::vector<ScoreReport> group_reports(const DatasetReport& report) {
  std::vector<ScoreReport> out;
  for (const auto& g : report.per_group) {
    ScoreReport r;
    r.example_id = g.group;
    r.group = g.group;
    r.alpha = report.alpha;
    r.ok = g.count > g.failed;
    r.s_rf = g.means.s_rf;
    r.s_b = g.means.s_b;
    r.s_alpha = g.means.s_alpha;
    r.d2 = g.means.d2;
    out.push_back(std::move(r));
  }
  return out;
}

CalibrationResult calibrate_alpha(const std::vector<ComponentScores>& validation,
                                  const HumanRanking& human, double step,
                                  TauVariant variant) {
  if (validation.size() < 3) {
    throw DegenerateInputError("alpha calibration needs at least 3 validation examples");
  }
  if (!(step > 0.0) || step > 1.0) throw ParameterError("grid step must lie in (0, 1]");
  const bool all_tied = std::all_of(human.entries.begin(), human.entries.end(),
                                    [&](const Scored& s) {
                                      return s.value == human.entries.front().value;
                                    });
  if (human.entries.empty() || all_tied) {
    throw DegenerateInputError("human ranking is entirely tied");
  }

  const int steps = static_cast<int>(std::lround(1.0 / step));
  CalibrationResult best;
  best.tau = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= steps; ++k) {
    const double alpha = std::min(1.0, k * step);
    std::vector<Scored> blended;
    blended.reserve(validation.size());
    for (const auto& v : validation) {
      blended.push_back({v.id, combined_score(v.s_rf, v.s_b, alpha)});
    }
    double tau = 0.0;
    try {
      tau = kendall_tau(blended, human.entries, variant);
    } catch (const DegenerateInputError&) {
      tau = 0.0;  // every blended score tied: no ordering information
    }
    best.grid.emplace_back(alpha, tau);
    if (tau > best.tau) {
      best.tau = tau;
      best.alpha = alpha;
    }
  }
  return best;
}

json to_json(const ScoreReport& r) {
  json j{{"id", r.example_id},
         {"ok", r.ok},
         {"s_rf", number_or_null(r.s_rf)},
         {"s_b", number_or_null(r.s_b)},
         {"s_alpha", number_or_null(r.s_alpha)},
         {"d2", number_or_null(r.d2)},
         {"alpha", r.alpha},
         {"crop", {r.crop.x0, r.crop.y0, r.crop.x1, r.crop.y1}},
         {"kernels", {r.kernels.erode, r.kernels.dilate}},
         {"warnings", r.warnings},
         {"config_hash", r.config_hash},
         {"contour_source", r.contour_source},
         {"extractor_id", r.extractor_id},
         {"feature_dim", r.feature_dim},
         {"fg_pixels", r.fg_pixels},
         {"boundary_precision", r.precision},
         {"boundary_recall", r.recall},
         {"d2_mean_term", number_or_null(r.mean_term)},
         {"d2_cov_term", number_or_null(r.cov_term)},
         {"sqrt_iterations", r.sqrt_iterations}};
  if (!r.group.empty()) j["group"] = r.group;
  if (!r.ok) j["error"] = r.error;
  return j;
}

ScoreReport score_report_from_json(const json& j) {
  try {
    ScoreReport r;
    r.example_id = j.at("id").get<std::string>();
    r.ok = j.value("ok", true);
    r.error = j.value("error", std::string{});
    r.group = j.value("group", std::string{});
    r.s_rf = number_or_nan(j, "s_rf");
    r.s_b = number_or_nan(j, "s_b");
    r.s_alpha = number_or_nan(j, "s_alpha");
    r.d2 = number_or_nan(j, "d2");
    r.alpha = j.value("alpha", 0.35);
    if (j.contains("crop")) {
      const auto c = j.at("crop").get<std::vector<int>>();
      if (c.size() == 4) r.crop = {c[0], c[1], c[2], c[3]};
    }
    if (j.contains("kernels")) {
      const auto k = j.at("kernels").get<std::vector<int>>();
      if (k.size() == 2) r.kernels = {k[0], k[1]};
    }
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.config_hash = j.value("config_hash", std::string{});
    r.contour_source = j.value("contour_source", std::string{});
    r.extractor_id = j.value("extractor_id", std::string{});
    r.feature_dim = j.value("feature_dim", 0);
    r.fg_pixels = j.value("fg_pixels", 0L);
    r.precision = j.value("boundary_precision", 0.0);
    r.recall = j.value("boundary_recall", 0.0);
    r.mean_term = number_or_nan(j, "d2_mean_term");
    r.cov_term = number_or_nan(j, "d2_cov_term");
    r.sqrt_iterations = j.value("sqrt_iterations", 0);
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed score report: ") + e.what());
  }
}

json to_json(const DatasetReport& r) {
  json examples = json::array();
  for (const auto& e : r.per_example) examples.push_back(to_json(e));
  json groups = json::array();
  for (const auto& g : r.per_group) {
    json item = means_json(g.means);
    item["group"] = g.group;
    item["count"] = g.count;
    item["failed"] = g.failed;
    groups.push_back(std::move(item));
  }
  json summary = means_json(r.summary.means);
  summary["examples"] = r.summary.examples;
  summary["failed"] = r.summary.failed;
  summary["groups"] = r.summary.groups;
  return json{{"dataset_id", r.dataset_id},
              {"kind", to_string(r.kind)},
              {"alpha", r.alpha},
              {"config_hash", r.config_hash},
              {"config", r.config.is_null() ? json::object() : r.config},
              {"summary", std::move(summary)},
              {"groups", std::move(groups)},
              {"examples", std::move(examples)}};
}

DatasetReport dataset_report_from_json(const json& j) {
  try {
    DatasetReport r;
    r.dataset_id = j.at("dataset_id").get<std::string>();
    r.kind = parse_dataset_kind(j.at("kind").get<std::string>());
    r.alpha = j.value("alpha", 0.35);
    r.config_hash = j.value("config_hash", std::string{});
    r.config = j.value("config", json::object());
    for (const auto& e : j.at("examples")) r.per_example.push_back(score_report_from_json(e));
    if (j.contains("groups")) {
      for (const auto& g : j.at("groups")) {
        GroupSummary s;
        s.group = g.at("group").get<std::string>();
        s.count = g.value("count", 0L);
        s.failed = g.value("failed", 0L);
        s.means = means_from_json(g);
        r.per_group.push_back(std::move(s));
      }
    }
    const json& s = j.at("summary");
    r.summary.means = means_from_json(s);
    r.summary.examples = s.value("examples", 0L);
    r.summary.failed = s.value("failed", 0L);
    r.summary.groups = s.value("groups", 0L);
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed dataset report: ") + e.what());
  }
}

void write_csv(std::ostream& out, const DatasetReport& r) {
  out << "id,group,ok,s_rf,s_b,s_alpha,d2,kernel_erode,kernel_dilate,"
         "crop_x0,crop_y0,crop_x1,crop_y1,warnings,error\n";
  auto num = [](double v) {
    if (!std::isfinite(v)) return std::string{};
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
  };
  auto quoted = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (const auto& e : r.per_example) {
    out << quoted(e.example_id) << ',' << quoted(e.group) << ',' << (e.ok ? 1 : 0) << ','
        << num(e.s_rf) << ',' << num(e.s_b) << ',' << num(e.s_alpha) << ',' << num(e.d2)
        << ',' << e.kernels.erode << ',' << e.kernels.dilate << ',' << e.crop.x0 << ','
        << e.crop.y0 << ',' << e.crop.x1 << ',' << e.crop.y1 << ',' << e.warnings.size()
        << ',' << quoted(e.error) << '\n';
  }
}

void write_summary_table(std::ostream& out, const std::vector<DatasetReport>& reports) {
  std::size_t name_width = 8;
  for (const auto& r : reports) name_width = std::max(name_width, r.dataset_id.size() + 2);
  out << std::left << std::setw(static_cast<int>(name_width)) << "Dataset" << std::setw(12)
      << "Data type" << std::setw(8) << "S_Rf" << std::setw(8) << "S_b" << std::setw(10)
      << "S_alpha" << std::setw(8) << "d_F^2" << std::setw(10) << "examples"
      << "failed" << '\n';
  for (const auto& r : reports) {
    const auto& m = r.summary.means;
    out << std::left << std::setw(static_cast<int>(name_width)) << r.dataset_id
        << std::setw(12) << to_string(r.kind) << std::setw(8) << format_cell(m.s_rf, 3)
        << std::setw(8) << format_cell(m.s_b, 3) << std::setw(10) << format_cell(m.s_alpha, 3)
        << std::setw(8) << format_cell(m.d2, 2) << std::setw(10) << r.summary.examples
        << r.summary.failed << '\n';
  }
}

}  // namespace camo
