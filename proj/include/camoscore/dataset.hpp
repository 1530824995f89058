#pragma once

#include <filesystem>
#include <iosfwd>
#include <json.hpp>
#include <string>
#include <vector>

#include "camoscore/kendall.hpp"
#include "camoscore/scoring.hpp"

namespace camo {

enum class DatasetKind { Image, Video, Multiview };

std::string to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(const std::string& text);

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;  // resolved against the manifest directory
  std::filesystem::path mask;
  std::string group;  // sequence or scene id
};

struct Manifest {
  std::string dataset_id;
  DatasetKind kind = DatasetKind::Image;
  std::vector<ManifestEntry> examples;
};

/// {dataset_id, kind, examples: [{id, image, mask, group?}]}; relative paths
/// are resolved against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);
/// Writes paths relative to the manifest's directory when possible.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct ScoreMeans {
  double s_rf = std::numeric_limits<double>::quiet_NaN();
  double s_b = std::numeric_limits<double>::quiet_NaN();
  double s_alpha = std::numeric_limits<double>::quiet_NaN();
  double d2 = std::numeric_limits<double>::quiet_NaN();
};

struct GroupSummary {
  std::string group;
  long count = 0;
  long failed = 0;
  ScoreMeans means;
};

struct DatasetSummary {
  ScoreMeans means;
  long examples = 0;
  long failed = 0;
  long groups = 0;
};

struct DatasetReport {
  std::string dataset_id;
  DatasetKind kind = DatasetKind::Image;
  double alpha = 0.35;
  std::string config_hash;
  nlohmann::json config;
  std::vector<ScoreReport> per_example;
  std::vector<GroupSummary> per_group;  // empty for image datasets
  DatasetSummary summary;
};

/// Image datasets average the examples; video and multi-view datasets average
/// the per-sequence (per-scene) means. Failed examples and missing values are
/// left out of every mean.
DatasetReport aggregate(const std::string& dataset_id, DatasetKind kind,
                        std::vector<ScoreReport> reports);

/// Scores every manifest entry on a worker pool and aggregates in manifest
/// order. Missing files are reported together in one IoError before any
/// scoring starts; per-example failures are recorded and excluded.
DatasetReport score_dataset(const Manifest& manifest, const ScoreConfig& config);

enum class RankKey { SRf, Sb, SAlpha, D2 };

RankKey parse_rank_key(const std::string& text);
std::string to_string(RankKey key);

/// Values of `key` oriented so that higher means better camouflage (d2 is
/// negated). Failed examples and missing values are skipped.
std::vector<Scored> camouflage_values(const std::vector<ScoreReport>& reports, RankKey key);

/// Best camouflage first: descending scores, ascending d2, ties by id.
/// The returned values are the raw key values.
std::vector<Scored> rank(const std::vector<ScoreReport>& reports, RankKey key);

/// One pseudo-report per group carrying the group means, for per-sequence or
/// per-scene comparisons.
std::vector<ScoreReport> group_reports(const DatasetReport& report);

struct ComponentScores {
  std::string id;
  double s_rf = 0.0;
  double s_b = 0.0;
};

struct CalibrationResult {
  double alpha = 0.0;
  double tau = 0.0;
  std::vector<std::pair<double, double>> grid;  // (alpha, tau)
};

/// Grid search over alpha = 0, step, ..., 1 maximizing tau between the S_alpha
/// ranking and the human ranking; ties go to the smallest alpha.
CalibrationResult calibrate_alpha(const std::vector<ComponentScores>& validation,
                                  const HumanRanking& human, double step = 0.05,
                                  TauVariant variant = TauVariant::B);

nlohmann::json to_json(const ScoreReport& r);
ScoreReport score_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetReport& r);
DatasetReport dataset_report_from_json(const nlohmann::json& j);

/// One row per example.
void write_csv(std::ostream& out, const DatasetReport& r);
/// Aligned table with the columns Dataset, Data type, S_Rf, S_b, S_alpha, d_F^2.
void write_summary_table(std::ostream& out, const std::vector<DatasetReport>& reports);

}  // namespace camo
