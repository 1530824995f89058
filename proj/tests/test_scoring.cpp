#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "camoscore/config.hpp"
#include "camoscore/dataset.hpp"
#include "camoscore/error.hpp"
#include "camoscore/features.hpp"
#include "camoscore/image_io.hpp"
#include "camoscore/kendall.hpp"
#include "camoscore/scoring.hpp"
#include "fixtures.hpp"

using namespace camo;
using namespace camo::testing;

namespace {

ScoreReport report(const std::string& id, double s_alpha, const std::string& group = {}) {
  ScoreReport r;
  r.example_id = id;
  r.group = group;
  r.s_rf = s_alpha;
  r.s_b = s_alpha;
  r.s_alpha = s_alpha;
  r.d2 = 1.0 - s_alpha;
  return r;
}

// Writes an image/mask pair and returns its manifest entry.
ManifestEntry write_pair(const std::filesystem::path& dir, const std::string& id,
                         const Fixture& f, const std::string& group = {}) {
  save_png(dir / (id + ".png"), f.image);
  save_png(dir / (id + ".mask.png"), f.mask);
  return {id, dir / (id + ".png"), dir / (id + ".mask.png"), group};
}

}  // namespace

TEST_CASE("combined score") {
  CHECK(combined_score(0.694, 0.445) == doctest::Approx(0.60685));
  CHECK(combined_score(0.850, 0.443) == doctest::Approx(0.70755));
  for (double x : {0.0, 0.3, 1.0})
    for (double a : {0.0, 0.35, 0.9}) CHECK(combined_score(x, x, a) == doctest::Approx(x));
  CHECK_THROWS_AS(combined_score(1.2, 0.5), ParameterError);
  CHECK_THROWS_AS(combined_score(0.5, 0.5, -0.1), ParameterError);
}

TEST_CASE("score_example fixtures") {
  const ScoreConfig config;
  SUBCASE("camouflaged checkerboard") {
    const Fixture f = hidden_edge_fixture();
    const ScoreReport r = score_example(f.image, f.mask, config, {}, "checker");
    CHECK(r.ok);
    CHECK(r.s_rf > 0.7);
    CHECK(r.s_b > 0.7);
    CHECK(r.s_alpha > 0.7);
    CHECK(r.s_alpha == doctest::Approx(0.65 * r.s_rf + 0.35 * r.s_b));
    CHECK(r.d2 >= 0.0);
    CHECK(r.d2 == doctest::Approx(r.mean_term + r.cov_term));
    CHECK(r.feature_dim == feature::kDim);
    CHECK(r.extractor_id == kBuiltinExtractorId);
    CHECK(r.contour_source == "builtin");
    CHECK(r.config_hash == config_hash(config));
  }
  SUBCASE("red disk on blue") {
    const Fixture f = red_on_blue_fixture();
    const ScoreReport r = score_example(f.image, f.mask, config);
    CHECK(r.s_alpha < 0.3);
    CHECK(r.s_rf < 0.2);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(score_example(ImagePlane(10, 10, 3), BinaryMask(10, 12), config), ShapeError);
    CHECK_THROWS_AS(score_example(ImagePlane(10, 10, 3), BinaryMask(10, 10), config),
                    DegenerateInputError);
  }
  SUBCASE("object filling the frame") {
    const ScoreReport r =
        score_example(periodic_texture(12, 12, 4, 1), BinaryMask(12, 12, true), config);
    CHECK(r.s_rf == 0.0);
    CHECK(!r.warnings.empty());
  }
  SUBCASE("alpha is honoured") {
    ScoreConfig half;
    half.alpha = 0.5;
    const Fixture f = hidden_edge_fixture();
    const ScoreReport r = score_example(f.image, f.mask, half);
    CHECK(r.alpha == 0.5);
    CHECK(r.s_alpha == doctest::Approx(0.5 * r.s_rf + 0.5 * r.s_b));
    CHECK(config_hash(half) != config_hash(config));
  }
  SUBCASE("crop records the box") {
    const Fixture f = red_on_blue_fixture();
    const ScoreReport r = score_example(f.image, f.mask, config);
    CHECK(r.crop == object_crop_box(f.mask));
    ScoreConfig nocrop;
    nocrop.crop = false;
    CHECK(score_example(f.image, f.mask, nocrop).crop == CropBox{0, 0, 96, 96});
  }
}

TEST_CASE("external sidecars reproduce built-in results") {
  TempDir dir("sidecar");
  const Fixture f = hidden_edge_fixture();
  const ManifestEntry e = write_pair(dir.path(), "obj", f);
  ScoreConfig builtin;
  const ScoreReport base = score_example(load_image(e.image), load_mask(e.mask), builtin, {}, "obj");

  // Full-frame built-in contours and features written as sidecars.
  save_png(dir.path() / "obj.contour.png", detect_edges(load_image(e.image)).plane);
  FeatureMap fm = extract_features(load_image(e.image));
  write_feature_file(dir.path() / "obj.feat", fm);

  ScoreConfig ext;
  ext.contours = parse_source_spec("external:" + dir.path().string());
  ext.features = parse_source_spec("external:" + dir.path().string());
  const Sidecars side = load_sidecars(ext, "obj", e.image);
  REQUIRE(side.contours);
  REQUIRE(side.features);
  const ScoreReport r = score_example(load_image(e.image), load_mask(e.mask), ext, side, "obj");
  CHECK(r.ok);
  CHECK(r.contour_source.rfind("external", 0) == 0);
  CHECK(r.extractor_id == "external:obj.feat");
  CHECK(r.feature_dim == feature::kDim);
  CHECK(r.s_rf == base.s_rf);
  CHECK(std::isfinite(r.d2));

  ext.features = parse_source_spec("external:" + (dir.path() / "nowhere").string());
  CHECK_THROWS_AS(load_sidecars(ext, "obj", e.image), IoError);
}

TEST_CASE("video aggregation averages sequence means") {
  std::vector<ScoreReport> rs{report("s1/f0", 0.2, "s1"), report("s1/f1", 0.4, "s1"),
                              report("s2/f0", 0.8, "s2")};
  const DatasetReport d = aggregate("v", DatasetKind::Video, rs);
  REQUIRE(d.per_group.size() == 2);
  CHECK(d.per_group[0].means.s_alpha == doctest::Approx(0.3));
  CHECK(d.per_group[1].means.s_alpha == doctest::Approx(0.8));
  CHECK(d.summary.means.s_alpha == doctest::Approx(0.55));

  const DatasetReport flat = aggregate("i", DatasetKind::Image, rs);
  CHECK(flat.summary.means.s_alpha == doctest::Approx(1.4 / 3.0));
  CHECK(aggregate("one", DatasetKind::Image, {report("a", 0.37)}).summary.means.s_alpha ==
        doctest::Approx(0.37));

  rs.push_back(report("s3/f0", 0.9, "s3"));
  rs.back().ok = false;
  rs.push_back(report("s2/f1", std::numeric_limits<double>::quiet_NaN(), "s2"));
  const DatasetReport with_failures = aggregate("v", DatasetKind::Video, rs);
  CHECK(with_failures.summary.failed == 1);
  CHECK(with_failures.summary.means.s_alpha == doctest::Approx(0.55));
}

TEST_CASE("ranking") {
  const std::vector<ScoreReport> rs{report("a", 0.9), report("b", 0.1)};
  auto r = rank(rs, RankKey::SAlpha);
  CHECK(r[0].id == "a");
  CHECK(r[1].id == "b");

  std::vector<ScoreReport> d{report("a", 0.0), report("b", 0.0)};
  d[0].d2 = 6.2;
  d[1].d2 = 0.7;
  r = rank(d, RankKey::D2);
  CHECK(r[0].id == "b");
  CHECK(r[1].id == "a");

  r = rank({report("c", 0.5), report("a", 0.5), report("b", 0.5)}, RankKey::SAlpha);
  CHECK(r[0].id == "a");
  CHECK(r[1].id == "b");
  CHECK(r[2].id == "c");
  CHECK_THROWS_AS(parse_rank_key("nope"), ParameterError);
}

TEST_CASE("kendall tau") {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{1, 3, 2, 4};
  CHECK(kendall_tau(a, a) == 1.0);
  CHECK(kendall_tau(a, std::vector<double>{4, 3, 2, 1}) == -1.0);
  CHECK(kendall_tau(a, b) == doctest::Approx(4.0 / 6.0));
  CHECK(kendall_tau_brute(a, b) == doctest::Approx(4.0 / 6.0));

  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const int n = uniform_int(rng, 2, 60);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = uniform_int(rng, 0, 6);
      y[i] = uniform_int(rng, 0, 6);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; }))
      continue;
    CHECK(kendall_tau(x, y) == kendall_tau_brute(x, y));
    CHECK(kendall_tau(x, y) == doctest::Approx(tau_b_reference(x, y)));
  }

  CHECK_THROWS_AS(kendall_tau(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                  DegenerateInputError);
  CHECK(kendall_tau(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}, TauVariant::A) ==
        doctest::Approx(2.0 / 3.0));
}

TEST_CASE("id-keyed tau reports mismatched ids") {
  const std::vector<Scored> a{{"x", 1}, {"y", 2}, {"z", 3}};
  const std::vector<Scored> b{{"z", 30}, {"x", 10}, {"y", 20}};
  CHECK(kendall_tau(a, b) == 1.0);
  const std::vector<Scored> c{{"x", 1}, {"y", 2}, {"w", 3}};
  try {
    kendall_tau(a, c);
    FAIL("expected a consistency error");
  } catch (const ConsistencyError& e) {
    const std::string what = e.what();
    CHECK(what.find("z") != std::string::npos);
    CHECK(what.find("w") != std::string::npos);
  }
}

TEST_CASE("human ranking files") {
  TempDir dir("human");
  std::ofstream(dir.path() / "s.csv") << "id,score\na,3\nb,1.5\n";
  const HumanRanking s = read_human_ranking(dir.path() / "s.csv");
  CHECK(s.column == "score");
  REQUIRE(s.entries.size() == 2);
  CHECK(s.entries[1].value == 1.5);
  std::ofstream(dir.path() / "t.csv") << "id,time_seconds\na,12\nb,4\n";
  const HumanRanking t = read_human_ranking(dir.path() / "t.csv");
  CHECK(t.column == "time_seconds");
  CHECK(t.entries[0].value > t.entries[1].value);
  std::ofstream(dir.path() / "bad.csv") << "name,score\na,1\n";
  CHECK_THROWS_AS(read_human_ranking(dir.path() / "bad.csv"), FormatError);
  std::ofstream(dir.path() / "nan.csv") << "id,score\na,x\n";
  CHECK_THROWS_AS(read_human_ranking(dir.path() / "nan.csv"), FormatError);
  CHECK_THROWS_AS(read_human_ranking(dir.path() / "none.csv"), IoError);
}

TEST_CASE("alpha calibration") {
  SUBCASE("boundary score decides") {
    // Human order follows s_b; s_rf disagrees strongly so only alpha = 1 agrees.
    std::vector<ComponentScores> v{{"a", 0.9, 0.30}, {"b", 0.5, 0.31}, {"c", 0.1, 0.32}};
    HumanRanking h{{{"a", 1}, {"b", 2}, {"c", 3}}, "score"};
    const CalibrationResult r = calibrate_alpha(v, h);
    CHECK(r.alpha == doctest::Approx(1.0));
    CHECK(r.tau == 1.0);
    CHECK(r.grid.size() == 21);
  }
  SUBCASE("reconstruction decides") {
    std::vector<ComponentScores> v{{"a", 0.30, 0.9}, {"b", 0.31, 0.5}, {"c", 0.32, 0.1}};
    HumanRanking h{{{"a", 1}, {"b", 2}, {"c", 3}}, "score"};
    CHECK(calibrate_alpha(v, h).alpha == 0.0);
  }
  SUBCASE("planted alpha") {
    for (int k = 0; k <= 20; ++k) {
      const PlantedAlpha f = planted_alpha_fixture(0.05 * k);
      const CalibrationResult r = calibrate_alpha(f.scores, f.human);
      CHECK(r.alpha == doctest::Approx(0.05 * k));
      CHECK(r.tau == doctest::Approx(1.0));
    }
  }
  SUBCASE("errors") {
    std::vector<ComponentScores> v{{"a", 0.1, 0.2}, {"b", 0.3, 0.4}};
    HumanRanking h{{{"a", 1}, {"b", 2}}, "score"};
    CHECK_THROWS_AS(calibrate_alpha(v, h), DegenerateInputError);
    v.push_back({"c", 0.5, 0.5});
    HumanRanking tied{{{"a", 1}, {"b", 1}, {"c", 1}}, "score"};
    CHECK_THROWS_AS(calibrate_alpha(v, tied), DegenerateInputError);
  }
}

TEST_CASE("config json") {
  ScoreConfig c;
  apply_config_json(c, nlohmann::json{{"alpha", 0.5}, {"kernels", {3, 5}}, {"nn", "approx"}});
  CHECK(c.alpha == 0.5);
  REQUIRE(c.kernels);
  CHECK(c.kernels->dilate == 5);
  CHECK(c.recon.search.mode == SearchMode::Approximate);
  ScoreConfig round;
  apply_config_json(round, config_to_json(c));
  CHECK(config_to_json(round) == config_to_json(c));
  CHECK(config_hash(round) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  ScoreConfig threads = c;
  threads.threads = 7;
  CHECK(config_hash(threads) == config_hash(c));

  CHECK_THROWS_AS(apply_config_json(c, nlohmann::json{{"alhpa", 0.5}}), ConfigError);
  ScoreConfig bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(validate_config(bad), ConfigError);
  CHECK_THROWS_AS(parse_source_spec("external:"), ConfigError);
  CHECK(format_source_spec(parse_source_spec("external:/x")) == "external:/x");
}

TEST_CASE("dataset scoring end to end") {
  TempDir dir("dataset");
  Manifest m{"tiny", DatasetKind::Image, {}};
  m.examples.push_back(write_pair(dir.path(), "hidden", hidden_edge_fixture()));
  m.examples.push_back(write_pair(dir.path(), "red", red_on_blue_fixture()));
  m.examples.push_back(write_pair(dir.path(), "bright", high_contrast_fixture()));
  write_manifest(dir.path() / "manifest.json", m);
  const Manifest back = read_manifest(dir.path() / "manifest.json");
  REQUIRE(back.examples.size() == 3);
  CHECK(back.examples[0].image == m.examples[0].image);

  ScoreConfig config;
  config.threads = 2;
  const DatasetReport d = score_dataset(back, config);
  CHECK(d.summary.examples == 3);
  CHECK(d.summary.failed == 0);
  CHECK(d.per_example[0].example_id == "hidden");
  CHECK(rank(d.per_example, RankKey::SAlpha).front().id == "hidden");

  // Same numbers regardless of thread count.
  config.threads = 1;
  const DatasetReport serial = score_dataset(back, config);
  for (std::size_t i = 0; i < 3; ++i) CHECK(serial.per_example[i].s_alpha == d.per_example[i].s_alpha);

  std::ostringstream csv;
  write_csv(csv, d);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header.rfind("id,group,ok,s_rf,s_b,s_alpha,d2", 0) == 0);
  int rows = 0;
  for (std::string l; std::getline(lines, l);) rows += !l.empty();
  CHECK(rows == 3);

  const DatasetReport parsed = dataset_report_from_json(to_json(d));
  CHECK(to_json(parsed) == to_json(d));

  std::ostringstream table;
  write_summary_table(table, {d});
  CHECK(table.str().find("tiny") != std::string::npos);

  Manifest broken = back;
  broken.examples[1].mask = dir.path() / "gone.png";
  broken.examples[2].image = dir.path() / "gone2.png";
  try {
    score_dataset(broken, config);
    FAIL("expected an I/O error");
  } catch (const IoError& e) {
    const std::string what = e.what();
    CHECK(what.find("gone.png") != std::string::npos);
    CHECK(what.find("gone2.png") != std::string::npos);
  }
}

TEST_CASE("failed examples are recorded, not fatal") {
  TempDir dir("partial");
  Manifest m{"partial", DatasetKind::Image, {}};
  m.examples.push_back(write_pair(dir.path(), "ok", red_on_blue_fixture()));
  m.examples.push_back(write_pair(dir.path(), "empty", Fixture{solid(20, 20, 0.5f, 0.5f, 0.5f), BinaryMask(20, 20)}));
  const DatasetReport d = score_dataset(m, ScoreConfig{});
  CHECK(d.summary.failed == 1);
  CHECK(!d.per_example[1].ok);
  CHECK(!d.per_example[1].error.empty());
  CHECK(d.summary.means.s_alpha == doctest::Approx(d.per_example[0].s_alpha));
}
