#include <doctest.h>

#include <fstream>
#include <sstream>

#include "camoscore/dataset.hpp"
#include "camoscore/error.hpp"
#include "camoscore/image_io.hpp"
#include "camoscore/synth.hpp"
#include "fixtures.hpp"

using namespace camo;
using namespace camo::testing;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double centroid_x(const BinaryMask& m) {
  double sum = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m(y, x)) sum += x;
  return sum / static_cast<double>(m.count());
}

SequenceSpec still_spec(int w, int h, const Sprite& s, int length) {
  SequenceSpec spec;
  spec.length = length;
  spec.frame_width = w;
  spec.frame_height = h;
  spec.sprite_width = s.alpha.width();
  spec.sprite_height = s.alpha.height();
  spec.fg_origin = {5, 6};
  spec.fg_traj.assign(length, Offset{});
  spec.bg_traj.assign(length, Offset{});
  return spec;
}

}  // namespace

TEST_CASE("uniform_int stays in range and is deterministic") {
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 1000; ++i) {
    const int v = uniform_int(a, -3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
    CHECK(v == uniform_int(b, -3, 3));
  }
}

TEST_CASE("sprites") {
  const Fixture f = red_on_blue_fixture();
  const Sprite s = make_sprite(f.image, f.mask);
  CHECK(s.origin == f.mask.bbox());
  CHECK(s.alpha.count() == f.mask.count());
  CHECK(s.rgb.width() == s.alpha.width());
  CHECK_THROWS_AS(make_sprite(f.image, BinaryMask(96, 96)), DegenerateInputError);
}

TEST_CASE("background fill") {
  SUBCASE("periodic texture hole") {
    const ImagePlane tex = periodic_texture(48, 48, 6, 3);
    const BinaryMask hole = disk_mask(48, 48, 24, 24, 6);
    ImagePlane damaged = tex;
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x)
        if (hole(y, x))
          for (int c = 0; c < 3; ++c) damaged(y, x, c) = 0.0f;
    const ImagePlane plate = fill_background(damaged, hole);
    long good = 0;
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x) {
        if (!hole(y, x)) {
          for (int c = 0; c < 3; ++c) REQUIRE(plate(y, x, c) == damaged(y, x, c));
          continue;
        }
        double err = 0, norm = 0;
        for (int c = 0; c < 3; ++c) {
          err += std::pow(plate(y, x, c) - tex(y, x, c), 2);
          norm += std::pow(tex(y, x, c), 2);
        }
        good += std::sqrt(err) < 0.2 * std::sqrt(norm);
      }
    CHECK(good >= 0.9 * hole.count());
  }
  SUBCASE("edge cases") {
    const ImagePlane img = periodic_texture(16, 16, 4, 1);
    CHECK(fill_background(img, BinaryMask(16, 16)) == img);
    CHECK_THROWS_AS(fill_background(img, BinaryMask(16, 16, true)), DegenerateInputError);
  }
}

TEST_CASE("trajectories") {
  const SequenceSpec a = sample_trajectories(64, 48, 20, 10, 30, 99);
  const SequenceSpec b = sample_trajectories(64, 48, 20, 10, 30, 99);
  CHECK(to_json(a).dump() == to_json(b).dump());
  CHECK(to_json(a).dump() != to_json(sample_trajectories(64, 48, 20, 10, 30, 100)).dump());
  CHECK_THROWS_AS(sample_trajectories(10, 10, 11, 5, 30, 1), ParameterError);

  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const SequenceSpec s = sample_trajectories(40, 30, 30, 8, 30, seed);
    REQUIRE(s.fg_traj.size() == 30);
    CHECK(s.fg_traj[0] == Offset{});
    CHECK(s.bg_traj[0] == Offset{});
    CHECK(s.static_segments.size() <= 2);
    for (int t = 0; t < 30; ++t) {
      const Offset p = s.fg_position(t);
      CHECK(p.dx >= 0);
      CHECK(p.dy >= 0);
      CHECK(p.dx + 30 <= 40);
      CHECK(p.dy + 8 <= 30);
      CHECK(std::abs(s.fg_traj[t].dx) <= 3);
      CHECK(std::abs(s.bg_traj[t].dy) <= 3);
    }
    for (std::size_t i = 0; i < s.static_segments.size(); ++i) {
      const Segment g = s.static_segments[i];
      CHECK(g.start >= 1);
      CHECK(g.end <= 30);
      CHECK(g.end - g.start >= 3);
      CHECK(g.end - g.start <= 8);
      if (i > 0) CHECK(s.static_segments[i - 1].end <= g.start);
      for (int t = g.start; t < g.end; ++t) CHECK(s.fg_traj[t] == s.bg_traj[t]);
    }
  }
  const SequenceSpec back = sequence_spec_from_json(to_json(a));
  CHECK(to_json(back) == to_json(a));
}

TEST_CASE("reflection at the frame edge") {
  // At the right edge moving out: reversed.
  CHECK(reflect_step(10, 3, 10) == -3);
  CHECK(reflect_step(0, -2, 10) == 2);
  CHECK(reflect_step(4, 3, 10) == 3);
  // No room either way.
  CHECK(reflect_step(1, 3, 2) == 0);
  for (int range = 0; range < 8; ++range)
    for (int pos = 0; pos <= range; ++pos)
      for (int step = -3; step <= 3; ++step) {
        const int d = reflect_step(pos, step, range);
        CHECK(pos + d >= 0);
        CHECK(pos + d <= range);
        CHECK(std::abs(d) == std::abs(step) * (d != 0));
      }
}

TEST_CASE("compositing") {
  const Fixture f = red_on_blue_fixture();
  const Sprite sprite = make_sprite(f.image, f.mask);
  const ImagePlane plate = periodic_texture(80, 60, 10, 4);

  SUBCASE("zero motion repeats frame 0") {
    const Sequence s = composite_sequence(sprite, plate, still_spec(80, 60, sprite, 5));
    for (int t = 1; t < 5; ++t) {
      CHECK(s.frames[t] == s.frames[0]);
      CHECK(s.masks[t] == s.masks[0]);
    }
  }
  SUBCASE("constant sprite velocity moves the centroid") {
    SequenceSpec spec = still_spec(80, 60, sprite, 6);
    for (int t = 1; t < 6; ++t) spec.fg_traj[t] = {2, 0};
    const Sequence s = composite_sequence(sprite, plate, spec);
    for (int t = 1; t < 6; ++t) {
      CHECK(centroid_x(s.masks[t]) - centroid_x(s.masks[t - 1]) == doctest::Approx(2.0));
      CHECK(s.masks[t].count() == sprite.alpha.count());
    }
  }
  SUBCASE("mask and pixels agree with sprite and shifted plate") {
    const SequenceSpec spec = sample_trajectories(80, 60, sprite.alpha.width(),
                                                  sprite.alpha.height(), 12, 8);
    const Sequence s = composite_sequence(sprite, plate, spec);
    for (int t = 0; t < 12; ++t) {
      const Offset fg = spec.fg_position(t), bg = spec.bg_position(t);
      for (int y = 0; y < 60; ++y)
        for (int x = 0; x < 80; ++x) {
          const int sy = y - fg.dy, sx = x - fg.dx;
          const bool inside = sy >= 0 && sx >= 0 && sy < sprite.alpha.height() &&
                              sx < sprite.alpha.width() && sprite.alpha(sy, sx);
          REQUIRE(s.masks[t](y, x) == inside);
          for (int c = 0; c < 3; ++c) {
            const float want = inside ? sprite.rgb(sy, sx, c)
                                      : plate(((y - bg.dy) % 60 + 60) % 60, ((x - bg.dx) % 80 + 80) % 80, c);
            REQUIRE(s.frames[t](y, x, c) == want);
          }
        }
    }
  }
  SUBCASE("static segment keeps the sprite fixed on the plate") {
    SequenceSpec spec = still_spec(80, 60, sprite, 8);
    spec.static_segments = {{2, 6}};
    for (int t = 2; t < 6; ++t) spec.fg_traj[t] = spec.bg_traj[t] = {1, 1};
    const Sequence s = composite_sequence(sprite, plate, spec);
    for (int t = 3; t < 6; ++t) {
      // Shift frame t back by one pixel: identical to frame t-1 away from the wrap seam.
      for (int y = 1; y < 59; ++y)
        for (int x = 1; x < 79; ++x)
          for (int c = 0; c < 3; ++c) REQUIRE(s.frames[t](y, x, c) == s.frames[t - 1](y - 1, x - 1, c));
    }
  }
}

TEST_CASE("dataset emission") {
  TempDir a("synth-a"), b("synth-b");
  const Fixture f = red_on_blue_fixture();
  SynthParams p;
  p.count = 10;
  p.length = 3;
  p.seed = 7;
  p.threads = 2;
  const std::vector<SynthSource> sources{{"src", f.image, f.mask, std::nullopt}};
  const auto manifest = synthesize_dataset(sources, a.path(), p);
  synthesize_dataset(sources, b.path(), p);
  int train = 0, test = 0;
  for (const auto& d : std::filesystem::directory_iterator(a.path() / "train")) train += d.is_directory();
  for (const auto& d : std::filesystem::directory_iterator(a.path() / "test")) test += d.is_directory();
  CHECK(train == 8);
  CHECK(test == 2);

  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), a.path());
    REQUIRE(std::filesystem::exists(b.path() / rel));
    CHECK(slurp(e.path()) == slurp(b.path() / rel));
  }

  const Manifest m = read_manifest(manifest);
  CHECK(m.kind == DatasetKind::Video);
  CHECK(m.examples.size() == 30);
  CHECK(m.examples[4].group == "seq_00001");
  CHECK(read_manifest(a.path() / "manifest_train.json").examples.size() == 24);

  p.seed = 8;
  TempDir c("synth-c");
  synthesize_dataset(sources, c.path(), p);
  const auto first_spec = [](const std::filesystem::path& root) {
    return read_manifest(root / "manifest.json").examples[0].image.parent_path() / "spec.json";
  };
  CHECK(slurp(first_spec(a.path())) != slurp(first_spec(c.path())));
}

TEST_CASE("unwritable output") {
  TempDir dir("synth-ro");
  std::ofstream(dir.path() / "file") << "x";
  const Fixture f = red_on_blue_fixture();
  SynthParams p;
  p.count = 1;
  p.length = 2;
  CHECK_THROWS_AS(synthesize_dataset({{"s", f.image, f.mask, std::nullopt}}, dir.path() / "file" / "sub", p),
                  IoError);
}
