#include "camoscore/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>

#include "camoscore/dataset.hpp"
#include "camoscore/error.hpp"
#include "camoscore/image_io.hpp"
#include "camoscore/parallel.hpp"
#include "camoscore/patch_index.hpp"

namespace camo {
namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int wrap(int v, int n) { return ((v % n) + n) % n; }

std::string numbered(const char* prefix, int i, const char* suffix = "") {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%05d%s", prefix, i, suffix);
  return buf;
}

}  // namespace

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  if (hi < lo) throw ParameterError("empty integer range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return lo + static_cast<int>(draw % span);
}

Sprite make_sprite(const ImagePlane& img, const BinaryMask& mask) {
  if (img.width() != mask.width() || img.height() != mask.height()) {
    throw ShapeError("sprite image and mask differ in size");
  }
  if (mask.none()) throw DegenerateInputError("cannot cut a sprite from an empty mask");
  const CropBox box = mask.bbox();
  return Sprite{img.to_rgb().crop(box), mask.crop(box), box};
}

ImagePlane fill_background(const ImagePlane& img, const BinaryMask& mask,
                           const FillParams& params) {
  if (img.width() != mask.width() || img.height() != mask.height()) {
    throw ShapeError("fill image and mask differ in size");
  }
  if (mask.none()) return img;
  if (mask.count() == static_cast<long>(mask.width()) * mask.height()) {
    throw DegenerateInputError("cannot fill: the mask covers the whole frame");
  }
  const int side = params.patch_side;
  const int r = side / 2;
  const int h = img.height();
  const int w = img.width();
  const int channels = img.channels();
  const PatchIndex index(
      extract_patches(img, !mask, side, params.stride, GridKind::Background));

  ImagePlane out = img;
  MaskArray known = !mask.bits();
  auto known_neighbours = [&](int y, int x) {
    int n = 0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int ny = y + dy, nx = x + dx;
        if ((dy || dx) && ny >= 0 && nx >= 0 && ny < h && nx < w && known(ny, nx)) ++n;
      }
    }
    return n;
  };

  struct Entry {
    int count, y, x;
    bool operator<(const Entry& o) const {
      if (count != o.count) return count < o.count;
      if (y != o.y) return y > o.y;
      return x > o.x;
    }
  };
  std::priority_queue<Entry> front;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!known(y, x)) {
        const int n = known_neighbours(y, x);
        if (n > 0) front.push({n, y, x});
      }
    }
  }

  Eigen::VectorXf query(static_cast<Eigen::Index>(side) * side * channels);
  std::vector<int> active;
  while (!front.empty()) {
    const Entry e = front.top();
    front.pop();
    if (known(e.y, e.x) || known_neighbours(e.y, e.x) != e.count) continue;

    active.clear();
    query.setZero();
    int k = 0;
    for (int dy = -r; dy < side - r; ++dy) {
      for (int dx = -r; dx < side - r; ++dx) {
        const int y = e.y + dy, x = e.x + dx;
        const bool usable = y >= 0 && x >= 0 && y < h && x < w && known(y, x);
        for (int c = 0; c < channels; ++c, ++k) {
          if (!usable) continue;
          query(k) = out(y, x, c);
          active.push_back(k);
        }
      }
    }
    const PatchMatch m = index.nearest_masked(query, active);
    const auto best = index.grid().patches.col(m.index);
    const int centre = (r * side + r) * channels;
    for (int c = 0; c < channels; ++c) out(e.y, e.x, c) = best(centre + c);
    known(e.y, e.x) = true;

    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int ny = e.y + dy, nx = e.x + dx;
        if (ny >= 0 && nx >= 0 && ny < h && nx < w && !known(ny, nx)) {
          front.push({known_neighbours(ny, nx), ny, nx});
        }
      }
    }
  }
  return out;
}

Offset SequenceSpec::fg_position(int t) const {
  Offset p = fg_origin;
  for (int i = 0; i <= t && i < static_cast<int>(fg_traj.size()); ++i) {
    p.dx += fg_traj[i].dx;
    p.dy += fg_traj[i].dy;
  }
  return p;
}

Offset SequenceSpec::bg_position(int t) const {
  Offset p;
  for (int i = 0; i <= t && i < static_cast<int>(bg_traj.size()); ++i) {
    p.dx += bg_traj[i].dx;
    p.dy += bg_traj[i].dy;
  }
  return p;
}

int reflect_step(int pos, int step, int range) {
  auto inside = [&](int p) { return p >= 0 && p <= range; };
  if (inside(pos + step)) return step;
  if (inside(pos - step)) return -step;
  return 0;
}

SequenceSpec sample_trajectories(int frame_width, int frame_height, int sprite_width,
                                 int sprite_height, int length, std::uint64_t seed,
                                 const TrajectoryParams& params) {
  if (sprite_width < 1 || sprite_height < 1 || sprite_width > frame_width ||
      sprite_height > frame_height) {
    throw ParameterError("sprite " + std::to_string(sprite_width) + "x" +
                         std::to_string(sprite_height) + " does not fit in frame " +
                         std::to_string(frame_width) + "x" + std::to_string(frame_height));
  }
  if (length < 1) throw ParameterError("sequence length must be >= 1");
  if (params.max_step < 0 || params.min_static_length < 1 ||
      params.max_static_length < params.min_static_length) {
    throw ParameterError("invalid trajectory parameters");
  }

  std::mt19937_64 rng(seed);
  SequenceSpec s;
  s.seed = seed;
  s.length = length;
  s.frame_width = frame_width;
  s.frame_height = frame_height;
  s.sprite_width = sprite_width;
  s.sprite_height = sprite_height;

  const int step = params.max_step;
  s.bg_traj.assign(length, Offset{});
  for (int t = 1; t < length; ++t) {
    s.bg_traj[t] = {uniform_int(rng, -step, step), uniform_int(rng, -step, step)};
  }

  // Non-overlapping static segments inside frames [1, length).
  const int wanted = uniform_int(rng, 0, params.max_static_segments);
  for (int i = 0; i < wanted; ++i) {
    const int max_len = std::min(params.max_static_length, length - 1);
    if (max_len < params.min_static_length) break;
    for (int attempt = 0; attempt < 20; ++attempt) {
      const int len = uniform_int(rng, params.min_static_length, max_len);
      const int start = uniform_int(rng, 1, length - len);
      const Segment seg{start, start + len};
      const bool overlaps = std::any_of(
          s.static_segments.begin(), s.static_segments.end(),
          [&](const Segment& o) { return seg.start < o.end && o.start < seg.end; });
      if (!overlaps) {
        s.static_segments.push_back(seg);
        break;
      }
    }
  }
  std::sort(s.static_segments.begin(), s.static_segments.end(),
            [](const Segment& a, const Segment& b) { return a.start < b.start; });
  auto is_static = [&](int t) {
    return std::any_of(s.static_segments.begin(), s.static_segments.end(),
                       [&](const Segment& g) { return t >= g.start && t < g.end; });
  };

  const int range_x = frame_width - sprite_width;
  const int range_y = frame_height - sprite_height;
  s.fg_origin = {uniform_int(rng, 0, range_x), uniform_int(rng, 0, range_y)};
  s.fg_traj.assign(length, Offset{});
  Offset pos = s.fg_origin;
  for (int t = 1; t < length; ++t) {
    const bool still = is_static(t);
    Offset d = still ? s.bg_traj[t]
                     : Offset{uniform_int(rng, -step, step), uniform_int(rng, -step, step)};
    d.dx = reflect_step(pos.dx, d.dx, range_x);
    d.dy = reflect_step(pos.dy, d.dy, range_y);
    // The plate wraps, so it can follow whatever the sprite had to do.
    if (still) s.bg_traj[t] = d;
    s.fg_traj[t] = d;
    pos.dx += d.dx;
    pos.dy += d.dy;
  }
  return s;
}

Sequence composite_sequence(const Sprite& sprite, const ImagePlane& plate,
                            const SequenceSpec& spec) {
  if (plate.width() != spec.frame_width || plate.height() != spec.frame_height) {
    throw ShapeError("plate size does not match the sequence frame size");
  }
  if (sprite.alpha.width() != spec.sprite_width || sprite.alpha.height() != spec.sprite_height) {
    throw ShapeError("sprite size does not match the sequence spec");
  }
  if (static_cast<int>(spec.fg_traj.size()) != spec.length ||
      static_cast<int>(spec.bg_traj.size()) != spec.length) {
    throw ParameterError("trajectory length does not match the sequence length");
  }
  const ImagePlane rgb_plate = plate.to_rgb();
  const int w = spec.frame_width;
  const int h = spec.frame_height;
  Sequence seq;
  seq.frames.reserve(spec.length);
  seq.masks.reserve(spec.length);
  Offset fg = spec.fg_origin;
  Offset bg;
  for (int t = 0; t < spec.length; ++t) {
    fg.dx += spec.fg_traj[t].dx;
    fg.dy += spec.fg_traj[t].dy;
    bg.dx += spec.bg_traj[t].dx;
    bg.dy += spec.bg_traj[t].dy;
    if (fg.dx < 0 || fg.dy < 0 || fg.dx + spec.sprite_width > w ||
        fg.dy + spec.sprite_height > h) {
      throw ParameterError("sprite leaves the frame at t=" + std::to_string(t));
    }
    ImagePlane frame(w, h, 3);
    for (int y = 0; y < h; ++y) {
      const int sy = wrap(y - bg.dy, h);
      for (int x = 0; x < w; ++x) {
        const int sx = wrap(x - bg.dx, w);
        for (int c = 0; c < 3; ++c) frame(y, x, c) = rgb_plate(sy, sx, c);
      }
    }
    BinaryMask mask(w, h);
    for (int y = 0; y < spec.sprite_height; ++y) {
      for (int x = 0; x < spec.sprite_width; ++x) {
        if (!sprite.alpha(y, x)) continue;
        for (int c = 0; c < 3; ++c) frame(fg.dy + y, fg.dx + x, c) = sprite.rgb(y, x, c);
        mask(fg.dy + y, fg.dx + x) = true;
      }
    }
    seq.frames.push_back(std::move(frame));
    seq.masks.push_back(std::move(mask));
  }
  return seq;
}

nlohmann::json to_json(const SequenceSpec& s) {
  using nlohmann::json;
  auto offsets = [](const std::vector<Offset>& v) {
    json a = json::array();
    for (const auto& o : v) a.push_back({o.dx, o.dy});
    return a;
  };
  json segments = json::array();
  for (const auto& g : s.static_segments) segments.push_back({g.start, g.end});
  return json{{"seed", s.seed},
              {"length", s.length},
              {"frame_size", {s.frame_width, s.frame_height}},
              {"sprite_size", {s.sprite_width, s.sprite_height}},
              {"fg_origin", {s.fg_origin.dx, s.fg_origin.dy}},
              {"fg_traj", offsets(s.fg_traj)},
              {"bg_traj", offsets(s.bg_traj)},
              {"static_segments", std::move(segments)},
              {"sprite_source", s.sprite_source},
              {"plate_source", s.plate_source}};
}

SequenceSpec sequence_spec_from_json(const nlohmann::json& j) {
  try {
    SequenceSpec s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.length = j.at("length").get<int>();
    const auto frame = j.at("frame_size").get<std::vector<int>>();
    const auto sprite = j.at("sprite_size").get<std::vector<int>>();
    const auto origin = j.at("fg_origin").get<std::vector<int>>();
    if (frame.size() != 2 || sprite.size() != 2 || origin.size() != 2) {
      throw FormatError("spec sizes must be pairs");
    }
    s.frame_width = frame[0];
    s.frame_height = frame[1];
    s.sprite_width = sprite[0];
    s.sprite_height = sprite[1];
    s.fg_origin = {origin[0], origin[1]};
    for (const auto& o : j.at("fg_traj")) s.fg_traj.push_back({o.at(0), o.at(1)});
    for (const auto& o : j.at("bg_traj")) s.bg_traj.push_back({o.at(0), o.at(1)});
    for (const auto& g : j.at("static_segments")) s.static_segments.push_back({g.at(0), g.at(1)});
    s.sprite_source = j.value("sprite_source", std::string{});
    s.plate_source = j.value("plate_source", std::string{});
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed sequence spec: ") + e.what());
  }
}

std::filesystem::path emit_dataset(const std::vector<SequenceJob>& jobs,
                                   const std::filesystem::path& out_dir,
                                   std::uint64_t split_seed, double train_fraction,
                                   int threads) {
  namespace fs = std::filesystem;
  if (jobs.empty()) throw ParameterError("no sequences to emit");
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw ParameterError("train fraction must lie in [0, 1]");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir.string());
  }

  const int n = static_cast<int>(jobs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(split_seed);
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_int(rng, 0, i)]);
  const int n_train = static_cast<int>(std::lround(train_fraction * n));
  std::vector<std::string> split(n);
  for (int k = 0; k < n; ++k) split[order[k]] = k < n_train ? "train" : "test";

  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const SequenceJob& job = jobs[i];
    const fs::path dir = out_dir / split[i] / numbered("seq_", static_cast<int>(i));
    fs::create_directories(dir);
    const Sequence seq = composite_sequence(*job.sprite, *job.plate, job.spec);
    for (int t = 0; t < job.spec.length; ++t) {
      save_png(dir / numbered("frame_", t, ".png"), seq.frames[t]);
      save_png(dir / numbered("mask_", t, ".png"), seq.masks[t]);
    }
    std::ofstream out(dir / "spec.json");
    out << to_json(job.spec).dump(2) << '\n';
    if (!out) throw IoError("cannot write " + (dir / "spec.json").string());
  });

  Manifest all{"synthetic-video", DatasetKind::Video, {}};
  Manifest train{"synthetic-video-train", DatasetKind::Video, {}};
  Manifest test{"synthetic-video-test", DatasetKind::Video, {}};
  for (int i = 0; i < n; ++i) {
    const std::string seq_id = numbered("seq_", i);
    const fs::path dir = out_dir / split[i] / seq_id;
    for (int t = 0; t < jobs[i].spec.length; ++t) {
      ManifestEntry e{seq_id + "/" + numbered("frame_", t), dir / numbered("frame_", t, ".png"),
                      dir / numbered("mask_", t, ".png"), seq_id};
      all.examples.push_back(e);
      (split[i] == "train" ? train : test).examples.push_back(std::move(e));
    }
  }
  const fs::path manifest = out_dir / "manifest.json";
  write_manifest(manifest, all);
  write_manifest(out_dir / "manifest_train.json", train);
  write_manifest(out_dir / "manifest_test.json", test);
  return manifest;
}

std::filesystem::path synthesize_dataset(const std::vector<SynthSource>& sources,
                                         const std::filesystem::path& out_dir,
                                         const SynthParams& params) {
  if (sources.empty()) throw ParameterError("no synthesis sources");
  if (params.count < 1) throw ParameterError("sequence count must be >= 1");

  std::vector<Sprite> sprites(sources.size());
  std::vector<ImagePlane> plates(sources.size());
  parallel_for(sources.size(), params.threads, [&](std::size_t i) {
    const SynthSource& src = sources[i];
    sprites[i] = make_sprite(src.image, src.mask);
    if (src.plate) {
      if (src.plate->width() != src.image.width() || src.plate->height() != src.image.height()) {
        throw ShapeError("external plate for " + src.id + " does not match its image");
      }
      plates[i] = src.plate->to_rgb();
    } else {
      plates[i] = fill_background(src.image.to_rgb(), src.mask, params.fill);
    }
  });

  std::vector<SequenceJob> jobs;
  jobs.reserve(params.count);
  for (int i = 0; i < params.count; ++i) {
    const std::size_t s = static_cast<std::size_t>(i) % sources.size();
    SequenceSpec spec = sample_trajectories(
        plates[s].width(), plates[s].height(), sprites[s].alpha.width(),
        sprites[s].alpha.height(), params.length, mix_seed(params.seed, i), params.trajectory);
    spec.sprite_source = sources[s].id;
    spec.plate_source = sources[s].plate ? "external" : "builtin-fill";
    jobs.push_back({std::move(spec), &sprites[s], &plates[s]});
  }
  return emit_dataset(jobs, out_dir, mix_seed(params.seed, ~0ULL), params.train_fraction,
                      params.threads);
}

}  // namespace camo
