#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "camoscore/image.hpp"

namespace camo {

/// Uniform integer in [lo, hi] by rejection sampling on the raw engine
/// output, so sequences are identical across standard libraries.
int uniform_int(std::mt19937_64& rng, int lo, int hi);

/// Object cut out of an image: colour and footprint over the mask's bounding
/// box.
struct Sprite {
  ImagePlane rgb;
  BinaryMask alpha;
  CropBox origin;  // where the sprite sat in its source image
};

Sprite make_sprite(const ImagePlane& img, const BinaryMask& mask);

struct FillParams {
  int patch_side = 7;
  int stride = 1;  // step of the known-patch index
};

/// Onion-peel patch fill of the masked hole. The hole pixel with the most
/// known 8-neighbours is filled first (ties: smallest y, then x) with the
/// centre of the fully-known patch that best matches its known surround.
/// An empty mask returns the image unchanged; a full-frame mask throws
/// DegenerateInputError.
ImagePlane fill_background(const ImagePlane& img, const BinaryMask& mask,
                           const FillParams& params = {});

struct Offset {
  int dx = 0;
  int dy = 0;
  bool operator==(const Offset&) const = default;
};

/// Frames [start, end) where foreground and background move together.
struct Segment {
  int start = 0;
  int end = 0;
  bool operator==(const Segment&) const = default;
};

struct TrajectoryParams {
  int max_step = 3;
  int max_static_segments = 2;
  int min_static_length = 3;
  int max_static_length = 8;
};

/// Everything needed to render one synthetic sequence. Trajectory entry t is
/// the displacement from frame t-1 to frame t; entry 0 is always zero.
struct SequenceSpec {
  std::uint64_t seed = 0;
  int length = 30;
  int frame_width = 0;
  int frame_height = 0;
  int sprite_width = 0;
  int sprite_height = 0;
  Offset fg_origin;  // sprite top-left in frame 0
  std::vector<Offset> fg_traj;
  std::vector<Offset> bg_traj;
  std::vector<Segment> static_segments;
  std::string sprite_source;
  std::string plate_source = "builtin-fill";

  /// Accumulated sprite top-left at frame t.
  Offset fg_position(int t) const;
  /// Accumulated plate shift at frame t.
  Offset bg_position(int t) const;
};

/// Displacement `step` for a coordinate `pos` constrained to [0, range]:
/// reversed if it would leave the range, zero if that fails too.
int reflect_step(int pos, int step, int range);

/// Random translational trajectories with 0-2 static segments. Throws
/// ParameterError when the sprite does not fit in the frame.
SequenceSpec sample_trajectories(int frame_width, int frame_height, int sprite_width,
                                 int sprite_height, int length, std::uint64_t seed,
                                 const TrajectoryParams& params = {});

struct Sequence {
  std::vector<ImagePlane> frames;
  std::vector<BinaryMask> masks;
};

/// Renders the plate shifted with toroidal wrap and the sprite pasted at its
/// accumulated position.
Sequence composite_sequence(const Sprite& sprite, const ImagePlane& plate,
                            const SequenceSpec& spec);

nlohmann::json to_json(const SequenceSpec& spec);
SequenceSpec sequence_spec_from_json(const nlohmann::json& j);

/// A sequence ready to render.
struct SequenceJob {
  SequenceSpec spec;
  const Sprite* sprite = nullptr;
  const ImagePlane* plate = nullptr;
};

/// Renders every job into out/{train,test}/seq_NNNNN/ (frame_NNNNN.png,
/// mask_NNNNN.png, spec.json). Jobs are split by a shuffle seeded with
/// `split_seed`, `train_fraction` of them (rounded) going to train. Writes
/// video manifests manifest.json, manifest_train.json and manifest_test.json
/// and returns the path of manifest.json.
std::filesystem::path emit_dataset(const std::vector<SequenceJob>& jobs,
                                   const std::filesystem::path& out_dir,
                                   std::uint64_t split_seed, double train_fraction = 0.8,
                                   int threads = 0);

/// One image/mask pair to draw sprites and plates from.
struct SynthSource {
  std::string id;
  ImagePlane image;
  BinaryMask mask;
  std::optional<ImagePlane> plate;  // external plate; filled when absent
};

struct SynthParams {
  int count = 1000;
  int length = 30;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  TrajectoryParams trajectory;
  FillParams fill;
  int threads = 0;
};

/// Builds plates and sprites for `sources`, samples `count` sequences
/// cycling through them and emits the corpus with emit_dataset.
std::filesystem::path synthesize_dataset(const std::vector<SynthSource>& sources,
                                         const std::filesystem::path& out_dir,
                                         const SynthParams& params = {});

}  // namespace camo
