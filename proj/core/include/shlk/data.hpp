// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shlk/align.hpp"
#include "shlk/twiou.hpp"

namespace shlk::data {

// Parameters of the synthetic task generator. Event prototypes come from
// `library_seed`, so datasets generated with different seeds share one library.
struct SyntheticConfig {
  std::size_t low_types = 8;          ///< distinct low-level event prototypes
  std::size_t high_types = 6;         ///< distinct high-level events (fixed low-event scripts)
  std::size_t high_per_trajectory = 4;
  std::size_t low_per_high_min = 2;
  std::size_t low_per_high_max = 4;
  std::size_t duration_min = 2;       ///< frames per low event
  std::size_t duration_max = 6;
  std::size_t text_repeat_min = 1;    ///< text tokens per low event
  std::size_t text_repeat_max = 3;
  std::size_t video_dim = 16;
  std::size_t text_dim = 12;
  std::size_t max_frames = 96;        ///< T cap
  double prototype_scale = 1.0;
  double noise = 0.3;                 ///< video frame noise std
  double text_noise = 0.05;
  double drift = 0.2;                 ///< drift magnitude reached at T cap
  std::uint64_t library_seed = 12345;
};

nlohmann::json to_json(const SyntheticConfig& c);
SyntheticConfig synthetic_config_from_json(const nlohmann::json& j);

struct SyntheticScript {
  std::vector<std::size_t> high_events;               ///< high-event type per slot
  std::vector<std::vector<std::size_t>> low_expansion;  ///< low-event types per high slot
  std::vector<std::vector<std::size_t>> durations;      ///< frames per low event
  std::vector<std::vector<std::size_t>> text_repeats;   ///< tokens per low event
  double noise = 0.0;
};

struct Trajectory {
  align::FeatureSequence video;
  align::FeatureSequence text;
  twiou::Segmentation gt_high;
  twiou::Segmentation gt_low;
  SyntheticScript script;

  const std::string& id() const { return video.id(); }
};

/// Deterministic per (seed, config).
std::vector<Trajectory> generate(std::uint64_t seed, std::size_t n_trajectories,
                                 const SyntheticConfig& config = {});

struct Splits {
  std::vector<Trajectory> train;
  std::vector<Trajectory> test;
};

/// Seed offset of the held-out split, so train and test never share a trajectory.
inline constexpr std::uint64_t kTestSeedOffset = 1000;

/// train = generate(seed, n_train), test = generate(seed + kTestSeedOffset, n_test).
Splits generate_splits(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                       const SyntheticConfig& config = {});

/// True when every high end-time is also a low end-time.
bool refines(const twiou::Segmentation& low, const twiou::Segmentation& high);

/// Keeps `target` evenly spaced frames including the first and last. No-op when T <= target.
align::FeatureSequence downsample(const align::FeatureSequence& seq, std::size_t target);
/// Maps end-times onto the index grid of `downsample(T -> target)`.
twiou::Segmentation downsample_segmentation(const twiou::Segmentation& seg, std::size_t length,
                                            std::size_t target);

// Feature file: "SHLK1", u32 T, u32 D, u8 modality, T*D float32, little-endian.
std::vector<std::uint8_t> encode_features(const align::FeatureSequence& seq);
align::FeatureSequence decode_features(std::span<const std::uint8_t> bytes, std::string id = {});
void write_features(const std::string& path, const align::FeatureSequence& seq);
align::FeatureSequence read_features(const std::string& path, std::string id = {});

/// JSON-lines, one segmentation per line.
void write_annotations(const std::string& path, const std::vector<twiou::Segmentation>& segs);
std::vector<twiou::Segmentation> load_annotations(const std::string& path);

struct ManifestEntry {
  std::string id;
  std::string video;  ///< feature file paths, relative to the manifest directory
  std::string text;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string gt_high;  ///< annotation file paths
  std::string gt_low;
  nlohmann::json generator;  ///< generator config, when synthetic
};

/// Writes features, annotations and manifest.json under `dir`.
Manifest write_dataset(const std::string& dir, const std::vector<Trajectory>& data,
                       const nlohmann::json& generator = nullptr);
Manifest read_manifest(const std::string& path);
/// Loads a dataset written by write_dataset. Scripts are left empty.
std::vector<Trajectory> load_dataset(const std::string& manifest_path);

}  // namespace shlk::data
