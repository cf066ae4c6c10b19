// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "shlk/data.hpp"

namespace shlk::data {

namespace {

struct Library {
  Matrix video;  // low_types x video_dim
  Matrix text;   // low_types x text_dim
  std::vector<std::vector<std::size_t>> high_scripts;
};

std::size_t uniform_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Matrix gaussian(std::size_t rows, std::size_t cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = n(rng);
  }
  return m;
}

void validate(const SyntheticConfig& c) {
  require(c.low_types >= 2 && c.high_types >= 2, ErrorKind::invalid_argument,
          "generator needs at least two low and two high event types");
  require(c.high_per_trajectory >= 1, ErrorKind::invalid_argument, "high_per_trajectory must be >= 1");
  require(c.low_per_high_min >= 1 && c.low_per_high_min <= c.low_per_high_max,
          ErrorKind::invalid_argument, "invalid low_per_high range");
  require(c.low_per_high_max <= c.low_types, ErrorKind::invalid_argument,
          "low-event library smaller than the longest high-event script");
  require(c.duration_min >= 2 && c.duration_min <= c.duration_max, ErrorKind::invalid_argument,
          "low-event durations must be >= 2 frames with min <= max");
  require(c.text_repeat_min >= 1 && c.text_repeat_min <= c.text_repeat_max,
          ErrorKind::invalid_argument, "invalid text repeat range");
  require(c.video_dim >= 1 && c.text_dim >= 1, ErrorKind::invalid_argument, "dimensions must be >= 1");
  require(c.high_per_trajectory * c.low_per_high_max * c.duration_max <= c.max_frames,
          ErrorKind::invalid_argument,
          "longest possible trajectory exceeds max_frames (" + std::to_string(c.max_frames) + ")");
  require(c.max_frames <= kMaxSequenceLength, ErrorKind::invalid_argument,
          "max_frames exceeds the sequence length limit");
  require(c.noise >= 0.0 && c.text_noise >= 0.0 && c.drift >= 0.0, ErrorKind::invalid_argument,
          "noise and drift must be non-negative");
}

Library make_library(const SyntheticConfig& c) {
  std::mt19937_64 rng(c.library_seed);
  Library lib;
  lib.video = gaussian(c.low_types, c.video_dim, c.prototype_scale, rng);
  lib.text = gaussian(c.low_types, c.text_dim, c.prototype_scale, rng);
  std::vector<std::size_t> ids(c.low_types);
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t h = 0; h < c.high_types; ++h) {
    std::shuffle(ids.begin(), ids.end(), rng);
    const std::size_t len = uniform_int(rng, c.low_per_high_min, c.low_per_high_max);
    lib.high_scripts.emplace_back(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(len));
  }
  return lib;
}

}  // namespace

nlohmann::json to_json(const SyntheticConfig& c) {
  return {
      {"low_types", c.low_types},
      {"high_types", c.high_types},
      {"high_per_trajectory", c.high_per_trajectory},
      {"low_per_high_min", c.low_per_high_min},
      {"low_per_high_max", c.low_per_high_max},
      {"duration_min", c.duration_min},
      {"duration_max", c.duration_max},
      {"text_repeat_min", c.text_repeat_min},
      {"text_repeat_max", c.text_repeat_max},
      {"video_dim", c.video_dim},
      {"text_dim", c.text_dim},
      {"max_frames", c.max_frames},
      {"prototype_scale", c.prototype_scale},
      {"noise", c.noise},
      {"text_noise", c.text_noise},
      {"drift", c.drift},
      {"library_seed", c.library_seed},
  };
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  try {
    c.low_types = j.value("low_types", c.low_types);
    c.high_types = j.value("high_types", c.high_types);
    c.high_per_trajectory = j.value("high_per_trajectory", c.high_per_trajectory);
    c.low_per_high_min = j.value("low_per_high_min", c.low_per_high_min);
    c.low_per_high_max = j.value("low_per_high_max", c.low_per_high_max);
    c.duration_min = j.value("duration_min", c.duration_min);
    c.duration_max = j.value("duration_max", c.duration_max);
    c.text_repeat_min = j.value("text_repeat_min", c.text_repeat_min);
    c.text_repeat_max = j.value("text_repeat_max", c.text_repeat_max);
    c.video_dim = j.value("video_dim", c.video_dim);
    c.text_dim = j.value("text_dim", c.text_dim);
    c.max_frames = j.value("max_frames", c.max_frames);
    c.prototype_scale = j.value("prototype_scale", c.prototype_scale);
    c.noise = j.value("noise", c.noise);
    c.text_noise = j.value("text_noise", c.text_noise);
    c.drift = j.value("drift", c.drift);
    c.library_seed = j.value("library_seed", c.library_seed);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed generator config: ") + e.what());
  }
  return c;
}

std::vector<Trajectory> generate(std::uint64_t seed, std::size_t n_trajectories,
                                 const SyntheticConfig& c) {
  validate(c);
  const Library lib = make_library(c);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> video_noise(0.0, 1.0);
  std::vector<Trajectory> out;
  out.reserve(n_trajectories);

  for (std::size_t k = 0; k < n_trajectories; ++k) {
    SyntheticScript script;
    script.noise = c.noise;
    std::size_t prev = 0;
    for (std::size_t h = 0; h < c.high_per_trajectory; ++h) {
      // No immediate repeats, so every high boundary is a real change of script.
      std::size_t id = 0;
      if (h == 0) {
        id = uniform_int(rng, 0, c.high_types - 1);
      } else {
        id = uniform_int(rng, 0, c.high_types - 2);
        if (id >= prev) ++id;
      }
      prev = id;
      script.high_events.push_back(id);
      script.low_expansion.push_back(lib.high_scripts[id]);
      std::vector<std::size_t> durs;
      std::vector<std::size_t> reps;
      for (std::size_t l = 0; l < lib.high_scripts[id].size(); ++l) {
        durs.push_back(uniform_int(rng, c.duration_min, c.duration_max));
        reps.push_back(uniform_int(rng, c.text_repeat_min, c.text_repeat_max));
      }
      script.durations.push_back(std::move(durs));
      script.text_repeats.push_back(std::move(reps));
    }

    std::size_t frames = 0;
    std::size_t tokens = 0;
    for (std::size_t h = 0; h < script.high_events.size(); ++h) {
      for (std::size_t l = 0; l < script.durations[h].size(); ++l) {
        frames += script.durations[h][l];
        tokens += script.text_repeats[h][l];
      }
    }

    Vector direction(c.video_dim);
    for (Eigen::Index d = 0; d < direction.cols(); ++d) direction(d) = video_noise(rng);
    if (direction.norm() > 0.0) direction /= direction.norm();

    Matrix video(frames, c.video_dim);
    Matrix text(tokens, c.text_dim);
    std::vector<double> low_ends;
    std::vector<double> high_ends;
    std::size_t t = 0;
    std::size_t w = 0;
    for (std::size_t h = 0; h < script.high_events.size(); ++h) {
      for (std::size_t l = 0; l < script.low_expansion[h].size(); ++l) {
        const std::size_t type = script.low_expansion[h][l];
        for (std::size_t f = 0; f < script.durations[h][l]; ++f, ++t) {
          const double drift = c.drift * static_cast<double>(t) / static_cast<double>(c.max_frames);
          for (Eigen::Index d = 0; d < video.cols(); ++d) {
            video(t, d) = lib.video(type, d) + c.noise * video_noise(rng) + drift * direction(d);
          }
        }
        for (std::size_t r = 0; r < script.text_repeats[h][l]; ++r, ++w) {
          for (Eigen::Index d = 0; d < text.cols(); ++d) {
            text(w, d) = lib.text(type, d) + c.text_noise * video_noise(rng);
          }
        }
        low_ends.push_back(static_cast<double>(t));
      }
      high_ends.push_back(static_cast<double>(t));
    }

    const std::string id = "traj-" + std::to_string(seed) + "-" + std::to_string(k);
    const double len = static_cast<double>(frames);
    out.push_back(Trajectory{
        align::FeatureSequence(std::move(video), Modality::video, id),
        align::FeatureSequence(std::move(text), Modality::text, id),
        twiou::Segmentation(std::move(high_ends), twiou::TimeUnit::frames, id, len),
        twiou::Segmentation(std::move(low_ends), twiou::TimeUnit::frames, id, len),
        std::move(script),
    });
  }
  return out;
}

Splits generate_splits(std::uint64_t seed, std::size_t n_train, std::size_t n_test,
                       const SyntheticConfig& config) {
  return {generate(seed, n_train, config), generate(seed + kTestSeedOffset, n_test, config)};
}

bool refines(const twiou::Segmentation& low, const twiou::Segmentation& high) {
  const auto& l = low.end_times();
  return std::all_of(high.end_times().begin(), high.end_times().end(),
                     [&](double t) { return std::binary_search(l.begin(), l.end(), t); });
}

namespace {
std::vector<std::size_t> downsample_index(std::size_t length, std::size_t target) {
  std::vector<std::size_t> idx(target);
  for (std::size_t k = 0; k < target; ++k) {
    idx[k] = target == 1 ? 0
                         : static_cast<std::size_t>(std::llround(
                               static_cast<double>(k) * static_cast<double>(length - 1) /
                               static_cast<double>(target - 1)));
  }
  return idx;
}
}  // namespace

align::FeatureSequence downsample(const align::FeatureSequence& seq, std::size_t target) {
  require(target >= 2, ErrorKind::invalid_argument, "downsample target must be >= 2");
  if (seq.length() <= target) return seq;
  const auto idx = downsample_index(seq.length(), target);
  Matrix out(target, seq.dim());
  for (std::size_t k = 0; k < target; ++k) out.row(k) = seq.values().row(idx[k]);
  return align::FeatureSequence(std::move(out), seq.modality(), seq.id());
}

twiou::Segmentation downsample_segmentation(const twiou::Segmentation& seg, std::size_t length,
                                            std::size_t target) {
  require(target >= 2, ErrorKind::invalid_argument, "downsample target must be >= 2");
  if (length <= target) return seg;
  const auto idx = downsample_index(length, target);
  // Kept frame k inherits the event of original frame idx[k]; events end where the
  // inherited label changes.
  const auto& e = seg.end_times();
  auto event_of = [&](std::size_t f) {
    return static_cast<std::size_t>(
        std::upper_bound(e.begin(), e.end(), static_cast<double>(f)) - e.begin());
  };
  std::vector<double> ends;
  for (std::size_t k = 1; k < target; ++k) {
    if (event_of(idx[k]) != event_of(idx[k - 1])) ends.push_back(static_cast<double>(k));
  }
  ends.push_back(static_cast<double>(target));
  return twiou::Segmentation(std::move(ends), seg.unit(), seg.id(), static_cast<double>(target));
}

}  // namespace shlk::data
