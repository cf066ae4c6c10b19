// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shlk/align.hpp"
#include "shlk/data.hpp"
#include "shlk/graph.hpp"
#include "shlk/twiou.hpp"

namespace shlk::model {

enum class Level : std::uint8_t { low, mid, high };

std::string_view to_string(Level l);

struct HierConfig {
  std::size_t n_low = 16;
  std::size_t n_high = 4;
  std::size_t n_mid = 0;        ///< 0 unless levels == 3 (then 8 by default)
  std::size_t levels = 2;       ///< 1 (non-hierarchical), 2 or 3
  std::size_t latent_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t video_dim = 16;
  std::size_t text_dim = 12;
  std::size_t max_length = 96;  ///< T cap for either modality
  std::size_t frames_per_event = 0;  ///< l; 0 means ceil(max_length / n_low)
  double beta = 1.0;
  double gamma = 1.0;
  align::Metric metric = align::Metric::euclidean;
  bool use_text = true;

  // Structural ablations.
  bool low_align_loss = true;
  bool cross_decoding = true;
  bool single_level_decoding = false;

  void validate() const;
  std::size_t frames_per_low_event() const;
  std::size_t dim(Modality m) const { return m == Modality::video ? video_dim : text_dim; }
  /// Three-level variant with the default 16/8/4 layout.
  static HierConfig three_level();
};

nlohmann::json to_json(const HierConfig& c);
HierConfig hier_config_from_json(const nlohmann::json& j);

struct LatentSequence {
  Matrix latents;  ///< K x latent_dim
  Level level = Level::low;
  Modality modality = Modality::video;
};

// Loss terms. Absent terms are 0. total = dyn() + beta * static_sum(), summed in
// field order.
struct LossBreakdown {
  double sdtw_low_text = 0.0;
  double sdtw_low_video = 0.0;
  double sdtw_recon_video = 0.0;
  double sdtw_recon_text = 0.0;
  double sdtw_high_cross = 0.0;
  double sdtw_mid_video = 0.0;
  double sdtw_mid_text = 0.0;
  double l2_high = 0.0;
  double l2_low_prime = 0.0;
  double l2_mid_prime = 0.0;
  double total = 0.0;

  double dyn() const;
  double static_sum() const;

  static const std::vector<std::string>& field_names();
  std::vector<double> values() const;  ///< in field_names() order, total last
  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown scaled(double k) const;
  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

// Node handles of one loss graph.
struct LossNodes {
  std::vector<std::pair<double LossBreakdown::*, graph::NodeId>> terms;
  graph::NodeId total;
};

// Builds model sub-networks into a graph. Parameter names are
// "<modality>.<block>.<tensor>", e.g. "video.enc_low.Wz".
class ModelGraph {
 public:
  explicit ModelGraph(HierConfig config);

  graph::Graph& graph() noexcept { return g_; }
  const HierConfig& config() const noexcept { return c_; }

  graph::NodeId input(const std::string& name, const Matrix& value);
  const graph::Bindings& bindings() const noexcept { return bindings_; }

  /// Encoder GRU over the rows of x, then an emitter GRU emitting `count` latents.
  graph::NodeId encode(graph::NodeId x, Modality m, Level target);
  graph::NodeId encode_low(graph::NodeId x, Modality m) { return encode(x, m, Level::low); }

  /// Decodes `count` child latents of level `target` from parent latents (block repetition).
  graph::NodeId decode_latents(graph::NodeId parent, Modality target_modality, Level target);
  /// Per-latent GRU emitting `steps` feature vectors each; event-major output.
  graph::NodeId decode_features(graph::NodeId z, Modality target, std::size_t steps);

  LossNodes losses(graph::NodeId video, std::optional<graph::NodeId> text);

 private:
  std::size_t count(Level l) const;
  graph::NodeId zeros(Eigen::Index rows);

  HierConfig c_;
  graph::Graph g_;
  graph::Bindings bindings_;
};

/// Step s of a child sequence of `children` latents consumes parent floor(s / (children/parents)).
std::vector<Eigen::Index> block_repeat_index(std::size_t children, std::size_t parents);

class HierModel {
 public:
  HierModel(HierConfig config, std::uint64_t seed);
  HierModel(HierConfig config, graph::ParamStore params);

  const HierConfig& config() const noexcept { return c_; }
  const graph::ParamStore& params() const noexcept { return params_; }
  graph::ParamStore& params() noexcept { return params_; }

  LatentSequence encode_low(const align::FeatureSequence& x) const;
  LatentSequence encode_mid(const LatentSequence& z_low) const;
  /// Consumes low latents (two levels) or mid latents (three levels).
  LatentSequence encode_high(const LatentSequence& z) const;
  /// Low latents of `target` reconstructed from high latents (through mid when present).
  LatentSequence decode_low_cross(const LatentSequence& z_high, Modality target) const;
  align::FeatureSequence decode_features(const LatentSequence& z_low, Modality target) const;

  LossBreakdown compute_losses(const align::FeatureSequence& video,
                               const align::FeatureSequence* text = nullptr) const;

  struct LossAndGrad {
    LossBreakdown loss;
    graph::Gradients grads;
  };
  LossAndGrad loss_and_grad(const align::FeatureSequence& video,
                            const align::FeatureSequence* text = nullptr) const;

 private:
  void check_input(const align::FeatureSequence& x, Modality expected) const;
  LossAndGrad loss_and_grad_impl(const align::FeatureSequence& video,
                                 const align::FeatureSequence* text, bool with_grad) const;

  HierConfig c_;
  graph::ParamStore params_;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 8;
  double lr = 1e-3;
  double clip_norm = 10.0;  ///< global gradient norm cap; 0 disables
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  ///< 0 disables periodic checkpoints
  std::string checkpoint_dir;
  unsigned threads = 0;  ///< 0 uses the SHLK_THREADS cap
  /// Called after each epoch with its 1-based index and mean loss. Not serialized.
  std::function<void(std::size_t, const LossBreakdown&)> on_epoch;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainResult {
  HierModel model;
  std::vector<LossBreakdown> trace;  ///< mean loss per epoch, in epoch order
};

/// Deterministic in (data, configs). Throws divergence on a non-finite loss.
TrainResult train(const std::vector<data::Trajectory>& dataset, const HierConfig& config,
                  const TrainConfig& train_config);

/// CSV with header "epoch,<field_names>".
void write_trace_csv(const std::string& path, const std::vector<LossBreakdown>& trace);

struct Inference {
  twiou::Segmentation low;
  twiou::Segmentation high;
  LatentSequence z_low;
  LatentSequence z_high;  ///< equals z_low for one-level models
  align::FeatureSequence decoded;
};

Inference infer_segmentation(const HierModel& model, const align::FeatureSequence& video,
                             const align::FeatureSequence* text = nullptr);

/// Per-event end on the input timeline: event k covers decoded rows [k*l, (k+1)*l) and ends
/// one past the largest input index aligned to it. Forward-max makes the result non-decreasing.
std::vector<double> event_ends(const align::AlignmentPath& path, std::size_t events,
                               std::size_t frames_per_event);

/// Drops repeated ends (empty events), leaving strictly increasing end-times.
std::vector<double> dedup_ends(const std::vector<double>& ends);

/// Ends of each block of `group` consecutive events.
std::vector<double> block_ends(const std::vector<double>& ends, std::size_t group);

}  // namespace shlk::model
