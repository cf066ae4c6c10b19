// SPDX-License-Identifier: Apache-2.0
#include "shlk/model.hpp"

#include <algorithm>
#include <cmath>

namespace shlk::model {

using graph::Dense;
using graph::GruCell;
using graph::NodeId;
using graph::Shape;

std::string_view to_string(Level l) {
  switch (l) {
    case Level::low: return "low";
    case Level::mid: return "mid";
    case Level::high: return "high";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Configuration

void HierConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::invalid_argument, what); };
  if (levels < 1 || levels > 3) bad("levels must be 1, 2 or 3");
  if (n_low < 1 || n_high < 1) bad("latent counts must be >= 1");
  if (levels >= 2 && n_low % n_high != 0) bad("n_low must be divisible by n_high");
  if (levels == 3) {
    if (n_mid < 1) bad("three levels need n_mid >= 1");
    if (n_low % n_mid != 0 || n_mid % n_high != 0) bad("n_low, n_mid, n_high must nest");
  }
  if (latent_dim < 1 || hidden_dim < 1 || video_dim < 1 || text_dim < 1) bad("dimensions must be >= 1");
  if (max_length < 1 || max_length > kMaxSequenceLength) bad("max_length out of range");
  if (frames_per_low_event() * n_low < max_length) bad("frames_per_event * n_low < max_length");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) bad("gamma must be > 0 for training");
  if (!(beta >= 0.0) || !std::isfinite(beta)) bad("beta must be >= 0");
  if (single_level_decoding && levels < 2) bad("single-level decoding needs a hierarchy");
}

std::size_t HierConfig::frames_per_low_event() const {
  if (frames_per_event > 0) return frames_per_event;
  return (max_length + n_low - 1) / std::max<std::size_t>(n_low, 1);
}

HierConfig HierConfig::three_level() {
  HierConfig c;
  c.levels = 3;
  c.n_mid = 8;
  return c;
}

nlohmann::json to_json(const HierConfig& c) {
  return {
      {"n_low", c.n_low},
      {"n_high", c.n_high},
      {"n_mid", c.n_mid},
      {"levels", c.levels},
      {"latent_dim", c.latent_dim},
      {"hidden_dim", c.hidden_dim},
      {"video_dim", c.video_dim},
      {"text_dim", c.text_dim},
      {"max_length", c.max_length},
      {"frames_per_event", c.frames_per_low_event()},
      {"beta", c.beta},
      {"gamma", c.gamma},
      {"metric", align::to_string(c.metric)},
      {"use_text", c.use_text},
      {"low_align_loss", c.low_align_loss},
      {"cross_decoding", c.cross_decoding},
      {"single_level_decoding", c.single_level_decoding},
  };
}

HierConfig hier_config_from_json(const nlohmann::json& j) {
  HierConfig c;
  try {
    c.n_low = j.value("n_low", c.n_low);
    c.n_high = j.value("n_high", c.n_high);
    c.n_mid = j.value("n_mid", c.n_mid);
    c.levels = j.value("levels", c.levels);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.video_dim = j.value("video_dim", c.video_dim);
    c.text_dim = j.value("text_dim", c.text_dim);
    c.max_length = j.value("max_length", c.max_length);
    c.frames_per_event = j.value("frames_per_event", c.frames_per_event);
    c.beta = j.value("beta", c.beta);
    c.gamma = j.value("gamma", c.gamma);
    c.metric = align::metric_from_string(j.value("metric", std::string("euclidean")));
    c.use_text = j.value("use_text", c.use_text);
    c.low_align_loss = j.value("low_align_loss", c.low_align_loss);
    c.cross_decoding = j.value("cross_decoding", c.cross_decoding);
    c.single_level_decoding = j.value("single_level_decoding", c.single_level_decoding);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed model config: ") + e.what());
  }
  if (c.levels == 3 && c.n_mid == 0) c.n_mid = 8;
  return c;
}

// ---------------------------------------------------------------------------
// LossBreakdown

double LossBreakdown::dyn() const {
  return sdtw_low_text + sdtw_low_video + sdtw_recon_video + sdtw_recon_text + sdtw_high_cross +
         sdtw_mid_video + sdtw_mid_text;
}

double LossBreakdown::static_sum() const { return l2_high + l2_low_prime + l2_mid_prime; }

const std::vector<std::string>& LossBreakdown::field_names() {
  static const std::vector<std::string> names = {
      "sdtw_low_text",   "sdtw_low_video", "sdtw_recon_video", "sdtw_recon_text",
      "sdtw_high_cross", "sdtw_mid_video", "sdtw_mid_text",    "l2_high",
      "l2_low_prime",    "l2_mid_prime",   "total"};
  return names;
}

std::vector<double> LossBreakdown::values() const {
  return {sdtw_low_text,   sdtw_low_video, sdtw_recon_video, sdtw_recon_text,
          sdtw_high_cross, sdtw_mid_video, sdtw_mid_text,    l2_high,
          l2_low_prime,    l2_mid_prime,   total};
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  sdtw_low_text += o.sdtw_low_text;
  sdtw_low_video += o.sdtw_low_video;
  sdtw_recon_video += o.sdtw_recon_video;
  sdtw_recon_text += o.sdtw_recon_text;
  sdtw_high_cross += o.sdtw_high_cross;
  sdtw_mid_video += o.sdtw_mid_video;
  sdtw_mid_text += o.sdtw_mid_text;
  l2_high += o.l2_high;
  l2_low_prime += o.l2_low_prime;
  l2_mid_prime += o.l2_mid_prime;
  total += o.total;
  return *this;
}

LossBreakdown LossBreakdown::scaled(double k) const {
  LossBreakdown r = *this;
  for (double* f : {&r.sdtw_low_text, &r.sdtw_low_video, &r.sdtw_recon_video, &r.sdtw_recon_text,
                    &r.sdtw_high_cross, &r.sdtw_mid_video, &r.sdtw_mid_text, &r.l2_high,
                    &r.l2_low_prime, &r.l2_mid_prime, &r.total}) {
    *f *= k;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Sub-networks

namespace {

std::string block(Modality m, const char* name) { return std::string(to_string(m)) + "." + name; }

std::string level_block(Modality m, const char* kind, Level l) {
  return std::string(to_string(m)) + "." + kind + "_" + std::string(to_string(l));
}

struct EncoderBlocks {
  GruCell enc;
  GruCell emit;
  Dense proj;
};

struct DecoderBlocks {
  GruCell gru;
  Dense out;
};

struct FeatureBlocks {
  Dense init;
  GruCell gru;
  Dense out;
};

std::size_t level_count(const HierConfig& c, Level l) {
  return l == Level::low ? c.n_low : l == Level::mid ? c.n_mid : c.n_high;
}

EncoderBlocks encoder_blocks(const HierConfig& c, Modality m, Level l) {
  const std::size_t in = l == Level::low ? c.dim(m) : c.latent_dim;
  return {GruCell{level_block(m, "enc", l), in, c.hidden_dim},
          GruCell{level_block(m, "emit", l), level_count(c, l), c.hidden_dim},
          Dense{level_block(m, "proj", l), c.hidden_dim, c.latent_dim}};
}

DecoderBlocks decoder_blocks(const HierConfig& c, Modality m, Level l) {
  return {GruCell{level_block(m, "dec", l), c.latent_dim, c.hidden_dim},
          Dense{level_block(m, "dec_out", l), c.hidden_dim, c.latent_dim}};
}

FeatureBlocks feature_blocks(const HierConfig& c, Modality m) {
  return {Dense{block(m, "feat_init"), c.latent_dim, c.hidden_dim},
          GruCell{block(m, "feat"), c.latent_dim, c.hidden_dim},
          Dense{block(m, "feat_out"), c.hidden_dim, c.dim(m)}};
}

std::vector<Level> encoder_levels(const HierConfig& c) {
  if (c.levels == 1) return {Level::low};
  if (c.levels == 2) return {Level::low, Level::high};
  return {Level::low, Level::mid, Level::high};
}

std::vector<Level> decoder_levels(const HierConfig& c) {
  if (c.levels == 1 || c.single_level_decoding) return {};
  if (c.levels == 2) return {Level::low};
  return {Level::mid, Level::low};
}

std::vector<Modality> modalities(const HierConfig& c) {
  if (c.use_text) return {Modality::video, Modality::text};
  return {Modality::video};
}

graph::ParamStore init_params(const HierConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  graph::ParamStore p;
  for (Modality m : modalities(c)) {
    for (Level l : encoder_levels(c)) {
      const auto b = encoder_blocks(c, m, l);
      b.enc.init(p, rng);
      b.emit.init(p, rng);
      b.proj.init(p, rng);
    }
    for (Level l : decoder_levels(c)) {
      const auto b = decoder_blocks(c, m, l);
      b.gru.init(p, rng);
      b.out.init(p, rng);
    }
    const auto f = feature_blocks(c, m);
    f.init.init(p, rng);
    f.gru.init(p, rng);
    f.out.init(p, rng);
  }
  return p;
}

}  // namespace

std::vector<Eigen::Index> block_repeat_index(std::size_t children, std::size_t parents) {
  require(parents >= 1 && children % parents == 0, ErrorKind::invalid_argument,
          "child count must be a multiple of the parent count");
  const std::size_t ratio = children / parents;
  std::vector<Eigen::Index> idx(children);
  for (std::size_t s = 0; s < children; ++s) idx[s] = static_cast<Eigen::Index>(s / ratio);
  return idx;
}

ModelGraph::ModelGraph(HierConfig config) : c_(std::move(config)) { c_.validate(); }

std::size_t ModelGraph::count(Level l) const {
  switch (l) {
    case Level::low: return c_.n_low;
    case Level::mid: return c_.n_mid;
    case Level::high: return c_.n_high;
  }
  return 0;
}

NodeId ModelGraph::zeros(Eigen::Index rows) {
  return g_.constant(Matrix::Zero(rows, static_cast<Eigen::Index>(c_.hidden_dim)));
}

NodeId ModelGraph::input(const std::string& name, const Matrix& value) {
  bindings_[name] = value;
  return g_.input(name, Shape{value.rows(), value.cols()});
}

NodeId ModelGraph::encode(NodeId x, Modality m, Level target) {
  const auto b = encoder_blocks(c_, m, target);
  const NodeId states = graph::gru_unroll(g_, b.enc, x, zeros(1));
  const NodeId final_state = g_.slice_rows(states, g_.shape(states).rows - 1, 1);
  // The emitter starts from the encoder state and reads a one-hot step index.
  const auto n = static_cast<Eigen::Index>(count(target));
  const NodeId steps = g_.constant(Matrix::Identity(n, n));
  return b.proj.apply(g_, graph::gru_unroll(g_, b.emit, steps, final_state));
}

NodeId ModelGraph::decode_latents(NodeId parent, Modality target_modality, Level target) {
  const auto b = decoder_blocks(c_, target_modality, target);
  const auto idx = block_repeat_index(count(target), static_cast<std::size_t>(g_.shape(parent).rows));
  const NodeId repeated = g_.gather_rows(parent, idx);
  return b.out.apply(g_, graph::gru_unroll(g_, b.gru, repeated, zeros(1)));
}

NodeId ModelGraph::decode_features(NodeId z, Modality target, std::size_t steps) {
  const auto b = feature_blocks(c_, target);
  const Eigen::Index k = g_.shape(z).rows;
  const NodeId h0 = g_.tanh(b.init.apply(g_, z));
  const auto states = graph::gru_unroll_constant(g_, b.gru, z, h0, steps);
  const NodeId out = b.out.apply(g_, g_.concat_rows(states));
  // Rows are step-major (t*k + e); reorder to event-major (e*steps + t).
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(k) * steps);
  for (Eigen::Index e = 0; e < k; ++e) {
    for (std::size_t t = 0; t < steps; ++t) {
      perm[static_cast<std::size_t>(e) * steps + t] = static_cast<Eigen::Index>(t) * k + e;
    }
  }
  return g_.gather_rows(out, std::move(perm));
}

LossNodes ModelGraph::losses(NodeId video, std::optional<NodeId> text) {
  const bool with_text = c_.use_text && text.has_value();
  require(!c_.use_text || text.has_value(), ErrorKind::invalid_argument,
          "model configured with text but no text stream given");
  const graph::SoftDtwOptions sd{c_.gamma, c_.metric};
  const std::size_t l = c_.frames_per_low_event();

  struct Branch {
    NodeId x;
    NodeId low, mid, high;
    NodeId low_prime, mid_prime;
    NodeId recon;
    bool has_mid = false;
    bool has_low_prime = false;
  };
  auto encode_branch = [&](NodeId x, Modality m) {
    Branch b{};
    b.x = x;
    b.low = encode_low(x, m);
    if (c_.levels == 3) {
      b.mid = encode(b.low, m, Level::mid);
      b.has_mid = true;
      b.high = encode(b.mid, m, Level::high);
    } else if (c_.levels == 2) {
      b.high = encode(b.low, m, Level::high);
    }
    return b;
  };

  Branch s = encode_branch(video, Modality::video);
  Branch w{};
  if (with_text) w = encode_branch(*text, Modality::text);

  auto decode_branch = [&](Branch& target, Modality m, const Branch& source) {
    if (c_.levels == 1) {
      target.recon = decode_features(source.low, m, l);
      return;
    }
    if (c_.single_level_decoding) {
      target.recon = decode_features(source.high, m, l * (c_.n_low / c_.n_high));
      return;
    }
    NodeId parent = source.high;
    if (c_.levels == 3) {
      target.mid_prime = decode_latents(parent, m, Level::mid);
      parent = target.mid_prime;
    }
    target.low_prime = decode_latents(parent, m, Level::low);
    target.has_low_prime = true;
    target.recon = decode_features(target.low_prime, m, l);
  };
  const bool cross = with_text && c_.cross_decoding;
  decode_branch(s, Modality::video, cross ? w : s);
  if (with_text) decode_branch(w, Modality::text, cross ? s : w);

  LossNodes out{};
  std::vector<NodeId> dyn;
  std::vector<NodeId> stat;
  auto add_dyn = [&](double LossBreakdown::*field, NodeId node) {
    out.terms.emplace_back(field, node);
    dyn.push_back(node);
  };
  auto add_static = [&](double LossBreakdown::*field, NodeId node) {
    out.terms.emplace_back(field, node);
    stat.push_back(node);
  };

  if (c_.levels == 1) {
    // One level: reconstruction, plus re-encoding alignment without text or the cross-modal
    // L2 with text.
    if (with_text) {
      add_dyn(&LossBreakdown::sdtw_recon_video, g_.soft_dtw_loss(video, s.recon, sd));
      add_dyn(&LossBreakdown::sdtw_recon_text, g_.soft_dtw_loss(*text, w.recon, sd));
      add_static(&LossBreakdown::l2_low_prime, g_.mean_sq_error(s.low, w.low));
    } else {
      if (c_.low_align_loss) {
        const NodeId re = encode_low(s.recon, Modality::video);
        add_dyn(&LossBreakdown::sdtw_low_video, g_.soft_dtw_loss(s.low, re, sd));
      }
      add_dyn(&LossBreakdown::sdtw_recon_video, g_.soft_dtw_loss(video, s.recon, sd));
    }
  } else {
    if (with_text && w.has_low_prime) {
      add_dyn(&LossBreakdown::sdtw_low_text, g_.soft_dtw_loss(w.low, w.low_prime, sd));
    }
    if (c_.low_align_loss && s.has_low_prime) {
      add_dyn(&LossBreakdown::sdtw_low_video, g_.soft_dtw_loss(s.low, s.low_prime, sd));
    }
    add_dyn(&LossBreakdown::sdtw_recon_video, g_.soft_dtw_loss(video, s.recon, sd));
    if (with_text) {
      add_dyn(&LossBreakdown::sdtw_recon_text, g_.soft_dtw_loss(*text, w.recon, sd));
      add_dyn(&LossBreakdown::sdtw_high_cross, g_.soft_dtw_loss(s.high, w.high, sd));
    }
    if (c_.levels == 3 && s.has_low_prime) {
      add_dyn(&LossBreakdown::sdtw_mid_video, g_.soft_dtw_loss(s.mid, s.mid_prime, sd));
      if (with_text) {
        add_dyn(&LossBreakdown::sdtw_mid_text, g_.soft_dtw_loss(w.mid, w.mid_prime, sd));
      }
    }
    if (with_text) {
      add_static(&LossBreakdown::l2_high, g_.mean_sq_error(s.high, w.high));
      if (s.has_low_prime) {
        add_static(&LossBreakdown::l2_low_prime, g_.mean_sq_error(s.low_prime, w.low_prime));
      }
      if (c_.levels == 3 && s.has_low_prime) {
        add_static(&LossBreakdown::l2_mid_prime, g_.mean_sq_error(s.mid_prime, w.mid_prime));
      }
    }
  }

  NodeId total = dyn.front();
  for (std::size_t k = 1; k < dyn.size(); ++k) total = g_.add(total, dyn[k]);
  if (!stat.empty()) {
    NodeId st = stat.front();
    for (std::size_t k = 1; k < stat.size(); ++k) st = g_.add(st, stat[k]);
    total = g_.add(total, g_.scale(st, c_.beta));
  }
  out.total = total;
  return out;
}

// ---------------------------------------------------------------------------
// HierModel

HierModel::HierModel(HierConfig config, std::uint64_t seed) : c_(std::move(config)) {
  c_.validate();
  params_ = init_params(c_, seed);
}

HierModel::HierModel(HierConfig config, graph::ParamStore params)
    : c_(std::move(config)), params_(std::move(params)) {
  c_.validate();
  const graph::ParamStore expected = init_params(c_, 0);
  require(expected.size() == params_.size(), ErrorKind::validation,
          "parameter set has " + std::to_string(params_.size()) + " tensors, model expects " +
              std::to_string(expected.size()));
  for (const auto& [name, m] : expected) {
    require(params_.contains(name), ErrorKind::validation, "missing parameter '" + name + "'");
    const Matrix& p = params_.at(name);
    require(p.rows() == m.rows() && p.cols() == m.cols(), ErrorKind::validation,
            "parameter '" + name + "' has the wrong shape");
  }
}

void HierModel::check_input(const align::FeatureSequence& x, Modality expected) const {
  require(x.length() >= 1, ErrorKind::validation, "empty feature sequence");
  require(x.modality() == expected, ErrorKind::invalid_argument,
          "expected a " + std::string(to_string(expected)) + " sequence");
  require(x.dim() == c_.dim(expected), ErrorKind::dimension_mismatch,
          std::string(to_string(expected)) + " dimension " + std::to_string(x.dim()) +
              " does not match the model (" + std::to_string(c_.dim(expected)) + ")");
  require(x.length() <= c_.max_length, ErrorKind::too_long,
          "sequence of length " + std::to_string(x.length()) + " exceeds the model cap " +
              std::to_string(c_.max_length));
  require(expected == Modality::video || c_.use_text, ErrorKind::invalid_argument,
          "model has no text branch");
}

LatentSequence HierModel::encode_low(const align::FeatureSequence& x) const {
  check_input(x, x.modality());
  ModelGraph mg(c_);
  const NodeId out = mg.encode_low(mg.input("x", x.values()), x.modality());
  mg.graph().forward(params_, mg.bindings());
  return {mg.graph().value(out), Level::low, x.modality()};
}

LatentSequence HierModel::encode_mid(const LatentSequence& z) const {
  require(c_.levels == 3, ErrorKind::invalid_argument, "model has no mid level");
  require(z.level == Level::low, ErrorKind::invalid_argument, "encode_mid expects low latents");
  ModelGraph mg(c_);
  const NodeId out = mg.encode(mg.input("z", z.latents), z.modality, Level::mid);
  mg.graph().forward(params_, mg.bindings());
  return {mg.graph().value(out), Level::mid, z.modality};
}

LatentSequence HierModel::encode_high(const LatentSequence& z) const {
  require(c_.levels >= 2, ErrorKind::invalid_argument, "model has no high level");
  const Level expected = c_.levels == 3 ? Level::mid : Level::low;
  require(z.level == expected, ErrorKind::invalid_argument,
          "encode_high expects " + std::string(to_string(expected)) + " latents, got " +
              std::string(to_string(z.level)));
  ModelGraph mg(c_);
  const NodeId out = mg.encode(mg.input("z", z.latents), z.modality, Level::high);
  mg.graph().forward(params_, mg.bindings());
  return {mg.graph().value(out), Level::high, z.modality};
}

LatentSequence HierModel::decode_low_cross(const LatentSequence& z_high, Modality target) const {
  require(z_high.level == Level::high, ErrorKind::invalid_argument,
          "decode_low_cross expects high latents");
  require(c_.levels >= 2 && !c_.single_level_decoding, ErrorKind::invalid_argument,
          "model has no latent decoder");
  ModelGraph mg(c_);
  NodeId parent = mg.input("z", z_high.latents);
  if (c_.levels == 3) parent = mg.decode_latents(parent, target, Level::mid);
  const NodeId out = mg.decode_latents(parent, target, Level::low);
  mg.graph().forward(params_, mg.bindings());
  return {mg.graph().value(out), Level::low, target};
}

align::FeatureSequence HierModel::decode_features(const LatentSequence& z, Modality target) const {
  std::size_t steps = c_.frames_per_low_event();
  if (c_.single_level_decoding) {
    require(z.level == Level::high, ErrorKind::invalid_argument,
            "single-level decoding expects high latents");
    steps *= c_.n_low / c_.n_high;
  } else {
    require(z.level == Level::low, ErrorKind::invalid_argument, "decode_features expects low latents");
  }
  ModelGraph mg(c_);
  const NodeId out = mg.decode_features(mg.input("z", z.latents), target, steps);
  mg.graph().forward(params_, mg.bindings());
  return align::FeatureSequence(mg.graph().value(out), target);
}

namespace {

LossBreakdown read_losses(const graph::Graph& g, const LossNodes& nodes) {
  LossBreakdown b;
  for (const auto& [field, id] : nodes.terms) b.*field = g.scalar(id);
  b.total = g.scalar(nodes.total);
  return b;
}

}  // namespace

LossBreakdown HierModel::compute_losses(const align::FeatureSequence& video,
                                        const align::FeatureSequence* text) const {
  return loss_and_grad_impl(video, text, false).loss;
}

HierModel::LossAndGrad HierModel::loss_and_grad(const align::FeatureSequence& video,
                                                const align::FeatureSequence* text) const {
  return loss_and_grad_impl(video, text, true);
}

HierModel::LossAndGrad HierModel::loss_and_grad_impl(const align::FeatureSequence& video,
                                                     const align::FeatureSequence* text,
                                                     bool with_grad) const {
  check_input(video, Modality::video);
  if (c_.use_text) {
    require(text != nullptr && text->length() > 0, ErrorKind::invalid_argument,
            "model configured with text but no text stream given");
    check_input(*text, Modality::text);
  }
  ModelGraph mg(c_);
  const NodeId v = mg.input("video", video.values());
  std::optional<NodeId> w;
  if (c_.use_text) w = mg.input("text", text->values());
  const LossNodes nodes = mg.losses(v, w);
  mg.graph().forward(params_, mg.bindings());
  LossAndGrad out;
  out.loss = read_losses(mg.graph(), nodes);
  if (with_grad) out.grads = mg.graph().backward(nodes.total);
  return out;
}

// ---------------------------------------------------------------------------
// Inference

std::vector<double> event_ends(const align::AlignmentPath& path, std::size_t events,
                               std::size_t frames_per_event) {
  require(events >= 1 && frames_per_event >= 1, ErrorKind::invalid_argument,
          "event_ends needs events >= 1 and frames_per_event >= 1");
  std::vector<double> ends(events, 0.0);
  for (const auto& [i, j] : path.steps) {
    const std::size_t k = i / frames_per_event;
    require(k < events, ErrorKind::invalid_argument, "path row outside the decoded events");
    ends[k] = std::max(ends[k], static_cast<double>(j + 1));
  }
  for (std::size_t k = 1; k < events; ++k) ends[k] = std::max(ends[k], ends[k - 1]);
  return ends;
}

std::vector<double> dedup_ends(const std::vector<double>& ends) {
  std::vector<double> out;
  for (double e : ends) {
    if (e > 0.0 && (out.empty() || e > out.back())) out.push_back(e);
  }
  return out;
}

std::vector<double> block_ends(const std::vector<double>& ends, std::size_t group) {
  require(group >= 1 && ends.size() % group == 0, ErrorKind::invalid_argument,
          "event count must be a multiple of the group size");
  std::vector<double> out;
  for (std::size_t k = group - 1; k < ends.size(); k += group) out.push_back(ends[k]);
  return out;
}

Inference infer_segmentation(const HierModel& model, const align::FeatureSequence& video,
                             const align::FeatureSequence* text) {
  const HierConfig& c = model.config();
  require(model.params().all_finite(), ErrorKind::non_finite, "model parameters are not finite");
  const bool with_text = c.use_text && text != nullptr && text->length() > 0;
  require(!c.use_text || with_text, ErrorKind::invalid_argument,
          "model configured with text but no text stream given");

  Inference r;
  r.z_low = model.encode_low(video);
  align::FeatureSequence decoded;
  if (c.levels == 1) {
    r.z_high = r.z_low;
    const LatentSequence src = with_text && c.cross_decoding ? model.encode_low(*text) : r.z_low;
    decoded = model.decode_features(src, Modality::video);
  } else {
    auto high_of = [&](const LatentSequence& low) {
      return c.levels == 3 ? model.encode_high(model.encode_mid(low)) : model.encode_high(low);
    };
    r.z_high = high_of(r.z_low);
    const LatentSequence src =
        with_text && c.cross_decoding ? high_of(model.encode_low(*text)) : r.z_high;
    decoded = c.single_level_decoding
                  ? model.decode_features(src, Modality::video)
                  : model.decode_features(model.decode_low_cross(src, Modality::video), Modality::video);
  }
  r.decoded = align::FeatureSequence(decoded.values(), Modality::video, video.id());

  const auto path = align::dtw(align::pairwise_cost(decoded, video, c.metric)).path;
  const auto ends = event_ends(path, c.n_low, c.frames_per_low_event());
  const double len = static_cast<double>(video.length());
  r.low = twiou::Segmentation(dedup_ends(ends), twiou::TimeUnit::frames, video.id(), len);
  r.high = c.levels == 1 ? r.low
                         : twiou::Segmentation(dedup_ends(block_ends(ends, c.n_low / c.n_high)),
                                               twiou::TimeUnit::frames, video.id(), len);
  return r;
}

}  // namespace shlk::model
