// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "shlk/model.hpp"

using namespace shlk;
using namespace shlk::model;
using align::FeatureSequence;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an shlk::Error");
  return ErrorKind::invalid_argument;
}

HierConfig small_config() {
  HierConfig c;
  c.n_low = 8;
  c.n_high = 2;
  c.latent_dim = 4;
  c.hidden_dim = 6;
  c.video_dim = 3;
  c.text_dim = 3;
  c.max_length = 24;
  return c;
}

data::SyntheticConfig small_data() {
  data::SyntheticConfig d;
  d.low_types = 4;
  d.high_types = 3;
  d.high_per_trajectory = 2;
  d.low_per_high_min = 2;
  d.low_per_high_max = 2;
  d.duration_min = 2;
  d.duration_max = 3;
  d.video_dim = 3;
  d.text_dim = 3;
  d.max_frames = 24;
  return d;
}

FeatureSequence random_seq(std::mt19937_64& rng, std::size_t t, std::size_t d, Modality m) {
  return FeatureSequence(oracle::random_matrix(rng, static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d)), m);
}

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("latent counts and shapes with the default layout") {
  std::mt19937_64 rng(1);
  const HierConfig c;
  const HierModel m(c, 3);
  const auto x = random_seq(rng, 40, c.video_dim, Modality::video);
  const auto low = m.encode_low(x);
  CHECK(low.latents.rows() == 16);
  CHECK(low.latents.cols() == 16);
  CHECK(low.level == Level::low);
  const auto high = m.encode_high(low);
  CHECK(high.latents.rows() == 4);
  CHECK(high.level == Level::high);
  const auto lp = m.decode_low_cross(high, Modality::text);
  CHECK(lp.latents.rows() == 16);
  CHECK(lp.modality == Modality::text);
  const auto xt = m.decode_features(lp, Modality::text);
  CHECK(xt.length() == 16 * c.frames_per_low_event());
  CHECK(xt.dim() == c.text_dim);
  CHECK(xt.modality() == Modality::text);
}

TEST_CASE("zero parameters give zero latents and zero features") {
  std::mt19937_64 rng(2);
  const HierConfig c = small_config();
  HierModel m(c, 0);
  for (auto& [_, p] : m.params()) p.setZero();
  const auto low = m.encode_low(random_seq(rng, 10, 3, Modality::video));
  CHECK(low.latents == Matrix::Zero(8, 4));
  const LatentSequence z{Matrix::Zero(8, 4), Level::low, Modality::video};
  CHECK(m.decode_features(z, Modality::video).values() == Matrix::Zero(24, 3));
}

TEST_CASE("encoders depend on frame order and check level tags") {
  std::mt19937_64 rng(3);
  const HierModel m(small_config(), 4);
  const auto x = random_seq(rng, 12, 3, Modality::video);
  Matrix rev = x.values().colwise().reverse();
  const auto a = m.encode_low(x);
  const auto b = m.encode_low(FeatureSequence(rev, Modality::video));
  CHECK(max_abs_diff(a.latents, b.latents) > 1e-6);

  CHECK(kind_of([&] { m.encode_high(m.encode_high(a)); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([&] { m.decode_low_cross(a, Modality::video); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([&] { m.decode_features(m.encode_high(a), Modality::video); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([&] { m.encode_mid(a); }) == ErrorKind::invalid_argument);
}

TEST_CASE("input validation") {
  std::mt19937_64 rng(4);
  const HierModel m(small_config(), 5);
  CHECK(kind_of([&] { m.encode_low(random_seq(rng, 5, 4, Modality::video)); }) == ErrorKind::dimension_mismatch);
  CHECK(kind_of([&] { m.encode_low(random_seq(rng, 25, 3, Modality::video)); }) == ErrorKind::too_long);
  const auto v = random_seq(rng, 6, 3, Modality::video);
  CHECK(kind_of([&] { m.compute_losses(v); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([&] { m.compute_losses(v, &v); }) == ErrorKind::invalid_argument);

  HierConfig bad = small_config();
  bad.n_high = 3;
  CHECK(kind_of([&] { HierModel(bad, 0); }) == ErrorKind::invalid_argument);
  bad = small_config();
  bad.frames_per_event = 2;
  CHECK(kind_of([&] { HierModel(bad, 0); }) == ErrorKind::invalid_argument);

  graph::ParamStore missing = HierModel(small_config(), 0).params();
  graph::ParamStore partial;
  for (const auto& [name, p] : missing) {
    if (name != missing.begin()->first) partial.add(name, p);
  }
  CHECK(kind_of([&] { HierModel(small_config(), partial); }) == ErrorKind::validation);
}

TEST_CASE("block repetition layout") {
  const auto idx = block_repeat_index(16, 4);
  REQUIRE(idx.size() == 16);
  for (std::size_t s = 0; s < 16; ++s) CHECK(idx[s] == static_cast<Eigen::Index>(s / 4));
  CHECK(block_repeat_index(8, 8) == std::vector<Eigen::Index>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK_THROWS_AS(block_repeat_index(10, 4), Error);
}

TEST_CASE("loss assembly identity") {
  std::mt19937_64 rng(7);
  for (double beta : {0.0, 0.3, 1.0, 7.5}) {
    for (bool text : {true, false}) {
      for (std::size_t levels : {1u, 2u, 3u}) {
        HierConfig c = small_config();
        c.beta = beta;
        c.use_text = text;
        c.levels = levels;
        if (levels == 3) c.n_mid = 4;
        const HierModel m(c, 8);
        const auto v = random_seq(rng, 14, 3, Modality::video);
        const auto w = random_seq(rng, 9, 3, Modality::text);
        const LossBreakdown b = m.compute_losses(v, text ? &w : nullptr);
        CHECK(b.total == b.dyn() + beta * b.static_sum());
        CHECK(std::isfinite(b.total));
        CHECK(b.sdtw_recon_video != 0.0);
        if (!text) {
          CHECK(b.sdtw_low_text == 0.0);
          CHECK(b.sdtw_recon_text == 0.0);
          CHECK(b.sdtw_high_cross == 0.0);
          CHECK(b.static_sum() == 0.0);
        }
        if (levels != 3) {
          CHECK(b.sdtw_mid_video == 0.0);
          CHECK(b.l2_mid_prime == 0.0);
        }
      }
    }
  }
}

TEST_CASE("identical branches on identical streams") {
  std::mt19937_64 rng(9);
  const HierConfig c = small_config();
  HierModel m(c, 10);
  for (auto& [name, p] : m.params()) {
    if (name.rfind("text.", 0) == 0) p = m.params().at("video." + name.substr(5));
  }
  const auto v = random_seq(rng, 13, 3, Modality::video);
  const FeatureSequence w(v.values(), Modality::text);
  const LossBreakdown b = m.compute_losses(v, &w);
  CHECK(b.l2_high == 0.0);
  CHECK(b.l2_low_prime == 0.0);
  const Matrix high = m.encode_high(m.encode_low(v)).latents;
  const double self = align::soft_dtw(align::pairwise_cost(high, high, c.metric), c.gamma).value;
  CHECK(self <= 0.0);
  CHECK(b.sdtw_high_cross == doctest::Approx(self).epsilon(1e-12));
  CHECK(b.sdtw_recon_video == doctest::Approx(b.sdtw_recon_text).epsilon(1e-12));
}

TEST_CASE("static terms enter the gradient scaled by beta") {
  std::mt19937_64 rng(11);
  const auto v = random_seq(rng, 12, 3, Modality::video);
  const auto w = random_seq(rng, 10, 3, Modality::text);
  auto grads_at = [&](double beta) {
    HierConfig c = small_config();
    c.beta = beta;
    return HierModel(c, 12).loss_and_grad(v, &w).grads;
  };
  const auto g0 = grads_at(0.0);
  const auto g1 = grads_at(1.0);
  const auto g3 = grads_at(3.0);
  bool static_matters = false;
  for (const auto& [name, a] : g0) {
    const Matrix delta = g1.at(name) - a;
    if (delta.cwiseAbs().maxCoeff() > 1e-9) static_matters = true;
    CHECK(max_abs_diff(g3.at(name), a + 3.0 * delta) < 1e-9);
  }
  CHECK(static_matters);
}

TEST_CASE("full loss gradient matches finite differences on sampled parameters") {
  std::mt19937_64 rng(13);
  for (std::size_t levels : {1u, 2u, 3u}) {
    for (bool text : {true, false}) {
      HierConfig c = small_config();
      c.levels = levels;
      c.use_text = text;
      c.beta = 0.7;
      if (levels == 3) c.n_mid = 4;
      HierModel m(c, 14 + levels);
      const auto v = random_seq(rng, 11, 3, Modality::video);
      const auto w = random_seq(rng, 8, 3, Modality::text);
      const FeatureSequence* tp = text ? &w : nullptr;
      const auto grads = m.loss_and_grad(v, tp).grads;

      std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> all;
      for (const auto& [name, p] : m.params()) {
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
          for (Eigen::Index j = 0; j < p.cols(); ++j) all.push_back({name, {i, j}});
        }
      }
      std::shuffle(all.begin(), all.end(), rng);
      const std::size_t n = std::max<std::size_t>(30, all.size() / 100);
      const double h = 1e-5;
      for (std::size_t k = 0; k < n; ++k) {
        const auto& [name, ij] = all[k];
        double& p = m.params().at(name)(ij.first, ij.second);
        const double orig = p;
        p = orig + h;
        const double up = m.compute_losses(v, tp).total;
        p = orig - h;
        const double down = m.compute_losses(v, tp).total;
        p = orig;
        const double fd = (up - down) / (2.0 * h);
        const double an = grads.at(name)(ij.first, ij.second);
        INFO("levels ", levels, " text ", text, " ", name, " analytic ", an, " fd ", fd);
        CHECK(oracle::rel_err(an, fd, 1e-5) < 1e-3);
      }
    }
  }
}

TEST_CASE("ablations change the term set") {
  std::mt19937_64 rng(15);
  const auto v = random_seq(rng, 12, 3, Modality::video);
  const auto w = random_seq(rng, 10, 3, Modality::text);
  for (bool text : {true, false}) {
    HierConfig c = small_config();
    c.use_text = text;
    const FeatureSequence* tp = text ? &w : nullptr;

    HierConfig a = c;
    a.low_align_loss = false;
    const auto b1 = HierModel(a, 1).compute_losses(v, tp);
    CHECK(b1.sdtw_low_video == 0.0);

    a = c;
    a.single_level_decoding = true;
    const auto b2 = HierModel(a, 1).compute_losses(v, tp);
    CHECK(b2.sdtw_low_video == 0.0);
    CHECK(b2.sdtw_low_text == 0.0);
    CHECK(b2.l2_low_prime == 0.0);
    CHECK(b2.sdtw_recon_video != 0.0);

    a = c;
    a.cross_decoding = false;
    CHECK(std::isfinite(HierModel(a, 1).compute_losses(v, tp).total));

    a = c;
    a.beta = 0.0;
    const auto b4 = HierModel(a, 1).compute_losses(v, tp);
    CHECK(b4.total == b4.dyn());

    const auto full = HierModel(c, 1).compute_losses(v, tp);
    CHECK(full.sdtw_low_video != 0.0);
  }
}

TEST_CASE("cross decoding changes the reconstruction source") {
  std::mt19937_64 rng(16);
  const auto v = random_seq(rng, 12, 3, Modality::video);
  const auto w = random_seq(rng, 10, 3, Modality::text);
  HierConfig c = small_config();
  const auto cross = HierModel(c, 2).compute_losses(v, &w);
  c.cross_decoding = false;
  const auto own = HierModel(c, 2).compute_losses(v, &w);
  CHECK(cross.sdtw_recon_video != own.sdtw_recon_video);
  CHECK(cross.sdtw_high_cross == own.sdtw_high_cross);
}

TEST_CASE("event ends") {
  SUBCASE("diagonal alignment puts boundaries at multiples of l") {
    const std::size_t l = 3;
    const std::size_t events = 5;
    align::AlignmentPath p;
    for (std::size_t k = 0; k < l * events; ++k) p.steps.emplace_back(k, k);
    CHECK(event_ends(p, events, l) == std::vector<double>{3, 6, 9, 12, 15});
  }
  SUBCASE("decoded identical to the input") {
    std::mt19937_64 rng(17);
    const Matrix x = oracle::random_matrix(rng, 12, 3);
    const auto path = align::dtw(align::pairwise_cost(x, x)).path;
    CHECK(event_ends(path, 4, 3) == std::vector<double>{3, 6, 9, 12});
  }
  SUBCASE("forward max, dedup and blocks") {
    align::AlignmentPath p;
    p.steps = {{0, 0}, {1, 1}, {2, 1}, {3, 1}, {4, 2}, {5, 3}};
    const auto ends = event_ends(p, 3, 2);
    CHECK(ends == std::vector<double>{2, 2, 4});
    CHECK(dedup_ends(ends) == std::vector<double>{2, 4});
    CHECK(block_ends({1, 2, 3, 4, 5, 6}, 3) == std::vector<double>{3, 6});
    CHECK_THROWS_AS(block_ends({1, 2, 3}, 2), Error);
    CHECK_THROWS_AS(event_ends(p, 2, 2), Error);
  }
}

TEST_CASE("inference invariants") {
  const auto data = data::generate(21, 6, small_data());
  for (std::size_t levels : {1u, 2u, 3u}) {
    for (bool text : {true, false}) {
      HierConfig c = small_config();
      c.levels = levels;
      c.use_text = text;
      if (levels == 3) c.n_mid = 4;
      const HierModel m(c, 22);
      for (const auto& t : data) {
        const auto r = infer_segmentation(m, t.video, text ? &t.text : nullptr);
        const double len = static_cast<double>(t.video.length());
        CHECK(r.low.size() >= 1);
        CHECK(r.low.end_times().back() <= len);
        CHECK(r.high.end_times().back() <= len);
        CHECK(r.low.size() <= c.n_low);
        CHECK(r.high.size() <= (levels == 1 ? c.n_low : c.n_high));
        CHECK(data::refines(r.low, r.high));
        CHECK(r.z_low.latents.rows() == static_cast<Eigen::Index>(c.n_low));
        CHECK(r.z_high.latents.rows() == static_cast<Eigen::Index>(levels == 1 ? c.n_low : c.n_high));
        CHECK(r.decoded.id() == t.id());
        CHECK(r.low.id() == t.id());
      }
    }
  }
}

TEST_CASE("non-finite parameters are rejected at inference") {
  const auto data = data::generate(23, 1, small_data());
  HierModel m(small_config(), 1);
  m.params().begin()->second(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(kind_of([&] { infer_segmentation(m, data[0].video, &data[0].text); }) == ErrorKind::non_finite);
}

TEST_CASE("training") {
  const auto data = data::generate(31, 12, small_data());
  const HierConfig c = small_config();
  TrainConfig tc;
  tc.batch_size = 4;
  tc.lr = 5e-3;
  tc.seed = 9;
  tc.threads = 1;

  SUBCASE("zero epochs returns the initialization") {
    tc.epochs = 0;
    const auto r = train(data, c, tc);
    CHECK(r.trace.empty());
    CHECK(r.model.params() == HierModel(c, 9).params());
  }
  SUBCASE("deterministic across runs and thread counts") {
    tc.epochs = 3;
    const auto a = train(data, c, tc);
    const auto b = train(data, c, tc);
    tc.threads = 3;
    const auto d = train(data, c, tc);
    REQUIRE(a.trace.size() == 3);
    CHECK(a.trace == b.trace);
    CHECK(a.trace == d.trace);
    CHECK(a.model.params() == b.model.params());
    CHECK(a.model.params() == d.model.params());
    CHECK(graph::encode_checkpoint(a.model.params()) == graph::encode_checkpoint(d.model.params()));
  }
  SUBCASE("loss decreases and callbacks fire once per epoch") {
    tc.epochs = 8;
    std::vector<std::size_t> seen;
    tc.on_epoch = [&](std::size_t e, const LossBreakdown& b) {
      seen.push_back(e);
      CHECK(std::isfinite(b.total));
    };
    const auto r = train(data, c, tc);
    CHECK(seen == std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(r.trace.back().total < r.trace.front().total);
    for (const auto& b : r.trace) CHECK(b.total == doctest::Approx(b.dyn() + c.beta * b.static_sum()));
  }
  SUBCASE("periodic checkpoints reload to the same losses") {
    const auto dir = std::filesystem::temp_directory_path() / "shlk_test_model_ckpt";
    std::filesystem::remove_all(dir);
    tc.epochs = 2;
    tc.checkpoint_every = 1;
    tc.checkpoint_dir = dir.string();
    const auto r = train(data, c, tc);
    CHECK(std::filesystem::exists(dir / "epoch-0001.ckpt"));
    REQUIRE(std::filesystem::exists(dir / "epoch-0002.ckpt"));
    const HierModel loaded(c, graph::load_checkpoint((dir / "epoch-0002.ckpt").string()));
    graph::ParamStore q = r.model.params();
    graph::quantize_to_float32(q);
    CHECK(loaded.params() == q);
    const HierModel quantized(c, q);
    CHECK(loaded.compute_losses(data[0].video, &data[0].text) ==
          quantized.compute_losses(data[0].video, &data[0].text));

    const auto csv = dir / "loss.csv";
    write_trace_csv(csv.string(), r.trace);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("epoch,sdtw_low_text,", 0) == 0);
    CHECK(header.substr(header.size() - 6) == ",total");
    std::filesystem::remove_all(dir);
  }
  SUBCASE("three-level and ablation variants train") {
    tc.epochs = 1;
    std::vector<HierConfig> variants;
    HierConfig v = c;
    v.levels = 3;
    v.n_mid = 4;
    variants.push_back(v);
    v = c;
    v.beta = 0.0;
    variants.push_back(v);
    v = c;
    v.single_level_decoding = true;
    variants.push_back(v);
    v = c;
    v.cross_decoding = false;
    variants.push_back(v);
    v = c;
    v.low_align_loss = false;
    v.use_text = false;
    variants.push_back(v);
    for (const auto& cfg : variants) {
      const auto r = train(data, cfg, tc);
      CHECK(std::isfinite(r.trace.front().total));
    }
  }
  SUBCASE("argument errors") {
    CHECK(kind_of([&] { train({}, c, tc); }) == ErrorKind::invalid_argument);
    tc.batch_size = 0;
    CHECK(kind_of([&] { train(data, c, tc); }) == ErrorKind::invalid_argument);
  }
}

TEST_CASE("config JSON round trips") {
  HierConfig c = HierConfig::three_level();
  c.beta = 0.25;
  c.use_text = false;
  c.metric = align::Metric::squared_euclidean;
  c.single_level_decoding = true;
  const HierConfig back = hier_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));

  TrainConfig t;
  t.epochs = 7;
  t.lr = 0.02;
  t.checkpoint_dir = "x";
  CHECK(to_json(train_config_from_json(to_json(t))) == to_json(t));
  CHECK(kind_of([] { train_config_from_json(nlohmann::json::parse(R"({"epochs":"many"})")); }) == ErrorKind::parse);
}
