// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include "shlk/model.hpp"

namespace shlk::model {

nlohmann::json to_json(const TrainConfig& c) {
  return {
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr", c.lr},
      {"clip_norm", c.clip_norm},
      {"seed", c.seed},
      {"checkpoint_every", c.checkpoint_every},
      {"checkpoint_dir", c.checkpoint_dir},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.checkpoint_dir = j.value("checkpoint_dir", c.checkpoint_dir);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed training config: ") + e.what());
  }
  return c;
}

namespace {

// Evaluates loss and gradients for the items of one batch. Slots are filled by index, so the
// result does not depend on how work is spread over threads.
std::vector<HierModel::LossAndGrad> evaluate_batch(const HierModel& model,
                                                   const std::vector<data::Trajectory>& data,
                                                   std::span<const std::size_t> items,
                                                   unsigned threads) {
  const bool text = model.config().use_text;
  std::vector<HierModel::LossAndGrad> out(items.size());
  auto run = [&](std::size_t k) {
    const auto& t = data[items[k]];
    out[k] = model.loss_and_grad(t.video, text ? &t.text : nullptr);
  };
  const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(items.size()));
  if (n <= 1) {
    for (std::size_t k = 0; k < items.size(); ++k) run(k);
    return out;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < items.size(); k += n) run(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

TrainResult train(const std::vector<data::Trajectory>& dataset, const HierConfig& config,
                  const TrainConfig& tc) {
  require(!dataset.empty(), ErrorKind::invalid_argument, "training needs a non-empty dataset");
  require(tc.batch_size >= 1, ErrorKind::invalid_argument, "batch_size must be >= 1");
  require(tc.lr > 0.0 && std::isfinite(tc.lr), ErrorKind::invalid_argument, "lr must be > 0");

  TrainResult result{HierModel(config, tc.seed), {}};
  HierModel& model = result.model;
  graph::AdamState adam;
  adam.lr = tc.lr;
  std::mt19937_64 order_rng(tc.seed ^ 0x5eed0f0du);
  const unsigned threads = tc.threads > 0 ? tc.threads : align::thread_cap();

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  if (tc.checkpoint_every > 0 && !tc.checkpoint_dir.empty()) {
    std::filesystem::create_directories(tc.checkpoint_dir);
  }

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    LossBreakdown sum;
    for (std::size_t begin = 0; begin < order.size(); begin += tc.batch_size) {
      const std::size_t end = std::min(order.size(), begin + tc.batch_size);
      const std::span<const std::size_t> items(order.data() + begin, end - begin);
      auto evals = evaluate_batch(model, dataset, items, threads);

      graph::Gradients grads;
      for (std::size_t k = 0; k < evals.size(); ++k) {
        if (!std::isfinite(evals[k].loss.total)) {
          fail(ErrorKind::divergence, "non-finite loss at epoch " + std::to_string(epoch + 1) +
                                          " on trajectory '" + dataset[items[k]].id() + "'");
        }
        sum += evals[k].loss;
        for (auto& [name, g] : evals[k].grads) {
          auto [it, fresh] = grads.try_emplace(name, std::move(g));
          if (!fresh) it->second += g;
        }
      }
      const double inv = 1.0 / static_cast<double>(evals.size());
      for (auto& [_, g] : grads) g *= inv;
      const double norm = graph::clip_global_norm(grads, tc.clip_norm);
      if (!std::isfinite(norm)) {
        fail(ErrorKind::divergence, "non-finite gradient norm at epoch " + std::to_string(epoch + 1));
      }
      graph::adam_step(adam, model.params(), grads);
    }
    if (!model.params().all_finite()) {
      fail(ErrorKind::divergence, "parameters became non-finite at epoch " + std::to_string(epoch + 1));
    }
    result.trace.push_back(sum.scaled(1.0 / static_cast<double>(dataset.size())));
    if (tc.on_epoch) tc.on_epoch(epoch + 1, result.trace.back());

    if (tc.checkpoint_every > 0 && !tc.checkpoint_dir.empty() &&
        (epoch + 1) % tc.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch-%04zu.ckpt", epoch + 1);
      graph::save_checkpoint((std::filesystem::path(tc.checkpoint_dir) / name).string(),
                             model.params());
    }
  }
  return result;
}

void write_trace_csv(const std::string& path, const std::vector<LossBreakdown>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << "epoch";
  for (const auto& f : LossBreakdown::field_names()) out << ',' << f;
  out << '\n';
  char buf[32];
  for (std::size_t e = 0; e < trace.size(); ++e) {
    out << e + 1;
    for (double v : trace[e].values()) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::io, "write to '" + path + "' failed");
}

}  // namespace shlk::model
