// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <random>
#include <thread>

#include "shlk/baselines.hpp"

namespace shlk::baselines {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

twiou::Segmentation with_length(std::vector<double> ends, const data::Trajectory& t) {
  return twiou::Segmentation(std::move(ends), twiou::TimeUnit::frames, t.id(),
                             static_cast<double>(t.video.length()));
}

}  // namespace

Method oracle_method() {
  return {"oracle", [](const std::vector<data::Trajectory>&, std::uint64_t) {
            return Prepared{[](const data::Trajectory& t) { return t.gt_high; }, nlohmann::json::object()};
          }};
}

Method random_method(std::size_t k) {
  require(k >= 1, ErrorKind::invalid_argument, "random_method needs k >= 1");
  return {"random", [k](const std::vector<data::Trajectory>&, std::uint64_t seed) {
            Segmenter s = [k, seed](const data::Trajectory& t) {
              const std::size_t len = t.video.length();
              std::mt19937_64 rng(seed ^ fnv1a(t.id()));
              std::vector<std::size_t> cuts;
              for (std::size_t c = 1; c < len; ++c) cuts.push_back(c);
              std::shuffle(cuts.begin(), cuts.end(), rng);
              cuts.resize(std::min(cuts.size(), k - 1));
              std::sort(cuts.begin(), cuts.end());
              std::vector<double> ends(cuts.begin(), cuts.end());
              ends.push_back(static_cast<double>(len));
              return with_length(std::move(ends), t);
            };
            return Prepared{s, nlohmann::json{{"k", k}}};
          }};
}

Method equal_split_method(std::size_t k) {
  require(k >= 1, ErrorKind::invalid_argument, "equal_split_method needs k >= 1");
  return {"equal_split", [k](const std::vector<data::Trajectory>&, std::uint64_t) {
            Segmenter s = [k](const data::Trajectory& t) {
              const double len = static_cast<double>(t.video.length());
              std::vector<double> ends;
              for (std::size_t e = 1; e <= k; ++e) {
                const double end = std::round(len * static_cast<double>(e) / static_cast<double>(k));
                if (end > 0.0 && (ends.empty() || end > ends.back())) ends.push_back(end);
              }
              return with_length(std::move(ends), t);
            };
            return Prepared{s, nlohmann::json{{"k", k}}};
          }};
}

Method kmeans_method(KmeansConfig base) {
  base.validate();
  return {"kmeans", [base](const std::vector<data::Trajectory>& train, std::uint64_t seed) {
            KmeansConfig cfg = base;
            cfg.seed = seed;
            cfg.temporal_weight = tune_temporal_weight(train, cfg, default_lambda_grid());
            Segmenter s = [cfg](const data::Trajectory& t) { return kmeans_segment(t.video, cfg); };
            return Prepared{s, to_json(cfg)};
          }};
}

Method hier_method(std::string name, model::HierConfig config, model::TrainConfig train_cfg) {
  config.validate();
  return {std::move(name),
          [config, train_cfg](const std::vector<data::Trajectory>& train, std::uint64_t seed) {
            model::TrainConfig tc = train_cfg;
            tc.seed = seed;
            auto result = std::make_shared<model::TrainResult>(model::train(train, config, tc));
            nlohmann::json meta{{"model", model::to_json(config)}, {"train", model::to_json(tc)}};
            if (!result->trace.empty()) {
              meta["first_epoch_loss"] = result->trace.front().total;
              meta["last_epoch_loss"] = result->trace.back().total;
            }
            Segmenter s = [result](const data::Trajectory& t) {
              const bool text = result->model.config().use_text;
              return model::infer_segmentation(result->model, t.video, text ? &t.text : nullptr).high;
            };
            return Prepared{s, meta};
          }};
}

Variants standard_variants(const model::HierConfig& base) {
  Variants v;
  v.with_comment = base;
  v.with_comment.levels = 2;
  v.with_comment.use_text = true;
  v.without_comment = v.with_comment;
  v.without_comment.use_text = false;
  v.non_hier_with_comment = v.with_comment;
  v.non_hier_with_comment.levels = 1;
  v.non_hier_without_comment = v.without_comment;
  v.non_hier_without_comment.levels = 1;
  v.three_level = v.with_comment;
  v.three_level.levels = 3;
  v.three_level.n_mid = base.n_mid > 0 ? base.n_mid : 8;
  v.no_l2 = v.with_comment;
  v.no_l2.beta = 0.0;
  v.no_cross_decoding = v.with_comment;
  v.no_cross_decoding.cross_decoding = false;
  v.single_level = v.without_comment;
  v.single_level.single_level_decoding = true;
  v.no_low_align = v.without_comment;
  v.no_low_align.low_align_loss = false;
  return v;
}

std::vector<Method> standard_methods(const model::HierConfig& base, const model::TrainConfig& train,
                                     bool include_ablations) {
  const Variants v = standard_variants(base);
  std::vector<Method> m = {
      oracle_method(),
      random_method(base.n_high),
      equal_split_method(base.n_high),
      kmeans_method(KmeansConfig{base.n_high}),
      hier_method("sherlock_with_comment", v.with_comment, train),
      hier_method("sherlock_without_comment", v.without_comment, train),
      hier_method("non_hier_with_comment", v.non_hier_with_comment, train),
      hier_method("non_hier_without_comment", v.non_hier_without_comment, train),
  };
  if (include_ablations) {
    m.push_back(hier_method("ablation_three_level", v.three_level, train));
    m.push_back(hier_method("ablation_no_l2", v.no_l2, train));
    m.push_back(hier_method("ablation_no_cross_decoding", v.no_cross_decoding, train));
    m.push_back(hier_method("ablation_single_level_decoding", v.single_level, train));
    m.push_back(hier_method("ablation_no_low_align", v.no_low_align, train));
  }
  return m;
}

std::vector<std::uint64_t> default_seeds() { return {0, 1, 2, 3, 4}; }

twiou::DatasetScore score_predictions(const std::vector<twiou::Segmentation>& preds,
                                      const std::vector<twiou::Segmentation>& gts) {
  require(preds.size() == gts.size(), ErrorKind::validation,
          "prediction count " + std::to_string(preds.size()) + " does not match ground truth " +
              std::to_string(gts.size()));
  for (std::size_t k = 0; k < preds.size(); ++k) {
    require(preds[k].id() == gts[k].id(), ErrorKind::validation,
            "prediction id '" + preds[k].id() + "' does not match ground-truth id '" + gts[k].id() + "'");
  }
  return twiou::tw_iou_dataset(preds, gts);
}

const MethodResult& Comparison::at(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  fail(ErrorKind::invalid_argument, "no method '" + method + "' in comparison");
}

Comparison evaluate_methods(const std::vector<data::Trajectory>& train,
                            const std::vector<data::Trajectory>& test,
                            const std::vector<Method>& methods,
                            const std::vector<std::uint64_t>& seeds, unsigned threads) {
  require(!test.empty(), ErrorKind::invalid_argument, "evaluation needs held-out trajectories");
  require(!seeds.empty(), ErrorKind::invalid_argument, "evaluation needs at least one seed");
  std::vector<twiou::Segmentation> gts;
  Comparison cmp;
  for (const auto& t : test) {
    gts.push_back(t.gt_high);
    cmp.ids.push_back(t.id());
  }

  const std::size_t jobs = methods.size() * seeds.size();
  std::vector<SeedRun> runs(jobs);
  auto run = [&](std::size_t job) {
    const Method& m = methods[job / seeds.size()];
    const std::uint64_t seed = seeds[job % seeds.size()];
    Prepared p = m.prepare(train, seed);
    std::vector<twiou::Segmentation> preds;
    preds.reserve(test.size());
    for (const auto& t : test) preds.push_back(p.segment(t));
    runs[job] = SeedRun{seed, score_predictions(preds, gts), std::move(p.metadata)};
  };

  const unsigned n = std::min<unsigned>(threads > 0 ? threads : align::thread_cap(),
                                        static_cast<unsigned>(jobs));
  if (n <= 1) {
    for (std::size_t j = 0; j < jobs; ++j) run(j);
  } else {
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t j = w; j < jobs; j += n) run(j);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodResult r;
    r.method = methods[mi].name;
    r.n_items = test.size();
    std::vector<double> means;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      r.runs.push_back(std::move(runs[mi * seeds.size() + si]));
      means.push_back(r.runs.back().score.mean);
    }
    std::tie(r.mean, r.std) = twiou::mean_std(means);
    cmp.rows.push_back(std::move(r));
  }
  std::stable_sort(cmp.rows.begin(), cmp.rows.end(),
                   [](const MethodResult& a, const MethodResult& b) { return a.method < b.method; });
  return cmp;
}

void write_comparison_csv(const std::string& path, const Comparison& c) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << "method,mean,std,n_items,seed_list\n";
  char buf[64];
  for (const auto& r : c.rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.mean, r.std);
    out << r.method << ',' << buf << ',' << r.n_items << ',';
    for (std::size_t k = 0; k < r.runs.size(); ++k) out << (k ? ";" : "") << r.runs[k].seed;
    out << '\n';
  }
  if (!out) fail(ErrorKind::io, "write to '" + path + "' failed");
}

nlohmann::json to_json(const Comparison& c) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& r : c.rows) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& s : r.runs) {
      runs.push_back({{"seed", s.seed},
                      {"mean", s.score.mean},
                      {"std", s.score.std},
                      {"per_item", s.score.per_item},
                      {"metadata", s.metadata}});
    }
    methods.push_back({{"method", r.method},
                       {"mean", r.mean},
                       {"std", r.std},
                       {"n_items", r.n_items},
                       {"runs", runs}});
  }
  return {{"ids", c.ids}, {"methods", methods}};
}

}  // namespace shlk::baselines
