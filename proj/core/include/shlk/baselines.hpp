// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shlk/data.hpp"
#include "shlk/model.hpp"
#include "shlk/twiou.hpp"

namespace shlk::baselines {

struct KmeansConfig {
  std::size_t k = 4;
  double temporal_weight = 0.0;  ///< lambda on the t/T coordinate
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;
  std::size_t restarts = 5;

  void validate() const;
};

nlohmann::json to_json(const KmeansConfig& c);

struct Clustering {
  std::vector<std::size_t> labels;
  Matrix centers;
  double inertia = 0.0;
};

/// k-means++ seeding and Lloyd iterations; the lowest-inertia restart wins.
Clustering kmeans(const Matrix& points, std::size_t k, std::size_t max_iters, std::size_t restarts,
                  std::uint64_t seed);

/// Rows of the video augmented with lambda * t / T.
Matrix temporal_features(const Matrix& frames, double temporal_weight);

/// Segment ends at every label change, plus T.
std::vector<double> label_change_ends(const std::vector<std::size_t>& labels);

twiou::Segmentation kmeans_segment(const align::FeatureSequence& video, const KmeansConfig& cfg);

/// Picks the lambda from `grid` with the best mean TW-IoU against gt_high (first on ties).
double tune_temporal_weight(const std::vector<data::Trajectory>& validation, KmeansConfig base,
                            std::span<const double> grid);

std::span<const double> default_lambda_grid();

// A method turns a training split and a seed into a segmenter of held-out trajectories.
using Segmenter = std::function<twiou::Segmentation(const data::Trajectory&)>;

struct Prepared {
  Segmenter segment;
  nlohmann::json metadata;
};

struct Method {
  std::string name;
  std::function<Prepared(const std::vector<data::Trajectory>& train, std::uint64_t seed)> prepare;
};

/// Returns ground-truth high-level events.
Method oracle_method();
/// k-1 distinct uniformly drawn boundaries, seeded by (seed, trajectory id).
Method random_method(std::size_t k = 4);
/// k equal-length events.
Method equal_split_method(std::size_t k = 4);
/// K-means with lambda tuned on the training split.
Method kmeans_method(KmeansConfig base = {});
/// Trains the model on the training split (training seed = method seed) and segments with it.
/// Scores the high level, or the only level of a one-level model.
Method hier_method(std::string name, model::HierConfig config, model::TrainConfig train);

/// Model configs of the compared variants, for data of the given dimensions.
struct Variants {
  model::HierConfig with_comment;
  model::HierConfig without_comment;
  model::HierConfig non_hier_with_comment;
  model::HierConfig non_hier_without_comment;
  model::HierConfig three_level;
  model::HierConfig no_l2;              ///< beta = 0 (with comment)
  model::HierConfig no_cross_decoding;  ///< each modality decoded from its own high latents
  model::HierConfig single_level;       ///< features decoded from high latents (video only)
  model::HierConfig no_low_align;       ///< drops the low-level alignment term (video only)
};

Variants standard_variants(const model::HierConfig& base);

/// Every method of the comparison table, in a fixed order.
std::vector<Method> standard_methods(const model::HierConfig& base, const model::TrainConfig& train,
                                     bool include_ablations);

struct SeedRun {
  std::uint64_t seed = 0;
  twiou::DatasetScore score;
  nlohmann::json metadata;
};

struct MethodResult {
  std::string method;
  double mean = 0.0;  ///< mean over seeds of the per-seed dataset mean (x100)
  double std = 0.0;   ///< population std over seeds (x100)
  std::size_t n_items = 0;
  std::vector<SeedRun> runs;
};

struct Comparison {
  std::vector<MethodResult> rows;  ///< sorted by method name
  std::vector<std::string> ids;    ///< held-out trajectory ids, item order of per_item
  const MethodResult& at(const std::string& method) const;
};

std::vector<std::uint64_t> default_seeds();  ///< {0, 1, 2, 3, 4}

/// Scores every method on `test` for every seed. Methods and seeds may run in parallel; results
/// do not depend on scheduling.
Comparison evaluate_methods(const std::vector<data::Trajectory>& train,
                            const std::vector<data::Trajectory>& test,
                            const std::vector<Method>& methods,
                            const std::vector<std::uint64_t>& seeds, unsigned threads = 0);

/// Scores predictions against ground truth after checking ids pair up.
twiou::DatasetScore score_predictions(const std::vector<twiou::Segmentation>& preds,
                                      const std::vector<twiou::Segmentation>& gts);

void write_comparison_csv(const std::string& path, const Comparison& c);
nlohmann::json to_json(const Comparison& c);

}  // namespace shlk::baselines
