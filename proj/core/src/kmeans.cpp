// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "shlk/baselines.hpp"

namespace shlk::baselines {

void KmeansConfig::validate() const {
  require(k >= 2, ErrorKind::invalid_argument, "kmeans needs k >= 2");
  require(std::isfinite(temporal_weight) && temporal_weight >= 0.0, ErrorKind::invalid_argument,
          "temporal weight must be finite and >= 0");
  require(max_iters >= 1 && restarts >= 1, ErrorKind::invalid_argument,
          "max_iters and restarts must be >= 1");
}

nlohmann::json to_json(const KmeansConfig& c) {
  return {{"k", c.k},
          {"temporal_weight", c.temporal_weight},
          {"max_iters", c.max_iters},
          {"seed", c.seed},
          {"restarts", c.restarts}};
}

namespace {

double sq_dist(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).squaredNorm();
}

Matrix plus_plus_init(const Matrix& x, std::size_t k, std::mt19937_64& rng) {
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> chosen;
  chosen.push_back(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] =
          std::min(d2[static_cast<std::size_t>(i)], sq_dist(x, i, x, chosen.back()));
      total += d2[static_cast<std::size_t>(i)];
    }
    if (!(total > 0.0)) break;  // fewer distinct points than k
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    Eigen::Index pick = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      u -= d2[static_cast<std::size_t>(i)];
      if (u < 0.0 && d2[static_cast<std::size_t>(i)] > 0.0) {
        pick = i;
        break;
      }
    }
    chosen.push_back(pick);
  }
  Matrix c(static_cast<Eigen::Index>(chosen.size()), x.cols());
  for (std::size_t r = 0; r < chosen.size(); ++r) c.row(static_cast<Eigen::Index>(r)) = x.row(chosen[r]);
  return c;
}

Clustering lloyd(const Matrix& x, Matrix centers, std::size_t max_iters) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centers.rows();
  std::vector<std::size_t> labels(static_cast<std::size_t>(n), k);
  for (std::size_t it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = sq_dist(x, i, centers, 0);
      for (Eigen::Index c = 1; c < k; ++c) {
        const double d = sq_dist(x, i, centers, c);
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::size_t>(c);
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) += x.row(i);
      ++counts[labels[static_cast<std::size_t>(i)]];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }
  Clustering out;
  out.labels = std::move(labels);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.inertia += sq_dist(x, i, centers, static_cast<Eigen::Index>(out.labels[static_cast<std::size_t>(i)]));
  }
  out.centers = std::move(centers);
  return out;
}

}  // namespace

Clustering kmeans(const Matrix& points, std::size_t k, std::size_t max_iters, std::size_t restarts,
                  std::uint64_t seed) {
  require(points.rows() >= 1, ErrorKind::invalid_argument, "kmeans on an empty point set");
  require(k >= 1 && restarts >= 1, ErrorKind::invalid_argument, "kmeans needs k >= 1, restarts >= 1");
  std::mt19937_64 rng(seed);
  Clustering best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < restarts; ++r) {
    Clustering c = lloyd(points, plus_plus_init(points, k, rng), max_iters);
    if (c.inertia < best.inertia) best = std::move(c);
  }
  return best;
}

Matrix temporal_features(const Matrix& frames, double temporal_weight) {
  const Eigen::Index t = frames.rows();
  Matrix out(t, frames.cols() + 1);
  out.leftCols(frames.cols()) = frames;
  for (Eigen::Index i = 0; i < t; ++i) {
    out(i, frames.cols()) = temporal_weight * static_cast<double>(i) / static_cast<double>(t);
  }
  return out;
}

std::vector<double> label_change_ends(const std::vector<std::size_t>& labels) {
  std::vector<double> ends;
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] != labels[i - 1]) ends.push_back(static_cast<double>(i));
  }
  ends.push_back(static_cast<double>(labels.size()));
  return ends;
}

twiou::Segmentation kmeans_segment(const align::FeatureSequence& video, const KmeansConfig& cfg) {
  cfg.validate();
  const Matrix& x = video.values();
  const double len = static_cast<double>(video.length());
  require(video.length() > cfg.k, ErrorKind::invalid_argument,
          "kmeans_segment needs more frames than clusters (T=" + std::to_string(video.length()) +
              ", k=" + std::to_string(cfg.k) + ")");
  bool identical = true;
  for (Eigen::Index i = 1; i < x.rows() && identical; ++i) identical = (x.row(i).array() == x.row(0).array()).all();
  if (identical) return twiou::Segmentation({len}, twiou::TimeUnit::frames, video.id(), len);

  const Clustering c =
      kmeans(temporal_features(x, cfg.temporal_weight), cfg.k, cfg.max_iters, cfg.restarts, cfg.seed);
  return twiou::Segmentation(label_change_ends(c.labels), twiou::TimeUnit::frames, video.id(), len);
}

std::span<const double> default_lambda_grid() {
  static constexpr std::array<double, 9> grid = {0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0};
  return grid;
}

double tune_temporal_weight(const std::vector<data::Trajectory>& validation, KmeansConfig base,
                            std::span<const double> grid) {
  require(!validation.empty() && !grid.empty(), ErrorKind::invalid_argument,
          "lambda tuning needs validation data and a non-empty grid");
  std::vector<twiou::Segmentation> gts;
  for (const auto& t : validation) gts.push_back(t.gt_high);
  double best_lambda = grid.front();
  double best = -1.0;
  for (double lambda : grid) {
    base.temporal_weight = lambda;
    std::vector<twiou::Segmentation> preds;
    for (const auto& t : validation) preds.push_back(kmeans_segment(t.video, base));
    const double score = twiou::tw_iou_dataset(preds, gts).mean;
    if (score > best) {
      best = score;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace shlk::baselines
