// SPDX-License-Identifier: Apache-2.0
#include "shlk/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <thread>

namespace shlk::align {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_length(std::size_t n, const char* what) {
  if (n > kMaxSequenceLength) {
    fail(ErrorKind::too_long, std::string(what) + " has " + std::to_string(n) +
                                  " steps; the limit is " + std::to_string(kMaxSequenceLength));
  }
}

// Three-argument soft minimum on the hot path of the DP.
inline double soft_min3(double a, double b, double c, double gamma) {
  const double m = std::min({a, b, c});
  if (m == kInf) return kInf;
  if (gamma == 0.0) return m;
  double s = 0.0;
  if (a != kInf) s += std::exp(-(a - m) / gamma);
  if (b != kInf) s += std::exp(-(b - m) / gamma);
  if (c != kInf) s += std::exp(-(c - m) / gamma);
  return m - gamma * std::log(s);
}

}  // namespace

FeatureSequence::FeatureSequence(Matrix values, Modality modality, std::string id)
    : values_(std::move(values)), modality_(modality), id_(std::move(id)) {
  require(values_.rows() >= 1, ErrorKind::validation, "feature sequence must have T >= 1");
  require(values_.cols() >= 1, ErrorKind::validation, "feature sequence must have D >= 1");
  require(values_.allFinite(), ErrorKind::non_finite, "feature sequence contains NaN/Inf");
}

std::string_view to_string(Metric m) {
  return m == Metric::euclidean ? "euclidean" : "squared_euclidean";
}

Metric metric_from_string(std::string_view s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "squared_euclidean") return Metric::squared_euclidean;
  fail(ErrorKind::parse, "unknown metric '" + std::string(s) + "'");
}

CostMatrix::CostMatrix(Matrix entries) : entries_(std::move(entries)) {
  require(entries_.size() > 0, ErrorKind::validation, "cost matrix is empty");
  require(entries_.allFinite(), ErrorKind::non_finite, "cost matrix contains NaN/Inf");
  require((entries_.array() >= 0.0).all(), ErrorKind::validation,
          "cost matrix has negative entries");
  check_length(rows(), "cost matrix row dimension");
  check_length(cols(), "cost matrix column dimension");
}

CostMatrix CostMatrix::transpose() const {
  CostMatrix t;
  t.entries_ = entries_.transpose();
  return t;
}

bool AlignmentPath::is_valid(std::size_t n, std::size_t m) const noexcept {
  if (steps.empty() || n == 0 || m == 0) return false;
  if (steps.front() != Step{0, 0}) return false;
  if (steps.back() != Step{n - 1, m - 1}) return false;
  for (std::size_t k = 1; k < steps.size(); ++k) {
    const auto [pi, pj] = steps[k - 1];
    const auto [ci, cj] = steps[k];
    if (ci < pi || cj < pj) return false;
    const std::size_t di = ci - pi;
    const std::size_t dj = cj - pj;
    if (di > 1 || dj > 1 || (di == 0 && dj == 0)) return false;
  }
  return true;
}

void AlignmentPath::validate(std::size_t n, std::size_t m) const {
  require(is_valid(n, m), ErrorKind::validation,
          "alignment path is not a monotone continuous path over " + std::to_string(n) + "x" +
              std::to_string(m));
}

CostMatrix pairwise_cost(const Matrix& x, const Matrix& y, Metric metric) {
  require(x.rows() >= 1 && y.rows() >= 1, ErrorKind::validation, "empty sequence");
  require(x.cols() == y.cols(), ErrorKind::dimension_mismatch,
          "feature dimensions differ: " + std::to_string(x.cols()) + " vs " +
              std::to_string(y.cols()));
  require(x.allFinite() && y.allFinite(), ErrorKind::non_finite, "non-finite feature values");
  check_length(static_cast<std::size_t>(x.rows()), "first sequence");
  check_length(static_cast<std::size_t>(y.rows()), "second sequence");

  Matrix c(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      const double sq = (x.row(i) - y.row(j)).squaredNorm();
      c(i, j) = metric == Metric::euclidean ? std::sqrt(sq) : sq;
    }
  }
  return CostMatrix(std::move(c));
}

CostMatrix pairwise_cost(const FeatureSequence& x, const FeatureSequence& y, Metric metric) {
  return pairwise_cost(x.values(), y.values(), metric);
}

DtwResult dtw(const CostMatrix& cost) {
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  require(n > 0 && m > 0, ErrorKind::validation, "dtw on an empty cost matrix");

  Matrix r = Matrix::Constant(n + 1, m + 1, kInf);
  r(0, 0) = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      r(i, j) = cost(i - 1, j - 1) + std::min({r(i - 1, j - 1), r(i - 1, j), r(i, j - 1)});
    }
  }

  DtwResult out;
  out.distance = r(n, m);
  std::size_t i = n;
  std::size_t j = m;
  out.path.steps.emplace_back(i - 1, j - 1);
  while (i > 1 || j > 1) {
    if (i == 1) {
      --j;
    } else if (j == 1) {
      --i;
    } else {
      const double diag = r(i - 1, j - 1);
      const double vert = r(i - 1, j);
      const double horz = r(i, j - 1);
      if (diag <= vert && diag <= horz) {
        --i;
        --j;
      } else if (vert <= horz) {
        --i;
      } else {
        --j;
      }
    }
    out.path.steps.emplace_back(i - 1, j - 1);
  }
  std::reverse(out.path.steps.begin(), out.path.steps.end());
  out.path.validate(n, m);
  return out;
}

std::vector<std::size_t> warping_function(const AlignmentPath& path,
                                          std::span<const double> x_end_times,
                                          std::span<const double> t_end_times) {
  const std::size_t n = x_end_times.size();
  const std::size_t m = t_end_times.size();
  path.validate(n, m);
  std::vector<std::size_t> w(n, 0);
  std::vector<bool> seen(n, false);
  for (const auto& [i, j] : path.steps) {
    if (!seen[i]) {
      w[i] = j;
      seen[i] = true;
    }
  }
  return w;
}

double soft_min(std::span<const double> values, double gamma) {
  require(!values.empty(), ErrorKind::invalid_argument, "soft_min of an empty list");
  require(gamma >= 0.0 && std::isfinite(gamma), ErrorKind::invalid_argument,
          "soft_min gamma must be finite and >= 0");
  const double m = *std::min_element(values.begin(), values.end());
  if (gamma == 0.0 || m == kInf) return m;
  double s = 0.0;
  for (double v : values) {
    if (v != kInf) s += std::exp(-(v - m) / gamma);
  }
  return m - gamma * std::log(s);
}

SoftDtwResult soft_dtw(const CostMatrix& cost, double gamma) {
  require(gamma >= 0.0 && std::isfinite(gamma), ErrorKind::invalid_argument,
          "soft-DTW gamma must be finite and >= 0");
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  require(n > 0 && m > 0, ErrorKind::validation, "soft-DTW on an empty cost matrix");

  SoftDtwResult out;
  out.gamma = gamma;
  out.dp_table = Matrix::Constant(n + 1, m + 1, kInf);
  Matrix& r = out.dp_table;
  r(0, 0) = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      r(i, j) = cost(i - 1, j - 1) + soft_min3(r(i - 1, j - 1), r(i - 1, j), r(i, j - 1), gamma);
    }
  }
  out.value = r(n, m);
  return out;
}

Matrix soft_dtw_grad(const SoftDtwResult& result, const CostMatrix& cost) {
  const double gamma = result.gamma;
  require(gamma > 0.0, ErrorKind::invalid_argument,
          "soft_dtw_grad needs gamma > 0; use the dtw path as a subgradient at gamma = 0");
  const std::size_t n = cost.rows();
  const std::size_t m = cost.cols();
  require(static_cast<std::size_t>(result.dp_table.rows()) == n + 1 &&
              static_cast<std::size_t>(result.dp_table.cols()) == m + 1,
          ErrorKind::dimension_mismatch, "dp table does not match the cost matrix");

  const Matrix& r = result.dp_table;
  Matrix e = Matrix::Zero(n, m);
  e(n - 1, m - 1) = 1.0;
  // Edge weight from cell p to successor s: d r(s) / d r(p).
  auto weight = [&](std::size_t si, std::size_t sj, std::size_t pi, std::size_t pj) {
    return std::exp((r(si + 1, sj + 1) - cost(si, sj) - r(pi + 1, pj + 1)) / gamma);
  };
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t jj = m; jj-- > 0;) {
      if (ii == n - 1 && jj == m - 1) continue;
      double acc = 0.0;
      if (ii + 1 < n) acc += e(ii + 1, jj) * weight(ii + 1, jj, ii, jj);
      if (jj + 1 < m) acc += e(ii, jj + 1) * weight(ii, jj + 1, ii, jj);
      if (ii + 1 < n && jj + 1 < m) acc += e(ii + 1, jj + 1) * weight(ii + 1, jj + 1, ii, jj);
      e(ii, jj) = acc;
    }
  }
  return e;
}

std::pair<Matrix, Matrix> cost_jacobian_apply(const Matrix& x, const Matrix& y,
                                              const Matrix& grad_cost, Metric metric) {
  require(x.cols() == y.cols(), ErrorKind::dimension_mismatch, "feature dimensions differ");
  require(grad_cost.rows() == x.rows() && grad_cost.cols() == y.rows(),
          ErrorKind::dimension_mismatch, "cost gradient shape does not match the sequences");
  Matrix w = grad_cost;
  if (metric == Metric::euclidean) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < y.rows(); ++j) {
        const double d = (x.row(i) - y.row(j)).norm();
        // Subgradient 0 at coincident points.
        w(i, j) = d > 0.0 ? w(i, j) / d : 0.0;
      }
    }
  } else {
    w *= 2.0;
  }
  Matrix dx = w.rowwise().sum().asDiagonal() * x - w * y;
  Matrix dy = w.colwise().sum().transpose().asDiagonal() * y - w.transpose() * x;
  return {std::move(dx), std::move(dy)};
}

unsigned thread_cap() {
  if (const char* env = std::getenv("SHLK_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SoftDtwResult> soft_dtw_batched(std::span<const SequencePair> pairs, double gamma,
                                            const BatchOptions& options) {
  std::vector<SoftDtwResult> results(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
  auto run_one = [&](std::size_t k) {
    try {
      const CostMatrix cost = pairwise_cost(pairs[k].x, pairs[k].y, options.metric);
      results[k] = soft_dtw(cost, gamma);
      if (options.with_grad) results[k].grad_cost = soft_dtw_grad(results[k], cost);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };

  const unsigned cap = options.threads == 0 ? thread_cap() : options.threads;
  const std::size_t workers = std::min<std::size_t>(cap, pairs.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < pairs.size(); ++k) run_one(k);
  } else {
    // Static strided partition; each slot is written by exactly one worker.
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < pairs.size(); k += workers) run_one(k);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const Error& e) {
      throw Error(e.kind(), "pair " + std::to_string(k) + ": " + e.what());
    }
  }
  return results;
}

}  // namespace shlk::align
