// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shlk/common.hpp"

namespace shlk::align {

/// One modality's trajectory: T feature vectors of dimension D.
class FeatureSequence {
 public:
  FeatureSequence() = default;
  FeatureSequence(Matrix values, Modality modality, std::string id = {});

  const Matrix& values() const noexcept { return values_; }
  Modality modality() const noexcept { return modality_; }
  const std::string& id() const noexcept { return id_; }
  std::size_t length() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.cols()); }

 private:
  Matrix values_;
  Modality modality_ = Modality::video;
  std::string id_;
};

enum class Metric { euclidean, squared_euclidean };

std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);

/// Pairwise non-negative costs between two sequences (n x m).
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(Matrix entries);

  const Matrix& entries() const noexcept { return entries_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }

  /// Transposed matrix, i.e. the cost of the swapped pair.
  CostMatrix transpose() const;

 private:
  Matrix entries_;
};

using Step = std::pair<std::size_t, std::size_t>;

/// Monotone, continuous warping path from (0,0) to (n-1,m-1).
struct AlignmentPath {
  std::vector<Step> steps;

  /// Throws validation if the path violates boundary/monotonicity/continuity.
  void validate(std::size_t n, std::size_t m) const;
  bool is_valid(std::size_t n, std::size_t m) const noexcept;
};

struct DtwResult {
  double distance = 0.0;
  AlignmentPath path;
};

struct SoftDtwResult {
  double value = 0.0;
  /// (n+1) x (m+1) accumulated soft costs; row/col 0 are the +inf boundary.
  Matrix dp_table;
  /// n x m expected alignment; empty until soft_dtw_grad fills it.
  Matrix grad_cost;
  double gamma = 1.0;
};

CostMatrix pairwise_cost(const FeatureSequence& x, const FeatureSequence& y,
                         Metric metric = Metric::euclidean);
CostMatrix pairwise_cost(const Matrix& x, const Matrix& y, Metric metric = Metric::euclidean);

/// Hard DTW. Ties in the backtrace prefer diagonal, then vertical, then horizontal.
DtwResult dtw(const CostMatrix& cost);

/// Maps each x index to one t index along `path`: the smallest j visited with i.
std::vector<std::size_t> warping_function(const AlignmentPath& path,
                                          std::span<const double> x_end_times,
                                          std::span<const double> t_end_times);

/// min^gamma. Infinite arguments are ignored; gamma == 0 is the hard minimum.
double soft_min(std::span<const double> values, double gamma);

SoftDtwResult soft_dtw(const CostMatrix& cost, double gamma = 1.0);

/// d value / d cost via the reverse recursion. Requires gamma > 0.
Matrix soft_dtw_grad(const SoftDtwResult& result, const CostMatrix& cost);

/// Chains an n x m cost gradient through the metric to d/dx (n x D) and d/dy (m x D).
std::pair<Matrix, Matrix> cost_jacobian_apply(const Matrix& x, const Matrix& y,
                                              const Matrix& grad_cost, Metric metric);

struct SequencePair {
  FeatureSequence x;
  FeatureSequence y;
};

struct BatchOptions {
  Metric metric = Metric::euclidean;
  bool with_grad = false;
  /// 0 picks the SHLK_THREADS environment cap (default: hardware concurrency).
  unsigned threads = 0;
};

/// Equal bit-for-bit to sequential evaluation; errors carry the pair index.
std::vector<SoftDtwResult> soft_dtw_batched(std::span<const SequencePair> pairs, double gamma,
                                            const BatchOptions& options = {});

/// Thread cap read from SHLK_THREADS (at least 1).
unsigned thread_cap();

}  // namespace shlk::align
