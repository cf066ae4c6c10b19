// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used as test oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "shlk/align.hpp"

namespace oracle {

using shlk::Matrix;
using Path = std::vector<std::pair<std::size_t, std::size_t>>;

/// Every monotone, continuous path from (0,0) to (n-1,m-1).
inline std::vector<Path> enumerate_paths(std::size_t n, std::size_t m) {
  std::vector<Path> out;
  Path cur{{0, 0}};
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t j) {
    if (i == n - 1 && j == m - 1) {
      out.push_back(cur);
      return;
    }
    const std::pair<std::size_t, std::size_t> moves[3] = {{i + 1, j + 1}, {i + 1, j}, {i, j + 1}};
    for (auto [a, b] : moves) {
      if (a < n && b < m) {
        cur.emplace_back(a, b);
        rec(a, b);
        cur.pop_back();
      }
    }
  };
  rec(0, 0);
  return out;
}

inline double path_cost(const Matrix& c, const Path& p) {
  double s = 0.0;
  for (auto [i, j] : p) s += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return s;
}

/// Minimum cost over every path, visiting each path once by depth-first search.
inline double brute_dtw(const Matrix& c) {
  const Eigen::Index n = c.rows();
  const Eigen::Index m = c.cols();
  double best = std::numeric_limits<double>::infinity();
  std::function<void(Eigen::Index, Eigen::Index, double)> rec = [&](Eigen::Index i, Eigen::Index j, double acc) {
    acc += c(i, j);
    if (i == n - 1 && j == m - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < n && j + 1 < m) rec(i + 1, j + 1, acc);
    if (i + 1 < n) rec(i + 1, j, acc);
    if (j + 1 < m) rec(i, j + 1, acc);
  };
  rec(0, 0, 0.0);
  return best;
}

/// -gamma * log(sum exp(-v / gamma)), shifted by the minimum.
inline double soft_min_direct(const std::vector<double>& v, double gamma) {
  const double lo = *std::min_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(-(x - lo) / gamma);
  return lo - gamma * std::log(s);
}

/// Soft minimum over the costs of every enumerated path.
inline double brute_soft_dtw(const Matrix& c, double gamma) {
  std::vector<double> costs;
  for (const auto& p : enumerate_paths(static_cast<std::size_t>(c.rows()), static_cast<std::size_t>(c.cols()))) {
    costs.push_back(path_cost(c, p));
  }
  return soft_min_direct(costs, gamma);
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  }
  return m;
}

inline std::size_t uniform_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Central difference of f at x along entry (i, j).
inline double central_difference(const std::function<double(const Matrix&)>& f, Matrix x, Eigen::Index i,
                                  Eigen::Index j, double h) {
  const double orig = x(i, j);
  x(i, j) = orig + h;
  const double up = f(x);
  x(i, j) = orig - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

/// Relative error with an absolute floor, so near-zero entries compare on absolute scale.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace oracle
