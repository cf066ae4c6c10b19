// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace shlk {

/// Dense row-major matrix used by every numerical kernel (64-bit).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

/// Longest sequence accepted by the quadratic-memory alignment kernels.
inline constexpr std::size_t kMaxSequenceLength = 512;

enum class Modality : std::uint8_t { video = 0, text = 1 };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s);

/// Error categories. The CLI maps each to a distinct exit code.
enum class ErrorKind {
  invalid_argument,
  dimension_mismatch,
  non_finite,
  too_long,
  bad_magic,
  bad_version,
  truncated,
  validation,
  io,
  parse,
  divergence,
};

std::string_view to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

bool all_finite(const Matrix& m);

}  // namespace shlk
