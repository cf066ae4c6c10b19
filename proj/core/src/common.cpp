// SPDX-License-Identifier: Apache-2.0
#include "shlk/common.hpp"

namespace shlk {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::video: return "video";
    case Modality::text: return "text";
  }
  return "unknown";
}

Modality modality_from_string(std::string_view s) {
  if (s == "video") return Modality::video;
  if (s == "text") return Modality::text;
  fail(ErrorKind::parse, "unknown modality '" + std::string(s) + "'");
}

std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::too_long: return "too_long";
    case ErrorKind::bad_magic: return "bad_magic";
    case ErrorKind::bad_version: return "bad_version";
    case ErrorKind::truncated: return "truncated";
    case ErrorKind::validation: return "validation";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::divergence: return "divergence";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace shlk
