// SPDX-License-Identifier: Apache-2.0
#include <limits>

#include "bytes.hpp"
#include "shlk/graph.hpp"

namespace shlk::graph {

namespace {
constexpr std::string_view kMagic = "SHLKCKPT";
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParamStore& params) {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, m] : params) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.raw(name);
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.f32(static_cast<float>(m(i, j)));
    }
  }
  return w.take();
}

ParamStore decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!r.has(kMagic.size()) || r.raw(kMagic.size(), "magic") != kMagic) {
    fail(ErrorKind::bad_magic, "not a checkpoint (bad magic)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kVersion) {
    fail(ErrorKind::bad_version, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("tensor count");
  ParamStore out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t len = r.u32("name length");
    std::string name = r.raw(len, "tensor name");
    const std::uint32_t rows = r.u32("rows");
    const std::uint32_t cols = r.u32("cols");
    if (!r.has(static_cast<std::size_t>(rows) * cols * 4)) {
      fail(ErrorKind::truncated, "checkpoint truncated in tensor '" + name + "'");
    }
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.f32("payload");
    }
    out.add(name, std::move(m));
  }
  if (r.remaining() != 0) fail(ErrorKind::validation, "trailing bytes after checkpoint payload");
  return out;
}

void save_checkpoint(const std::string& path, const ParamStore& params) {
  detail::write_file(path, encode_checkpoint(params));
}

ParamStore load_checkpoint(const std::string& path) {
  return decode_checkpoint(detail::read_file(path));
}

void quantize_to_float32(ParamStore& params) {
  for (auto& [_, m] : params) m = m.cast<float>().cast<double>();
}

}  // namespace shlk::graph
