// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include "bytes.hpp"
#include "shlk/data.hpp"

namespace shlk::data {

namespace fs = std::filesystem;

namespace {
constexpr std::string_view kFeatureMagic = "SHLK";
constexpr char kFeatureVersion = '1';
}  // namespace

std::vector<std::uint8_t> encode_features(const align::FeatureSequence& seq) {
  detail::ByteWriter w;
  w.raw(kFeatureMagic);
  w.u8(static_cast<std::uint8_t>(kFeatureVersion));
  w.u32(static_cast<std::uint32_t>(seq.length()));
  w.u32(static_cast<std::uint32_t>(seq.dim()));
  w.u8(static_cast<std::uint8_t>(seq.modality()));
  const Matrix& v = seq.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) w.f32(static_cast<float>(v(i, j)));
  }
  return w.take();
}

align::FeatureSequence decode_features(std::span<const std::uint8_t> bytes, std::string id) {
  detail::ByteReader r(bytes);
  if (!r.has(kFeatureMagic.size()) || r.raw(kFeatureMagic.size(), "magic") != kFeatureMagic) {
    fail(ErrorKind::bad_magic, "not a feature file (bad magic)");
  }
  if (!r.has(1)) fail(ErrorKind::truncated, "feature file truncated in header");
  const std::uint8_t version = r.u8("version");
  if (version != static_cast<std::uint8_t>(kFeatureVersion)) {
    fail(ErrorKind::bad_version, "unsupported feature file version '" +
                                     std::string(1, static_cast<char>(version)) + "'");
  }
  const std::uint32_t t = r.u32("T");
  const std::uint32_t d = r.u32("D");
  const std::uint8_t mod = r.u8("modality");
  require(mod <= 1, ErrorKind::validation, "unknown modality tag " + std::to_string(mod));
  require(t >= 1 && d >= 1, ErrorKind::validation,
          "feature file declares T=" + std::to_string(t) + ", D=" + std::to_string(d));
  const std::size_t payload = static_cast<std::size_t>(t) * d * 4;
  if (r.remaining() < payload) fail(ErrorKind::truncated, "feature file truncated in payload");
  if (r.remaining() > payload) fail(ErrorKind::validation, "trailing bytes after feature payload");
  Matrix m(t, d);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = r.f32("payload");
  }
  return align::FeatureSequence(std::move(m), static_cast<Modality>(mod), std::move(id));
}

void write_features(const std::string& path, const align::FeatureSequence& seq) {
  detail::write_file(path, encode_features(seq));
}

align::FeatureSequence read_features(const std::string& path, std::string id) {
  return decode_features(detail::read_file(path), std::move(id));
}

void write_annotations(const std::string& path, const std::vector<twiou::Segmentation>& segs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
  for (const auto& s : segs) out << twiou::to_json(s).dump() << '\n';
  if (!out) fail(ErrorKind::io, "write to '" + path + "' failed");
}

std::vector<twiou::Segmentation> load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "' for reading");
  std::vector<twiou::Segmentation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(twiou::segmentation_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Manifest write_dataset(const std::string& dir, const std::vector<Trajectory>& data,
                       const nlohmann::json& generator) {
  fs::create_directories(fs::path(dir) / "features");
  Manifest m;
  m.gt_high = "gt_high.jsonl";
  m.gt_low = "gt_low.jsonl";
  m.generator = generator;
  std::vector<twiou::Segmentation> high;
  std::vector<twiou::Segmentation> low;
  for (const auto& t : data) {
    ManifestEntry e{t.id(), "features/" + t.id() + ".video.shlk", "features/" + t.id() + ".text.shlk"};
    write_features((fs::path(dir) / e.video).string(), t.video);
    write_features((fs::path(dir) / e.text).string(), t.text);
    m.entries.push_back(std::move(e));
    high.push_back(t.gt_high);
    low.push_back(t.gt_low);
  }
  write_annotations((fs::path(dir) / m.gt_high).string(), high);
  write_annotations((fs::path(dir) / m.gt_low).string(), low);

  nlohmann::json j;
  j["gt_high"] = m.gt_high;
  j["gt_low"] = m.gt_low;
  if (!generator.is_null()) j["generator"] = generator;
  j["trajectories"] = nlohmann::json::array();
  for (const auto& e : m.entries) {
    j["trajectories"].push_back({{"id", e.id}, {"video", e.video}, {"text", e.text}});
  }
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write manifest in '" + dir + "'");
  out << j.dump(2) << '\n';
  return m;
}

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open manifest '" + path + "'");
  Manifest m;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    m.gt_high = j.value("gt_high", std::string());
    m.gt_low = j.value("gt_low", std::string());
    if (j.contains("generator")) m.generator = j.at("generator");
    for (const auto& e : j.at("trajectories")) {
      m.entries.push_back(ManifestEntry{e.at("id").get<std::string>(),
                                        e.at("video").get<std::string>(),
                                        e.value("text", std::string())});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, "malformed manifest '" + path + "': " + e.what());
  }
  return m;
}

std::vector<Trajectory> load_dataset(const std::string& manifest_path) {
  const Manifest m = read_manifest(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  std::vector<twiou::Segmentation> high;
  std::vector<twiou::Segmentation> low;
  if (!m.gt_high.empty()) high = load_annotations((base / m.gt_high).string());
  if (!m.gt_low.empty()) low = load_annotations((base / m.gt_low).string());
  auto find = [](const std::vector<twiou::Segmentation>& segs, const std::string& id) {
    for (const auto& s : segs) {
      if (s.id() == id) return s;
    }
    fail(ErrorKind::validation, "no annotation for trajectory '" + id + "'");
  };

  std::vector<Trajectory> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) {
    Trajectory t;
    t.video = read_features((base / e.video).string(), e.id);
    require(t.video.modality() == Modality::video, ErrorKind::validation,
            "'" + e.video + "' is not a video feature file");
    if (!e.text.empty()) {
      t.text = read_features((base / e.text).string(), e.id);
      require(t.text.modality() == Modality::text, ErrorKind::validation,
              "'" + e.text + "' is not a text feature file");
    }
    if (!high.empty()) t.gt_high = find(high, e.id);
    if (!low.empty()) t.gt_low = find(low, e.id);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace shlk::data
