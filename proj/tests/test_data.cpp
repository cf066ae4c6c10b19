// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "shlk/data.hpp"

using namespace shlk;
using namespace shlk::data;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an shlk::Error");
  return ErrorKind::invalid_argument;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

bool same_trajectories(const std::vector<Trajectory>& a, const std::vector<Trajectory>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].video.values() != b[k].video.values() || a[k].text.values() != b[k].text.values() ||
        !(a[k].gt_high == b[k].gt_high) || !(a[k].gt_low == b[k].gt_low) || a[k].id() != b[k].id()) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("generator is deterministic per seed") {
  const auto a = generate(5, 20);
  const auto b = generate(5, 20);
  const auto c = generate(6, 20);
  CHECK(same_trajectories(a, b));
  CHECK_FALSE(same_trajectories(a, c));
  CHECK(a[3].id() == "traj-5-3");
}

TEST_CASE("generated trajectories satisfy their invariants") {
  const SyntheticConfig cfg;
  const auto data = generate(0, 1000, cfg);
  std::size_t refined = 0;
  for (const auto& t : data) {
    if (refines(t.gt_low, t.gt_high)) ++refined;
    const double len = static_cast<double>(t.video.length());
    CHECK(t.video.length() <= cfg.max_frames);
    CHECK(t.video.dim() == cfg.video_dim);
    CHECK(t.text.dim() == cfg.text_dim);
    CHECK(t.video.modality() == Modality::video);
    CHECK(t.text.modality() == Modality::text);
    CHECK(t.gt_high.size() == cfg.high_per_trajectory);
    CHECK(t.gt_low.end_times().back() == len);
    CHECK(t.gt_high.end_times().back() == len);
    CHECK(t.gt_low.trajectory_length() == len);
    CHECK(all_finite(t.video.values()));
    std::size_t lows = 0;
    std::size_t tokens = 0;
    for (std::size_t h = 0; h < t.script.durations.size(); ++h) {
      for (std::size_t l = 0; l < t.script.durations[h].size(); ++l) {
        CHECK(t.script.durations[h][l] >= 2);
        tokens += t.script.text_repeats[h][l];
        ++lows;
      }
      if (h > 0) CHECK(t.script.high_events[h] != t.script.high_events[h - 1]);
    }
    CHECK(t.gt_low.size() == lows);
    CHECK(t.text.length() == tokens);
  }
  CHECK(refined == data.size());
}

TEST_CASE("noise-free frames repeat their prototype") {
  SyntheticConfig cfg;
  cfg.noise = 0.0;
  cfg.drift = 0.0;
  cfg.text_noise = 0.0;
  for (const auto& t : generate(3, 20, cfg)) {
    double start = 0.0;
    for (double end : t.gt_low.end_times()) {
      for (auto f = static_cast<Eigen::Index>(start) + 1; f < static_cast<Eigen::Index>(end); ++f) {
        CHECK(t.video.values().row(f) == t.video.values().row(static_cast<Eigen::Index>(start)));
      }
      start = end;
    }
  }

  cfg.drift = 0.2;
  for (const auto& t : generate(3, 5, cfg)) {
    const double end = t.gt_low.end_times().front();
    const Matrix& v = t.video.values();
    for (Eigen::Index f = 1; f < static_cast<Eigen::Index>(end); ++f) {
      // Drift moves at most drift * (frames / cap) per frame.
      CHECK((v.row(f) - v.row(f - 1)).norm() <= cfg.drift / static_cast<double>(cfg.max_frames) + 1e-12);
    }
  }
}

TEST_CASE("generator config validation and JSON") {
  SyntheticConfig bad;
  bad.duration_max = 60;
  CHECK(kind_of([&] { generate(0, 1, bad); }) == ErrorKind::invalid_argument);
  bad = SyntheticConfig{};
  bad.duration_min = 1;
  CHECK(kind_of([&] { generate(0, 1, bad); }) == ErrorKind::invalid_argument);

  SyntheticConfig c;
  c.noise = 0.7;
  c.low_types = 5;
  CHECK(to_json(synthetic_config_from_json(to_json(c))) == to_json(c));
  CHECK(kind_of([] { synthetic_config_from_json(nlohmann::json::parse(R"({"noise":"x"})")); }) == ErrorKind::parse);
}

TEST_CASE("splits use disjoint seeds") {
  const auto s = generate_splits(4, 6, 3);
  CHECK(s.train.size() == 6);
  CHECK(s.test.size() == 3);
  CHECK(same_trajectories(s.train, generate(4, 6)));
  CHECK(same_trajectories(s.test, generate(4 + kTestSeedOffset, 3)));
  CHECK(s.test[0].id() == "traj-1004-0");
}

TEST_CASE("feature files") {
  TempDir dir("shlk_test_features");
  std::mt19937_64 rng(8);
  const align::FeatureSequence seq(oracle::random_matrix(rng, 200, 512, -3.0, 3.0), Modality::text, "x");

  SUBCASE("round trip within float32 and byte-identical rewrite") {
    write_features(dir.file("a.shlk"), seq);
    const auto back = read_features(dir.file("a.shlk"));
    CHECK(back.length() == 200);
    CHECK(back.dim() == 512);
    CHECK(back.modality() == Modality::text);
    CHECK(back.values() == seq.values().cast<float>().cast<double>());
    write_features(dir.file("b.shlk"), back);
    CHECK(slurp(dir.file("a.shlk")) == slurp(dir.file("b.shlk")));
    CHECK(fs::file_size(dir.file("a.shlk")) == 14 + 200 * 512 * 4);
  }
  SUBCASE("header layout") {
    const auto bytes = encode_features(align::FeatureSequence(Matrix::Ones(2, 3), Modality::video));
    CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "SHLK1");
    CHECK(bytes[5] == 2);
    CHECK(bytes[9] == 3);
    CHECK(bytes[13] == 0);
    CHECK(bytes.size() == 14 + 24);
  }
  SUBCASE("error kinds") {
    spit(dir.file("empty"), "");
    CHECK(kind_of([&] { read_features(dir.file("empty")); }) == ErrorKind::bad_magic);
    CHECK(kind_of([&] { read_features(dir.file("missing")); }) == ErrorKind::io);

    auto bytes = encode_features(align::FeatureSequence(Matrix::Ones(2, 3), Modality::video));
    auto bad = bytes;
    bad[4] = '2';
    CHECK(kind_of([&] { decode_features(bad); }) == ErrorKind::bad_version);
    bad = bytes;
    bad.pop_back();
    CHECK(kind_of([&] { decode_features(bad); }) == ErrorKind::truncated);
    bad = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 7);
    CHECK(kind_of([&] { decode_features(bad); }) == ErrorKind::truncated);
    bad = bytes;
    bad.push_back(0);
    CHECK(kind_of([&] { decode_features(bad); }) == ErrorKind::validation);
    bad = std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 14);
    bad[5] = 0;
    CHECK(kind_of([&] { decode_features(bad); }) == ErrorKind::validation);
    bad = bytes;
    bad[13] = 7;
    CHECK(kind_of([&] { decode_features(bad); }) == ErrorKind::validation);
  }
}

TEST_CASE("annotations") {
  TempDir dir("shlk_test_annotations");
  SUBCASE("single line") {
    spit(dir.file("a.jsonl"), "{\"id\":\"a\",\"unit\":\"frames\",\"end_times\":[5,10]}\n");
    const auto segs = load_annotations(dir.file("a.jsonl"));
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].id() == "a");
    CHECK(segs[0].end_times() == std::vector<double>{5, 10});
  }
  SUBCASE("out-of-order end times name the line") {
    spit(dir.file("b.jsonl"),
         "{\"id\":\"a\",\"unit\":\"frames\",\"end_times\":[5,10]}\n"
         "{\"id\":\"b\",\"unit\":\"frames\",\"end_times\":[7,3]}\n");
    try {
      load_annotations(dir.file("b.jsonl"));
      FAIL("expected rejection");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
    spit(dir.file("c.jsonl"), "{not json\n");
    CHECK(kind_of([&] { load_annotations(dir.file("c.jsonl")); }) == ErrorKind::parse);
  }
  SUBCASE("round trip preserves all fields") {
    const std::vector<twiou::Segmentation> segs = {
        twiou::Segmentation({1.5, 4.25}, twiou::TimeUnit::seconds, "s", 5.0),
        twiou::Segmentation({3, 9, 12}, twiou::TimeUnit::frames, "f"),
    };
    write_annotations(dir.file("r.jsonl"), segs);
    CHECK(load_annotations(dir.file("r.jsonl")) == segs);
  }
}

TEST_CASE("dataset directory round trip") {
  TempDir dir("shlk_test_dataset");
  const auto data = generate(12, 4);
  write_dataset(dir.path.string(), data, to_json(SyntheticConfig{}));
  const auto manifest = read_manifest(dir.file("manifest.json"));
  REQUIRE(manifest.entries.size() == 4);
  CHECK(manifest.entries[1].id == data[1].id());
  CHECK(manifest.generator == to_json(SyntheticConfig{}));
  const auto back = load_dataset(dir.file("manifest.json"));
  REQUIRE(back.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(back[k].id() == data[k].id());
    CHECK(back[k].video.values() == data[k].video.values().cast<float>().cast<double>());
    CHECK(back[k].gt_high == data[k].gt_high);
    CHECK(back[k].gt_low == data[k].gt_low);
  }
  spit(dir.file("manifest.json"), "{");
  CHECK(kind_of([&] { read_manifest(dir.file("manifest.json")); }) == ErrorKind::parse);
}

TEST_CASE("downsampling") {
  std::mt19937_64 rng(9);
  const align::FeatureSequence seq(oracle::random_matrix(rng, 300, 4), Modality::video, "d");
  for (std::size_t target : {200u, 64u, 32u}) {
    const auto ds = downsample(seq, target);
    CHECK(ds.length() == target);
    CHECK(ds.values().row(0) == seq.values().row(0));
    CHECK(ds.values().row(static_cast<Eigen::Index>(target) - 1) == seq.values().row(299));
    CHECK(downsample(seq, target).values() == ds.values());
    CHECK(ds.id() == "d");
  }
  CHECK(downsample(seq, 400).values() == seq.values());
  CHECK_THROWS_AS(downsample(seq, 1), Error);

  const twiou::Segmentation seg({100, 200, 300}, twiou::TimeUnit::frames, "d", 300.0);
  const auto small = downsample_segmentation(seg, 300, 32);
  CHECK(small.end_times().back() == 32.0);
  CHECK(small.size() == 3);
  CHECK(downsample_segmentation(seg, 300, 400) == seg);
}
