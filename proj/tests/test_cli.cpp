// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "shlk/data.hpp"

#ifndef SHLK_CLI_PATH
#error "SHLK_CLI_PATH must name the shlk executable"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path& scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "shlk_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run cli(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + SHLK_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

// Small generator and model so the pipeline runs in seconds.
fs::path small_config() {
  const fs::path p = scratch() / "small.json";
  const json cfg = {
      {"generator",
       {{"low_types", 4},
        {"high_types", 3},
        {"high_per_trajectory", 2},
        {"low_per_high_min", 2},
        {"low_per_high_max", 2},
        {"duration_min", 2},
        {"duration_max", 3},
        {"video_dim", 3},
        {"text_dim", 3},
        {"max_frames", 24}}},
      {"model", {{"n_low", 8}, {"n_high", 2}, {"latent_dim", 4}, {"hidden_dim", 6}, {"max_length", 24}}},
      {"train", {{"epochs", 2}, {"batch_size", 4}}},
  };
  write_text(p, cfg.dump());
  return p;
}

}  // namespace

TEST_CASE("align and softdtw on feature files") {
  const fs::path dir = scratch() / "align";
  fs::create_directories(dir);
  Eigen::MatrixXd x(5, 2);
  x << 0, 0, 1, 0, 2, 1, 3, 1, 4, 2;
  Eigen::MatrixXd y(3, 2);
  y << 0, 0, 2, 1, 4, 2;
  shlk::data::write_features((dir / "x.shlk").string(), shlk::align::FeatureSequence(x, shlk::Modality::video));
  shlk::data::write_features((dir / "y.shlk").string(), shlk::align::FeatureSequence(y, shlk::Modality::video));

  const Run self = cli("--out " + q(dir) + " align " + q(dir / "x.shlk") + " " + q(dir / "x.shlk"));
  REQUIRE(self.code == 0);
  const json a = json::parse(self.out);
  CHECK(a.at("distance").get<double>() == 0.0);
  CHECK(a.at("path").size() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(a.at("path")[k][0] == k);
    CHECK(a.at("path")[k][1] == k);
  }
  CHECK(json::parse(slurp(dir / "align.json")) == a);

  const Run hard = cli("--out " + q(dir) + " align " + q(dir / "x.shlk") + " " + q(dir / "y.shlk"));
  REQUIRE(hard.code == 0);
  const Run soft0 = cli("--out " + q(dir) + " softdtw --gamma 0 " + q(dir / "x.shlk") + " " + q(dir / "y.shlk"));
  REQUIRE(soft0.code == 0);
  CHECK(json::parse(soft0.out).at("value").get<double>() == json::parse(hard.out).at("distance").get<double>());

  const Run grad = cli("--out " + q(dir) + " softdtw --grad " + q(dir / "x.shlk") + " " + q(dir / "y.shlk"));
  REQUIRE(grad.code == 0);
  const json g = json::parse(slurp(dir / "softdtw_grad.json"));
  CHECK(g.at("grad_cost").size() == 5);
  CHECK(g.at("grad_x").size() == 5);
  CHECK(g.at("grad_y").size() == 3);
  CHECK(json::parse(grad.out).at("value").get<double>() < json::parse(hard.out).at("distance").get<double>());

  const Run bad = cli("--out " + q(dir) + " softdtw --gamma 0 --grad " + q(dir / "x.shlk") + " " + q(dir / "y.shlk"));
  CHECK(bad.code == 10);
  CHECK(bad.err.rfind("error: invalid_argument: ", 0) == 0);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch() / "codes";
  fs::create_directories(dir);
  const Run unknown = cli("--out " + q(dir) + " align --frobnicate a b");
  CHECK(unknown.code == 2);
  CHECK(unknown.err.rfind("error: usage: ", 0) == 0);
  CHECK(cli("").code == 2);

  const Run missing = cli("--out " + q(dir) + " align " + q(dir / "nope.shlk") + " " + q(dir / "nope.shlk"));
  CHECK(missing.code == 18);
  CHECK(missing.err.rfind("error: io: ", 0) == 0);

  write_text(dir / "bad.json", "{ not json");
  const Run malformed = cli("--config " + q(dir / "bad.json") + " --out " + q(dir) + " gen-data --n-train 1 --n-test 1");
  CHECK(malformed.code == 19);
  CHECK(malformed.err.rfind("error: parse: ", 0) == 0);

  write_text(dir / "junk.shlk", "JUNKJUNKJUNKJUNK");
  const Run magic = cli("--out " + q(dir) + " align " + q(dir / "junk.shlk") + " " + q(dir / "junk.shlk"));
  CHECK(magic.code == 14);
}

TEST_CASE("help lists every flag") {
  const Run top = cli("--help");
  CHECK(top.code == 0);
  for (const char* flag : {"--seed", "--out", "--config", "--verbose", "gen-data", "train", "eval", "segment", "align",
                           "softdtw", "plot-timeline", "embed-dump"}) {
    CHECK_MESSAGE(top.out.find(flag) != std::string::npos, flag);
  }
  const std::vector<std::pair<std::string, std::vector<std::string>>> subs = {
      {"gen-data", {"--n-train", "--n-test"}},
      {"train", {"--data", "--checkpoint-every", "--epochs", "--lr", "--batch-size", "--levels", "--beta", "--no-text"}},
      {"eval", {"--train", "--test", "--seeds", "--methods", "--predictions", "--ablations"}},
      {"segment", {"--checkpoint", "--model", "--video", "--text", "--data"}},
      {"align", {"--metric"}},
      {"softdtw", {"--gamma", "--metric", "--grad"}},
      {"plot-timeline", {"--pred", "--gt", "--id"}},
      {"embed-dump", {"--checkpoint", "--model", "--data"}},
  };
  for (const auto& [cmd, flags] : subs) {
    const Run r = cli(cmd + " --help");
    CHECK(r.code == 0);
    for (const auto& f : flags) CHECK_MESSAGE(r.out.find(f) != std::string::npos, cmd, " ", f);
  }
}

TEST_CASE("pipeline: gen-data, train, segment, eval, plot, embed") {
  const fs::path cfg = small_config();
  const fs::path a = scratch() / "run_a";
  const fs::path b = scratch() / "run_b";

  REQUIRE(cli("--config " + q(cfg) + " --seed 3 --out " + q(a) + " gen-data --n-train 8 --n-test 4").code == 0);
  REQUIRE(cli("--config " + q(cfg) + " --seed 3 --out " + q(b) + " gen-data --n-train 8 --n-test 4").code == 0);
  for (const char* f : {"train/manifest.json", "train/gt_high.jsonl", "train/gt_low.jsonl", "test/manifest.json",
                        "test/features/traj-1003-0.video.shlk"}) {
    REQUIRE_MESSAGE(fs::exists(a / f), f);
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  }

  const json echo = json::parse(slurp(a / "gen-data.config.json"));
  CHECK(echo.at("command") == "gen-data");
  CHECK(echo.at("seed") == 3);
  CHECK(json::parse(echo.dump()) == echo);

  const fs::path m1 = scratch() / "model_a";
  const fs::path m2 = scratch() / "model_b";
  const std::string train_args = " train --data " + q(a / "train/manifest.json") + " --epochs 2";
  REQUIRE(cli("--config " + q(cfg) + " --out " + q(m1) + train_args).code == 0);
  REQUIRE(cli("--config " + q(cfg) + " --out " + q(m2) + train_args).code == 0);
  CHECK(slurp(m1 / "model.ckpt") == slurp(m2 / "model.ckpt"));
  CHECK(slurp(m1 / "loss.csv") == slurp(m2 / "loss.csv"));
  const json mj = json::parse(slurp(m1 / "model.json"));
  CHECK(mj.at("n_low") == 8);
  CHECK(mj.at("video_dim") == 3);
  const json techo = json::parse(slurp(m1 / "train.config.json"));
  CHECK(techo.at("train").at("epochs") == 2);

  const fs::path seg = scratch() / "seg";
  REQUIRE(cli("--out " + q(seg) + " segment --checkpoint " + q(m1 / "model.ckpt") + " --data " +
               q(a / "test/manifest.json"))
              .code == 0);
  const auto high = shlk::data::load_annotations((seg / "pred_high.jsonl").string());
  const auto low = shlk::data::load_annotations((seg / "pred_low.jsonl").string());
  REQUIRE(high.size() == 4);
  REQUIRE(low.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) CHECK(shlk::data::refines(low[k], high[k]));

  const Run single = cli("--out " + q(seg) + " segment --checkpoint " + q(m1 / "model.ckpt") + " --video " +
                          q(a / "test/features/traj-1003-0.video.shlk") + " --text " +
                          q(a / "test/features/traj-1003-0.text.shlk"));
  REQUIRE(single.code == 0);
  CHECK(json::parse(single.out).contains("high"));

  const fs::path ev = scratch() / "eval";
  const Run e = cli("--config " + q(cfg) + " --out " + q(ev) + " eval --train " + q(a / "train/manifest.json") +
                     " --test " + q(a / "test/manifest.json") + " --seeds 0 1 --methods oracle kmeans --predictions " +
                     q(seg / "pred_high.jsonl"));
  REQUIRE(e.code == 0);
  const std::string csv = slurp(ev / "comparison.csv");
  CHECK(csv.rfind("method,mean,std,n_items,seed_list\n", 0) == 0);
  CHECK(csv.find("\noracle,100.000000,0.000000,4,0;1\n") != std::string::npos);
  CHECK(csv.find("\npredictions,") != std::string::npos);
  CHECK(e.out.find("kmeans") != std::string::npos);
  const Run e2 = cli("--config " + q(cfg) + " --out " + q(ev) + " eval --train " + q(a / "train/manifest.json") +
                      " --test " + q(a / "test/manifest.json") + " --seeds 0 1 --methods oracle kmeans --predictions " +
                      q(seg / "pred_high.jsonl"));
  CHECK(slurp(ev / "comparison.csv") == csv);
  CHECK(e2.code == 0);

  const fs::path plot = scratch() / "plot";
  REQUIRE(cli("--out " + q(plot) + " plot-timeline --pred " + q(seg / "pred_high.jsonl") + " --gt " +
               q(a / "test/gt_high.jsonl") + " --id traj-1003-0")
              .code == 0);
  const std::string svg = slurp(plot / "timeline-traj-1003-0.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("class=\"event\"") != std::string::npos);

  const fs::path emb = scratch() / "emb";
  REQUIRE(cli("--out " + q(emb) + " embed-dump --checkpoint " + q(m1 / "model.ckpt") + " --data " +
               q(a / "test/manifest.json"))
              .code == 0);
  const auto z = shlk::data::read_features((emb / "embeddings/traj-1003-0.video.z_low.shlk").string());
  CHECK(z.length() == 8);
  CHECK(z.dim() == 4);
  CHECK(fs::exists(emb / "embeddings/index.json"));

  const Run unknown_method = cli("--out " + q(ev) + " eval --test " + q(a / "test/manifest.json") + " --methods nope");
  CHECK(unknown_method.code == 10);
}
