// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "shlk/align.hpp"
#include "shlk/baselines.hpp"
#include "shlk/data.hpp"
#include "shlk/graph.hpp"
#include "shlk/model.hpp"
#include "shlk/twiou.hpp"
#include "timeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shlk;

namespace {

// Exit codes: 0 success, 1 internal error, 2 usage error, 10+ per ErrorKind.
int exit_code(ErrorKind k) { return 10 + static_cast<int>(k); }

struct Globals {
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string config;
  bool verbose = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  json file;  ///< parsed --config document
};

bool given(const CLI::Option* o) { return o != nullptr && o->count() > 0; }

void log(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << "shlk: " << msg << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, "malformed JSON in '" + path + "': " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) fail(ErrorKind::io, "write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json section(const Globals& g, const char* name) {
  if (g.file.is_object() && g.file.contains(name)) {
    const json& s = g.file.at(name);
    require(s.is_object(), ErrorKind::parse, std::string("config section '") + name + "' must be an object");
    return s;
  }
  return json::object();
}

// Loads --config and resolves the global options it may carry.
void resolve_globals(Globals& g) {
  if (!g.config.empty()) {
    g.file = read_json(g.config);
    require(g.file.is_object(), ErrorKind::parse, "config file must hold a JSON object");
    try {
      if (!given(g.seed_opt) && g.file.contains("seed")) g.seed = g.file.at("seed").get<std::uint64_t>();
      if (!given(g.out_opt) && g.file.contains("out")) g.out = g.file.at("out").get<std::string>();
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, std::string("malformed global option in config: ") + e.what());
    }
  }
}

void echo_config(const Globals& g, const std::string& command, json doc) {
  doc["command"] = command;
  doc["seed"] = g.seed;
  doc["out"] = g.out;
  write_json(fs::path(g.out) / (command + ".config.json"), doc);
}

// Model dimensions follow the data; the length cap grows to the longest stream.
void fit_to_data(model::HierConfig& c, const std::vector<data::Trajectory>& data) {
  require(!data.empty(), ErrorKind::invalid_argument, "dataset is empty");
  c.video_dim = data.front().video.dim();
  std::size_t longest = 0;
  bool has_text = true;
  for (const auto& t : data) {
    longest = std::max({longest, t.video.length(), t.text.length()});
    has_text = has_text && t.text.length() > 0;
  }
  if (c.use_text) {
    require(has_text, ErrorKind::invalid_argument,
            "dataset has no text stream for every trajectory; use --no-text");
    c.text_dim = data.front().text.dim();
  }
  c.max_length = std::max(c.max_length, longest);
}

model::HierModel load_model(const std::string& checkpoint, std::string config_path) {
  if (config_path.empty()) config_path = (fs::path(checkpoint).parent_path() / "model.json").string();
  const model::HierConfig c = model::hier_config_from_json(read_json(config_path));
  return model::HierModel(c, graph::load_checkpoint(checkpoint));
}

json seg_json(const twiou::Segmentation& s) { return twiou::to_json(s); }

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string safe_name(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return s;
}

std::string print_json(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Commands

struct GenData {
  std::size_t n_train = 200;
  std::size_t n_test = 50;
  CLI::Option* n_train_opt = nullptr;
  CLI::Option* n_test_opt = nullptr;

  void run(const Globals& g) const {
    const data::SyntheticConfig gc = data::synthetic_config_from_json(section(g, "generator"));
    json args = section(g, "gen_data");
    std::size_t tr = args.value("n_train", n_train);
    std::size_t te = args.value("n_test", n_test);
    if (given(n_train_opt)) tr = n_train;
    if (given(n_test_opt)) te = n_test;
    const data::Splits s = data::generate_splits(g.seed, tr, te, gc);
    data::write_dataset((fs::path(g.out) / "train").string(), s.train, data::to_json(gc));
    data::write_dataset((fs::path(g.out) / "test").string(), s.test, data::to_json(gc));
    log(g, "wrote " + std::to_string(tr) + " train and " + std::to_string(te) + " test trajectories");
    echo_config(g, "gen-data", {{"generator", data::to_json(gc)},
                                {"gen_data", {{"n_train", tr}, {"n_test", te}}}});
  }
};

// Flags shared by train and eval that override the model / train config sections.
struct ModelFlags {
  std::size_t epochs = 0;
  double lr = 0.0;
  std::size_t batch_size = 0;
  std::size_t levels = 0;
  double beta = 0.0;
  bool no_text = false;
  CLI::Option* epochs_opt = nullptr;
  CLI::Option* lr_opt = nullptr;
  CLI::Option* batch_opt = nullptr;
  CLI::Option* levels_opt = nullptr;
  CLI::Option* beta_opt = nullptr;

  void add(CLI::App* app, bool model_shape) {
    epochs_opt = app->add_option("--epochs", epochs, "Training epochs");
    lr_opt = app->add_option("--lr", lr, "Adam learning rate");
    batch_opt = app->add_option("--batch-size", batch_size, "Trajectories per update");
    if (model_shape) {
      levels_opt = app->add_option("--levels", levels, "Hierarchy depth (1, 2 or 3)");
      beta_opt = app->add_option("--beta", beta, "Weight of the static L2 terms");
      app->add_flag("--no-text", no_text, "Train without the text stream");
    }
  }

  void apply(model::HierConfig& c, model::TrainConfig& t) const {
    if (given(epochs_opt)) t.epochs = epochs;
    if (given(lr_opt)) t.lr = lr;
    if (given(batch_opt)) t.batch_size = batch_size;
    if (given(levels_opt)) {
      c.levels = levels;
      if (levels == 3 && c.n_mid == 0) c.n_mid = 8;
    }
    if (given(beta_opt)) c.beta = beta;
    if (no_text) c.use_text = false;
  }
};

struct Train {
  std::string data;
  std::size_t checkpoint_every = 0;
  CLI::Option* every_opt = nullptr;
  ModelFlags flags;

  void run(const Globals& g) const {
    model::HierConfig c = model::hier_config_from_json(section(g, "model"));
    model::TrainConfig tc = model::train_config_from_json(section(g, "train"));
    flags.apply(c, tc);
    tc.seed = g.seed;
    if (given(every_opt)) tc.checkpoint_every = checkpoint_every;
    if (tc.checkpoint_every > 0 && tc.checkpoint_dir.empty()) {
      tc.checkpoint_dir = (fs::path(g.out) / "checkpoints").string();
    }
    const auto dataset = data::load_dataset(data);
    fit_to_data(c, dataset);
    c.validate();
    fs::create_directories(g.out);
    echo_config(g, "train", {{"model", model::to_json(c)}, {"train", model::to_json(tc)},
                             {"train_args", {{"data", data}}}});
    if (g.verbose) {
      tc.on_epoch = [&g](std::size_t epoch, const model::LossBreakdown& l) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "epoch %zu loss %.6f", epoch, l.total);
        log(g, buf);
      };
    }
    const model::TrainResult r = model::train(dataset, c, tc);
    graph::save_checkpoint((fs::path(g.out) / "model.ckpt").string(), r.model.params());
    write_json(fs::path(g.out) / "model.json", model::to_json(c));
    model::write_trace_csv((fs::path(g.out) / "loss.csv").string(), r.trace);
  }
};

struct Eval {
  std::string train;
  std::string test;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
  std::string predictions;
  bool ablations = false;
  CLI::Option* seeds_opt = nullptr;
  CLI::Option* methods_opt = nullptr;
  ModelFlags flags;

  void run(const Globals& g) const {
    model::HierConfig c = model::hier_config_from_json(section(g, "model"));
    model::TrainConfig tc = model::train_config_from_json(section(g, "train"));
    flags.apply(c, tc);
    const json es = section(g, "eval");
    std::vector<std::uint64_t> seed_list = baselines::default_seeds();
    std::vector<std::string> names;
    bool with_ablations = ablations;
    try {
      if (es.contains("seeds")) seed_list = es.at("seeds").get<std::vector<std::uint64_t>>();
      if (es.contains("methods")) names = es.at("methods").get<std::vector<std::string>>();
      if (!ablations) with_ablations = es.value("ablations", false);
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, std::string("malformed eval config: ") + e.what());
    }
    if (given(seeds_opt)) seed_list = seeds;
    if (given(methods_opt)) names = methods;

    const auto test_set = data::load_dataset(test);
    std::vector<data::Trajectory> train_set;
    const bool score_methods = !(names.empty() && !predictions.empty());
    if (score_methods) {
      require(!train.empty(), ErrorKind::invalid_argument, "comparing methods needs --train");
      train_set = data::load_dataset(train);
      fit_to_data(c, train_set);
    }

    echo_config(g, "eval", {{"model", model::to_json(c)},
                            {"train", model::to_json(tc)},
                            {"eval", {{"seeds", seed_list},
                                      {"methods", names},
                                      {"ablations", with_ablations},
                                      {"train", train},
                                      {"test", test},
                                      {"predictions", predictions}}}});

    baselines::Comparison cmp;
    if (score_methods) {
      std::vector<baselines::Method> all = baselines::standard_methods(c, tc, with_ablations);
      std::vector<baselines::Method> chosen;
      if (names.empty()) {
        chosen = all;
      } else {
        for (const auto& n : names) {
          auto it = std::find_if(all.begin(), all.end(), [&](const auto& m) { return m.name == n; });
          if (it == all.end() && !with_ablations) {
            const auto extra = baselines::standard_methods(c, tc, true);
            auto jt = std::find_if(extra.begin(), extra.end(), [&](const auto& m) { return m.name == n; });
            require(jt != extra.end(), ErrorKind::invalid_argument, "unknown method '" + n + "'");
            chosen.push_back(*jt);
            continue;
          }
          require(it != all.end(), ErrorKind::invalid_argument, "unknown method '" + n + "'");
          chosen.push_back(*it);
        }
      }
      log(g, "evaluating " + std::to_string(chosen.size()) + " methods over " +
                 std::to_string(seed_list.size()) + " seeds");
      cmp = baselines::evaluate_methods(train_set, test_set, chosen, seed_list);
    } else {
      for (const auto& t : test_set) cmp.ids.push_back(t.id());
    }
    if (!predictions.empty()) {
      const auto preds = data::load_annotations(predictions);
      std::vector<twiou::Segmentation> ordered;
      std::vector<twiou::Segmentation> gts;
      for (const auto& t : test_set) {
        auto it = std::find_if(preds.begin(), preds.end(), [&](const auto& p) { return p.id() == t.id(); });
        require(it != preds.end(), ErrorKind::validation, "no prediction for trajectory '" + t.id() + "'");
        ordered.push_back(*it);
        gts.push_back(t.gt_high);
      }
      baselines::MethodResult r;
      r.method = "predictions";
      r.n_items = test_set.size();
      r.runs.push_back({0, baselines::score_predictions(ordered, gts), {{"path", predictions}}});
      r.mean = r.runs.back().score.mean;
      cmp.rows.push_back(std::move(r));
      std::stable_sort(cmp.rows.begin(), cmp.rows.end(),
                       [](const auto& a, const auto& b) { return a.method < b.method; });
    }
    baselines::write_comparison_csv((fs::path(g.out) / "comparison.csv").string(), cmp);
    write_json(fs::path(g.out) / "comparison.json", baselines::to_json(cmp));
    for (const auto& r : cmp.rows) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%-36s %8.3f +- %.3f\n", r.method.c_str(), r.mean, r.std);
      std::cout << buf;
    }
  }
};

struct Segment {
  std::string checkpoint;
  std::string model_config;
  std::string video;
  std::string text;
  std::string data;

  void run(const Globals& g) const {
    require(!video.empty() || !data.empty(), ErrorKind::invalid_argument,
            "segment needs --video or --data");
    const model::HierModel m = load_model(checkpoint, model_config);
    const bool use_text = m.config().use_text;
    fs::create_directories(g.out);
    echo_config(g, "segment", {{"model", model::to_json(m.config())},
                               {"segment", {{"checkpoint", checkpoint}, {"video", video},
                                            {"text", text}, {"data", data}}}});
    if (!data.empty()) {
      std::vector<twiou::Segmentation> low;
      std::vector<twiou::Segmentation> high;
      for (const auto& t : data::load_dataset(data)) {
        const auto inf = model::infer_segmentation(m, t.video, use_text ? &t.text : nullptr);
        low.push_back(inf.low);
        high.push_back(inf.high);
      }
      data::write_annotations((fs::path(g.out) / "pred_low.jsonl").string(), low);
      data::write_annotations((fs::path(g.out) / "pred_high.jsonl").string(), high);
      log(g, "segmented " + std::to_string(high.size()) + " trajectories");
      return;
    }
    const auto v = data::read_features(video, fs::path(video).stem().stem().string());
    std::optional<align::FeatureSequence> w;
    if (use_text) {
      require(!text.empty(), ErrorKind::invalid_argument, "model uses text; pass --text");
      w = data::read_features(text, v.id());
    }
    const auto inf = model::infer_segmentation(m, v, w ? &*w : nullptr);
    const json out{{"id", v.id()}, {"low", seg_json(inf.low)}, {"high", seg_json(inf.high)}};
    write_json(fs::path(g.out) / "segmentation.json", out);
    std::cout << print_json(out);
  }
};

struct Align {
  std::string x;
  std::string y;
  std::string metric = "euclidean";

  void run(const Globals& g) const {
    const auto a = data::read_features(x);
    const auto b = data::read_features(y);
    const auto r = align::dtw(align::pairwise_cost(a, b, align::metric_from_string(metric)));
    json path = json::array();
    for (const auto& [i, j] : r.path.steps) path.push_back({i, j});
    const json out{{"distance", r.distance}, {"n", a.length()}, {"m", b.length()}, {"path", path}};
    fs::create_directories(g.out);
    echo_config(g, "align", {{"align", {{"x", x}, {"y", y}, {"metric", metric}}}});
    write_json(fs::path(g.out) / "align.json", out);
    std::cout << print_json(out);
  }
};

struct SoftDtw {
  std::string x;
  std::string y;
  std::string metric = "euclidean";
  double gamma = 1.0;
  bool grad = false;

  void run(const Globals& g) const {
    require(!grad || gamma > 0.0, ErrorKind::invalid_argument, "gradients need gamma > 0");
    const auto a = data::read_features(x);
    const auto b = data::read_features(y);
    const auto m = align::metric_from_string(metric);
    const auto cost = align::pairwise_cost(a, b, m);
    const auto r = align::soft_dtw(cost, gamma);
    const json out{{"value", r.value}, {"gamma", gamma}, {"n", a.length()}, {"m", b.length()}};
    fs::create_directories(g.out);
    echo_config(g, "softdtw", {{"softdtw", {{"x", x}, {"y", y}, {"metric", metric},
                                            {"gamma", gamma}, {"grad", grad}}}});
    write_json(fs::path(g.out) / "softdtw.json", out);
    if (grad) {
      const Matrix gc = align::soft_dtw_grad(r, cost);
      const auto [gx, gy] = align::cost_jacobian_apply(a.values(), b.values(), gc, m);
      write_json(fs::path(g.out) / "softdtw_grad.json",
                 {{"grad_cost", matrix_json(gc)}, {"grad_x", matrix_json(gx)}, {"grad_y", matrix_json(gy)}});
    }
    std::cout << print_json(out);
  }
};

struct PlotTimeline {
  std::string pred;
  std::string gt;
  std::string id;

  void run(const Globals& g) const {
    const auto preds = data::load_annotations(pred);
    const auto gts = data::load_annotations(gt);
    fs::create_directories(g.out);
    echo_config(g, "plot-timeline", {{"plot_timeline", {{"pred", pred}, {"gt", gt}, {"id", id}}}});
    std::size_t written = 0;
    for (const auto& t : gts) {
      if (!id.empty() && t.id() != id) continue;
      auto it = std::find_if(preds.begin(), preds.end(), [&](const auto& p) { return p.id() == t.id(); });
      require(it != preds.end(), ErrorKind::validation, "no prediction for trajectory '" + t.id() + "'");
      write_text(fs::path(g.out) / ("timeline-" + safe_name(t.id()) + ".svg"),
                 tools::render_timeline_svg(t, *it));
      ++written;
    }
    require(written > 0, ErrorKind::validation,
            id.empty() ? "no ground-truth segmentations" : "no ground truth for trajectory '" + id + "'");
    log(g, "wrote " + std::to_string(written) + " timelines");
  }
};

struct EmbedDump {
  std::string checkpoint;
  std::string model_config;
  std::string data;

  void run(const Globals& g) const {
    const model::HierModel m = load_model(checkpoint, model_config);
    const auto dir = fs::path(g.out) / "embeddings";
    fs::create_directories(dir);
    echo_config(g, "embed-dump", {{"model", model::to_json(m.config())},
                                  {"embed_dump", {{"checkpoint", checkpoint}, {"data", data}}}});
    json index = json::array();
    auto dump = [&](const std::string& id, const align::FeatureSequence& x, json& entry) {
      const auto low = m.encode_low(x);
      model::LatentSequence high = low;
      if (m.config().levels == 2) high = m.encode_high(low);
      if (m.config().levels == 3) high = m.encode_high(m.encode_mid(low));
      const std::string base = safe_name(id) + "." + std::string(to_string(x.modality()));
      data::write_features((dir / (base + ".z_low.shlk")).string(),
                           align::FeatureSequence(low.latents, x.modality(), id));
      data::write_features((dir / (base + ".z_high.shlk")).string(),
                           align::FeatureSequence(high.latents, x.modality(), id));
      entry[std::string(to_string(x.modality()))] = {{"z_low", base + ".z_low.shlk"},
                                                    {"z_high", base + ".z_high.shlk"}};
    };
    for (const auto& t : data::load_dataset(data)) {
      json entry{{"id", t.id()}};
      dump(t.id(), t.video, entry);
      if (m.config().use_text && t.text.length() > 0) dump(t.id(), t.text, entry);
      index.push_back(std::move(entry));
    }
    write_json(dir / "index.json", {{"latent_dim", m.config().latent_dim}, {"trajectories", index}});
  }
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical event segmentation: alignment kernels, training and evaluation"};
  app.require_subcommand(1);
  Globals g;
  g.seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  g.out_opt = app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--config", g.config, "JSON config file (explicit flags take precedence)");
  app.add_flag("-v,--verbose", g.verbose, "Progress on stderr");

  GenData gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate synthetic train/test datasets");
  gen.n_train_opt = gen_cmd->add_option("--n-train", gen.n_train, "Training trajectories")->capture_default_str();
  gen.n_test_opt = gen_cmd->add_option("--n-test", gen.n_test, "Held-out trajectories")->capture_default_str();

  Train tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes model.ckpt, model.json, loss.csv");
  train_cmd->add_option("--data", tr.data, "Dataset manifest")->required();
  tr.every_opt = train_cmd->add_option("--checkpoint-every", tr.checkpoint_every, "Checkpoint period in epochs");
  tr.flags.add(train_cmd, true);

  Eval ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compare methods by TW-IoU; writes comparison.csv/json");
  eval_cmd->add_option("--train", ev.train, "Training dataset manifest");
  eval_cmd->add_option("--test", ev.test, "Held-out dataset manifest")->required();
  ev.seeds_opt = eval_cmd->add_option("--seeds", ev.seeds, "Seeds (default 0 1 2 3 4)");
  ev.methods_opt = eval_cmd->add_option("--methods", ev.methods, "Methods to run (default all)");
  eval_cmd->add_option("--predictions", ev.predictions, "JSON-lines predictions to score");
  eval_cmd->add_flag("--ablations", ev.ablations, "Include ablation variants");
  ev.flags.add(eval_cmd, false);

  Segment sg;
  auto* seg_cmd = app.add_subcommand("segment", "Segment features with a trained model");
  seg_cmd->add_option("--checkpoint", sg.checkpoint, "Model checkpoint")->required();
  seg_cmd->add_option("--model", sg.model_config, "Model config (default: model.json beside checkpoint)");
  seg_cmd->add_option("--video", sg.video, "Video feature file");
  seg_cmd->add_option("--text", sg.text, "Text feature file");
  seg_cmd->add_option("--data", sg.data, "Dataset manifest; writes pred_low/pred_high.jsonl");

  Align al;
  auto* align_cmd = app.add_subcommand("align", "Hard DTW distance and path between two feature files");
  align_cmd->add_option("x", al.x, "First feature file")->required();
  align_cmd->add_option("y", al.y, "Second feature file")->required();
  align_cmd->add_option("--metric", al.metric, "euclidean or squared_euclidean")->capture_default_str();

  SoftDtw sd;
  auto* sd_cmd = app.add_subcommand("softdtw", "soft-DTW value between two feature files");
  sd_cmd->add_option("x", sd.x, "First feature file")->required();
  sd_cmd->add_option("y", sd.y, "Second feature file")->required();
  sd_cmd->add_option("--gamma", sd.gamma, "Smoothing (0 is hard DTW)")->capture_default_str();
  sd_cmd->add_option("--metric", sd.metric, "euclidean or squared_euclidean")->capture_default_str();
  sd_cmd->add_flag("--grad", sd.grad, "Also write softdtw_grad.json");

  PlotTimeline pt;
  auto* plot_cmd = app.add_subcommand("plot-timeline", "SVG timelines of predicted vs ground-truth events");
  plot_cmd->add_option("--pred", pt.pred, "Predicted segmentations (JSON lines)")->required();
  plot_cmd->add_option("--gt", pt.gt, "Ground-truth segmentations (JSON lines)")->required();
  plot_cmd->add_option("--id", pt.id, "Only this trajectory");

  EmbedDump ed;
  auto* embed_cmd = app.add_subcommand("embed-dump", "Write latent matrices as feature files");
  embed_cmd->add_option("--checkpoint", ed.checkpoint, "Model checkpoint")->required();
  embed_cmd->add_option("--model", ed.model_config, "Model config (default: model.json beside checkpoint)");
  embed_cmd->add_option("--data", ed.data, "Dataset manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    resolve_globals(g);
    if (*gen_cmd) gen.run(g);
    else if (*train_cmd) tr.run(g);
    else if (*eval_cmd) ev.run(g);
    else if (*seg_cmd) sg.run(g);
    else if (*align_cmd) al.run(g);
    else if (*sd_cmd) sd.run(g);
    else if (*plot_cmd) pt.run(g);
    else if (*embed_cmd) ed.run(g);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << one_line(e.what()) << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: io: " << one_line(e.what()) << '\n';
    return exit_code(ErrorKind::io);
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
