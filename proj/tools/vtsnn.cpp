// Command-line front end: generate / convert / train / eval / predict /
// curve / annotate / bench.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vtsnn/vtsnn.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace vtsnn;

namespace {

constexpr int kUsageExit = 2;
constexpr int kInternalExit = 11;

const char* kExitCodes =
    "Exit codes:\n"
    "  0   success\n"
    "  1   invalid argument\n"
    "  2   usage error (unknown flag, missing option)\n"
    "  3   I/O error (missing or unwritable file)\n"
    "  4   parse error (malformed file)\n"
    "  5   validation error (bad event or pose data)\n"
    "  6   shape mismatch\n"
    "  7   config error\n"
    "  8   training diverged\n"
    "  9   stratification error\n"
    "  10  index out of range\n"
    "  11  internal error\n"
    "Errors are printed to stderr as one line:\n"
    "  error: kind=<kind> code=<n> message=<text>\n"
    "Environment: VTSNN_OUT_DIR (default --out), VTSNN_THREADS (default --threads).";

std::string resolve_out(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("VTSNN_OUT_DIR"); env && *env) return env;
  return ".";
}

std::size_t resolve_threads(std::size_t flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("VTSNN_THREADS"); env && *env) {
    std::size_t v = 0;
    if (!detail::parse_number(env, v) || v == 0)
      fail(ErrorKind::invalid_argument, "VTSNN_THREADS must be a positive integer");
    return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

fs::path prepare_out(const std::string& flag) {
  const fs::path out = resolve_out(flag);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorKind::io, "cannot create output directory " + out.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::io, "cannot write " + path.string());
  f << text;
}

void write_manifest(const fs::path& out, const std::string& command, const json& config,
                    std::optional<std::uint64_t> seed) {
  json m;
  m["tool"] = "vtsnn";
  m["version"] = kVersion;
  m["subcommand"] = command;
  m["seed"] = seed ? json(*seed) : json(nullptr);
  m["formats"] = {{"events", kEventFormatVersion}, {"weights", kWeightsFormatVersion}};
  m["config"] = config;
  write_text(out / "manifest.json", m.dump(2) + "\n");
}

void require_path(const std::string& p, const char* what) {
  if (!fs::exists(p)) fail(ErrorKind::io, std::string(what) + " not found: " + p);
}

// ---------------------------------------------------------------------------

struct TaskOptions {
  std::string task = "slip";
  std::optional<double> t_start;
  std::optional<double> bin_width;
  std::optional<std::uint32_t> bins;

  Preprocess resolve() const {
    Preprocess p;
    if (task == "slip") p = Preprocess::slip();
    else if (task == "containers") p = Preprocess::containers();
    else fail(ErrorKind::invalid_argument, "unknown task '" + task + "' (slip, containers)");
    if (t_start) p.t_start = *t_start;
    if (bin_width) p.bin_width = *bin_width;
    if (bins) p.n_bins = *bins;
    require(p.bin_width > 0 && p.n_bins > 0, ErrorKind::invalid_argument,
            "bin width and bin count must be positive");
    return p;
  }
};

json preprocess_json(const Preprocess& p) {
  return {{"t_start", p.t_start}, {"bin_width", p.bin_width}, {"n_bins", p.n_bins},
          {"s_min_tactile", p.s_min_tactile}, {"s_min_vision", p.s_min_vision}};
}

Preprocess preprocess_from_json(const json& j) {
  Preprocess p;
  p.t_start = j.at("t_start").get<double>();
  p.bin_width = j.at("bin_width").get<double>();
  p.n_bins = j.at("n_bins").get<std::uint32_t>();
  p.s_min_tactile = j.at("s_min_tactile").get<std::uint32_t>();
  p.s_min_vision = j.at("s_min_vision").get<std::uint32_t>();
  return p;
}

void add_task_options(CLI::App* cmd, TaskOptions& t) {
  cmd->add_option("--task", t.task, "Preprocessing preset: slip (0.15 s, 1 ms bins) or "
                                    "containers (2.0-8.5 s, 20 ms bins)")
      ->capture_default_str();
  cmd->add_option("--t-start", t.t_start, "Window start in seconds (overrides the task)");
  cmd->add_option("--bin-width", t.bin_width, "Bin width in seconds (overrides the task)");
  cmd->add_option("--bins", t.bins, "Number of bins (overrides the task)");
}

std::vector<std::size_t> labels_of(std::span<const Sample> samples) {
  std::vector<std::size_t> y;
  for (const auto& s : samples) y.push_back(s.label);
  return y;
}

/// A trained model directory: architecture, weights and the train manifest.
struct ModelDir {
  Network network;
  json config;
  Preprocess preprocess;
};

ModelDir load_model_dir(const std::string& dir) {
  require_path(dir, "model directory");
  const fs::path d(dir);
  std::ifstream mf(d / "manifest.json");
  if (!mf) fail(ErrorKind::io, "missing " + (d / "manifest.json").string());
  json m;
  try {
    m = json::parse(mf);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, (d / "manifest.json").string() + ": " + e.what());
  }
  if (m.value("subcommand", "") != "train")
    fail(ErrorKind::validation, dir + " does not hold a trained model");
  ModelDir md;
  md.config = m.at("config");
  md.network = load_architecture((d / "architecture.txt").string());
  load_weights((d / "weights.snnw").string(), md.network);
  md.preprocess = preprocess_from_json(md.config.at("preprocess"));
  return md;
}

/// Test split recorded by a training run; empty when it trained on everything.
std::vector<std::size_t> held_out(const json& cfg, std::span<const Sample> samples) {
  const long fold = cfg.at("fold").get<long>();
  if (fold < 0) return {};
  const auto y = labels_of(samples);
  const auto plan = stratified_kfold(y, cfg.at("folds").get<std::size_t>(),
                                     cfg.at("split_seed").get<std::uint64_t>());
  return plan.test_indices(static_cast<std::size_t>(fold));
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return idx;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string preset = "slip-toy";
  std::size_t samples = 100;
  std::uint64_t seed = 0;
  std::string out;
};

int run_generate(const GenerateArgs& a) {
  const auto spec = synthetic_preset(a.preset);
  const auto out = prepare_out(a.out);
  const auto samples = generate_synthetic(spec, a.samples, a.seed);
  write_dataset(out, samples);
  write_manifest(out, "generate", {{"preset", a.preset}, {"samples", a.samples}}, a.seed);
  std::cout << "wrote " << samples.size() << " samples to " << out.string() << "\n";
  return 0;
}

struct ConvertArgs {
  std::string input;
  std::string modality = "tactile";
  std::uint32_t channels = 156;
  std::vector<std::uint32_t> geometry;
  std::string out;
};

int run_convert(const ConvertArgs& a) {
  require_path(a.input, "input");
  Modality m = Modality::tactile;
  std::optional<VisionGeometry> g;
  std::uint32_t channels = a.channels;
  if (a.modality == "vision") {
    m = Modality::vision;
    require(a.geometry.size() == 3, ErrorKind::invalid_argument,
            "vision input needs --geometry W H P");
    g = VisionGeometry{a.geometry[0], a.geometry[1], a.geometry[2]};
    channels = static_cast<std::uint32_t>(g->channel_count());
  } else if (a.modality != "tactile") {
    fail(ErrorKind::invalid_argument, "modality must be tactile or vision");
  }
  const auto stream = import_events_csv(a.input, m, channels, g);
  const auto out = prepare_out(a.out);
  const auto target = out / (fs::path(a.input).stem().string() + ".evst");
  write_events(target.string(), stream);
  json cfg{{"input", a.input}, {"modality", a.modality}, {"channels", channels}};
  if (g) cfg["geometry"] = {g->width, g->height, g->polarities};
  write_manifest(out, "convert", cfg, std::nullopt);
  std::cout << "wrote " << stream.size() << " events to " << target.string() << "\n";
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string model = "tact";
  std::size_t classes = 0;
  TaskOptions task;
  std::string config;
  std::string loss;
  std::uint32_t epochs = 0;
  double lr = 0, l2 = 0, beta = 0, gamma = 0;
  std::size_t batch = 0;
  std::uint32_t true_count = 0, false_count = 0;
  std::uint64_t seed = 0;
  long fold = 0;
  std::size_t folds = 5;
  std::size_t threads = 0;
  bool verbose = false;
  std::string out;
  TrainSettings flags;  // only the options given on the command line
};

int run_train(const TrainArgs& a) {
  require_path(a.data, "dataset");
  TrainSettings s;
  if (!a.config.empty()) {
    require_path(a.config, "config file");
    s = load_train_settings(a.config);
  }
  s.merge(a.flags);
  const Preprocess pre = a.task.resolve();
  const auto samples = load_dataset(a.data);
  require(!samples.empty(), ErrorKind::invalid_argument, "dataset is empty");
  std::size_t n_classes = 0;
  for (const auto& x : samples) n_classes = std::max(n_classes, x.label + 1);
  if (a.classes > 0) {
    require(a.classes >= n_classes, ErrorKind::index,
            "dataset has labels beyond --classes " + std::to_string(a.classes));
    n_classes = a.classes;
  }
  const ModelKind kind = parse_model_kind(a.model);
  const Network net = build_model(kind, std::max<std::size_t>(n_classes, 2));
  const auto inputs = prepare(samples, net, pre);

  const std::uint64_t seed = s.seed.value_or(0);
  std::vector<std::size_t> train_idx = all_indices(samples.size()), test_idx;
  if (a.fold >= 0) {
    require(static_cast<std::size_t>(a.fold) < a.folds, ErrorKind::invalid_argument,
            "--fold must be below --folds");
    const auto plan = stratified_kfold(labels_of(samples), a.folds, seed);
    train_idx = plan.train_indices(static_cast<std::size_t>(a.fold));
    test_idx = plan.test_indices(static_cast<std::size_t>(a.fold));
  }
  const auto train_set = select<LabeledInput>(inputs, train_idx);
  const auto test_set = select<LabeledInput>(inputs, test_idx);

  const auto defaults = make_target_counts(pre.n_bins * 2 / 5);
  LossSpec spec;
  spec.horizon = pre.n_bins;
  spec.desired_count_true = s.true_count.value_or(defaults.true_count);
  spec.desired_count_false = s.false_count.value_or(defaults.false_count);
  const std::string loss = s.loss.value_or("count");
  if (loss == "weighted") {
    spec.weighting = Weighting::quadratic(pre.n_bins, s.gamma.value_or(1.0));
    if (s.beta) spec.weighting.beta = *s.beta;
  } else if (loss != "count") {
    fail(ErrorKind::invalid_argument, "loss must be count or weighted");
  }
  OptimizerState opt;
  opt.learning_rate = s.lr.value_or(opt.learning_rate);
  opt.l2_coefficient = s.l2.value_or(opt.l2_coefficient);
  TrainConfig tc;
  tc.epochs = s.epochs.value_or(tc.epochs);
  tc.batch_size = s.batch.value_or(tc.batch_size);
  tc.seed = seed;
  tc.threads = resolve_threads(a.threads);

  const auto out = prepare_out(a.out);
  std::ofstream metrics(out / "metrics.csv", std::ios::trunc);
  if (!metrics) fail(ErrorKind::io, "cannot write metrics in " + out.string());
  metrics.precision(10);
  metrics << "epoch,train_loss,train_acc,test_acc\n";
  const auto result = train(net, train_set, spec, opt, tc, test_set, [&](const EpochMetrics& m) {
    metrics << m.epoch << "," << m.train_loss << "," << m.train_acc << ",";
    if (!std::isnan(m.test_acc)) metrics << m.test_acc;
    metrics << "\n";
    if (a.verbose)
      std::cerr << "epoch " << m.epoch << " loss " << m.train_loss << " train_acc "
                << m.train_acc << " test_acc " << m.test_acc << "\n";
  });
  save_weights((out / "weights.snnw").string(), result.network);
  write_text(out / "architecture.txt", architecture_to_text(result.network));

  json cfg{{"data", a.data},
           {"model", a.model},
           {"classes", result.network.n_classes()},
           {"task", a.task.task},
           {"preprocess", preprocess_json(pre)},
           {"loss", loss},
           {"epochs", tc.epochs},
           {"lr", opt.learning_rate},
           {"batch", tc.batch_size},
           {"l2", opt.l2_coefficient},
           {"beta", spec.weighting.beta},
           {"gamma", spec.weighting.gamma},
           {"true_count", spec.desired_count_true},
           {"false_count", spec.desired_count_false},
           {"fold", a.fold},
           {"folds", a.folds},
           {"split_seed", seed},
           {"threads", tc.threads},
           {"config_file", a.config}};
  write_manifest(out, "train", cfg, seed);
  const auto& last = result.metrics.empty() ? EpochMetrics{} : result.metrics.back();
  std::cout << "trained " << a.model << " for " << tc.epochs << " epochs: train_acc "
            << last.train_acc << " test_acc " << last.test_acc << "\n";
  return 0;
}

struct EvalArgs {
  std::string model_dir, data, out;
  bool all = false;
};

int run_eval(const EvalArgs& a) {
  require_path(a.data, "dataset");
  const auto md = load_model_dir(a.model_dir);
  const auto samples = load_dataset(a.data);
  const auto idx = a.all ? all_indices(samples.size()) : held_out(md.config, samples);
  require(!idx.empty(), ErrorKind::invalid_argument,
          "model was trained without a held-out fold; pass --all");
  const auto inputs = prepare(select<Sample>(samples, idx), md.network, md.preprocess);
  const double acc = accuracy(md.network, inputs);
  const auto out = prepare_out(a.out);
  std::ostringstream csv;
  csv.precision(10);
  csv << "n_samples,accuracy\n" << inputs.size() << "," << acc << "\n";
  write_text(out / "eval.csv", csv.str());
  write_manifest(out, "eval",
                 {{"model_dir", a.model_dir}, {"data", a.data}, {"all", a.all}},
                 md.config.at("split_seed").get<std::uint64_t>());
  std::cout << "accuracy " << acc << " on " << inputs.size() << " samples\n";
  return 0;
}

struct PredictArgs {
  std::string model_dir, sample, out;
};

int run_predict(const PredictArgs& a) {
  require_path(a.sample, "sample directory");
  const auto md = load_model_dir(a.model_dir);
  const auto sample = load_sample(a.sample);
  const auto traces = network_forward(md.network, to_network_input(sample, md.network, md.preprocess));
  const std::size_t cls = predict(traces.output());
  if (!a.out.empty() || std::getenv("VTSNN_OUT_DIR")) {
    const auto out = prepare_out(a.out);
    write_text(out / "prediction.txt", std::to_string(cls) + "\n");
    write_manifest(out, "predict", {{"model_dir", a.model_dir}, {"sample", a.sample}},
                   std::nullopt);
  }
  std::cout << cls << "\n";
  return 0;
}

struct CurveArgs {
  std::string data, out;
  std::vector<std::string> model_dirs;
};

int run_curve(const CurveArgs& a) {
  require_path(a.data, "dataset");
  const auto samples = load_dataset(a.data);
  std::vector<ModelDir> models;
  for (const auto& d : a.model_dirs) models.push_back(load_model_dir(d));
  const Preprocess pre = models.front().preprocess;
  std::vector<std::vector<LabeledInput>> tests;
  for (const auto& m : models) {
    require(m.preprocess.n_bins == pre.n_bins && m.preprocess.bin_width == pre.bin_width,
            ErrorKind::config, "models use different binning");
    auto idx = held_out(m.config, samples);
    if (idx.empty()) idx = all_indices(samples.size());
    tests.push_back(prepare(select<Sample>(samples, idx), m.network, m.preprocess));
  }
  std::vector<FoldModel> folds;
  for (std::size_t i = 0; i < models.size(); ++i) folds.push_back({&models[i].network, tests[i]});
  const auto cuts = default_cutoffs(pre.n_bins);
  const auto curve = early_accuracy_curve(folds, cuts, pre.bin_width);
  const auto out = prepare_out(a.out);
  std::ostringstream csv;
  write_curve_csv(csv, curve);
  write_text(out / "curve.csv", csv.str());
  write_manifest(out, "curve", {{"data", a.data}, {"model_dirs", a.model_dirs}}, std::nullopt);
  std::cout << "final accuracy " << curve.mean.back() << " +/- " << curve.std_dev.back() << "\n";
  return 0;
}

struct AnnotateArgs {
  std::vector<std::string> poses;
  double frame_rate = 120.0;
  std::size_t baseline = 120;
  double quantile = 0.98;
  std::size_t persistence = 12;
  std::string out;
};

int run_annotate(const AnnotateArgs& a) {
  const OnsetConfig oc{a.baseline, a.quantile, a.persistence};
  std::ostringstream csv;
  csv.precision(10);
  csv << "recording_id,f_lift,f_slip,lag_s\n";
  for (const auto& p : a.poses) {
    require_path(p, "pose file");
    const auto trace = read_pose_csv(p, a.frame_rate);
    const auto ann = annotate(trace, oc);
    auto field = [](const auto& v) { return v ? std::to_string(*v) : std::string("NA"); };
    csv << fs::path(p).stem().string() << "," << field(ann.lift_frame) << ","
        << field(ann.slip_frame) << ",";
    if (ann.lag_seconds) csv << *ann.lag_seconds;
    else csv << "NA";
    csv << "\n";
  }
  const auto out = prepare_out(a.out);
  write_text(out / "annotations.csv", csv.str());
  write_manifest(out, "annotate",
                 {{"poses", a.poses}, {"frame_rate", a.frame_rate}, {"baseline", a.baseline},
                  {"quantile", a.quantile}, {"persistence", a.persistence}},
                 std::nullopt);
  std::cout << csv.str();
  return 0;
}

struct BenchArgs {
  std::string model_dir, data, mode = "offline", out;
  std::size_t samples = 1000;
  double delay = 0.15;
};

int run_bench(const BenchArgs& a) {
  require_path(a.data, "dataset");
  const auto md = load_model_dir(a.model_dir);
  const auto samples = load_dataset(a.data);
  const auto pool = prepare(samples, md.network, md.preprocess);
  BenchConfig cfg;
  cfg.n_samples = a.samples;
  cfg.n_steps = md.preprocess.n_bins;
  cfg.fetch_delay = std::chrono::duration<double>(a.delay);
  if (a.mode == "realtime") cfg.mode = BenchMode::realtime;
  else if (a.mode != "offline") fail(ErrorKind::invalid_argument, "mode must be offline or realtime");
  const auto r = bench(md.network, pool, cfg);
  const auto out = prepare_out(a.out);
  std::ostringstream csv;
  write_bench_csv(csv, r);
  write_text(out / "bench.csv", csv.str());
  write_manifest(out, "bench",
                 {{"model_dir", a.model_dir}, {"data", a.data}, {"mode", a.mode},
                  {"samples", a.samples}, {"delay", a.delay}},
                 std::nullopt);
  std::cout << bench_summary(r) << "\n";
  return 0;
}

int report(const std::string& kind, int code, const std::string& message) {
  std::string flat = message;
  for (char& c : flat)
    if (c == '\n' || c == '\r') c = ' ';
  std::cerr << "error: kind=" << kind << " code=" << code << " message=" << flat << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual-tactile spiking network toolkit"};
  app.set_version_flag("--version", kVersion);
  app.footer(kExitCodes);
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Write a synthetic dataset");
  c_gen->add_option("--preset", gen.preset, "disjoint, early, slip-toy or container-toy")
      ->capture_default_str();
  c_gen->add_option("--samples", gen.samples, "Number of samples")->capture_default_str();
  c_gen->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  c_gen->add_option("--out", gen.out, "Output directory");

  ConvertArgs conv;
  auto* c_conv = app.add_subcommand("convert", "Convert a timestamp_us,channel,polarity CSV to .evst");
  c_conv->add_option("--input", conv.input, "CSV event file")->required();
  c_conv->add_option("--modality", conv.modality, "tactile or vision")->capture_default_str();
  c_conv->add_option("--channels", conv.channels, "Tactile channel count")->capture_default_str();
  c_conv->add_option("--geometry", conv.geometry, "Vision width height polarities")->expected(3);
  c_conv->add_option("--out", conv.out, "Output directory");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a network on a dataset directory");
  c_train->add_option("--data", tr.data, "Dataset directory")->required();
  c_train->add_option("--model", tr.model, "tact, vis or mm")->capture_default_str();
  c_train->add_option("--classes", tr.classes, "Number of classes (default: from labels)");
  add_task_options(c_train, tr.task);
  c_train->add_option("--config", tr.config, "key = value training config; flags override it");
  auto* o_loss = c_train->add_option("--loss", tr.loss, "count or weighted");
  auto* o_epochs = c_train->add_option("--epochs", tr.epochs, "Epochs (default 500)");
  auto* o_lr = c_train->add_option("--lr", tr.lr, "Learning rate (default 1e-3)");
  auto* o_batch = c_train->add_option("--batch", tr.batch, "Batch size (default 8)");
  auto* o_l2 = c_train->add_option("--l2", tr.l2, "L2 coefficient (default 1e-4)");
  auto* o_beta = c_train->add_option("--beta", tr.beta, "Weighting beta per bin^2");
  auto* o_gamma = c_train->add_option("--gamma", tr.gamma, "Weighting gamma (default 1)");
  auto* o_true = c_train->add_option("--true-count", tr.true_count, "Desired spikes, true class");
  auto* o_false = c_train->add_option("--false-count", tr.false_count, "Desired spikes, other classes");
  auto* o_seed = c_train->add_option("--seed", tr.seed, "Seed for init, shuffling and folds");
  c_train->add_option("--fold", tr.fold, "Held-out fold, or -1 to train on everything")
      ->capture_default_str();
  c_train->add_option("--folds", tr.folds, "Number of stratified folds")->capture_default_str();
  c_train->add_option("--threads", tr.threads, "Worker threads (default: all cores)");
  c_train->add_flag("--verbose", tr.verbose, "Print per-epoch metrics to stderr");
  c_train->add_option("--out", tr.out, "Output directory");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Accuracy of a trained model on its held-out fold");
  c_eval->add_option("--model-dir", ev.model_dir, "Directory written by train")->required();
  c_eval->add_option("--data", ev.data, "Dataset directory")->required();
  c_eval->add_flag("--all", ev.all, "Evaluate on every sample");
  c_eval->add_option("--out", ev.out, "Output directory");

  PredictArgs pr;
  auto* c_pred = app.add_subcommand("predict", "Print the predicted class of one sample");
  c_pred->add_option("--model-dir", pr.model_dir, "Directory written by train")->required();
  c_pred->add_option("--sample", pr.sample, "Sample directory")->required();
  c_pred->add_option("--out", pr.out, "Optional output directory");

  CurveArgs cu;
  auto* c_curve = app.add_subcommand("curve", "Early-classification curve across fold models");
  c_curve->add_option("--data", cu.data, "Dataset directory")->required();
  c_curve->add_option("--model-dirs", cu.model_dirs, "One trained model per fold")->required();
  c_curve->add_option("--out", cu.out, "Output directory");

  AnnotateArgs an;
  auto* c_ann = app.add_subcommand("annotate", "Lift and slip onsets from pose CSV files");
  c_ann->add_option("--poses", an.poses, "Pose CSV files")->required();
  c_ann->add_option("--frame-rate", an.frame_rate, "Frames per second")->capture_default_str();
  c_ann->add_option("--baseline", an.baseline, "Baseline frames")->capture_default_str();
  c_ann->add_option("--quantile", an.quantile, "Exceedance fraction")->capture_default_str();
  c_ann->add_option("--persistence", an.persistence, "Frames that must agree after the onset")
      ->capture_default_str();
  c_ann->add_option("--out", an.out, "Output directory");

  BenchArgs be;
  auto* c_bench = app.add_subcommand("bench", "Forward-pass latency per timestep");
  c_bench->add_option("--model-dir", be.model_dir, "Directory written by train")->required();
  c_bench->add_option("--data", be.data, "Dataset directory")->required();
  c_bench->add_option("--mode", be.mode, "offline or realtime")->capture_default_str();
  c_bench->add_option("--samples", be.samples, "Forward passes")->capture_default_str();
  c_bench->add_option("--delay", be.delay, "Realtime fetch delay in seconds")->capture_default_str();
  c_bench->add_option("--out", be.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", kUsageExit, e.what());
  }

  if (o_loss->count()) tr.flags.loss = tr.loss;
  if (o_epochs->count()) tr.flags.epochs = tr.epochs;
  if (o_lr->count()) tr.flags.lr = tr.lr;
  if (o_batch->count()) tr.flags.batch = tr.batch;
  if (o_l2->count()) tr.flags.l2 = tr.l2;
  if (o_beta->count()) tr.flags.beta = tr.beta;
  if (o_gamma->count()) tr.flags.gamma = tr.gamma;
  if (o_true->count()) tr.flags.true_count = tr.true_count;
  if (o_false->count()) tr.flags.false_count = tr.false_count;
  if (o_seed->count()) tr.flags.seed = tr.seed;

  try {
    if (c_gen->parsed()) return run_generate(gen);
    if (c_conv->parsed()) return run_convert(conv);
    if (c_train->parsed()) return run_train(tr);
    if (c_eval->parsed()) return run_eval(ev);
    if (c_pred->parsed()) return run_predict(pr);
    if (c_curve->parsed()) return run_curve(cu);
    if (c_ann->parsed()) return run_annotate(an);
    if (c_bench->parsed()) return run_bench(be);
  } catch (const Error& e) {
    return report(to_string(e.kind()), static_cast<int>(e.kind()), e.what());
  } catch (const json::exception& e) {
    return report("parse", static_cast<int>(ErrorKind::parse), e.what());
  } catch (const std::exception& e) {
    return report("internal", kInternalExit, e.what());
  }
  return kUsageExit;
}
