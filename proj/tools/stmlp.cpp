// stmlp: train, evaluate, stream-predict, and benchmark the spatio-temporal
// MLP gesture classifier. See README.md for formats and examples.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stmlp/checkpoint.hpp"
#include "stmlp/data.hpp"
#include "stmlp/inference.hpp"
#include "stmlp/metrics.hpp"
#include "stmlp/model.hpp"
#include "stmlp/optim.hpp"
#include "stmlp/presets.hpp"

using namespace stmlp;

namespace {

// Exit codes: 0 success, 2 configuration/usage, 3 data, 4 I/O, 1 unexpected.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitIo = 4;

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct SplitFlags {
  std::vector<std::string> hold_out_subjects;
  std::vector<std::string> hold_out_views;

  void attach(CLI::App* cmd) {
    cmd->add_option("--hold-out-subjects", hold_out_subjects,
                    "Subjects reserved for the test split")
        ->delimiter(',');
    cmd->add_option("--hold-out-views", hold_out_views,
                    "Views reserved for the test split")
        ->delimiter(',');
  }

  DatasetSplit apply(const std::vector<SkeletonSequence>& seqs) const {
    if (!hold_out_subjects.empty() && !hold_out_views.empty())
      throw ConfigError("choose one of --hold-out-subjects / --hold-out-views");
    if (!hold_out_views.empty())
      return split_by(seqs, SplitKey::view, hold_out_views);
    return split_by(seqs, SplitKey::subject, hold_out_subjects);
  }
};

struct PreprocessFlags {
  bool subtract_root_flag = false;
  std::size_t root_joint = 0;

  void attach(CLI::App* cmd) {
    cmd->add_flag("--subtract-root", subtract_root_flag,
                  "Subtract the root joint from all joints per frame");
    cmd->add_option("--root-joint", root_joint, "Root joint index")
        ->capture_default_str();
  }

  void apply(std::vector<SkeletonSequence>& seqs) const {
    if (!subtract_root_flag) return;
    for (auto& s : seqs) subtract_root(s, root_joint);
  }
};

std::vector<SkeletonSequence> select(const std::vector<SkeletonSequence>& seqs,
                                     const std::vector<std::size_t>& idx) {
  std::vector<SkeletonSequence> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(seqs[i]);
  return out;
}

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::full;
  if (s == "spatial-only") return Variant::spatial_only;
  if (s == "temporal-only") return Variant::temporal_only;
  if (s == "two-stream") return Variant::two_stream;
  throw ConfigError("unknown --variant: " + s);
}

SeMode parse_se(const std::string& s) {
  if (s == "shared") return SeMode::shared;
  if (s == "separate") return SeMode::separate;
  if (s == "off") return SeMode::off;
  throw ConfigError("unknown --se: " + s);
}

// ---------------------------------------------------------------- train ---

struct TrainCmd {
  std::string preset;
  std::string data_path;
  std::string out_path = "model.ckpt";
  std::string log_path;
  SplitFlags split;
  PreprocessFlags preprocess;

  std::optional<std::size_t> classes, layers, joints, hidden_width, seq_len,
      spatial_hidden, temporal_hidden, epochs, batch_size, threads, switch_epoch;
  std::optional<double> lr, final_lr;
  std::optional<std::string> variant, se_mode, ln_axis, se_combine, optimizer,
      schedule;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "tcg or drive-act")
        ->check(CLI::IsMember({"tcg", "drive-act"}));
    cmd->add_option("--data", data_path, "Training dataset (JSON lines)")
        ->required();
    cmd->add_option("--out", out_path, "Checkpoint output path")
        ->capture_default_str();
    cmd->add_option("--log", log_path, "Training log path (default: <out>.log)");
    split.attach(cmd);
    preprocess.attach(cmd);
    cmd->add_option("--classes", classes, "Number of classes");
    cmd->add_option("--layers", layers, "Mixing blocks");
    cmd->add_option("--joints", joints, "Body joints per frame");
    cmd->add_option("--hidden-width", hidden_width, "Encoded feature width");
    cmd->add_option("--seq-len", seq_len, "Window length in frames");
    cmd->add_option("--spatial-hidden", spatial_hidden, "Spatial-mixing width");
    cmd->add_option("--temporal-hidden", temporal_hidden, "Temporal-mixing width");
    cmd->add_option("--variant", variant,
                    "full | spatial-only | temporal-only | two-stream");
    cmd->add_option("--se", se_mode, "shared | separate | off");
    cmd->add_option("--ln-axis", ln_axis, "operand | features");
    cmd->add_option("--se-combine", se_combine, "multiply | add");
    cmd->add_option("--optimizer", optimizer, "adam | ranger");
    cmd->add_option("--schedule", schedule, "flat-cosine | cosine");
    cmd->add_option("--lr", lr, "Base learning rate");
    cmd->add_option("--final-lr", final_lr, "Final learning rate");
    cmd->add_option("--switch-epoch", switch_epoch, "Flat phase length");
    cmd->add_option("--epochs", epochs, "Training epochs");
    cmd->add_option("--batch-size", batch_size, "Balanced batch size");
    cmd->add_option("--seed", seed, "RNG seed")->capture_default_str();
    cmd->add_option("--threads", threads, "Worker threads for batch gradients");
  }

  RunConfig resolve() const {
    RunConfig run;
    if (preset == "tcg") {
      run = tcg_run();
    } else if (preset == "drive-act") {
      run = drive_act_run(classes.value_or(12));
    } else {
      // no preset: the architecture must be fully specified
      run.model.layers = layers.value_or(0);
      run.model.joints = joints.value_or(0);
      run.model.hidden_width = hidden_width.value_or(0);
      run.model.seq_len = seq_len.value_or(0);
      run.model.spatial_hidden = spatial_hidden.value_or(0);
      run.model.temporal_hidden = temporal_hidden.value_or(0);
      run.model.classes = classes.value_or(0);
      run.schedule = {ScheduleKind::cosine, 1e-3, 1e-4, 0, 30};
      run.epochs = 30;
    }
    if (classes) run.model.classes = *classes;
    if (layers) run.model.layers = *layers;
    if (joints) run.model.joints = *joints;
    if (hidden_width) run.model.hidden_width = *hidden_width;
    if (seq_len) run.model.seq_len = *seq_len;
    if (spatial_hidden) run.model.spatial_hidden = *spatial_hidden;
    if (temporal_hidden) run.model.temporal_hidden = *temporal_hidden;
    if (variant) run.model.variant = parse_variant(*variant);
    if (se_mode) run.model.se_mode = parse_se(*se_mode);
    if (ln_axis)
      run.model.ln_axis =
          *ln_axis == "features" ? LnAxis::features : LnAxis::operand;
    if (se_combine)
      run.model.se_combine =
          *se_combine == "add" ? SeCombine::add : SeCombine::multiply;
    if (optimizer)
      run.optimizer =
          *optimizer == "ranger" ? OptimizerKind::ranger : OptimizerKind::adam;
    if (schedule)
      run.schedule.kind = *schedule == "flat-cosine" ? ScheduleKind::flat_then_cosine
                                                     : ScheduleKind::cosine;
    if (epochs) {
      run.epochs = *epochs;
      run.schedule.total_epochs = *epochs;
    }
    if (lr) {
      run.schedule.base_lr = *lr;
      if (!final_lr) run.schedule.final_lr = *lr * 0.1;
    }
    if (final_lr) run.schedule.final_lr = *final_lr;
    if (switch_epoch) run.schedule.switch_epoch = *switch_epoch;
    if (batch_size) run.batch_size = *batch_size;
    if (threads) run.threads = *threads;
    run.seed = seed;
    run.subtract_root = preprocess.subtract_root_flag;
    run.root_joint = preprocess.root_joint;
    run.model.validate();
    return run;
  }

  int execute() const {
    RunConfig run = resolve();
    auto seqs = load_dataset(data_path, run.model.joints);
    preprocess.apply(seqs);
    DatasetSplit sp = split.apply(seqs);
    auto train_seqs = select(seqs, sp.train);
    if (train_seqs.empty()) throw DataError("train: no sequences in the train split");
    auto samples = make_samples(train_seqs, run.model);

    ModelParams params = init_params(run.model, run.seed);
    TrainOptions opt;
    opt.optimizer = run.optimizer;
    opt.hyper = run.hyper;
    opt.schedule = run.schedule;
    opt.epochs = run.epochs;
    opt.batch_size = run.batch_size;
    opt.seed = run.seed;
    opt.threads = run.threads;

    const std::string log_file = log_path.empty() ? out_path + ".log" : log_path;
    std::ofstream log_out(log_file);
    if (!log_out) throw IoError("cannot write training log: " + log_file);
    opt.log = &log_out;

    std::cerr << "training on " << samples.size() << " samples, "
              << run.epochs << " epochs, batch " << run.batch_size << "\n";
    auto log = train(params, run.model, samples, opt);
    for (const auto& e : log) std::cout << format_epoch_log(e) << "\n";

    Checkpoint cp;
    cp.config = run.model;
    cp.seed = run.seed;
    cp.created = iso_now();
    cp.params = std::move(params);
    save_checkpoint(out_path, cp);
    std::cerr << "checkpoint written to " << out_path << ", log to " << log_file
              << "\n";
    return 0;
  }
};

// ----------------------------------------------------------------- eval ---

struct EvalCmd {
  std::string checkpoint_path;
  std::string data_path;
  std::string split_name = "all";
  SplitFlags split;
  PreprocessFlags preprocess;

  void attach(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
    cmd->add_option("--data", data_path, "Dataset (JSON lines)")->required();
    cmd->add_option("--split", split_name, "all | train | val | test")
        ->check(CLI::IsMember({"all", "train", "val", "test"}))
        ->capture_default_str();
    split.attach(cmd);
    preprocess.attach(cmd);
  }

  int execute() const {
    Checkpoint cp = load_checkpoint(checkpoint_path);
    auto all = load_dataset(data_path);
    if (!all.empty() && all.front().joint_count() != cp.config.joints)
      throw ConfigError("checkpoint expects " + std::to_string(cp.config.joints) +
                        " joints but the dataset has " +
                        std::to_string(all.front().joint_count()));
    preprocess.apply(all);
    std::vector<SkeletonSequence> chosen;
    if (split_name == "all") {
      chosen = all;
    } else {
      DatasetSplit sp = split.apply(all);
      const auto& idx = split_name == "train" ? sp.train
                        : split_name == "val" ? sp.val
                                              : sp.test;
      chosen = select(all, idx);
    }
    if (chosen.empty()) throw DataError("eval: selected split is empty");

    auto samples = make_samples(chosen, cp.config);
    InferenceEngine<double> engine(cp.params, cp.config);
    ConfusionMatrix cm(cp.config.classes);
    for (const auto& s : samples) {
      const Vector logits = engine.logits(s.input);
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[best]) best = c;
      cm.add(static_cast<std::size_t>(s.label), best);
    }
    std::cout << evaluation_report(cm);
    return 0;
  }
};

// -------------------------------------------------------------- predict ---

struct PredictCmd {
  std::string checkpoint_path;
  PreprocessFlags preprocess;

  void attach(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
    preprocess.attach(cmd);
  }

  int execute() const {
    Checkpoint cp = load_checkpoint(checkpoint_path);
    const ModelConfig& cfg = cp.config;
    InferenceEngine<double> engine(cp.params, cfg);

    std::vector<double> window(cfg.seq_len * cfg.pose_width(), 0.0);
    bool have_first = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(std::cin, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::vector<double> frame;
      try {
        nlohmann::json j = nlohmann::json::parse(line);
        if (!j.is_array() || j.size() != cfg.joints)
          throw DataError("expected an array of " + std::to_string(cfg.joints) +
                          " joints");
        frame.reserve(cfg.pose_width());
        for (const auto& joint : j) {
          if (!joint.is_array() || joint.size() != 3)
            throw DataError("joint is not an [x,y,z] triple");
          for (int c = 0; c < 3; ++c) {
            const double v = joint[c].get<double>();
            if (!std::isfinite(v)) throw DataError("non-finite coordinate");
            frame.push_back(v);
          }
        }
        if (preprocess.subtract_root_flag) {
          const std::size_t r = 3 * preprocess.root_joint;
          if (preprocess.root_joint >= cfg.joints)
            throw DataError("root joint out of range");
          const double rx = frame[r], ry = frame[r + 1], rz = frame[r + 2];
          for (std::size_t j2 = 0; j2 < cfg.joints; ++j2) {
            frame[3 * j2] -= rx;
            frame[3 * j2 + 1] -= ry;
            frame[3 * j2 + 2] -= rz;
          }
        }
      } catch (const std::exception& e) {
        std::cerr << "stdin:" << line_no << ": skipped frame: " << e.what() << "\n";
        continue;
      }

      const std::size_t width = cfg.pose_width();
      if (!have_first) {
        // warm-up: left-pad the whole window with the first frame
        for (std::size_t t = 0; t < cfg.seq_len; ++t)
          std::copy(frame.begin(), frame.end(), window.begin() + t * width);
        have_first = true;
      } else {
        std::copy(window.begin() + width, window.end(), window.begin());
        std::copy(frame.begin(), frame.end(), window.end() - width);
      }

      auto logits = engine.run(window);
      std::size_t best = 0;
      for (std::size_t c = 1; c < logits.size(); ++c)
        if (logits[c] > logits[best]) best = c;
      std::cout << best << "\n" << std::flush;
    }
    return 0;
  }
};

// ---------------------------------------------------------------- bench ---

struct BenchCmd {
  std::string checkpoint_path;
  std::string preset = "tcg";
  std::string precision = "double";
  std::size_t iterations = 300;
  std::size_t warmup = 30;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint_path,
                    "Benchmark this checkpoint (otherwise --preset with random "
                    "weights)");
    cmd->add_option("--preset", preset, "tcg or drive-act")
        ->check(CLI::IsMember({"tcg", "drive-act"}))
        ->capture_default_str();
    cmd->add_option("--precision", precision, "double | single")
        ->check(CLI::IsMember({"double", "single"}))
        ->capture_default_str();
    cmd->add_option("--iterations", iterations, "Timed iterations")
        ->capture_default_str();
    cmd->add_option("--warmup", warmup, "Warm-up iterations")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed for weights and the input window")
        ->capture_default_str();
  }

  template <typename Real>
  void run_bench(const ModelParams& params, const ModelConfig& cfg) const {
    InferenceEngine<Real> engine(params, cfg);
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Real> input(cfg.seq_len * cfg.pose_width());
    for (auto& v : input) v = static_cast<Real>(dist(rng));

    for (std::size_t i = 0; i < warmup; ++i) engine.run(input);
    std::vector<double> times_ms(iterations);
    double checksum = 0.0;
    for (std::size_t i = 0; i < iterations; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      auto logits = engine.run(input);
      const auto t1 = std::chrono::steady_clock::now();
      checksum += static_cast<double>(logits[0]);
      times_ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    std::sort(times_ms.begin(), times_ms.end());
    const double min = times_ms.front();
    double mean = 0.0;
    for (double t : times_ms) mean += t;
    mean /= static_cast<double>(iterations);
    const double p50 = times_ms[iterations / 2];
    const double p99 = times_ms[std::min(iterations - 1,
                                         static_cast<std::size_t>(
                                             0.99 * static_cast<double>(iterations)))];
    std::printf(
        "precision=%s iterations=%zu min_ms=%.4f mean_ms=%.4f p50_ms=%.4f "
        "p99_ms=%.4f\n",
        precision.c_str(), iterations, min, mean, p50, p99);
    std::fprintf(stderr, "checksum %.6g\n", checksum);
  }

  int execute() const {
    ModelConfig cfg;
    ModelParams params;
    if (!checkpoint_path.empty()) {
      Checkpoint cp = load_checkpoint(checkpoint_path);
      cfg = cp.config;
      params = std::move(cp.params);
    } else {
      cfg = preset == "tcg" ? tcg_config() : drive_act_config();
      params = init_params(cfg, seed);
    }
    if (precision == "single")
      run_bench<float>(params, cfg);
    else
      run_bench<double>(params, cfg);
    return 0;
  }
};

// ---------------------------------------------------------------- synth ---

struct SynthCmd {
  std::size_t classes = 4;
  std::size_t samples = 400;
  std::size_t joints = 4;
  std::size_t frames = 16;
  double noise = 0.05;
  std::uint64_t seed = 0;
  bool frame_labels = false;
  std::string out_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--classes", classes)->capture_default_str();
    cmd->add_option("--samples", samples)->capture_default_str();
    cmd->add_option("--joints", joints)->capture_default_str();
    cmd->add_option("--frames", frames)->capture_default_str();
    cmd->add_option("--noise", noise, "Gaussian sigma on every coordinate")
        ->capture_default_str();
    cmd->add_option("--seed", seed)->capture_default_str();
    cmd->add_flag("--frame-labels", frame_labels,
                  "Broadcast each sequence label to per-frame labels");
    cmd->add_option("--out", out_path, "Output dataset path")->required();
  }

  int execute() const {
    auto seqs = synth_gestures(classes, samples, joints, frames, noise, seed);
    if (frame_labels) {
      for (auto& s : seqs) {
        s.frame_labels.assign(s.frames.size(), s.label.value_or(0));
        s.label.reset();
      }
    }
    save_dataset(out_path, seqs);
    std::cerr << "wrote " << seqs.size() << " sequences to " << out_path << "\n";
    return 0;
  }
};

// -------------------------------------------------------------- convert ---

struct ConvertCmd {
  std::string from = "native";
  std::string in_path, out_path;
  std::string label_mode = "auto";
  std::vector<double> affine;
  PreprocessFlags preprocess;

  void attach(CLI::App* cmd) {
    cmd->add_option("--from", from, "native | csv")
        ->check(CLI::IsMember({"native", "csv"}))
        ->capture_default_str();
    cmd->add_option("--in", in_path, "Input file")->required();
    cmd->add_option("--out", out_path, "Output file")->required();
    cmd->add_option("--label-mode", label_mode, "auto | frame | sequence")
        ->check(CLI::IsMember({"auto", "frame", "sequence"}))
        ->capture_default_str();
    cmd->add_option("--affine", affine,
                    "12 numbers, row-major 3x4 [R|t] applied to every joint")
        ->expected(12)
        ->delimiter(',');
    preprocess.attach(cmd);
  }

  std::vector<SkeletonSequence> read_csv() const {
    // seq_id,subject,view,label,x0,y0,z0,x1,y1,z1,... one row per frame;
    // rows with the same seq_id group into one sequence in file order
    std::ifstream in(in_path);
    if (!in) throw IoError("cannot open input file: " + in_path);
    std::vector<SkeletonSequence> out;
    std::string current_id;
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;

    auto finish = [&](SkeletonSequence& seq) {
      if (seq.frames.empty()) return;
      const bool uniform =
          std::all_of(labels.begin(), labels.end(),
                      [&](int l) { return l == labels.front(); });
      const bool as_frames =
          label_mode == "frame" || (label_mode == "auto" && !uniform);
      if (as_frames) {
        seq.frame_labels = labels;
      } else {
        if (!uniform)
          throw DataError(in_path + ": sequence '" + current_id +
                          "' mixes labels; use --label-mode frame");
        seq.label = labels.front();
      }
      out.push_back(std::move(seq));
      seq = SkeletonSequence{};
      labels.clear();
    };

    SkeletonSequence seq;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (cells.size() < 7 || (cells.size() - 4) % 3 != 0)
        throw DataError(in_path + ":" + std::to_string(line_no) +
                        ": expected seq,subject,view,label,x,y,z,... columns");
      if (cells[0] != current_id) {
        finish(seq);
        current_id = cells[0];
        seq.meta.subject = cells[1];
        seq.meta.view = cells[2];
        seq.meta.source = "csv:" + in_path;
      }
      try {
        labels.push_back(std::stoi(cells[3]));
        SkeletonFrame frame;
        for (std::size_t i = 4; i + 2 < cells.size(); i += 3)
          frame.joints.push_back({std::stod(cells[i]), std::stod(cells[i + 1]),
                                  std::stod(cells[i + 2])});
        seq.frames.push_back(std::move(frame));
      } catch (const std::exception&) {
        throw DataError(in_path + ":" + std::to_string(line_no) +
                        ": unparsable numeric field");
      }
    }
    finish(seq);
    return out;
  }

  int execute() const {
    std::vector<SkeletonSequence> seqs =
        from == "csv" ? read_csv() : load_dataset(in_path);
    if (!affine.empty()) {
      std::array<double, 12> m{};
      std::copy(affine.begin(), affine.end(), m.begin());
      for (auto& s : seqs) apply_affine(s, m);
    }
    {
      auto mutable_seqs = seqs;
      preprocess.apply(mutable_seqs);
      seqs = std::move(mutable_seqs);
    }
    save_dataset(out_path, seqs);
    std::cerr << "wrote " << seqs.size() << " sequences to " << out_path << "\n";
    return 0;
  }
};

// -------------------------------------------------------------- inspect ---

struct InspectCmd {
  std::string checkpoint_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
  }

  int execute() const {
    Checkpoint cp = load_checkpoint(checkpoint_path);
    std::cout << "created: " << cp.created << "\n";
    std::cout << "seed: " << cp.seed << "\n";
    std::cout << "config: " << config_to_json(cp.config) << "\n";
    std::cout << "parameters:\n";
    std::size_t total = 0;
    for (const auto& v : named_params(cp.params)) {
      std::cout << "  " << v.name << " " << v.rows << "x" << v.cols << " ("
                << v.data->size() << ")\n";
      total += v.data->size();
    }
    std::cout << "total_parameters: " << total << "\n";
    std::cout << "analytic_count: " << param_count(cp.config) << "\n";
    return total == param_count(cp.config) ? 0 : 1;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatio-temporal MLP for skeleton-based gesture recognition"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI file ([subcommand] section)");

  TrainCmd train_cmd;
  EvalCmd eval_cmd;
  PredictCmd predict_cmd;
  BenchCmd bench_cmd;
  SynthCmd synth_cmd;
  ConvertCmd convert_cmd;
  InspectCmd inspect_cmd;

  CLI::App* sub_train = app.add_subcommand("train", "Train a model and write a checkpoint");
  CLI::App* sub_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  CLI::App* sub_predict =
      app.add_subcommand("predict", "Stream per-frame predictions over stdin/stdout");
  CLI::App* sub_bench = app.add_subcommand("bench", "Measure single-inference latency");
  CLI::App* sub_synth = app.add_subcommand("synth", "Generate a synthetic gesture corpus");
  CLI::App* sub_convert = app.add_subcommand("convert", "Convert datasets to the native format");
  CLI::App* sub_inspect =
      app.add_subcommand("inspect", "Print checkpoint header and parameter table");
  for (CLI::App* sub : {sub_train, sub_eval, sub_predict, sub_bench, sub_synth,
                        sub_convert, sub_inspect})
    sub->fallthrough();
  train_cmd.attach(sub_train);
  eval_cmd.attach(sub_eval);
  predict_cmd.attach(sub_predict);
  bench_cmd.attach(sub_bench);
  synth_cmd.attach(sub_synth);
  convert_cmd.attach(sub_convert);
  inspect_cmd.attach(sub_inspect);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (app.got_subcommand("train")) return train_cmd.execute();
    if (app.got_subcommand("eval")) return eval_cmd.execute();
    if (app.got_subcommand("predict")) return predict_cmd.execute();
    if (app.got_subcommand("bench")) return bench_cmd.execute();
    if (app.got_subcommand("synth")) return synth_cmd.execute();
    if (app.got_subcommand("convert")) return convert_cmd.execute();
    if (app.got_subcommand("inspect")) return inspect_cmd.execute();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
