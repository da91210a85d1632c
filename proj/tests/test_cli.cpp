// End-to-end checks of the stmlp binary: synth -> train -> eval -> predict,
// inspect, convert, bench, and the documented exit codes. The binary path
// arrives via the STMLP_CLI environment variable (set by CTest).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

std::string cli() {
  const char* p = std::getenv("STMLP_CLI");
  REQUIRE_MESSAGE(p != nullptr, "STMLP_CLI must point at the stmlp binary");
  return p;
}

std::filesystem::path work_dir() {
  auto dir = std::filesystem::temp_directory_path() / "stmlp_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

struct RunResult {
  int exit_code;
  std::string out;
};

RunResult run(const std::string& args, const std::string& stdin_file = "") {
  const auto out_file = work_dir() / "cmd_output.txt";
  std::string cmd = cli() + " " + args;
  if (!stdin_file.empty()) cmd += " < " + stdin_file;
  cmd += " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::stringstream buf;
  buf << in.rdbuf();
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, buf.str()};
}

std::string path_of(const std::string& name) { return (work_dir() / name).string(); }

double metric_from_report(const std::string& report, const std::string& key) {
  const auto pos = report.find(key + ": ");
  REQUIRE(pos != std::string::npos);
  return std::stod(report.substr(pos + key.size() + 2));
}

const std::string kTrainArgs =
    " --layers 1 --joints 3 --hidden-width 24 --seq-len 12"
    " --spatial-hidden 8 --temporal-hidden 16 --batch-size 48"
    " --lr 0.01 --seed 5";

}  // namespace

TEST_CASE("synth-train-eval-inspect pipeline") {
  const std::string data = path_of("corpus.jsonl");
  const std::string ckpt = path_of("model.ckpt");

  auto synth = run("synth --classes 4 --samples 120 --joints 3 --frames 12"
                   " --noise 0.05 --seed 3 --out " + data);
  REQUIRE(synth.exit_code == 0);

  auto train = run("train --data " + data + kTrainArgs + " --classes 4 --epochs 12" +
                   " --hold-out-subjects s4 --out " + ckpt);
  REQUIRE_MESSAGE(train.exit_code == 0, train.out);
  CHECK(train.out.find("epoch=0 lr=") != std::string::npos);
  CHECK(std::filesystem::exists(ckpt));
  CHECK(std::filesystem::exists(ckpt + ".log"));

  SUBCASE("eval prints the full report and matches the logged train accuracy") {
    auto eval = run("eval --checkpoint " + ckpt + " --data " + data +
                    " --split train --hold-out-subjects s4");
    REQUIRE_MESSAGE(eval.exit_code == 0, eval.out);
    for (const char* key : {"accuracy", "macro_jaccard", "macro_f1",
                            "mean_per_class_accuracy"})
      CHECK(eval.out.find(std::string(key) + ": ") != std::string::npos);
    CHECK(eval.out.find("confusion_matrix") != std::string::npos);

    // final logged train accuracy equals eval on the train split
    std::ifstream log(ckpt + ".log");
    std::string line, last;
    while (std::getline(log, line))
      if (!line.empty()) last = line;
    const auto acc_pos = last.find("acc=");
    REQUIRE(acc_pos != std::string::npos);
    const double logged = std::stod(last.substr(acc_pos + 4));
    const double evaluated = metric_from_report(eval.out, "accuracy");
    CHECK(std::abs(logged - evaluated) <= 1e-9);
  }

  SUBCASE("inspect reports the analytic parameter count") {
    auto inspect = run("inspect --checkpoint " + ckpt);
    REQUIRE(inspect.exit_code == 0);
    const auto total_pos = inspect.out.find("total_parameters: ");
    const auto analytic_pos = inspect.out.find("analytic_count: ");
    REQUIRE(total_pos != std::string::npos);
    REQUIRE(analytic_pos != std::string::npos);
    const long total = std::stol(inspect.out.substr(total_pos + 18));
    const long analytic = std::stol(inspect.out.substr(analytic_pos + 16));
    CHECK(total == analytic);
    CHECK(inspect.out.find("projection.weight") != std::string::npos);
  }

  SUBCASE("same seed trains to identical logs") {
    const std::string ckpt2 = path_of("model2.ckpt");
    auto again = run("train --data " + data + kTrainArgs + " --classes 4 --epochs 12" +
                     " --hold-out-subjects s4 --out " + ckpt2);
    REQUIRE(again.exit_code == 0);
    std::ifstream a(ckpt + ".log"), b(ckpt2 + ".log");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(!sa.str().empty());
  }
}

TEST_CASE("predict streams one class per frame and survives malformed lines") {
  const std::string data = path_of("stream_corpus.jsonl");
  const std::string ckpt = path_of("stream_model.ckpt");

  // long frame-labeled sequences cover all phases of each gesture
  REQUIRE(run("synth --classes 4 --samples 48 --joints 3 --frames 96"
              " --noise 0.03 --seed 9 --frame-labels --out " + data)
              .exit_code == 0);
  auto train = run("train --data " + data + kTrainArgs + " --classes 4 --epochs 12 --out " + ckpt);
  REQUIRE_MESSAGE(train.exit_code == 0, train.out);

  // a fresh class-2 stream, same generator family, different seed
  const std::string stream_src = path_of("stream_frames.jsonl");
  REQUIRE(run("synth --classes 4 --samples 3 --joints 3 --frames 120"
              " --noise 0.03 --seed 1234 --frame-labels --out " + stream_src)
              .exit_code == 0);

  // pick the class-2 sequence (sample index 2) and feed its frames
  std::ifstream src(stream_src);
  std::string line, class2_line;
  for (int i = 0; std::getline(src, line); ++i)
    if (i == 2) class2_line = line;
  REQUIRE(!class2_line.empty());

  const std::string frames_file = path_of("frames_in.jsonl");
  std::size_t frame_count = 0;
  {
    std::ofstream frames(frames_file);
    // strip the record down to bare per-line frames
    const auto fpos = class2_line.find("\"frames\":");
    REQUIRE(fpos != std::string::npos);
    std::string arr = class2_line.substr(fpos + 9);
    arr = arr.substr(0, arr.rfind(']'));  // drop the record's closing brace
    // frames are [[..],[..],..]; split on "],[[" boundaries of depth 1
    int depth = 0;
    std::string current;
    for (char c : arr) {
      if (c == '[') ++depth;
      if (depth >= 2) current += c;
      if (c == ']') {
        --depth;
        if (depth == 1) {
          frames << current << "\n";
          ++frame_count;
          current.clear();
        }
      }
    }
    frames << "this line is not JSON\n";  // must be skipped, not fatal
  }
  REQUIRE(frame_count == 120);

  auto predict = run("predict --checkpoint " + ckpt, frames_file);
  REQUIRE_MESSAGE(predict.exit_code == 0, predict.out);

  std::istringstream lines(predict.out);
  std::vector<int> classes;
  while (std::getline(lines, line)) {
    if (line.empty() || !isdigit(static_cast<unsigned char>(line[0]))) continue;
    classes.push_back(std::stoi(line));
  }
  REQUIRE(classes.size() == frame_count);  // malformed line produced no output
  CHECK(predict.out.find("skipped frame") != std::string::npos);

  // after warm-up the stream should be recognized as class 2
  std::size_t correct = 0, counted = 0;
  for (std::size_t i = 12; i < classes.size(); ++i) {
    ++counted;
    if (classes[i] == 2) ++correct;
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(counted) >= 0.9);
}

TEST_CASE("convert: csv ingestion and native idempotence") {
  const std::string csv = path_of("raw.csv");
  {
    std::ofstream out(csv);
    out << "seq0,s0,v0,1,0.0,0.0,0.0,1.0,1.0,1.0\n";
    out << "seq0,s0,v0,1,0.1,0.0,0.0,1.1,1.0,1.0\n";
    out << "seq1,s1,v0,0,0.2,0.3,0.4,0.5,0.6,0.7\n";
  }
  const std::string native1 = path_of("converted.jsonl");
  auto conv = run("convert --from csv --in " + csv + " --out " + native1);
  REQUIRE_MESSAGE(conv.exit_code == 0, conv.out);

  const std::string native2 = path_of("converted_again.jsonl");
  REQUIRE(run("convert --from native --in " + native1 + " --out " + native2)
              .exit_code == 0);
  std::ifstream f1(native1), f2(native2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().find("\"subject\":\"s0\"") != std::string::npos);

  SUBCASE("affine translation applies to every joint") {
    const std::string shifted = path_of("shifted.jsonl");
    REQUIRE(run("convert --from native --in " + native1 + " --out " + shifted +
                " --affine 1,0,0,10,0,1,0,0,0,0,1,0")
                .exit_code == 0);
    std::ifstream in(shifted);
    std::string first;
    std::getline(in, first);
    CHECK(first.find("10.0") != std::string::npos);
  }
}

TEST_CASE("bench reports ordered latency statistics") {
  auto bench = run("bench --preset tcg --iterations 25 --warmup 3");
  REQUIRE_MESSAGE(bench.exit_code == 0, bench.out);
  double min = 0, mean = 0, p50 = 0, p99 = 0;
  const auto stats_pos = bench.out.find("precision=double");
  REQUIRE(stats_pos != std::string::npos);
  REQUIRE(std::sscanf(bench.out.c_str() + stats_pos,
                      "precision=double iterations=25 min_ms=%lf mean_ms=%lf "
                      "p50_ms=%lf p99_ms=%lf",
                      &min, &mean, &p50, &p99) == 4);
  CHECK(min > 0.0);
  CHECK(p50 >= min);
  CHECK(p99 >= p50);
  CHECK(mean >= min);

  auto single = run("bench --preset tcg --precision single --iterations 10 --warmup 2");
  CHECK(single.exit_code == 0);
  CHECK(single.out.find("precision=single") != std::string::npos);
}

TEST_CASE("exit codes distinguish config, data, and io failures") {
  // config: invalid architecture (no preset, nothing specified)
  CHECK(run("train --data " + path_of("nonexistent.jsonl")).exit_code == 2);
  // config: unknown flag
  CHECK(run("train --data x --bogus-flag 1").exit_code == 2);
  // io: missing dataset file behind a valid config
  const std::string missing = path_of("missing.jsonl");
  CHECK(run("train --preset tcg --data " + missing).exit_code == 4);
  // data: malformed record on the second line of an otherwise valid file
  const std::string bad = path_of("bad.jsonl");
  {
    std::ofstream out(bad);
    out << "{\"label\":0,\"frames\":[[[0,0,0]]]}\n";
    out << "not json\n";
  }
  auto res = run("train --classes 2 --layers 1 --joints 1 --hidden-width 8"
                 " --seq-len 4 --spatial-hidden 4 --temporal-hidden 4"
                 " --epochs 1 --batch-size 4 --data " + bad);
  CHECK(res.exit_code == 3);
  CHECK(res.out.find(":2:") != std::string::npos);  // line-accurate diagnostic

  // config/data mismatch: checkpoint joints vs dataset joints
  const std::string data = path_of("mismatch.jsonl");
  const std::string ckpt = path_of("mismatch.ckpt");
  REQUIRE(run("synth --classes 2 --samples 8 --joints 3 --frames 12 --noise 0"
              " --seed 1 --out " + data).exit_code == 0);
  REQUIRE(run("train --data " + data + kTrainArgs + " --classes 2 --epochs 12 --out " + ckpt)
              .exit_code == 0);
  const std::string other = path_of("other_joints.jsonl");
  REQUIRE(run("synth --classes 2 --samples 4 --joints 5 --frames 12 --noise 0"
              " --seed 2 --out " + other).exit_code == 0);
  auto mism = run("eval --checkpoint " + ckpt + " --data " + other);
  CHECK(mism.exit_code == 2);
  CHECK(mism.out.find("3") != std::string::npos);
  CHECK(mism.out.find("5") != std::string::npos);
}

TEST_CASE("ablation flags train the corresponding variants") {
  const std::string data = path_of("ablate.jsonl");
  REQUIRE(run("synth --classes 2 --samples 24 --joints 3 --frames 12 --noise 0.02"
              " --seed 4 --out " + data).exit_code == 0);
  const std::string ckpt = path_of("ablate.ckpt");
  auto res = run("train --data " + data + kTrainArgs +
                 " --classes 2 --epochs 2 --variant temporal-only --se off --out " + ckpt);
  REQUIRE_MESSAGE(res.exit_code == 0, res.out);
  auto inspect = run("inspect --checkpoint " + ckpt);
  CHECK(inspect.out.find("\"variant\":\"temporal_only\"") != std::string::npos);
  CHECK(inspect.out.find("\"se_mode\":\"off\"") != std::string::npos);
  CHECK(inspect.out.find("se.reduce") == std::string::npos);
}

TEST_CASE("options can come from an INI config file") {
  const std::string data = path_of("cfg_corpus.jsonl");
  REQUIRE(run("synth --classes 2 --samples 16 --joints 2 --frames 8 --noise 0.02"
              " --seed 6 --out " + data).exit_code == 0);
  const std::string ini = path_of("run.ini");
  const std::string ckpt = path_of("cfg_model.ckpt");
  {
    std::ofstream out(ini);
    out << "[train]\n"
        << "data=" << data << "\n"
        << "classes=2\nlayers=1\njoints=2\nhidden-width=8\nseq-len=8\n"
        << "spatial-hidden=4\ntemporal-hidden=4\nepochs=2\nbatch-size=8\n"
        << "lr=0.01\nseed=2\n"
        << "out=" << ckpt << "\n";
  }
  auto res = run("train --config " + ini);
  REQUIRE_MESSAGE(res.exit_code == 0, res.out);
  CHECK(std::filesystem::exists(ckpt));
}
