#include "stmlp/data.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stmlp/detail/rng.hpp"

namespace stmlp {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

[[noreturn]] void record_error(const std::string& origin, std::size_t line,
                               const std::string& what) {
  throw DataError(origin + ":" + std::to_string(line) + ": " + what);
}

SkeletonSequence parse_json_record(const json& j, std::size_t expected_joints,
                                   const std::string& origin, std::size_t line) {
  SkeletonSequence seq;
  if (!j.is_object()) record_error(origin, line, "record is not a JSON object");
  if (j.contains("format_version") && j["format_version"].get<int>() != kFormatVersion)
    record_error(origin, line, "unsupported format_version");

  if (j.contains("meta")) {
    const auto& m = j["meta"];
    seq.meta.subject = m.value("subject", "");
    seq.meta.view = m.value("view", "");
    seq.meta.source = m.value("source", "");
  }

  const bool has_label = j.contains("label");
  const bool has_labels = j.contains("labels");
  if (has_label == has_labels)
    record_error(origin, line, "record must carry exactly one of 'label' or 'labels'");
  if (has_label) {
    if (!j["label"].is_number_integer() || j["label"].get<long long>() < 0)
      record_error(origin, line, "unknown label: expected a non-negative integer");
    seq.label = j["label"].get<int>();
  } else {
    if (!j["labels"].is_array()) record_error(origin, line, "'labels' must be an array");
    for (const auto& l : j["labels"]) {
      if (!l.is_number_integer() || l.get<long long>() < 0)
        record_error(origin, line, "unknown label: expected a non-negative integer");
      seq.frame_labels.push_back(l.get<int>());
    }
  }

  if (!j.contains("frames") || !j["frames"].is_array() || j["frames"].empty())
    record_error(origin, line, "record has no frames");
  for (const auto& f : j["frames"]) {
    SkeletonFrame frame;
    if (!f.is_array()) record_error(origin, line, "frame is not an array of joints");
    for (const auto& joint : f) {
      if (!joint.is_array() || joint.size() != 3)
        record_error(origin, line, "joint is not an [x,y,z] triple");
      std::array<double, 3> c{};
      for (int i = 0; i < 3; ++i) {
        if (!joint[i].is_number())
          record_error(origin, line, "non-numeric joint coordinate");
        c[i] = joint[i].get<double>();
        if (!std::isfinite(c[i]))
          record_error(origin, line, "non-finite joint coordinate");
      }
      frame.joints.push_back(c);
    }
    if (expected_joints != 0 && frame.joints.size() != expected_joints)
      record_error(origin, line,
                   "joint count " + std::to_string(frame.joints.size()) +
                       " does not match expected " + std::to_string(expected_joints));
    if (!seq.frames.empty() && frame.joints.size() != seq.frames.front().joints.size())
      record_error(origin, line, "frames disagree on joint count");
    seq.frames.push_back(std::move(frame));
  }

  if (seq.frame_labeled() && seq.frame_labels.size() != seq.frames.size())
    record_error(origin, line,
                 "'labels' length " + std::to_string(seq.frame_labels.size()) +
                     " does not match frame count " + std::to_string(seq.frames.size()));
  return seq;
}

json record_json(const SkeletonSequence& seq) {
  json j;
  j["format_version"] = kFormatVersion;
  j["meta"] = {{"subject", seq.meta.subject},
               {"view", seq.meta.view},
               {"source", seq.meta.source}};
  if (seq.frame_labeled())
    j["labels"] = seq.frame_labels;
  else
    j["label"] = seq.label.value_or(0);
  json frames = json::array();
  for (const auto& f : seq.frames) {
    json frame = json::array();
    for (const auto& joint : f.joints) frame.push_back({joint[0], joint[1], joint[2]});
    frames.push_back(std::move(frame));
  }
  j["frames"] = std::move(frames);
  return j;
}

}  // namespace

SkeletonSequence parse_record(const std::string& line, std::size_t expected_joints) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw DataError("record: invalid JSON");
  return parse_json_record(j, expected_joints, "record", 1);
}

std::string to_record(const SkeletonSequence& seq) { return record_json(seq).dump(); }

std::vector<SkeletonSequence> load_dataset(std::istream& in,
                                           std::size_t expected_joints,
                                           const std::string& origin) {
  std::vector<SkeletonSequence> out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t joints = expected_joints;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) record_error(origin, line_no, "invalid JSON");
    SkeletonSequence seq = parse_json_record(j, joints, origin, line_no);
    if (joints == 0) joints = seq.joint_count();
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<SkeletonSequence> load_dataset(const std::string& path,
                                           std::size_t expected_joints) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  return load_dataset(in, expected_joints, path);
}

void save_dataset(std::ostream& out, const std::vector<SkeletonSequence>& seqs) {
  for (const auto& s : seqs) out << to_record(s) << '\n';
}

void save_dataset(const std::string& path, const std::vector<SkeletonSequence>& seqs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path);
  save_dataset(out, seqs);
}

std::vector<LabeledWindow> window_frames(const SkeletonSequence& seq,
                                         std::size_t window_len) {
  if (seq.frames.empty()) throw DataError("window_frames: empty sequence");
  if (window_len == 0) throw DataError("window_frames: window length must be >= 1");
  if (!seq.frame_labeled())
    throw DataError("window_frames: sequence has no per-frame labels");
  std::vector<LabeledWindow> out;
  out.reserve(seq.frames.size());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    LabeledWindow w;
    w.label = seq.frame_labels[t];
    w.frames.reserve(window_len);
    for (std::size_t offset = window_len; offset > 0; --offset) {
      // frame index t - offset + 1, clamped to 0 (repeat the first frame)
      const std::size_t idx = offset - 1 > t ? 0 : t - (offset - 1);
      w.frames.push_back(seq.frames[idx]);
    }
    out.push_back(std::move(w));
  }
  return out;
}

SkeletonSequence resample_sequence(const SkeletonSequence& seq, std::size_t target_len) {
  if (seq.frames.empty()) throw DataError("resample_sequence: empty sequence");
  if (seq.frame_labeled())
    throw DataError("resample_sequence: expects a sequence-level label");
  if (target_len == 0) throw DataError("resample_sequence: target length must be >= 1");

  SkeletonSequence out;
  out.label = seq.label;
  out.meta = seq.meta;
  const std::size_t n = seq.frames.size();
  const std::size_t joints = seq.joint_count();
  out.frames.reserve(target_len);
  for (std::size_t i = 0; i < target_len; ++i) {
    // sample positions span [0, n-1] inclusive
    double pos;
    if (target_len == 1)
      pos = static_cast<double>(n - 1) / 2.0;
    else
      pos = static_cast<double>(i) * static_cast<double>(n - 1) /
            static_cast<double>(target_len - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = lo + 1 < n ? lo + 1 : lo;
    const double frac = pos - static_cast<double>(lo);
    SkeletonFrame frame;
    frame.joints.resize(joints);
    for (std::size_t jn = 0; jn < joints; ++jn)
      for (int c = 0; c < 3; ++c)
        frame.joints[jn][c] = (1.0 - frac) * seq.frames[lo].joints[jn][c] +
                              frac * seq.frames[hi].joints[jn][c];
    out.frames.push_back(std::move(frame));
  }
  return out;
}

BalancedSampler::BalancedSampler(const std::vector<int>& labels,
                                 std::size_t classes, std::uint64_t seed)
    : by_class_(classes), rng_(seed) {
  if (classes == 0) throw DataError("balanced sampler: no classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
      throw DataError("balanced sampler: label " + std::to_string(labels[i]) +
                      " outside [0, " + std::to_string(classes) + ")");
    by_class_[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < classes; ++c)
    if (by_class_[c].empty())
      throw DataError("balanced sampler: class " + std::to_string(c) +
                      " has no samples");
}

std::vector<std::size_t> BalancedSampler::next_batch(std::size_t batch_size) {
  std::vector<std::size_t> batch(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const auto c = detail::bounded(rng_, by_class_.size());
    const auto& pool = by_class_[c];
    batch[i] = pool[detail::bounded(rng_, pool.size())];
  }
  return batch;
}

DatasetSplit split_by(const std::vector<SkeletonSequence>& seqs, SplitKey key,
                      const std::vector<std::string>& test_values,
                      const std::vector<std::string>& val_values) {
  auto key_of = [key](const SkeletonSequence& s) -> const std::string& {
    return key == SplitKey::subject ? s.meta.subject : s.meta.view;
  };
  auto contains = [](const std::vector<std::string>& vs, const std::string& v) {
    for (const auto& x : vs)
      if (x == v) return true;
    return false;
  };
  DatasetSplit split;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const std::string& k = key_of(seqs[i]);
    if (contains(test_values, k))
      split.test.push_back(i);
    else if (contains(val_values, k))
      split.val.push_back(i);
    else
      split.train.push_back(i);
  }
  for (const auto& v : test_values) {
    bool seen = false;
    for (const auto& s : seqs)
      if (key_of(s) == v) { seen = true; break; }
    if (!seen)
      std::cerr << "warning: held-out value '" << v << "' matches no sequence\n";
  }
  return split;
}

std::vector<SkeletonSequence> synth_gestures(std::size_t classes,
                                             std::size_t samples,
                                             std::size_t joints,
                                             std::size_t frames,
                                             double noise_sigma,
                                             std::uint64_t seed) {
  if (classes < 2) throw DataError("synth_gestures: need at least 2 classes");
  if (joints == 0 || frames == 0)
    throw DataError("synth_gestures: joints and frames must be >= 1");

  // The moving joint oscillates with one of `classes` distinct angular
  // rates (class c completes c+1 cycles per 16 frames) and a class-specific
  // base phase. Per-sample phase jitter is the only within-class variation
  // at sigma == 0.
  constexpr double kTwoPi = 6.283185307179586;
  constexpr double kBaseFrames = 16.0;
  std::mt19937_64 rng(seed);
  std::vector<SkeletonSequence> out;
  out.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t cls = i % classes;
    const double rate = kTwoPi * static_cast<double>(cls + 1) / kBaseFrames;
    const double phase = 0.35 * static_cast<double>(cls);
    const double jitter = detail::uniform_range(rng, -0.1, 0.1);

    SkeletonSequence seq;
    seq.label = static_cast<int>(cls);
    seq.meta.subject = "s" + std::to_string(i % 5);
    seq.meta.view = "v" + std::to_string(i % 2);
    seq.meta.source = "synth";
    seq.frames.reserve(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      SkeletonFrame frame;
      frame.joints.resize(joints);
      for (std::size_t jn = 0; jn < joints; ++jn)
        frame.joints[jn] = {0.2 * static_cast<double>(jn), 0.0, 0.5};
      frame.joints[joints - 1][1] +=
          std::sin(rate * static_cast<double>(t) + phase + jitter);
      if (noise_sigma > 0.0) {
        for (auto& joint : frame.joints)
          for (int c = 0; c < 3; ++c) joint[c] += noise_sigma * detail::gaussian(rng);
      }
      seq.frames.push_back(std::move(frame));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

void apply_affine(SkeletonSequence& seq, const std::array<double, 12>& m) {
  for (auto& frame : seq.frames) {
    for (auto& joint : frame.joints) {
      const double x = joint[0], y = joint[1], z = joint[2];
      joint[0] = m[0] * x + m[1] * y + m[2] * z + m[3];
      joint[1] = m[4] * x + m[5] * y + m[6] * z + m[7];
      joint[2] = m[8] * x + m[9] * y + m[10] * z + m[11];
    }
  }
}

void subtract_root(SkeletonSequence& seq, std::size_t root_joint) {
  for (auto& frame : seq.frames) {
    if (root_joint >= frame.joints.size())
      throw DataError("subtract_root: root joint " + std::to_string(root_joint) +
                      " out of range for " + std::to_string(frame.joints.size()) +
                      " joints");
    const std::array<double, 3> root = frame.joints[root_joint];
    for (auto& joint : frame.joints)
      for (int c = 0; c < 3; ++c) joint[c] -= root[c];
  }
}

}  // namespace stmlp
