#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stmlp/common.hpp"

namespace stmlp {

/// One time step: K joints with (x, y, z) coordinates.
struct SkeletonFrame {
  std::vector<std::array<double, 3>> joints;
};

struct SequenceMeta {
  std::string subject;
  std::string view;
  std::string source;
};

/// A pose sequence with either one label for the whole sequence or one label
/// per frame.
struct SkeletonSequence {
  std::vector<SkeletonFrame> frames;
  std::optional<int> label;       // sequence-level
  std::vector<int> frame_labels;  // frame-level; empty when sequence-level
  SequenceMeta meta;

  bool frame_labeled() const { return !frame_labels.empty(); }
  std::size_t joint_count() const {
    return frames.empty() ? 0 : frames.front().joints.size();
  }
};

// --- native file format: one JSON record per line ---
// {"format_version":1,"meta":{"subject":...,"view":...,"source":...},
//  "label":2 | "labels":[...], "frames":[[[x,y,z],...K] x frame count]}

/// Loads a JSON-lines dataset. expected_joints == 0 infers K from the first
/// record; every record must agree. Malformed records raise DataError with
/// the offending line number.
std::vector<SkeletonSequence> load_dataset(const std::string& path,
                                           std::size_t expected_joints = 0);
std::vector<SkeletonSequence> load_dataset(std::istream& in,
                                           std::size_t expected_joints,
                                           const std::string& origin);

void save_dataset(const std::string& path, const std::vector<SkeletonSequence>& seqs);
void save_dataset(std::ostream& out, const std::vector<SkeletonSequence>& seqs);

/// Serializes one sequence as a native-format line (no trailing newline).
std::string to_record(const SkeletonSequence& seq);
/// Parses one native-format line.
SkeletonSequence parse_record(const std::string& line, std::size_t expected_joints = 0);

// --- windowing and resampling ---

struct LabeledWindow {
  std::vector<SkeletonFrame> frames;  // exactly the window length
  int label;
};

/// For each frame t of a frame-labeled sequence, the causal window of the
/// window_len frames ending at t, left-padded by repeating the first frame;
/// labeled with frame t's label.
std::vector<LabeledWindow> window_frames(const SkeletonSequence& seq,
                                         std::size_t window_len);

/// Uniform temporal resampling of a sequence-labeled sequence to target_len
/// frames by linear interpolation of joint coordinates.
SkeletonSequence resample_sequence(const SkeletonSequence& seq, std::size_t target_len);

// --- batching and splits ---

/// Draws balanced batches: each slot picks a class uniformly, then a sample
/// of that class uniformly, with replacement. Deterministic per seed.
class BalancedSampler {
 public:
  BalancedSampler(const std::vector<int>& labels, std::size_t classes,
                  std::uint64_t seed);
  std::vector<std::size_t> next_batch(std::size_t batch_size);

 private:
  std::vector<std::vector<std::size_t>> by_class_;
  std::mt19937_64 rng_;
};

enum class SplitKey { subject, view };

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Sequences whose key value is in test_values go to test, in val_values to
/// val, the rest to train. A held-out value matching nothing logs a warning
/// to stderr.
DatasetSplit split_by(const std::vector<SkeletonSequence>& seqs, SplitKey key,
                      const std::vector<std::string>& test_values,
                      const std::vector<std::string>& val_values = {});

// --- synthetic gestures ---

/// Desk-scale verification corpus: class c moves the last joint along a
/// sinusoid with class-specific frequency and phase, plus Gaussian noise of
/// the given sigma on every coordinate. Classes are separable by
/// construction for sigma <= 0.05. Deterministic per seed.
std::vector<SkeletonSequence> synth_gestures(std::size_t classes,
                                             std::size_t samples,
                                             std::size_t joints,
                                             std::size_t frames,
                                             double noise_sigma,
                                             std::uint64_t seed);

// --- preprocessing hooks ---

/// Applies the 3x4 row-major affine map [R | t] to every joint.
void apply_affine(SkeletonSequence& seq, const std::array<double, 12>& m);

/// Subtracts the root joint from all joints, per frame.
void subtract_root(SkeletonSequence& seq, std::size_t root_joint);

}  // namespace stmlp
