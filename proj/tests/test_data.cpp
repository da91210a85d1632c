#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "stmlp/data.hpp"

using namespace stmlp;

TEST_CASE("minimal valid record loads to the expected value") {
  const std::string line =
      R"({"format_version":1,"meta":{"subject":"s1","view":"v0","source":"unit"},)"
      R"("label":2,"frames":[[[1.0,2.0,3.0],[4.0,5.0,6.0]],[[7.0,8.0,9.0],[10.0,11.0,12.0]]]})";
  std::istringstream in(line);
  auto seqs = load_dataset(in, 2, "inline");
  REQUIRE(seqs.size() == 1);
  const auto& s = seqs[0];
  CHECK(s.meta.subject == "s1");
  CHECK(s.meta.view == "v0");
  CHECK(s.label.has_value());
  CHECK(*s.label == 2);
  CHECK_FALSE(s.frame_labeled());
  REQUIRE(s.frames.size() == 2);
  CHECK(s.frames[0].joints[0] == std::array<double, 3>{1.0, 2.0, 3.0});
  CHECK(s.frames[1].joints[1] == std::array<double, 3>{10.0, 11.0, 12.0});
}

TEST_CASE("loader rejects malformed records with the line number") {
  SUBCASE("NaN coordinate") {
    std::istringstream in(
        "{\"label\":0,\"frames\":[[[0,0,0]]]}\n"
        "{\"label\":1,\"frames\":[[[1,NaN,0]]]}\n");
    CHECK_THROWS_WITH_AS(load_dataset(in, 1, "f"), "f:2: invalid JSON", DataError);
  }
  SUBCASE("non-finite coordinate is rejected with the record line") {
    // JSON cannot carry NaN/Inf, so the parse tier already rejects it; the
    // diagnostic still names the record.
    std::istringstream in("{\"label\":0,\"frames\":[[[1e999,0,0]]]}\n");
    try {
      load_dataset(in, 1, "f");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).rfind("f:1:", 0) == 0);
    }
  }
  SUBCASE("joint count mismatch") {
    std::istringstream in("{\"label\":0,\"frames\":[[[0,0,0],[1,1,1]]]}\n");
    CHECK_THROWS_WITH_AS(load_dataset(in, 3, "f"),
                         "f:1: joint count 2 does not match expected 3", DataError);
  }
  SUBCASE("missing label") {
    std::istringstream in("{\"frames\":[[[0,0,0]]]}\n");
    CHECK_THROWS_AS(load_dataset(in, 1, "f"), DataError);
  }
  SUBCASE("negative label") {
    std::istringstream in("{\"label\":-3,\"frames\":[[[0,0,0]]]}\n");
    CHECK_THROWS_AS(load_dataset(in, 1, "f"), DataError);
  }
  SUBCASE("frame-label length mismatch") {
    std::istringstream in("{\"labels\":[1,2],\"frames\":[[[0,0,0]]]}\n");
    CHECK_THROWS_AS(load_dataset(in, 1, "f"), DataError);
  }
}

TEST_CASE("save then load is the identity on a random dataset") {
  auto seqs = synth_gestures(3, 20, 4, 6, 0.05, 99);
  // mix in a frame-labeled sequence
  SkeletonSequence fl = seqs[0];
  fl.label.reset();
  fl.frame_labels.assign(fl.frames.size(), 2);
  seqs.push_back(fl);

  std::stringstream buf;
  save_dataset(buf, seqs);
  auto back = load_dataset(buf, 4, "buffer");
  REQUIRE(back.size() == seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    CHECK(back[i].meta.subject == seqs[i].meta.subject);
    CHECK(back[i].meta.view == seqs[i].meta.view);
    CHECK(back[i].label == seqs[i].label);
    CHECK(back[i].frame_labels == seqs[i].frame_labels);
    REQUIRE(back[i].frames.size() == seqs[i].frames.size());
    for (std::size_t t = 0; t < seqs[i].frames.size(); ++t)
      for (std::size_t j = 0; j < seqs[i].frames[t].joints.size(); ++j)
        for (int c = 0; c < 3; ++c)
          CHECK(back[i].frames[t].joints[j][c] ==
                doctest::Approx(seqs[i].frames[t].joints[j][c]).epsilon(1e-15));
  }
}

namespace {

SkeletonSequence frame_labeled_sequence(std::size_t frames, std::size_t joints) {
  SkeletonSequence seq;
  for (std::size_t t = 0; t < frames; ++t) {
    SkeletonFrame f;
    for (std::size_t j = 0; j < joints; ++j)
      f.joints.push_back({static_cast<double>(t), static_cast<double>(j), 0.0});
    seq.frames.push_back(std::move(f));
    seq.frame_labels.push_back(static_cast<int>(t % 3));
  }
  return seq;
}

}  // namespace

TEST_CASE("window_frames pads the left edge by repeating the first frame") {
  SkeletonSequence one = frame_labeled_sequence(1, 2);
  auto windows = window_frames(one, 3);
  REQUIRE(windows.size() == 1);
  REQUIRE(windows[0].frames.size() == 3);
  for (const auto& f : windows[0].frames)
    CHECK(f.joints[0][0] == one.frames[0].joints[0][0]);
  CHECK(windows[0].label == one.frame_labels[0]);
}

TEST_CASE("window_frames emits one causal window per frame") {
  SkeletonSequence seq = frame_labeled_sequence(5, 1);
  auto windows = window_frames(seq, 3);
  REQUIRE(windows.size() == 5);
  // window for t=4 is frames 2,3,4
  CHECK(windows[4].frames[0].joints[0][0] == 2.0);
  CHECK(windows[4].frames[1].joints[0][0] == 3.0);
  CHECK(windows[4].frames[2].joints[0][0] == 4.0);
  CHECK(windows[4].label == seq.frame_labels[4]);
  // never reads outside the sequence: every coordinate matches a source frame
  for (const auto& w : windows)
    for (const auto& f : w.frames) {
      CHECK(f.joints[0][0] >= 0.0);
      CHECK(f.joints[0][0] <= 4.0);
    }
  CHECK_THROWS_AS(window_frames(SkeletonSequence{}, 3), DataError);
}

TEST_CASE("resample keeps a matching-length sequence unchanged") {
  auto seqs = synth_gestures(2, 2, 3, 7, 0.0, 5);
  SkeletonSequence r = resample_sequence(seqs[0], 7);
  REQUIRE(r.frames.size() == 7);
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t j = 0; j < 3; ++j)
      for (int c = 0; c < 3; ++c)
        CHECK(r.frames[t].joints[j][c] ==
              doctest::Approx(seqs[0].frames[t].joints[j][c]).epsilon(1e-12));
}

TEST_CASE("resampling a 2-frame sequence to 3 inserts the midpoint") {
  SkeletonSequence seq;
  seq.label = 0;
  seq.frames.push_back({{{0.0, 0.0, 0.0}}});
  seq.frames.push_back({{{2.0, 4.0, 6.0}}});
  SkeletonSequence r = resample_sequence(seq, 3);
  REQUIRE(r.frames.size() == 3);
  CHECK(r.frames[1].joints[0][0] == doctest::Approx(1.0));
  CHECK(r.frames[1].joints[0][1] == doctest::Approx(2.0));
  CHECK(r.frames[1].joints[0][2] == doctest::Approx(3.0));
}

TEST_CASE("down-then-up resampling reproduces constant-velocity motion") {
  SkeletonSequence seq;
  seq.label = 1;
  for (int t = 0; t < 21; ++t)
    seq.frames.push_back({{{0.3 * t, -0.1 * t, 2.0 + 0.05 * t}}});
  SkeletonSequence down = resample_sequence(seq, 6);
  SkeletonSequence up = resample_sequence(down, 21);
  for (std::size_t t = 0; t < 21; ++t)
    for (int c = 0; c < 3; ++c)
      CHECK(std::fabs(up.frames[t].joints[0][c] - seq.frames[t].joints[0][c]) <= 1e-9);
}

TEST_CASE("resampling stays inside the per-axis coordinate range") {
  auto seqs = synth_gestures(2, 4, 2, 9, 0.05, 17);
  for (const auto& seq : seqs) {
    SkeletonSequence r = resample_sequence(seq, 25);
    for (std::size_t j = 0; j < 2; ++j)
      for (int c = 0; c < 3; ++c) {
        double lo = 1e300, hi = -1e300;
        for (const auto& f : seq.frames) {
          lo = std::min(lo, f.joints[j][c]);
          hi = std::max(hi, f.joints[j][c]);
        }
        for (const auto& f : r.frames) {
          CHECK(f.joints[j][c] >= lo - 1e-12);
          CHECK(f.joints[j][c] <= hi + 1e-12);
        }
      }
  }
}

TEST_CASE("balanced sampler is deterministic and near-uniform") {
  // heavily imbalanced labels: 99:1
  std::vector<int> labels;
  for (int i = 0; i < 990; ++i) labels.push_back(0);
  for (int i = 0; i < 10; ++i) labels.push_back(1);

  BalancedSampler a(labels, 2, 7);
  BalancedSampler b(labels, 2, 7);
  std::size_t counts[2] = {0, 0};
  for (int batch = 0; batch < 10; ++batch) {
    auto ba = a.next_batch(1000);
    auto bb = b.next_batch(1000);
    CHECK(ba == bb);
    for (std::size_t idx : ba) ++counts[static_cast<std::size_t>(labels[idx])];
  }
  const double share0 = static_cast<double>(counts[0]) / 10000.0;
  CHECK(share0 > 0.48);
  CHECK(share0 < 0.52);
}

TEST_CASE("balanced sampler with one class and with an empty class") {
  std::vector<int> labels(5, 0);
  BalancedSampler s(labels, 1, 3);
  for (std::size_t idx : s.next_batch(64)) CHECK(labels[idx] == 0);
  CHECK_THROWS_AS(BalancedSampler(labels, 2, 3), DataError);
}

TEST_CASE("split_by holds out subjects and partitions the dataset") {
  auto seqs = synth_gestures(2, 30, 2, 4, 0.0, 23);  // subjects s0..s4
  DatasetSplit split = split_by(seqs, SplitKey::subject, {"s1"});
  CHECK(split.train.size() + split.test.size() == seqs.size());
  for (std::size_t i : split.test) CHECK(seqs[i].meta.subject == "s1");
  for (std::size_t i : split.train) CHECK(seqs[i].meta.subject != "s1");

  DatasetSplit all_train = split_by(seqs, SplitKey::subject, {});
  CHECK(all_train.train.size() == seqs.size());
  CHECK(all_train.test.empty());

  DatasetSplit with_val = split_by(seqs, SplitKey::view, {"v0"}, {"v1"});
  CHECK(with_val.train.empty());
  CHECK(with_val.val.size() + with_val.test.size() == seqs.size());
}

TEST_CASE("synthetic classes are separable: nearest centroid scores 100% at sigma 0") {
  const std::size_t classes = 4, n = 80, joints = 3, frames = 16;
  auto seqs = synth_gestures(classes, n, joints, frames, 0.0, 11);
  REQUIRE(seqs.size() == n);

  auto flatten = [&](const SkeletonSequence& s) {
    std::vector<double> v;
    for (const auto& f : s.frames)
      for (const auto& j : f.joints)
        for (int c = 0; c < 3; ++c) v.push_back(j[c]);
    return v;
  };
  const std::size_t dim = frames * joints * 3;
  std::vector<std::vector<double>> centroid(classes, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> count(classes, 0);
  for (const auto& s : seqs) {
    auto v = flatten(s);
    auto& c = centroid[static_cast<std::size_t>(*s.label)];
    for (std::size_t i = 0; i < dim; ++i) c[i] += v[i];
    ++count[static_cast<std::size_t>(*s.label)];
  }
  for (std::size_t c = 0; c < classes; ++c)
    for (double& x : centroid[c]) x /= static_cast<double>(count[c]);

  std::size_t correct = 0;
  for (const auto& s : seqs) {
    auto v = flatten(s);
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < classes; ++c) {
      double d = 0.0;
      for (std::size_t i = 0; i < dim; ++i)
        d += (v[i] - centroid[c][i]) * (v[i] - centroid[c][i]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best == static_cast<std::size_t>(*s.label)) ++correct;
  }
  CHECK(correct == n);
}

TEST_CASE("synthetic generation is deterministic per seed and round-trips") {
  auto a = synth_gestures(3, 9, 2, 5, 0.05, 31);
  auto b = synth_gestures(3, 9, 2, 5, 0.05, 31);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t t = 0; t < a[i].frames.size(); ++t)
      CHECK(a[i].frames[t].joints == b[i].frames[t].joints);

  std::stringstream buf;
  save_dataset(buf, a);
  auto back = load_dataset(buf, 2, "buffer");
  CHECK(back.size() == a.size());
}

TEST_CASE("affine hook and root subtraction") {
  SkeletonSequence seq;
  seq.label = 0;
  seq.frames.push_back({{{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}}});

  SkeletonSequence moved = seq;
  // pure translation by (10, 20, 30)
  apply_affine(moved, {1, 0, 0, 10, 0, 1, 0, 20, 0, 0, 1, 30});
  CHECK(moved.frames[0].joints[0] == std::array<double, 3>{11.0, 22.0, 33.0});
  CHECK(moved.frames[0].joints[1] == std::array<double, 3>{14.0, 25.0, 36.0});

  SkeletonSequence rooted = seq;
  subtract_root(rooted, 0);
  CHECK(rooted.frames[0].joints[0] == std::array<double, 3>{0.0, 0.0, 0.0});
  CHECK(rooted.frames[0].joints[1] == std::array<double, 3>{3.0, 3.0, 3.0});
  CHECK_THROWS_AS(subtract_root(rooted, 5), DataError);
}
