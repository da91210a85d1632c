#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stmlp/common.hpp"

namespace stmlp {

/// C x C counts, rows are true classes, columns predicted classes.
/// Matrices merge by entrywise addition, so evaluation can shard.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);

  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);
  void merge(const ConfusionMatrix& other);

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const;
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t truth) const;
  std::uint64_t col_sum(std::size_t predicted) const;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

/// How classes with no true and no predicted items enter macro means.
enum class ZeroSupport { exclude, zero, one };

/// trace / total.
double accuracy(const ConfusionMatrix& cm);

/// Unweighted mean over classes of TP / (TP + FP + FN).
double macro_jaccard(const ConfusionMatrix& cm, ZeroSupport policy = ZeroSupport::exclude);
/// Unweighted mean over classes of 2*TP / (2*TP + FP + FN).
double macro_f1(const ConfusionMatrix& cm, ZeroSupport policy = ZeroSupport::exclude);

/// Mean over classes with at least one true item of diagonal / row sum.
double mean_per_class_accuracy(const ConfusionMatrix& cm);

/// Structured text: the four metrics, per-class rows, raw counts.
std::string evaluation_report(const ConfusionMatrix& cm);

}  // namespace stmlp
