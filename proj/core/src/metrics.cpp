#include "stmlp/metrics.hpp"

#include <cstdio>
#include <sstream>

namespace stmlp {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw ConfigError("confusion matrix: need at least 1 class");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted,
                          std::uint64_t count) {
  if (truth >= classes_ || predicted >= classes_)
    throw DataError("confusion matrix: class index out of range (" +
                    std::to_string(truth) + ", " + std::to_string(predicted) +
                    ") for " + std::to_string(classes_) + " classes");
  counts_[truth * classes_ + predicted] += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_)
    throw ShapeError("confusion matrix merge: " + std::to_string(classes_) +
                     " vs " + std::to_string(other.classes_) + " classes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
  return counts_[truth * classes_ + predicted];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (std::uint64_t c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t t = 0;
  for (std::size_t p = 0; p < classes_; ++p) t += at(truth, p);
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::uint64_t t = 0;
  for (std::size_t r = 0; r < classes_; ++r) t += at(r, predicted);
  return t;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t n = cm.total();
  if (n == 0) throw DataError("accuracy: no evaluated items");
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) trace += cm.at(c, c);
  return static_cast<double>(trace) / static_cast<double>(n);
}

namespace {

/// Macro mean of a per-class score computed from (tp, fp, fn).
template <typename Score>
double macro_mean(const ConfusionMatrix& cm, ZeroSupport policy, Score score) {
  if (cm.classes() < 2)
    throw ConfigError("macro metric: need at least 2 classes");
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t fp = cm.col_sum(c) - tp;
    const std::uint64_t fn = cm.row_sum(c) - tp;
    if (tp + fp + fn == 0) {
      switch (policy) {
        case ZeroSupport::exclude: continue;
        case ZeroSupport::zero: break;
        case ZeroSupport::one: sum += 1.0; break;
      }
      ++counted;
      continue;
    }
    sum += score(tp, fp, fn);
    ++counted;
  }
  if (counted == 0) throw DataError("macro metric: all classes empty");
  return sum / static_cast<double>(counted);
}

}  // namespace

double macro_jaccard(const ConfusionMatrix& cm, ZeroSupport policy) {
  return macro_mean(cm, policy, [](std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
    return static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
  });
}

double macro_f1(const ConfusionMatrix& cm, ZeroSupport policy) {
  return macro_mean(cm, policy, [](std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
    return static_cast<double>(2 * tp) / static_cast<double>(2 * tp + fp + fn);
  });
}

double mean_per_class_accuracy(const ConfusionMatrix& cm) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::uint64_t support = cm.row_sum(c);
    if (support == 0) continue;
    sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(support);
    ++counted;
  }
  if (counted == 0) throw DataError("mean_per_class_accuracy: no class has items");
  return sum / static_cast<double>(counted);
}

std::string evaluation_report(const ConfusionMatrix& cm) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "samples: %llu\n",
                static_cast<unsigned long long>(cm.total()));
  out << line;
  std::snprintf(line, sizeof(line), "accuracy: %.6f\n", accuracy(cm));
  out << line;
  std::snprintf(line, sizeof(line), "macro_jaccard: %.6f\n", macro_jaccard(cm));
  out << line;
  std::snprintf(line, sizeof(line), "macro_f1: %.6f\n", macro_f1(cm));
  out << line;
  std::snprintf(line, sizeof(line), "mean_per_class_accuracy: %.6f\n",
                mean_per_class_accuracy(cm));
  out << line;
  out << "class support recall f1 jaccard\n";
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t fp = cm.col_sum(c) - tp;
    const std::uint64_t fn = cm.row_sum(c) - tp;
    const std::uint64_t support = cm.row_sum(c);
    const double recall =
        support ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
    const double f1 = (2 * tp + fp + fn)
                          ? static_cast<double>(2 * tp) /
                                static_cast<double>(2 * tp + fp + fn)
                          : 0.0;
    const double jac = (tp + fp + fn)
                           ? static_cast<double>(tp) /
                                 static_cast<double>(tp + fp + fn)
                           : 0.0;
    std::snprintf(line, sizeof(line), "%zu %llu %.6f %.6f %.6f\n", c,
                  static_cast<unsigned long long>(support), recall, f1, jac);
    out << line;
  }
  out << "confusion_matrix (rows=true, cols=predicted):\n";
  for (std::size_t r = 0; r < cm.classes(); ++r) {
    for (std::size_t p = 0; p < cm.classes(); ++p)
      out << cm.at(r, p) << (p + 1 < cm.classes() ? ' ' : '\n');
  }
  return out.str();
}

}  // namespace stmlp
