#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "stmlp/model.hpp"

namespace stmlp {

// --- objective ---

struct CrossEntropy {
  double loss;
  Vector grad_logits;  // softmax(logits) - one_hot(label)
};

/// Negative log softmax probability of the true class, computed via a
/// stable log-sum-exp.
CrossEntropy cross_entropy(const Vector& logits, std::size_t label);

// --- optimizers ---

enum class OptimizerKind { adam, ranger };

struct OptimHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t lookahead_k = 6;   // ranger only
  double lookahead_alpha = 0.5;  // ranger only
};

/// Per-parameter accumulators mirror the parameter structure exactly.
struct OptimState {
  OptimizerKind kind = OptimizerKind::adam;
  OptimHyper hyper;
  std::size_t step = 0;
  ModelParams first_moment;
  ModelParams second_moment;
  std::optional<ModelParams> slow_weights;  // lookahead copy (ranger)
  bool last_step_rectified = false;         // which RAdam branch ran last
};

OptimState make_optim_state(const ModelParams& params, OptimizerKind kind,
                            OptimHyper hyper = {});

/// Bias-corrected Adam on one parameter slab; t is the 1-based step count.
void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, std::size_t t,
                 double lr, const OptimHyper& hyper);

/// Rectified-Adam update on one slab. Returns true when the variance
/// rectification was applied; before it becomes defined the step falls back
/// to a momentum-only update.
bool radam_update(std::span<double> param, std::span<const double> grad,
                  std::span<double> m, std::span<double> v, std::size_t t,
                  double lr, const OptimHyper& hyper);

/// One optimizer step over the whole model (state.kind selects the rule;
/// ranger wraps RAdam in lookahead).
void optim_step(OptimState& state, ModelParams& params, const ModelParams& grads,
                double lr);
void adam_step(OptimState& state, ModelParams& params, const ModelParams& grads,
               double lr);
void ranger_step(OptimState& state, ModelParams& params, const ModelParams& grads,
                 double lr);

// --- learning-rate schedules ---

enum class ScheduleKind { flat_then_cosine, cosine };

struct LrSchedule {
  ScheduleKind kind = ScheduleKind::cosine;
  double base_lr = 1e-3;
  double final_lr = 1e-4;
  std::size_t switch_epoch = 0;  // flat until here (flat_then_cosine)
  std::size_t total_epochs = 1;
};

double lr_at(const LrSchedule& schedule, std::size_t epoch);

// --- training loop ---

struct TrainSample {
  Matrix input;  // seq_len x pose_width, already flattened
  int label;
};

/// Windows frame-labeled sequences, resamples sequence-labeled ones, and
/// flattens everything to model inputs.
std::vector<TrainSample> make_samples(const std::vector<SkeletonSequence>& seqs,
                                      const ModelConfig& cfg);

struct EpochLog {
  std::size_t epoch;
  double lr;
  double mean_loss;  // mean over the epoch's sampled batch losses
  double accuracy;   // over all samples with end-of-epoch parameters
};

struct TrainOptions {
  OptimizerKind optimizer = OptimizerKind::adam;
  OptimHyper hyper;
  LrSchedule schedule;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::ostream* log = nullptr;  // one line per epoch:
                                // epoch=<e> lr=<lr> loss=<loss> acc=<acc>
};

/// Balanced-batch training; an epoch draws ceil(n / batch_size) batches with
/// replacement. Deterministic for a fixed seed and thread count.
std::vector<EpochLog> train(ModelParams& params, const ModelConfig& cfg,
                            const std::vector<TrainSample>& samples,
                            const TrainOptions& options);

std::string format_epoch_log(const EpochLog& e);

}  // namespace stmlp
