#include "stmlp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <thread>

#include "stmlp/data.hpp"

namespace stmlp {

CrossEntropy cross_entropy(const Vector& logits, std::size_t label) {
  if (label >= logits.size())
    throw std::out_of_range("cross_entropy: label " + std::to_string(label) +
                            " out of range for " + std::to_string(logits.size()) +
                            " classes");
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - m);
  const double lse = m + std::log(sum);

  CrossEntropy out;
  out.loss = lse - logits[label];
  out.grad_logits.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    out.grad_logits[i] = std::exp(logits[i] - lse);
  out.grad_logits[label] -= 1.0;
  return out;
}

OptimState make_optim_state(const ModelParams& params, OptimizerKind kind,
                            OptimHyper hyper) {
  OptimState s;
  s.kind = kind;
  s.hyper = hyper;
  s.first_moment = zeros_like(params);
  s.second_moment = zeros_like(params);
  if (kind == OptimizerKind::ranger) s.slow_weights = params;
  return s;
}

void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v, std::size_t t,
                 double lr, const OptimHyper& h) {
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + h.epsilon);
  }
}

bool radam_update(std::span<double> param, std::span<const double> grad,
                  std::span<double> m, std::span<double> v, std::size_t t,
                  double lr, const OptimHyper& h) {
  const double td = static_cast<double>(t);
  const double beta2_t = std::pow(h.beta2, td);
  const double bc1 = 1.0 - std::pow(h.beta1, td);
  const double rho_inf = 2.0 / (1.0 - h.beta2) - 1.0;
  const double rho_t = rho_inf - 2.0 * td * beta2_t / (1.0 - beta2_t);
  const bool rectified = rho_t > 4.0;
  double rect = 0.0;
  if (rectified) {
    rect = std::sqrt((rho_t - 4.0) * (rho_t - 2.0) * rho_inf /
                     ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
    const double mhat = m[i] / bc1;
    if (rectified) {
      const double vhat = std::sqrt(v[i] / (1.0 - beta2_t));
      param[i] -= lr * rect * mhat / (vhat + h.epsilon);
    } else {
      // variance rectification undefined yet: momentum-only step
      param[i] -= lr * mhat;
    }
  }
  return rectified;
}

namespace {

template <typename Fn>
void for_each_slab(ModelParams& params, const ModelParams& grads,
                   ModelParams& m, ModelParams& v, Fn&& fn) {
  auto pv = named_params(params);
  auto gv = named_params(grads);
  auto mv = named_params(m);
  auto vv = named_params(v);
  for (std::size_t i = 0; i < pv.size(); ++i) {
    fn(std::span<double>(*pv[i].data), std::span<const double>(*gv[i].data),
       std::span<double>(*mv[i].data), std::span<double>(*vv[i].data));
  }
}

void lookahead_sync(OptimState& state, ModelParams& params) {
  if (state.step % state.hyper.lookahead_k != 0) return;
  auto fast = named_params(params);
  auto slow = named_params(*state.slow_weights);
  const double alpha = state.hyper.lookahead_alpha;
  for (std::size_t i = 0; i < fast.size(); ++i) {
    auto& f = *fast[i].data;
    auto& s = *slow[i].data;
    for (std::size_t j = 0; j < f.size(); ++j) {
      s[j] += alpha * (f[j] - s[j]);
      f[j] = s[j];
    }
  }
}

}  // namespace

void adam_step(OptimState& state, ModelParams& params, const ModelParams& grads,
               double lr) {
  ++state.step;
  for_each_slab(params, grads, state.first_moment, state.second_moment,
                [&](auto p, auto g, auto m, auto v) {
                  adam_update(p, g, m, v, state.step, lr, state.hyper);
                });
}

void ranger_step(OptimState& state, ModelParams& params, const ModelParams& grads,
                 double lr) {
  ++state.step;
  bool rectified = false;
  for_each_slab(params, grads, state.first_moment, state.second_moment,
                [&](auto p, auto g, auto m, auto v) {
                  rectified = radam_update(p, g, m, v, state.step, lr, state.hyper);
                });
  state.last_step_rectified = rectified;
  if (!state.slow_weights) state.slow_weights = params;
  lookahead_sync(state, params);
}

void optim_step(OptimState& state, ModelParams& params, const ModelParams& grads,
                double lr) {
  if (state.kind == OptimizerKind::adam)
    adam_step(state, params, grads, lr);
  else
    ranger_step(state, params, grads, lr);
}

double lr_at(const LrSchedule& s, std::size_t epoch) {
  if (epoch >= s.total_epochs)
    throw std::out_of_range("lr_at: epoch " + std::to_string(epoch) +
                            " out of range for " + std::to_string(s.total_epochs) +
                            " epochs");
  const std::size_t start = s.kind == ScheduleKind::flat_then_cosine ? s.switch_epoch : 0;
  if (epoch < start) return s.base_lr;
  const std::size_t last = s.total_epochs - 1;
  if (last <= start) return epoch == last && last == start ? s.final_lr : s.base_lr;
  const double progress = static_cast<double>(epoch - start) /
                          static_cast<double>(last - start);
  return s.final_lr +
         (s.base_lr - s.final_lr) * 0.5 * (1.0 + std::cos(3.141592653589793 * progress));
}

std::vector<TrainSample> make_samples(const std::vector<SkeletonSequence>& seqs,
                                      const ModelConfig& cfg) {
  std::vector<TrainSample> out;
  for (const auto& seq : seqs) {
    if (seq.frame_labeled()) {
      for (auto& w : window_frames(seq, cfg.seq_len)) {
        SkeletonSequence window;
        window.frames = std::move(w.frames);
        out.push_back({flatten_sequence(window, cfg), w.label});
      }
    } else {
      SkeletonSequence fixed = seq.frames.size() == cfg.seq_len
                                   ? seq
                                   : resample_sequence(seq, cfg.seq_len);
      out.push_back({flatten_sequence(fixed, cfg), seq.label.value_or(0)});
    }
  }
  return out;
}

std::string format_epoch_log(const EpochLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "epoch=%zu lr=%.12g loss=%.12g acc=%.12g",
                e.epoch, e.lr, e.mean_loss, e.accuracy);
  return buf;
}

namespace {

/// Runs fn(first, last) over contiguous shards; results merge in shard order
/// so the outcome is deterministic for a fixed shard count.
void parallel_shards(std::size_t n, std::size_t threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, n));
  if (workers == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t first = w * chunk;
    const std::size_t last = std::min(n, first + chunk);
    if (first >= last) break;
    pool.emplace_back([&fn, w, first, last] { fn(w, first, last); });
  }
  for (auto& t : pool) t.join();
}

std::size_t argmax(const Vector& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

double dataset_accuracy(const ModelParams& params, const ModelConfig& cfg,
                        const std::vector<TrainSample>& samples,
                        std::size_t threads) {
  std::vector<std::size_t> correct(std::max<std::size_t>(1, threads), 0);
  parallel_shards(samples.size(), threads,
                  [&](std::size_t w, std::size_t first, std::size_t last) {
                    std::size_t hits = 0;
                    for (std::size_t i = first; i < last; ++i) {
                      const Vector logits = forward_flat(params, cfg, samples[i].input);
                      if (argmax(logits) == static_cast<std::size_t>(samples[i].label))
                        ++hits;
                    }
                    correct[w] = hits;
                  });
  std::size_t hits = 0;
  for (std::size_t c : correct) hits += c;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

void scale_params(ModelParams& p, double factor) {
  for (auto& view : named_params(p))
    for (double& x : *view.data) x *= factor;
}

void add_params(ModelParams& into, const ModelParams& other) {
  auto a = named_params(into);
  auto b = named_params(other);
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto& dst = *a[i].data;
    const auto& src = *b[i].data;
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

}  // namespace

std::vector<EpochLog> train(ModelParams& params, const ModelConfig& cfg,
                            const std::vector<TrainSample>& samples,
                            const TrainOptions& options) {
  if (samples.empty()) throw DataError("train: empty dataset");
  if (options.batch_size == 0) throw ConfigError("train: batch size must be >= 1");
  if (options.epochs > options.schedule.total_epochs)
    throw ConfigError("train: schedule covers " +
                      std::to_string(options.schedule.total_epochs) +
                      " epochs but " + std::to_string(options.epochs) +
                      " were requested");
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= cfg.classes)
      throw DataError("train: label " + std::to_string(s.label) +
                      " outside [0, " + std::to_string(cfg.classes) + ")");
    labels.push_back(s.label);
  }

  BalancedSampler sampler(labels, cfg.classes, options.seed);
  OptimState state = make_optim_state(params, options.optimizer, options.hyper);
  const std::size_t batches_per_epoch =
      (samples.size() + options.batch_size - 1) / options.batch_size;
  const std::size_t workers = std::max<std::size_t>(1, options.threads);

  std::vector<EpochLog> log;
  log.reserve(options.epochs);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const double lr = lr_at(options.schedule, epoch);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::vector<std::size_t> batch = sampler.next_batch(options.batch_size);
      std::vector<ModelParams> shard_grads(workers);
      std::vector<double> shard_loss(workers, 0.0);
      parallel_shards(batch.size(), workers,
                      [&](std::size_t w, std::size_t first, std::size_t last) {
                        ModelParams grads = zeros_like(params);
                        double loss = 0.0;
                        ForwardCache cache;
                        for (std::size_t i = first; i < last; ++i) {
                          const TrainSample& s = samples[batch[i]];
                          const Vector logits =
                              forward_flat(params, cfg, s.input, &cache);
                          CrossEntropy ce =
                              cross_entropy(logits, static_cast<std::size_t>(s.label));
                          loss += ce.loss;
                          accumulate_backward(params, cfg, cache, ce.grad_logits, grads);
                        }
                        shard_grads[w] = std::move(grads);
                        shard_loss[w] = loss;
                      });
      ModelParams grads = std::move(shard_grads[0]);
      for (std::size_t w = 1; w < workers; ++w) {
        if (!shard_grads[w].blocks.empty() || !shard_grads[w].projection.empty())
          add_params(grads, shard_grads[w]);
      }
      scale_params(grads, 1.0 / static_cast<double>(batch.size()));
      optim_step(state, params, grads, lr);
      for (double l : shard_loss) loss_sum += l;
      loss_count += batch.size();
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    entry.mean_loss = loss_sum / static_cast<double>(loss_count);
    entry.accuracy = dataset_accuracy(params, cfg, samples, workers);
    if (options.log) *options.log << format_epoch_log(entry) << '\n';
    log.push_back(entry);
  }
  return log;
}

}  // namespace stmlp
