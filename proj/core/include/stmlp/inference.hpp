#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <span>
#include <vector>

#include "stmlp/detail/fast_tanh.hpp"
#include "stmlp/detail/gemm.hpp"
#include "stmlp/model.hpp"

namespace stmlp {

/// Low-latency forward pass. Weights are packed once (transposed where the
/// row-major product wants it), activations are preallocated, the mixing
/// products run through the tiled kernel and GeLU through the vectorized
/// tanh. Single-threaded; one engine instance per thread.
///
/// Real = double matches the reference forward to ~1e-12; Real = float is
/// the reduced-precision path for the latency benchmark.
template <typename Real>
class InferenceEngine {
 public:
  InferenceEngine(const ModelParams& params, const ModelConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    pack(params);
    const std::size_t t = cfg.seq_len, s = cfg.hidden_width;
    x_.resize(t * s);
    h_.resize(t * s);
    z_.resize(t * std::max(cfg.spatial_hidden, s));
    mix_.resize(t * s);
    n_.resize(t * s);
    m1_.resize(cfg.temporal_hidden * s);
    stream_b_.resize(t * s);
    col_mean_.resize(s);
    col_inv_.resize(s);
    gap_.resize(t);
    se_hidden_.resize(cfg.se_hidden());
    se_w_.resize(t);
    pooled_.resize(s);
    logits_.resize(cfg.classes);
  }

  const ModelConfig& config() const { return cfg_; }

  /// flat is seq_len * pose_width row-major. The returned span points at an
  /// internal buffer valid until the next run().
  std::span<const Real> run(std::span<const Real> flat) {
    const std::size_t t = cfg_.seq_len, s = cfg_.hidden_width;
    if (flat.size() != t * cfg_.pose_width())
      throw ShapeError("inference: input size " + std::to_string(flat.size()) +
                       " vs expected " + std::to_string(t * cfg_.pose_width()));
    // projection
    std::fill(x_.begin(), x_.end(), Real(0));
    detail::gemm(flat.data(), projection_.wt.data(), x_.data(), t,
                 cfg_.pose_width(), s);
    add_bias_rows(x_.data(), projection_.b.data(), t, s);

    switch (cfg_.variant) {
      case Variant::full:
        for (const auto& b : blocks_) {
          spatial_unit(b, x_.data());
          temporal_unit(b, x_.data());
        }
        pool_rows(x_.data());
        break;
      case Variant::spatial_only:
        for (const auto& b : blocks_) spatial_unit(b, x_.data());
        pool_rows(x_.data());
        break;
      case Variant::temporal_only:
        for (const auto& b : blocks_) temporal_unit(b, x_.data());
        pool_rows(x_.data());
        break;
      case Variant::two_stream: {
        std::memcpy(stream_b_.data(), x_.data(), sizeof(Real) * t * s);
        for (const auto& b : blocks_) spatial_unit(b, x_.data());
        for (const auto& b : blocks_) temporal_unit(b, stream_b_.data());
        pool_two_streams(x_.data(), stream_b_.data());
        break;
      }
    }

    for (std::size_t c = 0; c < cfg_.classes; ++c) {
      const Real* w = classifier_.w.data() + c * s;
      Real acc = classifier_.b[c];
      for (std::size_t j = 0; j < s; ++j) acc += w[j] * pooled_[j];
      logits_[c] = acc;
    }
    return logits_;
  }

  /// Convenience wrapper converting from/to the double-precision types.
  Vector logits(const Matrix& flat) {
    std::vector<Real> in(flat.values.size());
    for (std::size_t i = 0; i < in.size(); ++i)
      in[i] = static_cast<Real>(flat.values[i]);
    auto out = run(in);
    return Vector(out.begin(), out.end());
  }

 private:
  struct Packed {
    std::vector<Real> w;   // row-major out x in
    std::vector<Real> wt;  // transposed, in x out
    std::vector<Real> b;
    std::size_t in = 0, out = 0;
  };
  struct PackedNorm {
    std::vector<Real> gain, bias;
    Real epsilon;
  };
  struct PackedSe {
    Packed reduce, expand;
    bool present = false;
  };
  struct PackedBlock {
    PackedNorm spatial_norm;
    Packed spatial_in, spatial_out;
    PackedNorm temporal_norm;
    Packed temporal_in, temporal_out;
    PackedSe se, se_temporal;
  };

  static Packed pack_linear(const Linear& l, bool need_w, bool need_wt) {
    Packed p;
    p.in = l.in_features();
    p.out = l.out_features();
    if (need_w) {
      p.w.resize(p.out * p.in);
      for (std::size_t i = 0; i < p.w.size(); ++i)
        p.w[i] = static_cast<Real>(l.weight.values[i]);
    }
    if (need_wt) {
      p.wt.resize(p.in * p.out);
      for (std::size_t o = 0; o < p.out; ++o)
        for (std::size_t i = 0; i < p.in; ++i)
          p.wt[i * p.out + o] = static_cast<Real>(l.weight(o, i));
    }
    p.b.resize(p.out);
    for (std::size_t o = 0; o < p.out; ++o) p.b[o] = static_cast<Real>(l.bias[o]);
    return p;
  }

  static PackedNorm pack_norm(const LayerNorm& n) {
    PackedNorm p;
    p.epsilon = static_cast<Real>(n.epsilon);
    p.gain.assign(n.gain.begin(), n.gain.end());
    p.bias.assign(n.bias.begin(), n.bias.end());
    return p;
  }

  static PackedSe pack_se(const SqueezeExcite& se) {
    PackedSe p;
    if (se.empty()) return p;
    p.present = true;
    p.reduce = pack_linear(se.reduce, true, false);
    p.expand = pack_linear(se.expand, true, false);
    return p;
  }

  void pack(const ModelParams& params) {
    projection_ = pack_linear(params.projection, false, true);
    for (const auto& b : params.blocks) {
      PackedBlock pb;
      pb.spatial_norm = pack_norm(b.spatial_norm);
      pb.spatial_in = pack_linear(b.spatial_in, false, true);
      pb.spatial_out = pack_linear(b.spatial_out, false, true);
      pb.temporal_norm = pack_norm(b.temporal_norm);
      pb.temporal_in = pack_linear(b.temporal_in, true, false);
      pb.temporal_out = pack_linear(b.temporal_out, true, false);
      pb.se = pack_se(b.se);
      pb.se_temporal = pack_se(b.se_temporal);
      blocks_.push_back(std::move(pb));
    }
    classifier_ = pack_linear(params.classifier, true, false);
  }

  static void add_bias_rows(Real* m, const Real* bias, std::size_t rows,
                            std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
      Real* row = m + i * cols;
      for (std::size_t j = 0; j < cols; ++j) row[j] += bias[j];
    }
  }

  /// Row-wise layer norm over cols entries.
  static void norm_rows(const PackedNorm& n, const Real* in, Real* out,
                        std::size_t rows, std::size_t cols) {
    const Real inv_d = Real(1) / static_cast<Real>(cols);
    for (std::size_t i = 0; i < rows; ++i) {
      const Real* src = in + i * cols;
      Real* dst = out + i * cols;
      Real mean = 0;
      for (std::size_t j = 0; j < cols; ++j) mean += src[j];
      mean *= inv_d;
      Real var = 0;
      for (std::size_t j = 0; j < cols; ++j) {
        const Real d = src[j] - mean;
        var += d * d;
      }
      var *= inv_d;
      const Real inv_std = Real(1) / std::sqrt(var + n.epsilon);
      for (std::size_t j = 0; j < cols; ++j)
        dst[j] = n.gain[j] * (src[j] - mean) * inv_std + n.bias[j];
    }
  }

  /// Column-wise layer norm (the operand axis of the spatial unit): column
  /// statistics, gain/bias indexed by row.
  void norm_cols(const PackedNorm& n, const Real* in, Real* out,
                 std::size_t rows, std::size_t cols) {
    const Real inv_d = Real(1) / static_cast<Real>(rows);
    std::fill(col_mean_.begin(), col_mean_.end(), Real(0));
    std::fill(col_inv_.begin(), col_inv_.end(), Real(0));
    for (std::size_t i = 0; i < rows; ++i) {
      const Real* src = in + i * cols;
      for (std::size_t j = 0; j < cols; ++j) col_mean_[j] += src[j];
    }
    for (std::size_t j = 0; j < cols; ++j) col_mean_[j] *= inv_d;
    for (std::size_t i = 0; i < rows; ++i) {
      const Real* src = in + i * cols;
      for (std::size_t j = 0; j < cols; ++j) {
        const Real d = src[j] - col_mean_[j];
        col_inv_[j] += d * d;
      }
    }
    for (std::size_t j = 0; j < cols; ++j)
      col_inv_[j] = Real(1) / std::sqrt(col_inv_[j] * inv_d + n.epsilon);
    for (std::size_t i = 0; i < rows; ++i) {
      const Real* src = in + i * cols;
      Real* dst = out + i * cols;
      const Real g = n.gain[i], bia = n.bias[i];
      for (std::size_t j = 0; j < cols; ++j)
        dst[j] = g * (src[j] - col_mean_[j]) * col_inv_[j] + bia;
    }
  }

  /// SE weights for mix (t x s) into se_w_.
  void se_weights_of(const PackedSe& se, const Real* mix, std::size_t t,
                     std::size_t s) {
    const Real inv_s = Real(1) / static_cast<Real>(s);
    for (std::size_t i = 0; i < t; ++i) {
      const Real* row = mix + i * s;
      Real acc = 0;
      for (std::size_t j = 0; j < s; ++j) acc += row[j];
      gap_[i] = acc * inv_s;
    }
    const std::size_t th = se.reduce.out;
    for (std::size_t o = 0; o < th; ++o) {
      const Real* w = se.reduce.w.data() + o * t;
      Real acc = se.reduce.b[o];
      for (std::size_t j = 0; j < t; ++j) acc += w[j] * gap_[j];
      se_hidden_[o] = acc > Real(0) ? acc : Real(0);
    }
    Real max_logit = 0;
    for (std::size_t o = 0; o < t; ++o) {
      const Real* w = se.expand.w.data() + o * th;
      Real acc = se.expand.b[o];
      for (std::size_t j = 0; j < th; ++j) acc += w[j] * se_hidden_[j];
      se_w_[o] = acc;
      if (o == 0 || acc > max_logit) max_logit = acc;
    }
    Real sum = 0;
    for (std::size_t o = 0; o < t; ++o) {
      se_w_[o] = std::exp(se_w_[o] - max_logit);
      sum += se_w_[o];
    }
    const Real inv = Real(1) / sum;
    for (std::size_t o = 0; o < t; ++o) se_w_[o] *= inv;
  }

  /// x += combine(mix) per the SE configuration.
  void combine_into(Real* x, const Real* mix, const PackedSe& se, std::size_t t,
                    std::size_t s) {
    if (!se.present) {
      for (std::size_t i = 0; i < t * s; ++i) x[i] += mix[i];
      return;
    }
    se_weights_of(se, mix, t, s);
    if (cfg_.se_combine == SeCombine::multiply) {
      for (std::size_t i = 0; i < t; ++i) {
        const Real w = se_w_[i];
        const Real* src = mix + i * s;
        Real* dst = x + i * s;
        for (std::size_t j = 0; j < s; ++j) dst[j] += w * src[j];
      }
    } else {
      for (std::size_t i = 0; i < t; ++i) {
        Real* dst = x + i * s;
        for (std::size_t j = 0; j < s; ++j) dst[j] += se_w_[i];
      }
    }
  }

  void spatial_unit(const PackedBlock& b, Real* x) {
    const std::size_t t = cfg_.seq_len, s = cfg_.hidden_width;
    const std::size_t ds = cfg_.spatial_hidden;
    if (cfg_.ln_axis == LnAxis::operand)
      norm_cols(b.spatial_norm, x, h_.data(), t, s);
    else
      norm_rows(b.spatial_norm, x, h_.data(), t, s);
    std::fill(z_.begin(), z_.begin() + t * ds, Real(0));
    detail::gemm(h_.data(), b.spatial_in.wt.data(), z_.data(), t, s, ds);
    add_bias_rows(z_.data(), b.spatial_in.b.data(), t, ds);
    detail::gelu_inplace(z_.data(), t * ds);
    std::fill(mix_.begin(), mix_.end(), Real(0));
    detail::gemm(z_.data(), b.spatial_out.wt.data(), mix_.data(), t, ds, s);
    add_bias_rows(mix_.data(), b.spatial_out.b.data(), t, s);
    combine_into(x, mix_.data(), b.se, t, s);
  }

  void temporal_unit(const PackedBlock& b, Real* x) {
    const std::size_t t = cfg_.seq_len, s = cfg_.hidden_width;
    const std::size_t dt = cfg_.temporal_hidden;
    norm_rows(b.temporal_norm, x, n_.data(), t, s);
    // mix across time: W3 (dt x t) * N (t x s), then W4 (t x dt) * that
    std::fill(m1_.begin(), m1_.end(), Real(0));
    detail::gemm(b.temporal_in.w.data(), n_.data(), m1_.data(), dt, t, s);
    for (std::size_t d = 0; d < dt; ++d) {
      Real* row = m1_.data() + d * s;
      const Real bias = b.temporal_in.b[d];
      for (std::size_t j = 0; j < s; ++j) row[j] += bias;
    }
    detail::gelu_inplace(m1_.data(), dt * s);
    std::fill(mix_.begin(), mix_.end(), Real(0));
    detail::gemm(b.temporal_out.w.data(), m1_.data(), mix_.data(), t, dt, s);
    for (std::size_t i = 0; i < t; ++i) {
      Real* row = mix_.data() + i * s;
      const Real bias = b.temporal_out.b[i];
      for (std::size_t j = 0; j < s; ++j) row[j] += bias;
    }
    const PackedSe& se =
        cfg_.se_mode == SeMode::separate ? b.se_temporal : b.se;
    combine_into(x, mix_.data(), se, t, s);
  }

  void pool_rows(const Real* x) {
    const std::size_t t = cfg_.seq_len, s = cfg_.hidden_width;
    std::fill(pooled_.begin(), pooled_.end(), Real(0));
    for (std::size_t i = 0; i < t; ++i) {
      const Real* row = x + i * s;
      for (std::size_t j = 0; j < s; ++j) pooled_[j] += row[j];
    }
    const Real inv = Real(1) / static_cast<Real>(t);
    for (std::size_t j = 0; j < s; ++j) pooled_[j] *= inv;
  }

  void pool_two_streams(const Real* a, const Real* b) {
    const std::size_t t = cfg_.seq_len, s = cfg_.hidden_width;
    std::fill(pooled_.begin(), pooled_.end(), Real(0));
    for (std::size_t i = 0; i < t; ++i) {
      const Real* ra = a + i * s;
      const Real* rb = b + i * s;
      for (std::size_t j = 0; j < s; ++j) pooled_[j] += ra[j] + rb[j];
    }
    const Real inv = Real(1) / static_cast<Real>(2 * t);
    for (std::size_t j = 0; j < s; ++j) pooled_[j] *= inv;
  }

  ModelConfig cfg_;
  Packed projection_, classifier_;
  std::vector<PackedBlock> blocks_;
  std::vector<Real> x_, h_, z_, mix_, n_, m1_, stream_b_;
  std::vector<Real> col_mean_, col_inv_, gap_, se_hidden_, se_w_, pooled_, logits_;
};

}  // namespace stmlp
