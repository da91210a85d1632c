#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stmlp/data.hpp"
#include "stmlp/layers.hpp"
#include "stmlp/matrix.hpp"

namespace stmlp {

enum class Variant { full, spatial_only, temporal_only, two_stream };
enum class SeMode { shared, separate, off };
/// Which dimension layer norm standardizes in the spatial unit: the operand
/// of the mixing equation as written (time, via the transposed view) or the
/// feature dimension in both units.
enum class LnAxis { operand, features };
/// How the SE output joins the skip path: rescale the mixing output by the
/// time-step weights (multiply) or add the broadcast weights themselves, the
/// literal additive form.
enum class SeCombine { multiply, add };

const char* to_string(Variant v);
const char* to_string(SeMode m);
const char* to_string(LnAxis a);
const char* to_string(SeCombine c);

struct ModelConfig {
  std::size_t layers = 0;           // mixing blocks
  std::size_t joints = 0;           // K body joints
  std::size_t hidden_width = 0;     // S, encoded feature width
  std::size_t seq_len = 0;          // T time steps
  std::size_t spatial_hidden = 0;   // spatial-mixing bottleneck width
  std::size_t temporal_hidden = 0;  // temporal-mixing hidden width
  std::size_t classes = 0;
  Variant variant = Variant::full;
  SeMode se_mode = SeMode::shared;
  LnAxis ln_axis = LnAxis::operand;
  SeCombine se_combine = SeCombine::multiply;

  /// Flattened pose width, 3 coordinates per joint.
  std::size_t pose_width() const { return 3 * joints; }
  /// SE bottleneck width: quarter of the sequence length, at least 4.
  std::size_t se_hidden() const {
    const std::size_t quarter = (seq_len + 3) / 4;
    return quarter < 4 ? 4 : quarter;
  }
  std::size_t spatial_norm_dim() const {
    return ln_axis == LnAxis::operand ? seq_len : hidden_width;
  }

  void validate() const;  // throws ConfigError
  bool operator==(const ModelConfig&) const = default;
};

/// One mixing block: spatial unit, temporal unit, SE reweighting. `se` is the
/// spatial unit's block and doubles as the shared block; `se_temporal` is
/// populated only under SeMode::separate.
struct MixingBlock {
  LayerNorm spatial_norm;
  Linear spatial_in;   // hidden_width -> spatial_hidden
  Linear spatial_out;  // spatial_hidden -> hidden_width
  LayerNorm temporal_norm;
  Linear temporal_in;   // seq_len -> temporal_hidden
  Linear temporal_out;  // temporal_hidden -> seq_len
  SqueezeExcite se;
  SqueezeExcite se_temporal;
};

struct ModelParams {
  Linear projection;  // pose_width -> hidden_width, per time step
  std::vector<MixingBlock> blocks;
  Linear classifier;  // hidden_width -> classes
};

/// Zero-valued parameters with the shapes the config dictates.
ModelParams make_params(const ModelConfig& cfg);
/// Weights uniform in ±sqrt(1/fan_in), biases zero, layer-norm gain 1.
/// Bit-identical for equal seeds.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);
/// Same structure as `like`, all values zero. Gradient accumulators use this.
ModelParams zeros_like(const ModelParams& like);

std::size_t param_count(const ModelConfig& cfg);

/// Named view over every parameter tensor, in serialization order. Vectors
/// report shape 1 x n. Empty tensors (absent SE blocks) are skipped.
struct ParamView {
  std::string name;
  std::size_t rows, cols;
  std::vector<double>* data;
};
struct ConstParamView {
  std::string name;
  std::size_t rows, cols;
  const std::vector<double>* data;
};
std::vector<ParamView> named_params(ModelParams& p);
std::vector<ConstParamView> named_params(const ModelParams& p);

// --- forward / backward ---

/// Row t of the result is frame t's joints as (x1,y1,z1,...,xK,yK,zK).
Matrix flatten_sequence(const SkeletonSequence& seq, const ModelConfig& cfg);
/// Inverse of flatten_sequence (labels and meta are not reconstructed).
std::vector<SkeletonFrame> unflatten_sequence(const Matrix& flat);

/// Per-time-step projection into the hidden width; x is T x pose_width.
Matrix project_input(const Linear& p, const Matrix& x);

/// Spatial mixing unit: per-time-step MLP across the feature dimension with
/// layer norm, GeLU, SE reweighting and skip connection.
Matrix spatial_mixing(const MixingBlock& block, const Matrix& x, const ModelConfig& cfg);
/// Temporal mixing unit: per-feature-column MLP across the time dimension.
Matrix temporal_mixing(const MixingBlock& block, const Matrix& u, const ModelConfig& cfg);

/// Intermediate values of one forward pass, consumed by the backward pass.
struct UnitCache {
  Matrix input;    // unit input, T x S
  Matrix ln_in;    // the matrix layer norm received
  Matrix mlp_in;   // first linear input (T x S spatial, S x T temporal)
  Matrix pre_act;  // first linear output, before GeLU
  Matrix post_act;
  Matrix mix;      // unit MLP output back in T x S orientation
};

struct ForwardCache {
  Matrix flat;  // T x pose_width
  Matrix projected;
  std::vector<UnitCache> spatial;   // per layer (stream A under two_stream)
  std::vector<UnitCache> temporal;  // per layer (stream B under two_stream)
  Matrix trunk_out;                 // single-stream final T x S
  Matrix stream_a_out, stream_b_out;
  Vector pooled;
  Vector logits;
};

Vector forward_flat(const ModelParams& params, const ModelConfig& cfg,
                    const Matrix& flat, ForwardCache* cache = nullptr);
Vector forward(const ModelParams& params, const ModelConfig& cfg,
               const SkeletonSequence& seq);

/// Adds this sample's parameter gradients into `grads` (shapes per
/// zeros_like). Under shared SE mode both units accumulate into `se`.
void accumulate_backward(const ModelParams& params, const ModelConfig& cfg,
                         const ForwardCache& cache, const Vector& grad_logits,
                         ModelParams& grads);

ModelParams backward(const ModelParams& params, const ModelConfig& cfg,
                     const SkeletonSequence& seq, const Vector& grad_logits);
ModelParams backward_flat(const ModelParams& params, const ModelConfig& cfg,
                          const Matrix& flat, const Vector& grad_logits);

// --- presets (architecture part; training recipes live in presets.hpp) ---

/// L=4, S=512, T=24, D_S=32, D_T=256, K=17, C=4.
ModelConfig tcg_config();
/// L=2, S=512, T=90, D_S=64, D_T=256, K=13; coarse-task class count defaults
/// to 12 and is overridable.
ModelConfig drive_act_config(std::size_t classes = 12);

}  // namespace stmlp
