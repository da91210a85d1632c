#include "stmlp/model.hpp"

#include <cmath>

#include "stmlp/detail/rng.hpp"

namespace stmlp {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::spatial_only: return "spatial_only";
    case Variant::temporal_only: return "temporal_only";
    case Variant::two_stream: return "two_stream";
  }
  return "?";
}
const char* to_string(SeMode m) {
  switch (m) {
    case SeMode::shared: return "shared";
    case SeMode::separate: return "separate";
    case SeMode::off: return "off";
  }
  return "?";
}
const char* to_string(LnAxis a) {
  return a == LnAxis::operand ? "operand" : "features";
}
const char* to_string(SeCombine c) {
  return c == SeCombine::multiply ? "multiply" : "add";
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("model config: " + what);
  };
  require(layers >= 1, "layers must be >= 1");
  require(joints >= 1, "joints must be >= 1");
  require(hidden_width >= 2, "hidden width must be >= 2 (layer norm operates on it)");
  require(spatial_hidden >= 1, "spatial hidden width must be >= 1");
  require(temporal_hidden >= 1, "temporal hidden width must be >= 1");
  require(classes >= 1, "class count must be >= 1");
  if (ln_axis == LnAxis::operand)
    require(seq_len >= 2, "sequence length must be >= 2 under operand-axis layer norm");
  else
    require(seq_len >= 1, "sequence length must be >= 1");
}

ModelConfig tcg_config() {
  ModelConfig cfg;
  cfg.layers = 4;
  cfg.joints = 17;
  cfg.hidden_width = 512;
  cfg.seq_len = 24;
  cfg.spatial_hidden = 32;
  cfg.temporal_hidden = 256;
  cfg.classes = 4;
  return cfg;
}

ModelConfig drive_act_config(std::size_t classes) {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.joints = 13;
  cfg.hidden_width = 512;
  cfg.seq_len = 90;
  cfg.spatial_hidden = 64;
  cfg.temporal_hidden = 256;
  cfg.classes = classes;
  return cfg;
}

ModelParams make_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams p;
  p.projection = Linear(cfg.hidden_width, cfg.pose_width());
  p.blocks.resize(cfg.layers);
  for (auto& b : p.blocks) {
    b.spatial_norm = LayerNorm(cfg.spatial_norm_dim());
    b.spatial_in = Linear(cfg.spatial_hidden, cfg.hidden_width);
    b.spatial_out = Linear(cfg.hidden_width, cfg.spatial_hidden);
    b.temporal_norm = LayerNorm(cfg.hidden_width);
    b.temporal_in = Linear(cfg.temporal_hidden, cfg.seq_len);
    b.temporal_out = Linear(cfg.seq_len, cfg.temporal_hidden);
    if (cfg.se_mode != SeMode::off)
      b.se = SqueezeExcite(cfg.seq_len, cfg.se_hidden());
    if (cfg.se_mode == SeMode::separate)
      b.se_temporal = SqueezeExcite(cfg.seq_len, cfg.se_hidden());
  }
  p.classifier = Linear(cfg.classes, cfg.hidden_width);
  return p;
}

namespace {

void randomize(Linear& l, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(l.in_features()));
  for (double& w : l.weight.values) w = detail::uniform_range(rng, -bound, bound);
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p = make_params(cfg);
  std::mt19937_64 rng(seed);
  randomize(p.projection, rng);
  for (auto& b : p.blocks) {
    randomize(b.spatial_in, rng);
    randomize(b.spatial_out, rng);
    randomize(b.temporal_in, rng);
    randomize(b.temporal_out, rng);
    if (!b.se.empty()) {
      randomize(b.se.reduce, rng);
      randomize(b.se.expand, rng);
    }
    if (!b.se_temporal.empty()) {
      randomize(b.se_temporal.reduce, rng);
      randomize(b.se_temporal.expand, rng);
    }
  }
  randomize(p.classifier, rng);
  return p;
}

namespace {

Linear linear_zeros_like(const Linear& l) {
  return Linear(l.out_features(), l.in_features());
}

SqueezeExcite se_zeros_like(const SqueezeExcite& s) {
  if (s.empty()) return {};
  SqueezeExcite z;
  z.reduce = linear_zeros_like(s.reduce);
  z.expand = linear_zeros_like(s.expand);
  return z;
}

}  // namespace

ModelParams zeros_like(const ModelParams& like) {
  ModelParams z;
  z.projection = linear_zeros_like(like.projection);
  z.blocks.resize(like.blocks.size());
  for (std::size_t i = 0; i < like.blocks.size(); ++i) {
    const auto& b = like.blocks[i];
    auto& o = z.blocks[i];
    o.spatial_norm = LayerNorm(b.spatial_norm.dim());
    for (double& g : o.spatial_norm.gain) g = 0.0;
    o.spatial_norm.epsilon = b.spatial_norm.epsilon;
    o.spatial_in = linear_zeros_like(b.spatial_in);
    o.spatial_out = linear_zeros_like(b.spatial_out);
    o.temporal_norm = LayerNorm(b.temporal_norm.dim());
    for (double& g : o.temporal_norm.gain) g = 0.0;
    o.temporal_norm.epsilon = b.temporal_norm.epsilon;
    o.temporal_in = linear_zeros_like(b.temporal_in);
    o.temporal_out = linear_zeros_like(b.temporal_out);
    o.se = se_zeros_like(b.se);
    o.se_temporal = se_zeros_like(b.se_temporal);
  }
  z.classifier = linear_zeros_like(like.classifier);
  return z;
}

std::size_t param_count(const ModelConfig& cfg) {
  const std::size_t s = cfg.hidden_width, t = cfg.seq_len;
  const std::size_t ds = cfg.spatial_hidden, dt = cfg.temporal_hidden;
  const std::size_t th = cfg.se_hidden();
  std::size_t block = 2 * cfg.spatial_norm_dim()      // spatial norm
                      + ds * s + ds + s * ds + s      // spatial MLP
                      + 2 * s                         // temporal norm
                      + dt * t + dt + t * dt + t;     // temporal MLP
  if (cfg.se_mode != SeMode::off) {
    const std::size_t se = th * t + th + t * th + t;
    block += cfg.se_mode == SeMode::separate ? 2 * se : se;
  }
  return s * cfg.pose_width() + s             // projection
         + cfg.layers * block
         + cfg.classes * s + cfg.classes;     // classifier
}

namespace {

template <typename View, typename Params>
std::vector<View> collect_params(Params& p) {
  std::vector<View> out;
  auto add_vec = [&out](const std::string& name, auto& vec) {
    out.push_back(View{name, 1, vec.size(), &vec});
  };
  auto add_mat = [&out](const std::string& name, auto& mat) {
    out.push_back(View{name, mat.rows, mat.cols, &mat.values});
  };
  auto add_linear = [&](const std::string& name, auto& l) {
    add_mat(name + ".weight", l.weight);
    add_vec(name + ".bias", l.bias);
  };
  auto add_norm = [&](const std::string& name, auto& n) {
    add_vec(name + ".gain", n.gain);
    add_vec(name + ".bias", n.bias);
  };
  auto add_se = [&](const std::string& name, auto& se) {
    if (se.empty()) return;
    add_linear(name + ".reduce", se.reduce);
    add_linear(name + ".expand", se.expand);
  };
  add_linear("projection", p.projection);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    auto& b = p.blocks[i];
    const std::string prefix = "blocks." + std::to_string(i) + ".";
    add_norm(prefix + "spatial_norm", b.spatial_norm);
    add_linear(prefix + "spatial_in", b.spatial_in);
    add_linear(prefix + "spatial_out", b.spatial_out);
    add_norm(prefix + "temporal_norm", b.temporal_norm);
    add_linear(prefix + "temporal_in", b.temporal_in);
    add_linear(prefix + "temporal_out", b.temporal_out);
    add_se(prefix + "se", b.se);
    add_se(prefix + "se_temporal", b.se_temporal);
  }
  add_linear("classifier", p.classifier);
  return out;
}

}  // namespace

std::vector<ParamView> named_params(ModelParams& p) {
  return collect_params<ParamView>(p);
}
std::vector<ConstParamView> named_params(const ModelParams& p) {
  return collect_params<ConstParamView>(p);
}

Matrix flatten_sequence(const SkeletonSequence& seq, const ModelConfig& cfg) {
  if (seq.frames.size() != cfg.seq_len) {
    throw ShapeError("flatten_sequence: sequence has " +
                     std::to_string(seq.frames.size()) + " frames, config wants " +
                     std::to_string(cfg.seq_len));
  }
  Matrix flat(cfg.seq_len, cfg.pose_width());
  for (std::size_t t = 0; t < cfg.seq_len; ++t) {
    const auto& joints = seq.frames[t].joints;
    if (joints.size() != cfg.joints) {
      throw ShapeError("flatten_sequence: frame " + std::to_string(t) + " has " +
                       std::to_string(joints.size()) + " joints, config wants " +
                       std::to_string(cfg.joints));
    }
    double* row = flat.row(t);
    for (std::size_t j = 0; j < joints.size(); ++j) {
      row[3 * j] = joints[j][0];
      row[3 * j + 1] = joints[j][1];
      row[3 * j + 2] = joints[j][2];
    }
  }
  return flat;
}

std::vector<SkeletonFrame> unflatten_sequence(const Matrix& flat) {
  if (flat.cols % 3 != 0)
    throw ShapeError("unflatten_sequence: width " + std::to_string(flat.cols) +
                     " is not a multiple of 3");
  std::vector<SkeletonFrame> frames(flat.rows);
  for (std::size_t t = 0; t < flat.rows; ++t) {
    const double* row = flat.row(t);
    frames[t].joints.resize(flat.cols / 3);
    for (std::size_t j = 0; j < frames[t].joints.size(); ++j)
      frames[t].joints[j] = {row[3 * j], row[3 * j + 1], row[3 * j + 2]};
  }
  return frames;
}

Matrix project_input(const Linear& p, const Matrix& x) {
  if (x.cols != p.in_features()) {
    throw ShapeError("project_input: input " + shape_str(x) +
                     " vs projection weight " + shape_str(p.weight));
  }
  return linear(p, x);
}

namespace {

/// out[t][j] = x[t][j] + w[t]; the literal additive SE form.
Matrix add_rows_constant(const Matrix& x, const Vector& w) {
  Matrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* src = x.row(i);
    double* dst = out.row(i);
    for (std::size_t j = 0; j < x.cols; ++j) dst[j] = src[j] + w[i];
  }
  return out;
}

const SqueezeExcite& temporal_se(const MixingBlock& b, const ModelConfig& cfg) {
  return cfg.se_mode == SeMode::separate ? b.se_temporal : b.se;
}

Matrix combine_with_skip(const Matrix& skip, const Matrix& mix,
                         const SqueezeExcite& se, const ModelConfig& cfg) {
  if (cfg.se_mode == SeMode::off) return add(skip, mix);
  if (cfg.se_combine == SeCombine::multiply)
    return add(skip, se_block(se, mix).out);
  return add_rows_constant(skip, se_weights(se, mix));
}

void acc(Matrix& into, const Matrix& g) {
  for (std::size_t i = 0; i < into.values.size(); ++i) into.values[i] += g.values[i];
}
void acc(Vector& into, const Vector& g) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
}
void acc(Linear& into, const Matrix& gw, const Vector& gb) {
  acc(into.weight, gw);
  acc(into.bias, gb);
}

/// Backward of combine_with_skip w.r.t. the mixing output; SE parameter
/// gradients accumulate into se_grads.
Matrix combine_backward(const Matrix& mix, const SqueezeExcite& se,
                        const ModelConfig& cfg, const Matrix& grad_out,
                        SqueezeExcite& se_grads) {
  if (cfg.se_mode == SeMode::off) return grad_out;
  if (cfg.se_combine == SeCombine::multiply) {
    SeGrads g = se_block_backward(se, mix, grad_out);
    acc(se_grads.reduce, g.reduce.weight, g.reduce.bias);
    acc(se_grads.expand, g.expand.weight, g.expand.bias);
    return std::move(g.a);
  }
  Vector grad_w(grad_out.rows, 0.0);
  for (std::size_t i = 0; i < grad_out.rows; ++i) {
    const double* row = grad_out.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < grad_out.cols; ++j) s += row[j];
    grad_w[i] = s;
  }
  SeGrads g = se_weights_backward(se, mix, grad_w);
  acc(se_grads.reduce, g.reduce.weight, g.reduce.bias);
  acc(se_grads.expand, g.expand.weight, g.expand.bias);
  return std::move(g.a);
}

Matrix spatial_forward(const MixingBlock& b, const Matrix& x,
                       const ModelConfig& cfg, UnitCache& c) {
  c.input = x;
  if (cfg.ln_axis == LnAxis::operand) {
    c.ln_in = transpose(x);
    c.mlp_in = transpose(layer_norm(b.spatial_norm, c.ln_in));
  } else {
    c.ln_in = x;
    c.mlp_in = layer_norm(b.spatial_norm, x);
  }
  c.pre_act = linear(b.spatial_in, c.mlp_in);
  c.post_act = gelu(c.pre_act);
  c.mix = linear(b.spatial_out, c.post_act);
  return combine_with_skip(x, c.mix, b.se, cfg);
}

Matrix spatial_backward(const MixingBlock& b, const ModelConfig& cfg,
                        const UnitCache& c, const Matrix& grad_out,
                        MixingBlock& g) {
  Matrix grad_mix = combine_backward(c.mix, b.se, cfg, grad_out, g.se);
  LinearGrads l2 = linear_backward(b.spatial_out, c.post_act, grad_mix);
  acc(g.spatial_out, l2.weight, l2.bias);
  Matrix grad_pre = gelu_backward(c.pre_act, l2.x);
  LinearGrads l1 = linear_backward(b.spatial_in, c.mlp_in, grad_pre);
  acc(g.spatial_in, l1.weight, l1.bias);
  Matrix grad_x = grad_out;  // skip path
  if (cfg.ln_axis == LnAxis::operand) {
    LayerNormGrads ln = layer_norm_backward(b.spatial_norm, c.ln_in, transpose(l1.x));
    acc(g.spatial_norm.gain, ln.gain);
    acc(g.spatial_norm.bias, ln.bias);
    acc(grad_x, transpose(ln.x));
  } else {
    LayerNormGrads ln = layer_norm_backward(b.spatial_norm, c.ln_in, l1.x);
    acc(g.spatial_norm.gain, ln.gain);
    acc(g.spatial_norm.bias, ln.bias);
    acc(grad_x, ln.x);
  }
  return grad_x;
}

Matrix temporal_forward(const MixingBlock& b, const Matrix& u,
                        const ModelConfig& cfg, UnitCache& c) {
  c.input = u;
  c.ln_in = u;
  c.mlp_in = transpose(layer_norm(b.temporal_norm, u));  // S x T
  c.pre_act = linear(b.temporal_in, c.mlp_in);           // S x D_T
  c.post_act = gelu(c.pre_act);
  c.mix = transpose(linear(b.temporal_out, c.post_act));  // back to T x S
  return combine_with_skip(u, c.mix, temporal_se(b, cfg), cfg);
}

Matrix temporal_backward(const MixingBlock& b, const ModelConfig& cfg,
                         const UnitCache& c, const Matrix& grad_out,
                         MixingBlock& g) {
  SqueezeExcite& se_grads =
      cfg.se_mode == SeMode::separate ? g.se_temporal : g.se;
  Matrix grad_mix =
      combine_backward(c.mix, temporal_se(b, cfg), cfg, grad_out, se_grads);
  LinearGrads l2 = linear_backward(b.temporal_out, c.post_act, transpose(grad_mix));
  acc(g.temporal_out, l2.weight, l2.bias);
  Matrix grad_pre = gelu_backward(c.pre_act, l2.x);
  LinearGrads l1 = linear_backward(b.temporal_in, c.mlp_in, grad_pre);
  acc(g.temporal_in, l1.weight, l1.bias);
  LayerNormGrads ln = layer_norm_backward(b.temporal_norm, c.ln_in, transpose(l1.x));
  acc(g.temporal_norm.gain, ln.gain);
  acc(g.temporal_norm.bias, ln.bias);
  Matrix grad_u = grad_out;  // skip path
  acc(grad_u, ln.x);
  return grad_u;
}

}  // namespace

Matrix spatial_mixing(const MixingBlock& block, const Matrix& x, const ModelConfig& cfg) {
  UnitCache c;
  return spatial_forward(block, x, cfg, c);
}

Matrix temporal_mixing(const MixingBlock& block, const Matrix& u, const ModelConfig& cfg) {
  UnitCache c;
  return temporal_forward(block, u, cfg, c);
}

Vector forward_flat(const ModelParams& params, const ModelConfig& cfg,
                    const Matrix& flat, ForwardCache* cache) {
  cfg.validate();
  if (flat.rows != cfg.seq_len || flat.cols != cfg.pose_width()) {
    throw ShapeError("forward: input " + shape_str(flat) + " vs configured " +
                     std::to_string(cfg.seq_len) + "x" +
                     std::to_string(cfg.pose_width()));
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.flat = flat;
  c.projected = project_input(params.projection, flat);

  switch (cfg.variant) {
    case Variant::full: {
      c.spatial.resize(cfg.layers);
      c.temporal.resize(cfg.layers);
      Matrix x = c.projected;
      for (std::size_t l = 0; l < cfg.layers; ++l) {
        x = spatial_forward(params.blocks[l], x, cfg, c.spatial[l]);
        x = temporal_forward(params.blocks[l], x, cfg, c.temporal[l]);
      }
      c.trunk_out = std::move(x);
      c.pooled = mean_over_rows(c.trunk_out);
      break;
    }
    case Variant::spatial_only: {
      c.spatial.resize(cfg.layers);
      Matrix x = c.projected;
      for (std::size_t l = 0; l < cfg.layers; ++l)
        x = spatial_forward(params.blocks[l], x, cfg, c.spatial[l]);
      c.trunk_out = std::move(x);
      c.pooled = mean_over_rows(c.trunk_out);
      break;
    }
    case Variant::temporal_only: {
      c.temporal.resize(cfg.layers);
      Matrix x = c.projected;
      for (std::size_t l = 0; l < cfg.layers; ++l)
        x = temporal_forward(params.blocks[l], x, cfg, c.temporal[l]);
      c.trunk_out = std::move(x);
      c.pooled = mean_over_rows(c.trunk_out);
      break;
    }
    case Variant::two_stream: {
      c.spatial.resize(cfg.layers);
      c.temporal.resize(cfg.layers);
      Matrix a = c.projected;
      Matrix b = c.projected;
      for (std::size_t l = 0; l < cfg.layers; ++l) {
        a = spatial_forward(params.blocks[l], a, cfg, c.spatial[l]);
        b = temporal_forward(params.blocks[l], b, cfg, c.temporal[l]);
      }
      c.stream_a_out = std::move(a);
      c.stream_b_out = std::move(b);
      const Vector pa = mean_over_rows(c.stream_a_out);
      const Vector pb = mean_over_rows(c.stream_b_out);
      c.pooled.resize(pa.size());
      for (std::size_t j = 0; j < pa.size(); ++j)
        c.pooled[j] = 0.5 * (pa[j] + pb[j]);
      break;
    }
  }
  c.logits = linear_vec(params.classifier, c.pooled);
  return c.logits;
}

Vector forward(const ModelParams& params, const ModelConfig& cfg,
               const SkeletonSequence& seq) {
  return forward_flat(params, cfg, flatten_sequence(seq, cfg));
}

void accumulate_backward(const ModelParams& params, const ModelConfig& cfg,
                         const ForwardCache& cache, const Vector& grad_logits,
                         ModelParams& grads) {
  LinearVecGrads cg = linear_vec_backward(params.classifier, cache.pooled, grad_logits);
  acc(grads.classifier, cg.weight, cg.bias);
  const Vector& grad_pooled = cg.x;

  Matrix grad_proj;
  switch (cfg.variant) {
    case Variant::full: {
      Matrix g = mean_over_rows_backward(grad_pooled, cfg.seq_len);
      for (std::size_t l = cfg.layers; l-- > 0;) {
        g = temporal_backward(params.blocks[l], cfg, cache.temporal[l], g, grads.blocks[l]);
        g = spatial_backward(params.blocks[l], cfg, cache.spatial[l], g, grads.blocks[l]);
      }
      grad_proj = std::move(g);
      break;
    }
    case Variant::spatial_only: {
      Matrix g = mean_over_rows_backward(grad_pooled, cfg.seq_len);
      for (std::size_t l = cfg.layers; l-- > 0;)
        g = spatial_backward(params.blocks[l], cfg, cache.spatial[l], g, grads.blocks[l]);
      grad_proj = std::move(g);
      break;
    }
    case Variant::temporal_only: {
      Matrix g = mean_over_rows_backward(grad_pooled, cfg.seq_len);
      for (std::size_t l = cfg.layers; l-- > 0;)
        g = temporal_backward(params.blocks[l], cfg, cache.temporal[l], g, grads.blocks[l]);
      grad_proj = std::move(g);
      break;
    }
    case Variant::two_stream: {
      Vector half(grad_pooled.size());
      for (std::size_t j = 0; j < half.size(); ++j) half[j] = 0.5 * grad_pooled[j];
      Matrix ga = mean_over_rows_backward(half, cfg.seq_len);
      Matrix gb = ga;
      for (std::size_t l = cfg.layers; l-- > 0;)
        ga = spatial_backward(params.blocks[l], cfg, cache.spatial[l], ga, grads.blocks[l]);
      for (std::size_t l = cfg.layers; l-- > 0;)
        gb = temporal_backward(params.blocks[l], cfg, cache.temporal[l], gb, grads.blocks[l]);
      grad_proj = add(ga, gb);
      break;
    }
  }
  LinearGrads pg = linear_backward(params.projection, cache.flat, grad_proj);
  acc(grads.projection, pg.weight, pg.bias);
}

ModelParams backward_flat(const ModelParams& params, const ModelConfig& cfg,
                          const Matrix& flat, const Vector& grad_logits) {
  ForwardCache cache;
  forward_flat(params, cfg, flat, &cache);
  ModelParams grads = zeros_like(params);
  accumulate_backward(params, cfg, cache, grad_logits, grads);
  return grads;
}

ModelParams backward(const ModelParams& params, const ModelConfig& cfg,
                     const SkeletonSequence& seq, const Vector& grad_logits) {
  return backward_flat(params, cfg, flatten_sequence(seq, cfg), grad_logits);
}

}  // namespace stmlp
