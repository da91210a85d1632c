#pragma once

#include "stmlp/matrix.hpp"

namespace stmlp {

/// Fully connected layer parameters, weight is out x in.
struct Linear {
  Matrix weight;
  Vector bias;

  Linear() = default;
  Linear(std::size_t out, std::size_t in) : weight(out, in), bias(out, 0.0) {}
  std::size_t in_features() const { return weight.cols; }
  std::size_t out_features() const { return weight.rows; }
  bool empty() const { return weight.empty(); }
};

/// Layer normalization with learnable gain/bias over the normalized
/// dimension d; each input row is standardized independently.
struct LayerNorm {
  Vector gain;
  Vector bias;
  double epsilon = 1e-5;

  LayerNorm() = default;
  explicit LayerNorm(std::size_t d) : gain(d, 1.0), bias(d, 0.0) {}
  std::size_t dim() const { return gain.size(); }
};

/// Squeeze-and-Excitation over time steps: pool features per row, bottleneck
/// MLP, softmax over rows. reduce is T -> T_h, expand is T_h -> T.
struct SqueezeExcite {
  Linear reduce;
  Linear expand;

  SqueezeExcite() = default;
  SqueezeExcite(std::size_t steps, std::size_t hidden)
      : reduce(hidden, steps), expand(steps, hidden) {}
  std::size_t steps() const { return expand.out_features(); }
  bool empty() const { return reduce.empty(); }
};

// --- linear ---

/// Maps each row: out = x * weight^T + bias. x is n x in, result n x out.
Matrix linear(const Linear& p, const Matrix& x);

struct LinearGrads {
  Matrix x;
  Matrix weight;
  Vector bias;
};
LinearGrads linear_backward(const Linear& p, const Matrix& x, const Matrix& grad_out);

/// Single-vector form: weight * x + bias.
Vector linear_vec(const Linear& p, const Vector& x);

struct LinearVecGrads {
  Vector x;
  Matrix weight;
  Vector bias;
};
LinearVecGrads linear_vec_backward(const Linear& p, const Vector& x, const Vector& grad_out);

// --- layer norm ---

Matrix layer_norm(const LayerNorm& p, const Matrix& x);

struct LayerNormGrads {
  Matrix x;
  Vector gain;
  Vector bias;
};
LayerNormGrads layer_norm_backward(const LayerNorm& p, const Matrix& x, const Matrix& grad_out);

// --- activations ---

/// GeLU, tanh form: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3))).
double gelu_scalar(double x);
double gelu_derivative(double x);
Matrix gelu(const Matrix& x);
Matrix gelu_backward(const Matrix& x, const Matrix& grad_out);

Matrix relu(const Matrix& x);
Matrix relu_backward(const Matrix& x, const Matrix& grad_out);
Vector relu_vec(const Vector& x);
Vector relu_vec_backward(const Vector& x, const Vector& grad_out);

/// Numerically stable softmax (max subtraction); outputs sum to 1.
Vector softmax(const Vector& x);
/// Backward given the forward output s: grad = s ⊙ (g - <g, s>).
Vector softmax_backward(const Vector& softmax_out, const Vector& grad_out);

// --- squeeze-and-excitation block ---

struct SeResult {
  Matrix out;      // scale_rows(a, weights)
  Vector weights;  // softmax over time steps, sums to 1
};

/// weights = softmax(expand(relu(reduce(mean_over_cols(a))))).
SeResult se_block(const SqueezeExcite& p, const Matrix& a);

/// Just the time-step weights of se_block.
Vector se_weights(const SqueezeExcite& p, const Matrix& a);

struct SeGrads {
  Matrix a;
  Linear reduce;  // gradient holder, same shapes as the parameters
  Linear expand;
};

/// Backward through scaling and the weight computation.
SeGrads se_block_backward(const SqueezeExcite& p, const Matrix& a, const Matrix& grad_out);

/// Backward of the weight path alone, given gradient w.r.t. the weights.
SeGrads se_weights_backward(const SqueezeExcite& p, const Matrix& a, const Vector& grad_weights);

}  // namespace stmlp
