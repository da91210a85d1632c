#include "stmlp/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stmlp {

namespace {
constexpr double kGeluC0 = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluC1 = 0.044715;
}  // namespace

Matrix linear(const Linear& p, const Matrix& x) {
  if (x.cols != p.in_features()) {
    throw ShapeError("linear: input " + shape_str(x) + " vs weight " +
                     shape_str(p.weight));
  }
  Matrix y = matmul(x, transpose(p.weight));
  for (std::size_t i = 0; i < y.rows; ++i) {
    double* row = y.row(i);
    for (std::size_t j = 0; j < y.cols; ++j) row[j] += p.bias[j];
  }
  return y;
}

LinearGrads linear_backward(const Linear& p, const Matrix& x, const Matrix& grad_out) {
  if (grad_out.rows != x.rows || grad_out.cols != p.out_features()) {
    throw ShapeError("linear_backward: gradient " + shape_str(grad_out) +
                     " for input " + shape_str(x) + " and weight " +
                     shape_str(p.weight));
  }
  LinearGrads g;
  g.x = matmul(grad_out, p.weight);
  g.weight = matmul(transpose(grad_out), x);
  g.bias.assign(p.out_features(), 0.0);
  for (std::size_t i = 0; i < grad_out.rows; ++i) {
    const double* row = grad_out.row(i);
    for (std::size_t j = 0; j < grad_out.cols; ++j) g.bias[j] += row[j];
  }
  return g;
}

Vector linear_vec(const Linear& p, const Vector& x) {
  if (x.size() != p.in_features()) {
    throw ShapeError("linear_vec: input length " + std::to_string(x.size()) +
                     " vs weight " + shape_str(p.weight));
  }
  Vector y(p.out_features());
  for (std::size_t i = 0; i < p.out_features(); ++i) {
    const double* w = p.weight.row(i);
    double s = p.bias[i];
    for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
    y[i] = s;
  }
  return y;
}

LinearVecGrads linear_vec_backward(const Linear& p, const Vector& x, const Vector& grad_out) {
  if (grad_out.size() != p.out_features()) {
    throw ShapeError("linear_vec_backward: gradient length " +
                     std::to_string(grad_out.size()) + " vs weight " +
                     shape_str(p.weight));
  }
  LinearVecGrads g;
  g.x.assign(x.size(), 0.0);
  g.weight = Matrix(p.out_features(), p.in_features());
  g.bias = grad_out;
  for (std::size_t i = 0; i < p.out_features(); ++i) {
    const double gi = grad_out[i];
    const double* w = p.weight.row(i);
    double* gw = g.weight.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) {
      gw[j] = gi * x[j];
      g.x[j] += gi * w[j];
    }
  }
  return g;
}

Matrix layer_norm(const LayerNorm& p, const Matrix& x) {
  if (x.cols != p.dim()) {
    throw ShapeError("layer_norm: input " + shape_str(x) + " vs dim " +
                     std::to_string(p.dim()));
  }
  if (x.cols < 2) {
    throw ShapeError("layer_norm: normalized dimension must be >= 2, got " +
                     shape_str(x));
  }
  Matrix y(x.rows, x.cols);
  const double inv_d = 1.0 / static_cast<double>(x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* src = x.row(i);
    double* dst = y.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) mean += src[j];
    mean *= inv_d;
    double var = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double d = src[j] - mean;
      var += d * d;
    }
    var *= inv_d;
    const double inv_std = 1.0 / std::sqrt(var + p.epsilon);
    for (std::size_t j = 0; j < x.cols; ++j)
      dst[j] = p.gain[j] * (src[j] - mean) * inv_std + p.bias[j];
  }
  return y;
}

LayerNormGrads layer_norm_backward(const LayerNorm& p, const Matrix& x,
                                   const Matrix& grad_out) {
  if (!x.same_shape(grad_out)) {
    throw ShapeError("layer_norm_backward: gradient " + shape_str(grad_out) +
                     " vs input " + shape_str(x));
  }
  LayerNormGrads g;
  g.x = Matrix(x.rows, x.cols);
  g.gain.assign(p.dim(), 0.0);
  g.bias.assign(p.dim(), 0.0);
  const std::size_t d = x.cols;
  const double inv_d = 1.0 / static_cast<double>(d);
  Vector xhat(d);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* src = x.row(i);
    const double* go = grad_out.row(i);
    double* gx = g.x.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += src[j];
    mean *= inv_d;
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = src[j] - mean;
      var += dv * dv;
    }
    var *= inv_d;
    const double inv_std = 1.0 / std::sqrt(var + p.epsilon);
    // d(loss)/d(xhat) = go * gain; fold the row statistics exactly:
    // gx = inv_std * (gh - mean(gh) - xhat * mean(gh * xhat))
    double gh_mean = 0.0, ghx_mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      xhat[j] = (src[j] - mean) * inv_std;
      const double gh = go[j] * p.gain[j];
      gh_mean += gh;
      ghx_mean += gh * xhat[j];
      g.gain[j] += go[j] * xhat[j];
      g.bias[j] += go[j];
    }
    gh_mean *= inv_d;
    ghx_mean *= inv_d;
    for (std::size_t j = 0; j < d; ++j) {
      const double gh = go[j] * p.gain[j];
      gx[j] = inv_std * (gh - gh_mean - xhat[j] * ghx_mean);
    }
  }
  return g;
}

double gelu_scalar(double x) {
  const double u = kGeluC0 * (x + kGeluC1 * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_derivative(double x) {
  const double u = kGeluC0 * (x + kGeluC1 * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluC0 * (1.0 + 3.0 * kGeluC1 * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

Matrix gelu(const Matrix& x) {
  Matrix y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.values.size(); ++i)
    y.values[i] = gelu_scalar(x.values[i]);
  return y;
}

Matrix gelu_backward(const Matrix& x, const Matrix& grad_out) {
  if (!x.same_shape(grad_out)) {
    throw ShapeError("gelu_backward: gradient " + shape_str(grad_out) +
                     " vs input " + shape_str(x));
  }
  Matrix g(x.rows, x.cols);
  for (std::size_t i = 0; i < x.values.size(); ++i)
    g.values[i] = grad_out.values[i] * gelu_derivative(x.values[i]);
  return g;
}

Matrix relu(const Matrix& x) {
  Matrix y(x.rows, x.cols);
  for (std::size_t i = 0; i < x.values.size(); ++i)
    y.values[i] = x.values[i] > 0.0 ? x.values[i] : 0.0;
  return y;
}

Matrix relu_backward(const Matrix& x, const Matrix& grad_out) {
  if (!x.same_shape(grad_out)) {
    throw ShapeError("relu_backward: gradient " + shape_str(grad_out) +
                     " vs input " + shape_str(x));
  }
  Matrix g(x.rows, x.cols);
  for (std::size_t i = 0; i < x.values.size(); ++i)
    g.values[i] = x.values[i] > 0.0 ? grad_out.values[i] : 0.0;
  return g;
}

Vector relu_vec(const Vector& x) {
  Vector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return y;
}

Vector relu_vec_backward(const Vector& x, const Vector& grad_out) {
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
  return g;
}

Vector softmax(const Vector& x) {
  Vector y(x.size());
  const double m = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - m);
    sum += y[i];
  }
  const double inv = 1.0 / sum;
  for (double& v : y) v *= inv;
  return y;
}

Vector softmax_backward(const Vector& softmax_out, const Vector& grad_out) {
  const double g_dot_s = dot(grad_out, softmax_out);
  Vector g(softmax_out.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = softmax_out[i] * (grad_out[i] - g_dot_s);
  return g;
}

Vector se_weights(const SqueezeExcite& p, const Matrix& a) {
  if (a.rows != p.steps()) {
    throw ShapeError("se_block: input " + shape_str(a) + " vs configured " +
                     std::to_string(p.steps()) + " time steps");
  }
  const Vector pooled = mean_over_cols(a);
  const Vector hidden = relu_vec(linear_vec(p.reduce, pooled));
  return softmax(linear_vec(p.expand, hidden));
}

SeResult se_block(const SqueezeExcite& p, const Matrix& a) {
  Vector w = se_weights(p, a);
  Matrix out = scale_rows(a, w);
  return {std::move(out), std::move(w)};
}

SeGrads se_weights_backward(const SqueezeExcite& p, const Matrix& a,
                            const Vector& grad_weights) {
  // Recompute the tiny forward path; it is two vectors of length T and T_h.
  const Vector pooled = mean_over_cols(a);
  const Vector pre_hidden = linear_vec(p.reduce, pooled);
  const Vector hidden = relu_vec(pre_hidden);
  const Vector w = softmax(linear_vec(p.expand, hidden));

  const Vector g_logits = softmax_backward(w, grad_weights);
  LinearVecGrads g_expand = linear_vec_backward(p.expand, hidden, g_logits);
  const Vector g_pre = relu_vec_backward(pre_hidden, g_expand.x);
  LinearVecGrads g_reduce = linear_vec_backward(p.reduce, pooled, g_pre);

  SeGrads g;
  g.a = mean_over_cols_backward(g_reduce.x, a.cols);
  g.reduce.weight = std::move(g_reduce.weight);
  g.reduce.bias = std::move(g_reduce.bias);
  g.expand.weight = std::move(g_expand.weight);
  g.expand.bias = std::move(g_expand.bias);
  return g;
}

SeGrads se_block_backward(const SqueezeExcite& p, const Matrix& a,
                          const Matrix& grad_out) {
  if (a.rows != grad_out.rows || a.cols != grad_out.cols) {
    throw ShapeError("se_block_backward: gradient " + shape_str(grad_out) +
                     " vs input " + shape_str(a));
  }
  const Vector w = se_weights(p, a);
  ScaleRowsGrads scale = scale_rows_backward(a, w, grad_out);
  SeGrads g = se_weights_backward(p, a, scale.w);
  g.a = add(g.a, scale.a);
  return g;
}

}  // namespace stmlp
