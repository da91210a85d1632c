#pragma once

#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

#include "stmlp/common.hpp"

namespace stmlp {

using Vector = std::vector<double>;

/// Dense 2-D real matrix, row-major. Rows index time steps throughout the
/// model code. Values are immutable by convention once produced by an
/// operation; all operations below are pure.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major, size rows * cols

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> v);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  double* row(std::size_t i) { return values.data() + i * cols; }
  const double* row(std::size_t i) const { return values.data() + i * cols; }

  bool empty() const { return values.empty(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

/// "RxC" string for error messages.
std::string shape_str(const Matrix& m);

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

// --- forward operations ---

/// Standard product a[m x k] * b[k x n].
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);

/// Row i of the result is w[i] * row i of a.
Matrix scale_rows(const Matrix& a, const Vector& w);

/// Mean across rows: per-column means, length cols.
Vector mean_over_rows(const Matrix& a);
/// Mean across columns: per-row means, length rows.
Vector mean_over_cols(const Matrix& a);

// --- backward (vector-Jacobian product) counterparts ---
// Each takes the upstream gradient of the operation output and returns
// gradients with respect to the inputs.

struct MatmulGrads {
  Matrix a;  // grad_out * b^T
  Matrix b;  // a^T * grad_out
};
MatmulGrads matmul_backward(const Matrix& a, const Matrix& b, const Matrix& grad_out);

inline Matrix transpose_backward(const Matrix& grad_out) { return transpose(grad_out); }

struct PairGrads {
  Matrix a;
  Matrix b;
};
PairGrads add_backward(const Matrix& grad_out);
PairGrads hadamard_backward(const Matrix& a, const Matrix& b, const Matrix& grad_out);

struct ScaleRowsGrads {
  Matrix a;  // scale_rows(grad_out, w)
  Vector w;  // w[i] = sum_j grad_out[i][j] * a[i][j]
};
ScaleRowsGrads scale_rows_backward(const Matrix& a, const Vector& w, const Matrix& grad_out);

/// Gradient spreads uniformly, 1/rows per entry of each column.
Matrix mean_over_rows_backward(const Vector& grad_out, std::size_t rows);
/// Gradient spreads uniformly, 1/cols per entry of each row.
Matrix mean_over_cols_backward(const Vector& grad_out, std::size_t cols);

// --- small vector helpers used across modules ---

Vector vec_add(const Vector& a, const Vector& b);
double dot(const Vector& a, const Vector& b);

}  // namespace stmlp
