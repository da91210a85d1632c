#include "stmlp/matrix.hpp"

#include <cmath>
#include <string>

#include "stmlp/detail/gemm.hpp"

namespace stmlp {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != rows * cols) {
    throw ShapeError("matrix init: " + std::to_string(values.size()) +
                     " values for shape " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != m.cols) throw ShapeError("from_rows: ragged row lengths");
    std::size_t j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

bool all_finite(const Matrix& m) { return all_finite(m.values); }

bool all_finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw ShapeError("matmul: inner dimensions differ (" + shape_str(a) +
                     " vs " + shape_str(b) + ")");
  }
  Matrix c(a.rows, b.cols);
  detail::gemm(a.values.data(), b.values.data(), c.values.data(), a.rows,
               a.cols, b.cols);
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: shapes differ (" + shape_str(a) + " vs " +
                     shape_str(b) + ")");
  }
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    c.values[i] = a.values[i] + b.values[i];
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("hadamard: shapes differ (" + shape_str(a) + " vs " +
                     shape_str(b) + ")");
  }
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    c.values[i] = a.values[i] * b.values[i];
  return c;
}

Matrix scale_rows(const Matrix& a, const Vector& w) {
  if (w.size() != a.rows) {
    throw ShapeError("scale_rows: " + std::to_string(w.size()) +
                     " weights for " + shape_str(a));
  }
  Matrix c(a.rows, a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double wi = w[i];
    const double* src = a.row(i);
    double* dst = c.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) dst[j] = wi * src[j];
  }
  return c;
}

Vector mean_over_rows(const Matrix& a) {
  if (a.rows == 0 || a.cols == 0)
    throw ShapeError("mean_over_rows: empty matrix " + shape_str(a));
  Vector out(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* src = a.row(i);
    for (std::size_t j = 0; j < a.cols; ++j) out[j] += src[j];
  }
  const double inv = 1.0 / static_cast<double>(a.rows);
  for (double& x : out) x *= inv;
  return out;
}

Vector mean_over_cols(const Matrix& a) {
  if (a.rows == 0 || a.cols == 0)
    throw ShapeError("mean_over_cols: empty matrix " + shape_str(a));
  Vector out(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* src = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += src[j];
    out[i] = s / static_cast<double>(a.cols);
  }
  return out;
}

MatmulGrads matmul_backward(const Matrix& a, const Matrix& b, const Matrix& grad_out) {
  if (grad_out.rows != a.rows || grad_out.cols != b.cols) {
    throw ShapeError("matmul_backward: gradient " + shape_str(grad_out) +
                     " for product of " + shape_str(a) + " and " + shape_str(b));
  }
  return {matmul(grad_out, transpose(b)), matmul(transpose(a), grad_out)};
}

PairGrads add_backward(const Matrix& grad_out) { return {grad_out, grad_out}; }

PairGrads hadamard_backward(const Matrix& a, const Matrix& b, const Matrix& grad_out) {
  return {hadamard(grad_out, b), hadamard(grad_out, a)};
}

ScaleRowsGrads scale_rows_backward(const Matrix& a, const Vector& w,
                                   const Matrix& grad_out) {
  ScaleRowsGrads g{scale_rows(grad_out, w), Vector(a.rows, 0.0)};
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ga = grad_out.row(i);
    const double* src = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += ga[j] * src[j];
    g.w[i] = s;
  }
  return g;
}

Matrix mean_over_rows_backward(const Vector& grad_out, std::size_t rows) {
  Matrix g(rows, grad_out.size());
  const double inv = 1.0 / static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < grad_out.size(); ++j) g(i, j) = grad_out[j] * inv;
  return g;
}

Matrix mean_over_cols_backward(const Vector& grad_out, std::size_t cols) {
  Matrix g(grad_out.size(), cols);
  const double inv = 1.0 / static_cast<double>(cols);
  for (std::size_t i = 0; i < grad_out.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) g(i, j) = grad_out[i] * inv;
  return g;
}

Vector vec_add(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw ShapeError("vec_add: lengths differ (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  Vector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size())
    throw ShapeError("dot: lengths differ (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace stmlp
