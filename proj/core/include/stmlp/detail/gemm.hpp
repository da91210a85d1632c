#pragma once

#include <cstddef>

namespace stmlp::detail {

// Register-tiled row-major matrix product, C += A * B.
// A is m x k, B is k x n, C is m x n; C must not alias A or B.
// The accumulator tile lives in registers; the fixed-width inner loops
// vectorize under -fopenmp-simd.

template <typename Real, std::size_t NR>
inline void gemm_tile_cols(const Real* __restrict a, const Real* __restrict b,
                           Real* __restrict c, std::size_t m, std::size_t k,
                           std::size_t n, std::size_t j) {
  constexpr std::size_t MR = 4;
  std::size_t i = 0;
  for (; i + MR <= m; i += MR) {
    Real acc0[NR] = {}, acc1[NR] = {}, acc2[NR] = {}, acc3[NR] = {};
    const Real* a0 = a + i * k;
    const Real* a1 = a0 + k;
    const Real* a2 = a1 + k;
    const Real* a3 = a2 + k;
    for (std::size_t l = 0; l < k; ++l) {
      const Real* brow = b + l * n + j;
      const Real v0 = a0[l], v1 = a1[l], v2 = a2[l], v3 = a3[l];
#pragma omp simd
      for (std::size_t t = 0; t < NR; ++t) acc0[t] += v0 * brow[t];
#pragma omp simd
      for (std::size_t t = 0; t < NR; ++t) acc1[t] += v1 * brow[t];
#pragma omp simd
      for (std::size_t t = 0; t < NR; ++t) acc2[t] += v2 * brow[t];
#pragma omp simd
      for (std::size_t t = 0; t < NR; ++t) acc3[t] += v3 * brow[t];
    }
    Real* crow = c + i * n + j;
#pragma omp simd
    for (std::size_t t = 0; t < NR; ++t) crow[t] += acc0[t];
#pragma omp simd
    for (std::size_t t = 0; t < NR; ++t) crow[n + t] += acc1[t];
#pragma omp simd
    for (std::size_t t = 0; t < NR; ++t) crow[2 * n + t] += acc2[t];
#pragma omp simd
    for (std::size_t t = 0; t < NR; ++t) crow[3 * n + t] += acc3[t];
  }
  for (; i < m; ++i) {
    Real acc[NR] = {};
    const Real* arow = a + i * k;
    for (std::size_t l = 0; l < k; ++l) {
      const Real* brow = b + l * n + j;
      const Real v = arow[l];
#pragma omp simd
      for (std::size_t t = 0; t < NR; ++t) acc[t] += v * brow[t];
    }
    Real* crow = c + i * n + j;
#pragma omp simd
    for (std::size_t t = 0; t < NR; ++t) crow[t] += acc[t];
  }
}

template <typename Real>
void gemm(const Real* __restrict a, const Real* __restrict b,
          Real* __restrict c, std::size_t m, std::size_t k, std::size_t n) {
  std::size_t j = 0;
  if constexpr (sizeof(Real) == 4) {
    for (; j + 32 <= n; j += 32) gemm_tile_cols<Real, 32>(a, b, c, m, k, n, j);
  }
  for (; j + 16 <= n; j += 16) gemm_tile_cols<Real, 16>(a, b, c, m, k, n, j);
  for (; j + 8 <= n; j += 8) gemm_tile_cols<Real, 8>(a, b, c, m, k, n, j);
  for (; j + 4 <= n; j += 4) gemm_tile_cols<Real, 4>(a, b, c, m, k, n, j);
  if (j < n) {
    for (std::size_t i = 0; i < m; ++i) {
      const Real* arow = a + i * k;
      Real* crow = c + i * n;
      for (std::size_t l = 0; l < k; ++l) {
        const Real v = arow[l];
        const Real* brow = b + l * n;
        for (std::size_t jj = j; jj < n; ++jj) crow[jj] += v * brow[jj];
      }
    }
  }
}

}  // namespace stmlp::detail
