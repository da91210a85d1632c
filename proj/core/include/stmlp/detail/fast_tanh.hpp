#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

namespace stmlp::detail {

// Branch-free vectorized tanh for the inference path. exp is reduced as
// 2^k * p(r) with r in [-ln2/2, ln2/2] and a degree-11 polynomial; tanh(x) =
// sign(x) * (1 - e) / (1 + e) with e = exp(-2|x|), switching to the odd
// series below 2^-10 where the subtraction would cancel. Max error against
// std::tanh is ~1e-13 relative (double) / ~1 ulp (float); the reference
// layers use std::tanh itself.

#if defined(__GNUC__) || defined(__clang__)
#define STMLP_VECTOR_MATH 1

typedef double vec8d __attribute__((vector_size(64)));
typedef std::int64_t vec8i __attribute__((vector_size(64)));
typedef float vec16f __attribute__((vector_size(64)));
typedef std::int32_t vec16i __attribute__((vector_size(64)));

inline vec8d exp_reduced(vec8d x) {
  const double log2e = 1.4426950408889634074;
  const double ln2_hi = 6.93147180369123816490e-01;
  const double ln2_lo = 1.90821492927058770002e-10;
  const double shifter = 6755399441055744.0;  // 2^52 + 2^51
  vec8d tm = x * log2e + shifter;
  vec8d kd = tm - shifter;
  vec8i ki = __builtin_convertvector(kd, vec8i);
  vec8d r = (x - kd * ln2_hi) - kd * ln2_lo;
  vec8d p = r * (1.0 / 39916800.0) + (1.0 / 3628800.0);
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  vec8i bits = std::bit_cast<vec8i>(p) + (ki << 52);
  return std::bit_cast<vec8d>(bits);
}

inline vec8d tanh_vec(vec8d x) {
  vec8d a = x < 0.0 ? -x : x;
  a = a > 20.0 ? a * 0.0 + 20.0 : a;
  vec8d e = exp_reduced(-2.0 * a);
  vec8d t = (1.0 - e) / (1.0 + e);
  vec8d series = a - a * a * a * (1.0 / 3.0);
  t = a < 9.765625e-4 ? series : t;
  return x < 0.0 ? -t : t;
}

inline vec16f exp_reduced(vec16f x) {
  const float log2e = 1.44269504088896341f;
  const float ln2_hi = 0.693359375f;
  const float ln2_lo = -2.12194440e-4f;
  const float shifter = 12582912.0f;  // 2^23 + 2^22
  vec16f tm = x * log2e + shifter;
  vec16f kd = tm - shifter;
  vec16i ki = __builtin_convertvector(kd, vec16i);
  vec16f r = (x - kd * ln2_hi) - kd * ln2_lo;
  vec16f p = r * (1.0f / 5040.0f) + (1.0f / 720.0f);
  p = p * r + 1.0f / 120.0f;
  p = p * r + 1.0f / 24.0f;
  p = p * r + 1.0f / 6.0f;
  p = p * r + 0.5f;
  p = p * r + 1.0f;
  p = p * r + 1.0f;
  vec16i bits = std::bit_cast<vec16i>(p) + (ki << 23);
  return std::bit_cast<vec16f>(bits);
}

inline vec16f tanh_vec(vec16f x) {
  vec16f a = x < 0.0f ? -x : x;
  a = a > 10.0f ? a * 0.0f + 10.0f : a;
  vec16f e = exp_reduced(-2.0f * a);
  vec16f t = (1.0f - e) / (1.0f + e);
  vec16f series = a - a * a * a * (1.0f / 3.0f);
  t = a < 0.03125f ? series : t;
  return x < 0.0f ? -t : t;
}

template <typename Real>
struct VecOf;
template <>
struct VecOf<double> {
  using type = vec8d;
  static constexpr std::size_t width = 8;
};
template <>
struct VecOf<float> {
  using type = vec16f;
  static constexpr std::size_t width = 16;
};

#endif  // vector extensions

template <typename Real>
inline Real tanh_fast(Real x) {
  return std::tanh(x);
}

/// In-place GeLU (tanh form) over a buffer.
template <typename Real>
void gelu_inplace(Real* x, std::size_t n) {
  const Real c0 = static_cast<Real>(0.7978845608028654);  // sqrt(2/pi)
  const Real c1 = static_cast<Real>(0.044715);
  const Real half = static_cast<Real>(0.5);
  const Real one = static_cast<Real>(1.0);
  std::size_t i = 0;
#ifdef STMLP_VECTOR_MATH
  using Vec = typename VecOf<Real>::type;
  constexpr std::size_t W = VecOf<Real>::width;
  for (; i + W <= n; i += W) {
    Vec v;
    std::memcpy(&v, x + i, sizeof(v));
    Vec u = c0 * (v + c1 * v * v * v);
    v = half * v * (one + tanh_vec(u));
    std::memcpy(x + i, &v, sizeof(v));
  }
#endif
  for (; i < n; ++i) {
    const Real u = c0 * (x[i] + c1 * x[i] * x[i] * x[i]);
    x[i] = half * x[i] * (one + tanh_fast(u));
  }
}

}  // namespace stmlp::detail
