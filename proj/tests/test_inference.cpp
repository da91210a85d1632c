#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "stmlp/detail/fast_tanh.hpp"
#include "stmlp/inference.hpp"
#include "test_support.hpp"

using namespace stmlp;
using test_support::random_matrix;

TEST_CASE("vectorized tanh stays within 1e-12 of std::tanh") {
  std::vector<double> xs;
  for (double x = -25.0; x <= 25.0; x += 0.00113) xs.push_back(x);
  // edge neighborhoods: origin, series/rational crossover, clamp threshold
  for (double x : {0.0, -0.0, 1e-12, -1e-12, 9.7e-4, 9.8e-4, 19.999, 20.001, 30.0})
    xs.push_back(x);
  std::vector<double> ys = xs;
  detail::gelu_inplace(ys.data(), 0);  // no-op touch so the header is exercised

#ifdef STMLP_VECTOR_MATH
  for (std::size_t i = 0; i + 8 <= xs.size(); i += 8) {
    detail::vec8d v;
    std::memcpy(&v, xs.data() + i, sizeof(v));
    v = detail::tanh_vec(v);
    double out[8];
    std::memcpy(out, &v, sizeof(v));
    for (int lane = 0; lane < 8; ++lane) {
      const double want = std::tanh(xs[i + lane]);
      CHECK(std::fabs(out[lane] - want) <= 1e-12);
    }
  }
#endif
}

TEST_CASE("gelu_inplace matches the reference activation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-6.0, 6.0);
  std::vector<double> xs(1003);  // odd length exercises the scalar tail
  for (double& v : xs) v = dist(rng);
  std::vector<double> ys = xs;
  detail::gelu_inplace(ys.data(), ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    const double want =
        0.5 * x * (1.0 + std::tanh(0.7978845608028654 * (x + 0.044715 * x * x * x)));
    CHECK(std::fabs(ys[i] - want) <= 1e-12);
  }
}

namespace {

ModelConfig engine_config() {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.joints = 3;
  cfg.hidden_width = 24;
  cfg.seq_len = 7;
  cfg.spatial_hidden = 5;
  cfg.temporal_hidden = 9;
  cfg.classes = 3;
  return cfg;
}

}  // namespace

TEST_CASE("double engine matches the reference forward across configurations") {
  std::mt19937_64 rng(5);
  int combo = 0;
  for (Variant variant : {Variant::full, Variant::spatial_only,
                          Variant::temporal_only, Variant::two_stream})
    for (SeMode mode : {SeMode::shared, SeMode::separate, SeMode::off})
      for (LnAxis axis : {LnAxis::operand, LnAxis::features})
        for (SeCombine combine : {SeCombine::multiply, SeCombine::add}) {
          ModelConfig cfg = engine_config();
          cfg.variant = variant;
          cfg.se_mode = mode;
          cfg.ln_axis = axis;
          cfg.se_combine = combine;
          ModelParams p = init_params(cfg, 100 + combo);
          InferenceEngine<double> engine(p, cfg);
          for (int rep = 0; rep < 3; ++rep) {
            Matrix flat = random_matrix(cfg.seq_len, cfg.pose_width(), rng);
            Vector want = forward_flat(p, cfg, flat);
            Vector got = engine.logits(flat);
            REQUIRE(got.size() == want.size());
            for (std::size_t c = 0; c < got.size(); ++c) {
              const double denom = std::max(1.0, std::fabs(want[c]));
              INFO("combo ", combo, " class ", c);
              CHECK(std::fabs(got[c] - want[c]) / denom <= 1e-9);
            }
          }
          ++combo;
        }
}

TEST_CASE("double engine matches the reference on the full TCG architecture") {
  ModelConfig cfg = tcg_config();
  ModelParams p = init_params(cfg, 9);
  InferenceEngine<double> engine(p, cfg);
  std::mt19937_64 rng(9);
  Matrix flat = random_matrix(cfg.seq_len, cfg.pose_width(), rng);
  Vector want = forward_flat(p, cfg, flat);
  Vector got = engine.logits(flat);
  for (std::size_t c = 0; c < got.size(); ++c)
    CHECK(std::fabs(got[c] - want[c]) / std::max(1.0, std::fabs(want[c])) <= 1e-9);
}

TEST_CASE("single-precision engine tracks the reference at float accuracy") {
  ModelConfig cfg = engine_config();
  ModelParams p = init_params(cfg, 13);
  InferenceEngine<float> engine(p, cfg);
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 3; ++rep) {
    Matrix flat = random_matrix(cfg.seq_len, cfg.pose_width(), rng);
    Vector want = forward_flat(p, cfg, flat);
    Vector got = engine.logits(flat);
    for (std::size_t c = 0; c < got.size(); ++c)
      CHECK(std::fabs(got[c] - want[c]) / std::max(1.0, std::fabs(want[c])) <= 1e-4);
  }
}

TEST_CASE("engine rejects wrongly sized input") {
  ModelConfig cfg = engine_config();
  ModelParams p = init_params(cfg, 17);
  InferenceEngine<double> engine(p, cfg);
  std::vector<double> bad(5, 0.0);
  CHECK_THROWS_AS(engine.run(bad), ShapeError);
}

TEST_CASE("engine output is identical across repeated runs") {
  ModelConfig cfg = engine_config();
  ModelParams p = init_params(cfg, 19);
  InferenceEngine<double> engine(p, cfg);
  std::mt19937_64 rng(19);
  Matrix flat = random_matrix(cfg.seq_len, cfg.pose_width(), rng);
  Vector a = engine.logits(flat);
  Vector b = engine.logits(flat);
  CHECK(a == b);
}
