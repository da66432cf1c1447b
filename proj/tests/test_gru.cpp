#include <doctest.h>

#include <cmath>
#include <vector>

#include "motionsynth/gru.hpp"
#include "test_util.hpp"

using namespace motionsynth;
using motionsynth::test::thrown_code;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

// Scalar loss sum(w . h_new) used by the finite-difference cell checks.
double cell_loss(const BodyGruParams& p, const Mat& x, const Mat& h_prev, const Mat& guide, const Mat& w) {
  return (body_gru_cell_forward(p, x, h_prev, guide).array() * w.array()).sum();
}

}  // namespace

TEST_SUITE_BEGIN("gru");

TEST_CASE("all-zero parameters halve the previous state") {
  GruParams p = GruParams::zeros(3, 2);
  Mat v(3, 1);
  v << 0.2, -0.6, 1.0;
  Mat h = gru_cell_forward(p, Mat::Ones(2, 1), v);
  CHECK((h - 0.5 * v).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("scalar cell saturates to tanh(1) when the update gate closes") {
  GruParams p = GruParams::zeros(1, 1);
  p.W_c(0, 0) = 1.0;
  p.b_z[0] = -40.0;  // z -> 0
  Mat h = gru_cell_forward(p, Mat::Ones(1, 1), Mat::Zero(1, 1));
  CHECK(std::abs(h(0, 0) - std::tanh(1.0)) <= 1e-12);
}

TEST_CASE("zero input and state with zero biases stays at zero") {
  GruParams p = GruParams::zeros(2, 2);
  Mat h = gru_cell_forward(p, Mat::Zero(2, 1), Mat::Zero(2, 1));
  CHECK(h.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("body cell with zero guide projections reduces to the standard cell") {
  Rng rng(31);
  BodyGruParams body = init_body_gru(4, 3, 2, rng);
  body.V_r.setZero();
  body.V_z.setZero();
  body.V_c.setZero();
  Mat x = rng.uniform_matrix(3, 5, -1, 1);
  Mat h_prev = rng.uniform_matrix(4, 5, -1, 1);
  Mat guide = rng.uniform_matrix(2, 5, -9, 9);
  Mat a = body_gru_cell_forward(body, x, h_prev, guide);
  Mat b = gru_cell_forward(static_cast<const GruParams&>(body), x, h_prev);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("all-zero body cell ignores input and guide") {
  BodyGruParams p = BodyGruParams::zeros(2, 3, 2);
  Mat h_prev(2, 1);
  h_prev << 0.8, -0.4;
  Mat h = body_gru_cell_forward(p, Mat::Ones(3, 1), h_prev, Mat::Ones(2, 1));
  CHECK((h - 0.5 * h_prev).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("scalar body cell matches a hand-evaluated update") {
  BodyGruParams p = BodyGruParams::zeros(1, 1, 1);
  p.W_r(0, 0) = 1.0;
  p.V_z(0, 0) = -2.0;
  p.W_c(0, 0) = 0.5;
  p.V_c(0, 0) = 0.25;
  const double x = 0.7, h_prev = -0.3, guide = 0.9;
  const double r = 1.0 / (1.0 + std::exp(-(1.0 * x)));
  const double z = 1.0 / (1.0 + std::exp(-(-2.0 * guide)));
  const double c = std::tanh(0.5 * x + 0.25 * guide);
  const double expect = z * h_prev + (1.0 - z) * c;
  Mat h = body_gru_cell_forward(p, Mat::Constant(1, 1, x), Mat::Constant(1, 1, h_prev), Mat::Constant(1, 1, guide));
  CHECK(std::abs(h(0, 0) - expect) <= 1e-15);
  (void)r;
}

TEST_CASE("decoder identity skip and bias fallback") {
  DecoderParams d = DecoderParams::zeros(2, 3, true);
  Mat x_joint(2, 1);
  x_joint << 0.5, -1.5;
  CHECK((decoder_forward(d, Mat::Zero(3, 1), x_joint) - x_joint).cwiseAbs().maxCoeff() == 0.0);

  DecoderParams noskip = DecoderParams::zeros(2, 3, false);
  noskip.b_out << 1.0, 2.0;
  Mat y = decoder_forward(noskip, Mat::Zero(3, 1), Mat());
  CHECK(y(0, 0) == 1.0);
  CHECK(y(1, 0) == 2.0);

  DecoderParams hand = DecoderParams::zeros(2, 2, false);
  hand.W_out << 1, 2, 3, 4;
  hand.b_out << 0.5, -0.5;
  Mat yh = decoder_forward(hand, Mat::Ones(2, 1), Mat());
  CHECK(yh(0, 0) == doctest::Approx(3.5));
  CHECK(yh(1, 0) == doctest::Approx(6.5));
}

TEST_CASE("gate ranges and state containment over random rollouts") {
  Rng rng(33);
  BodyGruParams p = init_body_gru(6, 4, 3, rng);
  Mat h = rng.uniform_matrix(6, 8, -1.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    Mat x = rng.uniform_matrix(4, 8, -5.0, 5.0);
    Mat guide = rng.uniform_matrix(3, 8, -5.0, 5.0);
    GruCache cache;
    h = body_gru_cell_forward(p, x, h, guide, &cache);
    CHECK(cache.r.minCoeff() > 0.0);
    CHECK(cache.r.maxCoeff() < 1.0);
    CHECK(cache.z.minCoeff() > 0.0);
    CHECK(cache.z.maxCoeff() < 1.0);
    CHECK(cache.c.minCoeff() > -1.0);
    CHECK(cache.c.maxCoeff() < 1.0);
    CHECK(h.minCoeff() >= -1.0);
    CHECK(h.maxCoeff() <= 1.0);
  }
}

TEST_CASE("backward: zero upstream gradient gives zero everywhere") {
  Rng rng(34);
  BodyGruParams p = init_body_gru(3, 2, 2, rng);
  GruCache cache;
  body_gru_cell_forward(p, rng.uniform_matrix(2, 1, -1, 1), rng.uniform_matrix(3, 1, -1, 1),
                        rng.uniform_matrix(2, 1, -1, 1), &cache);
  BodyGruParams grads = BodyGruParams::zeros(3, 2, 2);
  Mat dx, dh_prev, dp;
  body_gru_cell_backward(p, cache, Mat::Zero(3, 1), grads, dx, dh_prev, dp);
  CHECK(dx.cwiseAbs().maxCoeff() == 0.0);
  CHECK(dh_prev.cwiseAbs().maxCoeff() == 0.0);
  CHECK(dp.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.W_c.cwiseAbs().maxCoeff() == 0.0);
  CHECK(grads.V_r.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward: zero parameters route half the gradient to h_prev") {
  BodyGruParams p = BodyGruParams::zeros(2, 2, 1);
  GruCache cache;
  body_gru_cell_forward(p, Mat::Zero(2, 1), Mat::Zero(2, 1), Mat::Zero(1, 1), &cache);
  BodyGruParams grads = BodyGruParams::zeros(2, 2, 1);
  Mat dx, dh_prev, dp;
  Mat dh_new(2, 1);
  dh_new << 1.0, -2.0;
  body_gru_cell_backward(p, cache, dh_new, grads, dx, dh_prev, dp);
  CHECK((dh_prev - 0.5 * dh_new).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("backward matches central finite differences on a random small cell") {
  Rng rng(35);
  const Eigen::Index H = 4, I = 3, P = 2, B = 2;
  BodyGruParams p = init_body_gru(H, I, P, rng);
  p.b_r = rng.uniform_matrix(H, 1, -0.5, 0.5);
  p.b_z = rng.uniform_matrix(H, 1, -0.5, 0.5);
  p.b_c = rng.uniform_matrix(H, 1, -0.5, 0.5);
  Mat x = rng.uniform_matrix(I, B, -1, 1);
  Mat h_prev = rng.uniform_matrix(H, B, -1, 1);
  Mat guide = rng.uniform_matrix(P, B, -1, 1);
  Mat w = rng.uniform_matrix(H, B, -1, 1);

  GruCache cache;
  body_gru_cell_forward(p, x, h_prev, guide, &cache);
  BodyGruParams grads = BodyGruParams::zeros(H, I, P);
  Mat dx, dh_prev, dp;
  body_gru_cell_backward(p, cache, w, grads, dx, dh_prev, dp);

  const double step = 1e-5;
  double worst = 0.0;
  auto check_tensor = [&](auto& theta, const auto& analytic) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double saved = theta.data()[i];
      theta.data()[i] = saved + step;
      const double up = cell_loss(p, x, h_prev, guide, w);
      theta.data()[i] = saved - step;
      const double down = cell_loss(p, x, h_prev, guide, w);
      theta.data()[i] = saved;
      worst = std::max(worst, rel_err(analytic.data()[i], (up - down) / (2 * step)));
    }
  };
  check_tensor(p.W_r, grads.W_r);
  check_tensor(p.W_z, grads.W_z);
  check_tensor(p.W_c, grads.W_c);
  check_tensor(p.U_r, grads.U_r);
  check_tensor(p.U_z, grads.U_z);
  check_tensor(p.U_c, grads.U_c);
  check_tensor(p.V_r, grads.V_r);
  check_tensor(p.V_z, grads.V_z);
  check_tensor(p.V_c, grads.V_c);
  check_tensor(p.b_r, grads.b_r);
  check_tensor(p.b_z, grads.b_z);
  check_tensor(p.b_c, grads.b_c);

  // Inputs as well: x, h_prev, guide.
  check_tensor(x, dx);
  check_tensor(h_prev, dh_prev);
  check_tensor(guide, dp);
  CHECK(worst <= 1e-4);
}

TEST_CASE("stale cache is rejected") {
  Rng rng(36);
  BodyGruParams p = init_body_gru(3, 2, 2, rng);
  GruCache cache;
  body_gru_cell_forward(p, rng.uniform_matrix(2, 1, -1, 1), rng.uniform_matrix(3, 1, -1, 1),
                        rng.uniform_matrix(2, 1, -1, 1), &cache);
  BodyGruParams other = init_body_gru(3, 4, 2, rng);
  BodyGruParams grads = BodyGruParams::zeros(3, 4, 2);
  Mat dx, dh, dp;
  CHECK(thrown_code([&] { body_gru_cell_backward(other, cache, Mat::Zero(3, 1), grads, dx, dh, dp); }) ==
        Err::stale_cache);
}

TEST_CASE("initialization is deterministic, bounded, and centred") {
  Rng a(42), b(42);
  GruParams p1 = init_gru(4, 100, a);
  GruParams p2 = init_gru(4, 100, b);
  CHECK((p1.W_r - p2.W_r).cwiseAbs().maxCoeff() == 0.0);
  CHECK((p1.U_c - p2.U_c).cwiseAbs().maxCoeff() == 0.0);
  CHECK(p1.W_r.cwiseAbs().maxCoeff() <= 0.1);  // fan_in 100
  CHECK(p1.b_r.cwiseAbs().maxCoeff() == 0.0);

  // Mean of ~1e5 uniform draws should sit within 3 sigma of zero.
  Rng c(7);
  const Eigen::Index n = 100000;
  Mat big = c.uniform_matrix(n, 1, -0.1, 0.1);
  const double sigma_mean = (0.2 / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(big.mean()) <= 3.0 * sigma_mean);
}

TEST_CASE("dimension mismatches are rejected") {
  GruParams p = GruParams::zeros(3, 2);
  CHECK(thrown_code([&] { gru_cell_forward(p, Mat::Zero(3, 1), Mat::Zero(3, 1)); }) == Err::dimension_mismatch);
  CHECK(thrown_code([&] { gru_cell_forward(p, Mat::Zero(2, 1), Mat::Zero(2, 1)); }) == Err::dimension_mismatch);
  Mat bad = Mat::Constant(2, 1, std::numeric_limits<double>::quiet_NaN());
  CHECK(thrown_code([&] { gru_cell_forward(p, bad, Mat::Zero(3, 1)); }) == Err::non_finite);
}

TEST_SUITE_END();
