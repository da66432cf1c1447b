#include <doctest.h>

#include "motionsynth/derivatives.hpp"
#include "motionsynth/rng.hpp"
#include "test_util.hpp"

using namespace motionsynth;
using motionsynth::test::thrown_code;

namespace {

// Direct evaluation of the binomial sum, the independent oracle for both the
// batch and streaming paths.
double binomial_sum(const std::vector<double>& f, int t, int n, int h) {
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const int src = std::max(t - i * h, 0);
    const double sign = i % 2 == 0 ? 1.0 : -1.0;
    acc += sign * static_cast<double>(binomial(n, i)) * f[static_cast<std::size_t>(src)];
  }
  return acc;
}

}  // namespace

TEST_SUITE_BEGIN("derivatives");

TEST_CASE("constant sequences have zero derivatives") {
  Mat frames = Mat::Constant(6, 3, 4.25);
  Mat aug = augment_with_derivatives(frames);
  CHECK(aug.cols() == 12);
  CHECK(aug.leftCols(3) == frames);
  CHECK(aug.rightCols(9).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hand-checked scalar sequence 0,1,4,9") {
  Mat frames(4, 1);
  frames << 0, 1, 4, 9;
  Mat aug = augment_with_derivatives(frames);
  // First differences: replicate padding zeroes the first entry.
  CHECK(aug(0, 1) == 0.0);
  CHECK(aug(1, 1) == 1.0);
  CHECK(aug(2, 1) == 3.0);
  CHECK(aug(3, 1) == 5.0);
  // Orders 2 and 3 at the last frame.
  CHECK(aug(3, 2) == 2.0);   // 9 - 2*4 + 1
  CHECK(aug(3, 3) == 0.0);   // 9 - 3*4 + 3*1 - 0
  // The whole table against the direct binomial sum.
  std::vector<double> f{0, 1, 4, 9};
  for (int t = 0; t < 4; ++t)
    for (int n = 1; n <= 3; ++n) CHECK(aug(t, n) == binomial_sum(f, t, n, 1));
}

TEST_CASE("streaming equals batch on every prefix") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int T = 1 + static_cast<int>(rng.uniform() * 12);
    const int D = 1 + static_cast<int>(rng.uniform() * 4);
    DerivativeOptions opts;
    opts.spacing = 1 + static_cast<int>(rng.uniform() * 2);
    Mat frames = rng.uniform_matrix(T, D, -3.0, 3.0);
    Mat batch = augment_with_derivatives(frames, opts);
    DerivativeStepper stepper(D, opts);
    for (int t = 0; t < T; ++t) {
      Vec row = stepper.step(Vec(frames.row(t).transpose()));
      CHECK((row.transpose() - batch.row(t)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("first frame of a stream has zero derivative blocks") {
  DerivativeStepper stepper(2);
  Vec x0(2);
  x0 << 1.5, -2.0;
  Vec aug = stepper.step(x0);
  CHECK(aug.head(2) == x0);
  CHECK(aug.tail(6).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("augmentation is linear") {
  // Integer-valued frames and power-of-two scalars keep every intermediate
  // exactly representable, so the linearity identity holds bit for bit.
  Rng rng(22);
  Mat f = rng.uniform_matrix(9, 2, -4.0, 4.0).array().round();
  Mat g = rng.uniform_matrix(9, 2, -4.0, 4.0).array().round();
  const double a = 2.0, b = 0.5;
  Mat lhs = augment_with_derivatives(a * f + b * g);
  Mat rhs = a * augment_with_derivatives(f) + b * augment_with_derivatives(g);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() == 0.0);

  // General inputs agree to rounding error.
  Mat fr = rng.uniform_matrix(9, 2, -4.0, 4.0);
  Mat gr = rng.uniform_matrix(9, 2, -4.0, 4.0);
  Mat lhs2 = augment_with_derivatives(1.7 * fr - 0.3 * gr);
  Mat rhs2 = 1.7 * augment_with_derivatives(fr) - 0.3 * augment_with_derivatives(gr);
  CHECK((lhs2 - rhs2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("option validation") {
  DerivativeOptions bad_order;
  bad_order.orders = {0};
  CHECK(thrown_code([&] { augment_with_derivatives(Mat::Zero(3, 1), bad_order); }) == Err::bad_order);

  DerivativeOptions high;
  high.orders = {1, 4};
  CHECK(thrown_code([&] { augment_with_derivatives(Mat::Zero(3, 1), high); }) == Err::bad_order);
  high.allow_high_orders = true;
  CHECK(augment_with_derivatives(Mat::Zero(6, 1), high).cols() == 3);

  DerivativeOptions bad_spacing;
  bad_spacing.spacing = 0;
  CHECK(thrown_code([&] { augment_with_derivatives(Mat::Zero(3, 1), bad_spacing); }) == Err::bad_spacing);

  DerivativeStepper stepper(3);
  CHECK(thrown_code([&] { stepper.step(Vec(Vec::Zero(2))); }) == Err::dimension_mismatch);
}

TEST_SUITE_END();
