#include <doctest.h>

#include "motionsynth/pose.hpp"
#include "motionsynth/rng.hpp"
#include "test_util.hpp"

using namespace motionsynth;
using motionsynth::test::thrown_code;

TEST_SUITE_BEGIN("pose");

TEST_CASE("parses a plain two-frame csv") {
  PoseSequence seq = parse_sequence_csv("0.0,0.0,0.0\n0.1,0.0,0.0");
  CHECK(seq.length() == 2);
  CHECK(seq.dim() == 3);
  CHECK(seq.frames(1, 0) == doctest::Approx(0.1));
  CHECK(seq.frame_rate_hz == doctest::Approx(25.0));
}

TEST_CASE("rejects degenerate and malformed inputs") {
  CHECK(thrown_code([] { parse_sequence_csv(""); }) == Err::empty);
  CHECK(thrown_code([] { parse_sequence_csv("1,2\n1,2,3"); }) == Err::ragged_rows);
  CHECK(thrown_code([] { parse_sequence_csv("nan,1"); }) == Err::non_finite);
  CHECK(thrown_code([] { parse_sequence_csv("1,inf"); }) == Err::non_finite);
  CHECK(thrown_code([] { parse_sequence_csv("1,abc"); }) == Err::parse);
}

TEST_CASE("write/parse round trip is value-exact") {
  Rng rng(7);
  Mat frames = rng.uniform_matrix(13, 6, -10.0, 10.0);
  frames(0, 0) = 0.1 + 0.2;  // classic non-representable sum
  frames(1, 1) = 1e-300;
  frames(2, 2) = -12345.678901234567;
  PoseSequence back = parse_sequence_csv(write_sequence_csv(frames));
  REQUIRE(back.frames.rows() == frames.rows());
  REQUIRE(back.frames.cols() == frames.cols());
  CHECK((back.frames - frames).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standardize forced arithmetic") {
  NormStats stats;
  stats.mean = Vec::Constant(1, 1.0);
  stats.stddev = Vec::Constant(1, 2.0);
  Mat x(1, 1);
  x << 2.0;
  CHECK(standardize(x, stats)(0, 0) == doctest::Approx(0.5));

  NormStats id = NormStats::identity(3);
  Mat y(2, 3);
  y << 1, 2, 3, 4, 5, 6;
  CHECK((standardize(y, id) - y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("standardize round trip within 1e-12") {
  Rng rng(3);
  Mat frames = rng.uniform_matrix(40, 5, -2.0, 2.0);
  NormStats stats = NormStats::fit({frames});
  Mat round = destandardize(standardize(frames, stats), stats);
  CHECK((round - frames).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fit gives unit stats on the training pool and spares constant dims") {
  Rng rng(11);
  Mat a = rng.uniform_matrix(200, 4, -1.0, 3.0);
  Mat b = rng.uniform_matrix(150, 4, -1.0, 3.0);
  a.col(2).setConstant(7.0);
  b.col(2).setConstant(7.0);
  NormStats stats = NormStats::fit({a, b});
  CHECK(stats.stddev[2] == doctest::Approx(1.0));  // constant dim passes through

  Mat pooled(a.rows() + b.rows(), a.cols());
  pooled << a, b;
  Mat z = standardize(pooled, stats);
  for (int j = 0; j < 4; ++j) {
    if (j == 2) continue;
    CHECK(std::abs(z.col(j).mean()) <= 1e-12);
    const double var = z.col(j).array().square().mean() - z.col(j).mean() * z.col(j).mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(thrown_code([&] { standardize(Mat::Zero(2, 3), stats); }) == Err::dimension_mismatch);
}

TEST_SUITE_END();
