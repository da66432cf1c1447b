#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "motionsynth/rng.hpp"
#include "motionsynth/rotation.hpp"
#include "test_util.hpp"

using namespace motionsynth;
using motionsynth::test::thrown_code;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent oracle: axis-angle -> unit quaternion -> rotation matrix.
Mat3 quaternion_rotmat(const Vec3& axis, double angle) {
  const double w = std::cos(angle / 2.0);
  const Vec3 v = std::sin(angle / 2.0) * axis.normalized();
  const double x = v.x(), y = v.y(), z = v.z();
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

}  // namespace

TEST_SUITE_BEGIN("rotation");

TEST_CASE("zero vector maps to the identity") {
  CHECK((expmap_to_rotmat(Vec3::Zero()) - Mat3::Identity()).norm() == 0.0);
}

TEST_CASE("quarter turn about z against the quaternion oracle") {
  Vec3 v(0, 0, kPi / 2);
  Mat3 R = expmap_to_rotmat(v);
  CHECK((R * Vec3(1, 0, 0) - Vec3(0, 1, 0)).norm() <= 1e-12);
  CHECK((R - quaternion_rotmat(Vec3(0, 0, 1), kPi / 2)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("random axes against the quaternion oracle; orthonormal with det one") {
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    Vec3 v(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    if (v.norm() < 1e-6) continue;
    Mat3 R = expmap_to_rotmat(v);
    CHECK((R - quaternion_rotmat(v, v.norm())).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("half turn is symmetric with trace -1") {
  Rng rng(6);
  for (int k = 0; k < 20; ++k) {
    Vec3 axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (axis.norm() < 1e-3) continue;
    axis.normalize();
    Mat3 R = expmap_to_rotmat(axis * kPi);
    CHECK((R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(R.trace() == doctest::Approx(-1.0).epsilon(1e-10));
  }
}

TEST_CASE("euler extraction on canonical rotations") {
  Vec3 e = rotmat_to_euler(Mat3::Identity());
  CHECK(e.norm() == 0.0);

  Vec3 q = rotmat_to_euler(expmap_to_rotmat(Vec3(0, 0, kPi / 2)));
  CHECK(q[0] == doctest::Approx(kPi / 2));
  CHECK(q[1] == doctest::Approx(0.0));
  CHECK(q[2] == doctest::Approx(0.0));
}

TEST_CASE("round trip through euler angles away from gimbal lock") {
  Rng rng(9);
  for (int k = 0; k < 100; ++k) {
    Vec3 v(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    Mat3 R = expmap_to_rotmat(v);
    if (std::abs(R(2, 0)) > 0.999) continue;  // near-gimbal cases below
    Mat3 back = euler_to_rotmat(rotmat_to_euler(R));
    CHECK((back - R).norm() <= 1e-8);
  }
}

TEST_CASE("gimbal lock branch fixes roll to zero and still reconstructs") {
  Mat3 locked = euler_to_rotmat(Vec3(0.4, kPi / 2, 0.9));
  Vec3 e = rotmat_to_euler(locked);
  CHECK(e[2] == 0.0);
  CHECK(e[1] == doctest::Approx(kPi / 2));
  CHECK((euler_to_rotmat(e) - locked).norm() <= 1e-8);

  Mat3 locked_down = euler_to_rotmat(Vec3(-0.8, -kPi / 2, 0.2));
  Vec3 ed = rotmat_to_euler(locked_down);
  CHECK(ed[2] == 0.0);
  CHECK((euler_to_rotmat(ed) - locked_down).norm() <= 1e-8);
}

TEST_CASE("rejects matrices that are not rotations") {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 1.5;
  CHECK(thrown_code([&] { rotmat_to_euler(bad); }) == Err::not_rotation);

  Mat3 reflect = Mat3::Identity();
  reflect(2, 2) = -1.0;  // orthonormal, det -1
  CHECK(thrown_code([&] { rotmat_to_euler(reflect); }) == Err::not_rotation);
}

TEST_CASE("frame conversion handles one joint per 3 columns") {
  Vec frame(6);
  frame << 0, 0, kPi / 2, 0.1, 0, 0;
  Vec e = expmap_frame_to_euler(frame);
  CHECK(e[0] == doctest::Approx(kPi / 2));
  CHECK(e[5] == doctest::Approx(0.1));  // Rx(0.1): pure roll
  CHECK(thrown_code([] { expmap_frame_to_euler(Vec::Zero(4)); }) == Err::dimension_mismatch);
}

TEST_SUITE_END();
