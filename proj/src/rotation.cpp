#include "motionsynth/rotation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace motionsynth {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kZeroAngle = 1e-12;
constexpr double kOrthoTol = 1e-8;
// cos(pitch) at the documented 1e-6 gimbal margin is ~5e-13 away from 0 in
// |R(2,0)|; anything closer than this uses the degenerate branch.
constexpr double kGimbalTrigger = 1.0 - 5e-13;

double wrap_half_open(double a) {
  // atan2/asin already land in [-pi, pi]; only the -pi edge needs folding.
  return a <= -kPi ? a + 2.0 * kPi : a;
}

}  // namespace

Mat3 expmap_to_rotmat(const Vec3& v) {
  require(v.allFinite(), Err::non_finite, "exp-map vector is not finite");
  const double angle = v.norm();
  if (angle < kZeroAngle) return Mat3::Identity();
  const Vec3 axis = v / angle;
  Mat3 k;
  k << 0, -axis.z(), axis.y(),
       axis.z(), 0, -axis.x(),
      -axis.y(), axis.x(), 0;
  return Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
}

Vec3 rotmat_to_euler(const Mat3& R) {
  require(R.allFinite(), Err::non_finite, "rotation matrix is not finite");
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  require(ortho <= kOrthoTol && R.determinant() > 0.0, Err::not_rotation,
          "matrix is not a rotation (orthonormality residual " + std::to_string(ortho) + ")");

  const double s = std::clamp(-R(2, 0), -1.0, 1.0);
  const double pitch = std::asin(s);
  double yaw, roll;
  if (std::abs(R(2, 0)) >= kGimbalTrigger) {
    roll = 0.0;
    yaw = std::atan2(-R(0, 1), R(1, 1));
  } else {
    yaw = std::atan2(R(1, 0), R(0, 0));
    roll = std::atan2(R(2, 1), R(2, 2));
  }
  return Vec3(wrap_half_open(yaw), wrap_half_open(pitch), wrap_half_open(roll));
}

Mat3 euler_to_rotmat(const Vec3& ypr) {
  const double cz = std::cos(ypr[0]), sz = std::sin(ypr[0]);
  const double cy = std::cos(ypr[1]), sy = std::sin(ypr[1]);
  const double cx = std::cos(ypr[2]), sx = std::sin(ypr[2]);
  Mat3 rz, ry, rx;
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  return rz * ry * rx;
}

Vec expmap_frame_to_euler(const Vec& frame) {
  require(frame.size() % 3 == 0, Err::dimension_mismatch,
          "frame width " + std::to_string(frame.size()) + " is not divisible by 3");
  Vec out(frame.size());
  for (Eigen::Index j = 0; j < frame.size(); j += 3)
    out.segment<3>(j) = rotmat_to_euler(expmap_to_rotmat(frame.segment<3>(j)));
  return out;
}

Mat expmap_to_euler(const Mat& frames) {
  Mat out(frames.rows(), frames.cols());
  for (Eigen::Index t = 0; t < frames.rows(); ++t)
    out.row(t) = expmap_frame_to_euler(frames.row(t).transpose()).transpose();
  return out;
}

}  // namespace motionsynth
