#pragma once

#include <Eigen/Core>

#include "motionsynth/pose.hpp"

namespace motionsynth {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Rodrigues construction: angle = |v|, axis = v/|v|; |v| < 1e-12 gives the
// identity.
Mat3 expmap_to_rotmat(const Vec3& v);

// Intrinsic Z-Y-X angles (yaw, pitch, roll), each in (-pi, pi]. The gimbal
// branch (|pitch| within ~1e-6 of pi/2) fixes roll = 0 and folds the
// remaining freedom into yaw, so reconstruction stays exact.
Vec3 rotmat_to_euler(const Mat3& R);

// Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 euler_to_rotmat(const Vec3& ypr);

// Applies expmap->euler to every 3-wide joint block of a frame; D must be
// divisible by 3.
Vec expmap_frame_to_euler(const Vec& frame);

// Whole-sequence variant, one row per frame.
Mat expmap_to_euler(const Mat& frames);

}  // namespace motionsynth
