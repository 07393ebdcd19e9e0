#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace skillsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Normalize and fix the sign ambiguity (q and -q are the same rotation):
// w > 0, or if w == 0 the first nonzero component is positive.
Quat canonical_quat(const Quat& q);

// URDF roll-pitch-yaw (extrinsic XYZ): R = Rz(yaw) * Ry(pitch) * Rx(roll).
Quat quat_from_rpy(double roll, double pitch, double yaw);
Vec3 rpy_from_quat(const Quat& q);

// Axis-angle encoded as axis * angle.
Quat quat_from_rotvec(const Vec3& rotvec);
Vec3 rotvec_from_quat(const Quat& q);

// Rigid transform (rotation then translation).
struct Transform {
  Vec3 pos{0, 0, 0};
  Quat rot{1, 0, 0, 0};

  static Transform identity() { return {}; }

  Transform operator*(const Transform& o) const {
    return {pos + rot * o.pos, canonical_quat(rot * o.rot)};
  }
  Vec3 apply(const Vec3& p) const { return pos + rot * p; }
  Transform inverse() const {
    Quat inv = rot.conjugate();
    return {inv * (-pos), canonical_quat(inv)};
  }

  bool approx_equal(const Transform& o, double tol = 1e-9) const;
};

}  // namespace skillsim
