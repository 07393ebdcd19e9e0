#include "skillsim/geometry.hpp"

#include <cmath>

namespace skillsim {

Quat canonical_quat(const Quat& q) {
  Quat n = q.normalized();
  const double c[4] = {n.w(), n.x(), n.y(), n.z()};
  for (double v : c) {
    if (v > 0) break;
    if (v < 0) {
      n.coeffs() = -n.coeffs();
      break;
    }
  }
  return n;
}

Quat quat_from_rpy(double roll, double pitch, double yaw) {
  Quat q = Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
           Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
           Eigen::AngleAxisd(roll, Vec3::UnitX());
  return canonical_quat(q);
}

Vec3 rpy_from_quat(const Quat& q) {
  const Mat3 r = q.normalized().toRotationMatrix();
  double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  double roll, yaw;
  if (std::abs(r(2, 0)) < 1.0 - 1e-12) {
    roll = std::atan2(r(2, 1), r(2, 2));
    yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal lock: fold all remaining rotation into yaw.
    roll = 0.0;
    yaw = std::atan2(-r(0, 1), r(1, 1));
  }
  return {roll, pitch, yaw};
}

Quat quat_from_rotvec(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-14) return Quat::Identity();
  return canonical_quat(Quat(Eigen::AngleAxisd(angle, rotvec / angle)));
}

Vec3 rotvec_from_quat(const Quat& q) {
  Eigen::AngleAxisd aa(canonical_quat(q));
  double angle = aa.angle();
  if (angle > M_PI) angle -= 2.0 * M_PI;
  return aa.axis() * angle;
}

bool Transform::approx_equal(const Transform& o, double tol) const {
  if ((pos - o.pos).cwiseAbs().maxCoeff() > tol) return false;
  const Quat a = canonical_quat(rot), b = canonical_quat(o.rot);
  return (a.coeffs() - b.coeffs()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace skillsim
