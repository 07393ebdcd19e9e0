#include "skillsim/phys/mass_properties.hpp"

#include <cmath>

#include "skillsim/error.hpp"

namespace skillsim::phys {

namespace {

struct MomentSums {
  double det6 = 0.0;  // sum of tetra determinants = 6 * volume
  Vec3 centroid{0, 0, 0};
  double xx = 0, yy = 0, zz = 0, xy = 0, xz = 0, yz = 0;
};

// Per-tetrahedron closed forms for the quadratic monomial integrals over the
// tetra (origin, v1, v2, v3):  integral(x_i x_j) dV = D/120 * (sum over the
// three vertices of x_i x_j, plus x_i x_j of v4 = v1+v2+v3), with D the
// 3x3 determinant (six times the signed tetra volume).
MomentSums accumulate(const TriMesh& mesh) {
  MomentSums s;
  for (const auto& f : mesh.faces) {
    const Vec3& v1 = mesh.vertices[f[0]];
    const Vec3& v2 = mesh.vertices[f[1]];
    const Vec3& v3 = mesh.vertices[f[2]];
    const double d = v1.dot(v2.cross(v3));
    const Vec3 v4 = v1 + v2 + v3;

    s.det6 += d;
    s.centroid += d * v4;
    s.xx += d * (v1.x() * v1.x() + v2.x() * v2.x() + v3.x() * v3.x() +
                 v4.x() * v4.x());
    s.yy += d * (v1.y() * v1.y() + v2.y() * v2.y() + v3.y() * v3.y() +
                 v4.y() * v4.y());
    s.zz += d * (v1.z() * v1.z() + v2.z() * v2.z() + v3.z() * v3.z() +
                 v4.z() * v4.z());
    s.xy += d * (v1.x() * v1.y() + v2.x() * v2.y() + v3.x() * v3.y() +
                 v4.x() * v4.y());
    s.xz += d * (v1.x() * v1.z() + v2.x() * v2.z() + v3.x() * v3.z() +
                 v4.x() * v4.z());
    s.yz += d * (v1.y() * v1.z() + v2.y() * v2.z() + v3.y() * v3.z() +
                 v4.y() * v4.z());
  }
  return s;
}

void require_solid(const TriMesh& mesh, double volume) {
  if (std::abs(volume) < 1e-12)
    throw DegenerateMesh("mesh volume " + std::to_string(volume) +
                         " below 1e-12");
  if (volume < 0.0)
    throw DegenerateMesh("negative volume: mesh is inward-oriented");
  if (!is_watertight(mesh))
    throw DegenerateMesh("mesh is not watertight/consistently oriented");
}

}  // namespace

VolumeCom mesh_volume_com(const TriMesh& mesh) {
  if (mesh.faces.empty()) throw DegenerateMesh("mesh has no faces");
  const MomentSums s = accumulate(mesh);
  const double volume = s.det6 / 6.0;
  require_solid(mesh, volume);
  return {volume, s.centroid / (4.0 * s.det6)};
}

urdf::InertialProps mesh_inertia(const TriMesh& mesh, double mass) {
  if (!(mass > 0.0)) throw DegenerateMesh("mass must be > 0");
  if (mesh.faces.empty()) throw DegenerateMesh("mesh has no faces");

  const MomentSums s = accumulate(mesh);
  const double volume = s.det6 / 6.0;
  require_solid(mesh, volume);
  const Vec3 com = s.centroid / (4.0 * s.det6);
  const double density = mass / volume;

  // Inertia about the origin, then moved to the center of mass by removing
  // the point-mass (Steiner) contribution.
  const double k = density / 120.0;
  Mat3 about_origin;
  about_origin << k * (s.yy + s.zz), -k * s.xy, -k * s.xz,
                  -k * s.xy, k * (s.xx + s.zz), -k * s.yz,
                  -k * s.xz, -k * s.yz, k * (s.xx + s.yy);

  Mat3 steiner;
  const double cx = com.x(), cy = com.y(), cz = com.z();
  steiner << cy * cy + cz * cz, -cx * cy, -cx * cz,
             -cx * cy, cx * cx + cz * cz, -cy * cz,
             -cx * cz, -cy * cz, cx * cx + cy * cy;

  urdf::InertialProps props;
  props.mass = mass;
  props.com = com;
  props.inertia = about_origin - mass * steiner;
  // Exact symmetry despite fp noise in the accumulators.
  props.inertia = 0.5 * (props.inertia + props.inertia.transpose()).eval();
  props.validate("mesh_inertia");
  return props;
}

}  // namespace skillsim::phys
