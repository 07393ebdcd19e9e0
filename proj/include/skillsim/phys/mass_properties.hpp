#pragma once

#include "skillsim/phys/trimesh.hpp"
#include "skillsim/urdf/model.hpp"

namespace skillsim::phys {

// Signed-tetrahedron sums over faces against the origin (divergence
// theorem). Requires a closed, outward-oriented mesh; volume > 0.
// Throws DegenerateMesh on |volume| < 1e-12 or a non-watertight mesh.
struct VolumeCom {
  double volume = 0.0;
  Vec3 com{0, 0, 0};
};
VolumeCom mesh_volume_com(const TriMesh& mesh);

// Uniform-density inertia tensor about the mesh center of mass, from exact
// per-tetrahedron second-moment closed forms, scaled to the given mass.
urdf::InertialProps mesh_inertia(const TriMesh& mesh, double mass);

}  // namespace skillsim::phys
