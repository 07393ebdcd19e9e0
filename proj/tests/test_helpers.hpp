#pragma once

#include <filesystem>
#include <string>

#include "skillsim/rng.hpp"
#include "skillsim/urdf/model.hpp"

namespace testutil {

inline std::filesystem::path source_dir() {
  return std::filesystem::path(SKILLSIM_SOURCE_DIR);
}

inline std::filesystem::path data_path(const std::string& rel) {
  return source_dir() / "data" / rel;
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("skillsim_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Random valid inertial: eigenvalues built as pairwise sums so the
// triangle inequality holds by construction, rotated by a random rotation.
inline skillsim::urdf::InertialProps random_inertial(skillsim::Rng& rng) {
  using namespace skillsim;
  const double x = rng.uniform(0.1, 1.0), y = rng.uniform(0.1, 1.0),
               z = rng.uniform(0.1, 1.0);
  Vec3 ev(y + z, x + z, x + y);
  const Quat q = canonical_quat(Quat(rng.normal(), rng.normal(), rng.normal(),
                                     rng.normal()));
  const Mat3 r = q.toRotationMatrix();
  urdf::InertialProps props;
  props.mass = rng.uniform(0.05, 5.0);
  props.com = Vec3(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
                   rng.uniform(-0.1, 0.1));
  props.inertia = r * ev.asDiagonal() * r.transpose();
  props.inertia = 0.5 * (props.inertia + props.inertia.transpose()).eval();
  return props;
}

// Random single-tree asset with mixed joint kinds, origins, and geometry.
inline skillsim::urdf::AssetModel random_asset(skillsim::Rng& rng,
                                               const std::string& name) {
  using namespace skillsim;
  urdf::AssetModel asset;
  asset.name = name;
  const int n_links = 1 + rng.uniform_int(6);
  for (int i = 0; i < n_links; ++i) {
    urdf::Link link;
    link.name = "link" + std::to_string(i);
    if (rng.uniform() < 0.7) link.inertial = random_inertial(rng);
    if (rng.uniform() < 0.8) {
      urdf::Geometry g;
      if (rng.uniform() < 0.5) {
        g.kind = urdf::Geometry::Kind::Box;
        g.box_size = Vec3(rng.uniform(0.01, 0.5), rng.uniform(0.01, 0.5),
                          rng.uniform(0.01, 0.5));
      } else {
        g.kind = urdf::Geometry::Kind::Mesh;
        g.mesh_path = "meshes/part" + std::to_string(i) + ".obj";
      }
      g.origin = Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                      rng.uniform(-0.2, 0.2));
      link.geometry = g;
    }
    asset.links.push_back(std::move(link));
  }
  for (int i = 1; i < n_links; ++i) {
    urdf::Joint joint;
    joint.name = "joint" + std::to_string(i);
    joint.parent = "link" + std::to_string(rng.uniform_int(i));  // tree
    joint.child = "link" + std::to_string(i);
    const double kind_draw = rng.uniform();
    joint.axis = Vec3(rng.normal(), rng.normal(), rng.normal());
    if (joint.axis.norm() < 1e-6) joint.axis = Vec3(0, 0, 1);
    joint.axis.normalize();
    joint.origin.pos = Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                            rng.uniform(-0.5, 0.5));
    joint.origin.rot = quat_from_rpy(rng.uniform(-1.5, 1.5),
                                     rng.uniform(-1.4, 1.4),
                                     rng.uniform(-1.5, 1.5));
    if (kind_draw < 0.4) {
      joint.kind = urdf::JointKind::Revolute;
      const double lo = rng.uniform(-1.0, 0.5);
      joint.limits = urdf::JointLimits{lo, lo + rng.uniform(0.1, 2.0)};
    } else if (kind_draw < 0.6) {
      joint.kind = urdf::JointKind::Prismatic;
      const double lo = rng.uniform(-0.2, 0.1);
      joint.limits = urdf::JointLimits{lo, lo + rng.uniform(0.05, 0.5)};
    } else if (kind_draw < 0.8) {
      joint.kind = urdf::JointKind::Continuous;
    } else {
      joint.kind = urdf::JointKind::Fixed;
      joint.axis = Vec3(1, 0, 0);
    }
    asset.joints.push_back(std::move(joint));
  }
  asset.validate();
  return asset;
}

}  // namespace testutil
