#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skillsim/geometry.hpp"

namespace skillsim {

// Sampled category-level physical parameters carried alongside an asset.
struct PhysicalParams {
  double mass_kg = 0.0;
  Vec3 size_m{0, 0, 0};  // length, width, height
  std::string category;
};

namespace urdf {

struct InertialProps {
  double mass = 0.0;                  // kg
  Vec3 com{0, 0, 0};                  // meters, in link frame
  Mat3 inertia = Mat3::Zero();        // kg m^2, about com

  // mass > 0, symmetric PSD tensor, principal-moment triangle inequality.
  void validate(const std::string& context) const;
};

struct Geometry {
  enum class Kind { Box, Mesh };
  Kind kind = Kind::Box;
  Vec3 box_size{0, 0, 0};  // Box: full extents
  std::string mesh_path;   // Mesh: OBJ file, relative to the URDF
  Vec3 origin{0, 0, 0};    // geometry center offset in the link frame
};

struct Link {
  std::string name;
  std::optional<InertialProps> inertial;
  std::optional<Geometry> geometry;
};

enum class JointKind { Revolute, Prismatic, Fixed, Continuous };

const char* joint_kind_name(JointKind k);

struct JointLimits {
  double lower = 0.0;
  double upper = 0.0;
};

struct Joint {
  std::string name;
  JointKind kind = JointKind::Fixed;
  std::string parent;
  std::string child;
  Vec3 axis{1, 0, 0};
  Transform origin;  // child frame at q = 0, relative to parent link frame
  std::optional<JointLimits> limits;  // revolute/prismatic only

  bool movable() const { return kind != JointKind::Fixed; }
};

// Limits used by the simulator and validators: declared limits where
// present; continuous joints are clamped to +-4*pi downstream so
// observation scaling stays bounded.
JointLimits effective_limits(const Joint& joint);

struct AssetModel {
  std::string name;
  std::vector<Link> links;    // document order
  std::vector<Joint> joints;  // document order
  std::string root_link;
  std::optional<PhysicalParams> physical;

  const Link* find_link(const std::string& n) const;
  const Joint* find_joint(const std::string& n) const;
  // Joint whose child is the given link, or nullptr for the root.
  const Joint* parent_joint(const std::string& link) const;

  // Enforces every type invariant (name uniqueness, reference integrity,
  // single-tree topology, limit presence, unit axes). Sets root_link.
  void validate();
};

// Parse a URDF document. Unsupported elements (transmission, gazebo, ...)
// are ignored. Throws MalformedXml, DanglingLinkRef, KinematicCycle,
// MissingLimits, DuplicateName, InvalidTree.
AssetModel parse_urdf(const std::string& xml_text);

// Serialize back to URDF XML. parse_urdf(emit_urdf(a)) == a with numeric
// fields reproduced to within 1e-9 (in practice exactly, via %.17g).
std::string emit_urdf(const AssetModel& asset);

// Deterministic plain-text description used verbatim in LLM prompts and
// replay-cache keys. Do not change the format casually: it invalidates
// committed replay fixtures.
std::string describe_asset(const AssetModel& asset);

bool models_equal(const AssetModel& a, const AssetModel& b, double tol = 1e-9);

}  // namespace urdf
}  // namespace skillsim
