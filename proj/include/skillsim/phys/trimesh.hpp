#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "skillsim/geometry.hpp"

namespace skillsim::phys {

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;  // CCW as seen from outside
};

struct Aabb {
  Vec3 lo{0, 0, 0};
  Vec3 hi{0, 0, 0};
  Vec3 extents() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
};

Aabb mesh_aabb(const TriMesh& mesh);

// Minimal OBJ support: v and f records, 1-based indices, fans triangulated.
TriMesh load_obj(const std::filesystem::path& path);
TriMesh parse_obj(const std::string& text);
std::string obj_text(const TriMesh& mesh);
void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

// Closed axis-aligned box centered at `center`, 12 triangles.
TriMesh make_box_mesh(const Vec3& size, const Vec3& center = Vec3::Zero());

// Icosahedron subdivided `subdivisions` times, vertices projected to radius.
TriMesh make_icosphere(double radius, int subdivisions);

// Every edge shared by exactly two faces in opposite directions.
bool is_watertight(const TriMesh& mesh);

}  // namespace skillsim::phys
