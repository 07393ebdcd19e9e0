#include "skillsim/phys/trimesh.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"

namespace skillsim::phys {

Aabb mesh_aabb(const TriMesh& mesh) {
  if (mesh.vertices.empty()) throw DegenerateMesh("mesh has no vertices");
  Aabb box{mesh.vertices.front(), mesh.vertices.front()};
  for (const auto& v : mesh.vertices) {
    box.lo = box.lo.cwiseMin(v);
    box.hi = box.hi.cwiseMax(v);
  }
  return box;
}

TriMesh parse_obj(const std::string& text) {
  TriMesh mesh;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw IoError("OBJ line " + std::to_string(line_no) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        // "i", "i/t", "i/t/n", "i//n" all start with the vertex index.
        int v = 0;
        if (std::sscanf(tok.c_str(), "%d", &v) != 1)
          throw IoError("OBJ line " + std::to_string(line_no) + ": bad face");
        if (v < 0) v = static_cast<int>(mesh.vertices.size()) + v + 1;
        idx.push_back(v - 1);
      }
      if (idx.size() < 3)
        throw IoError("OBJ line " + std::to_string(line_no) +
                      ": face with < 3 vertices");
      for (size_t k = 1; k + 1 < idx.size(); ++k)
        mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
    // vt/vn/usemtl/etc. ignored.
  }
  const int n = static_cast<int>(mesh.vertices.size());
  for (const auto& f : mesh.faces)
    for (int i : f)
      if (i < 0 || i >= n)
        throw IoError("OBJ face index out of range");
  return mesh;
}

TriMesh load_obj(const std::filesystem::path& path) {
  return parse_obj(read_file(path));
}

std::string obj_text(const TriMesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 32 + mesh.faces.size() * 16);
  for (const auto& v : mesh.vertices) {
    out += "v " + fmt_full(v.x()) + " " + fmt_full(v.y()) + " " +
           fmt_full(v.z()) + "\n";
  }
  for (const auto& f : mesh.faces) {
    out += "f " + std::to_string(f[0] + 1) + " " + std::to_string(f[1] + 1) +
           " " + std::to_string(f[2] + 1) + "\n";
  }
  return out;
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  write_file_atomic(path, obj_text(mesh));
}

TriMesh make_box_mesh(const Vec3& size, const Vec3& center) {
  const Vec3 h = 0.5 * size;
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.push_back(center + Vec3((i & 1) ? h.x() : -h.x(),
                                       (i & 2) ? h.y() : -h.y(),
                                       (i & 4) ? h.z() : -h.z()));
  }
  // Outward-facing CCW triangles per face.
  const int quads[6][4] = {
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
  };
  for (const auto& q : quads) {
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
  }
  return m;
}

TriMesh make_icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},   {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4},  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},   {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11},  {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
  };
  for (auto& v : verts) v.normalize();

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 m = (verts[a] + verts[b]).normalized();
      verts.push_back(m);
      int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriMesh m;
  m.vertices.reserve(verts.size());
  for (const auto& v : verts) m.vertices.push_back(v * radius);
  m.faces = std::move(faces);
  return m;
}

bool is_watertight(const TriMesh& mesh) {
  // Count directed edges; watertight + consistently oriented means every
  // undirected edge appears exactly once in each direction.
  std::map<std::pair<int, int>, int> directed;
  for (const auto& f : mesh.faces) {
    for (int i = 0; i < 3; ++i) {
      int a = f[i], b = f[(i + 1) % 3];
      if (a == b) return false;
      if (++directed[{a, b}] > 1) return false;
    }
  }
  for (const auto& [edge, count] : directed) {
    auto rev = directed.find({edge.second, edge.first});
    if (rev == directed.end() || rev->second != count) return false;
  }
  return true;
}

}  // namespace skillsim::phys
