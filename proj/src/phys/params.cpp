#include "skillsim/phys/params.hpp"

#include "skillsim/error.hpp"
#include "skillsim/phys/mass_properties.hpp"

namespace skillsim::phys {

void ParamRangeTable::validate() const {
  for (const auto& [cat, r] : categories) {
    for (const Range& range :
         {r.mass_g, r.length_cm, r.width_cm, r.height_cm}) {
      if (!(range.lo > 0.0) || !(range.lo <= range.hi))
        throw InvalidAsset("bad parameter range for category " + cat);
    }
  }
}

const ParamRangeTable& default_param_table() {
  static const ParamRangeTable table = [] {
    ParamRangeTable t;
    auto add = [&](const std::string& cat, double m0, double m1, double l0,
                   double l1, double w0, double w1, double h0, double h1) {
      t.categories[cat] = {{m0, m1}, {l0, l1}, {w0, w1}, {h0, h1}};
    };
    // mass in grams, dimensions in centimeters.
    add("Papaya", 500, 1000, 15, 20, 10, 15, 10, 15);
    add("Cucumber", 200, 300, 15, 20, 5, 7, 5, 7);
    add("Watermelon", 5000, 7000, 30, 40, 20, 30, 20, 30);
    add("Raspberry", 3, 5, 2, 3, 2, 3, 2, 3);
    add("Coconut", 600, 800, 10, 15, 8, 12, 8, 12);
    add("Corn", 50, 100, 10, 15, 8, 12, 8, 12);
    add("Pumpkin", 2000, 5000, 20, 40, 20, 40, 20, 40);
    add("Avocado", 150, 250, 10, 12, 6, 8, 4, 5);
    t.validate();
    return t;
  }();
  return table;
}

PhysicalParams sample_physical_params(const std::string& category,
                                      const ParamRangeTable& table, Rng& rng) {
  auto it = table.categories.find(category);
  if (it == table.categories.end())
    throw UnknownCategory("no parameter ranges for category \"" + category +
                          "\"");
  const CategoryRanges& r = it->second;
  PhysicalParams p;
  p.category = category;
  p.mass_kg = rng.uniform(r.mass_g.lo, r.mass_g.hi) * 1e-3;
  p.size_m = Vec3(rng.uniform(r.length_cm.lo, r.length_cm.hi),
                  rng.uniform(r.width_cm.lo, r.width_cm.hi),
                  rng.uniform(r.height_cm.lo, r.height_cm.hi)) *
             1e-2;
  return p;
}

TriMesh scale_mesh_to_size(const TriMesh& mesh, const Vec3& size) {
  const Aabb box = mesh_aabb(mesh);
  const Vec3 extents = box.extents();
  if (extents.minCoeff() < 1e-12)
    throw DegenerateMesh("mesh has a zero-extent bounding-box axis");
  const Vec3 scale = size.cwiseQuotient(extents);
  const Vec3 center = box.center();
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = (v - center).cwiseProduct(scale);
  return out;
}

urdf::AssetModel build_rigid_asset(const std::string& name,
                                   const TriMesh& mesh,
                                   const PhysicalParams& params,
                                   const std::string& mesh_relpath) {
  urdf::Link link;
  link.name = "body";
  link.inertial = mesh_inertia(mesh, params.mass_kg);
  urdf::Geometry geom;
  geom.kind = urdf::Geometry::Kind::Mesh;
  geom.mesh_path = mesh_relpath;
  link.geometry = geom;

  urdf::AssetModel asset;
  asset.name = name;
  asset.links.push_back(std::move(link));
  asset.physical = params;
  asset.validate();
  return asset;
}

}  // namespace skillsim::phys
