#pragma once

#include <map>
#include <string>

#include "skillsim/phys/trimesh.hpp"
#include "skillsim/rng.hpp"
#include "skillsim/urdf/model.hpp"

namespace skillsim::phys {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct CategoryRanges {
  Range mass_g;    // grams
  Range length_cm; // centimeters
  Range width_cm;
  Range height_cm;
};

struct ParamRangeTable {
  std::map<std::string, CategoryRanges> categories;
  void validate() const;  // lo <= hi, lo > 0 everywhere
};

// Built-in category ranges so the pipeline works offline; extendable at
// runtime from LLM answers.
const ParamRangeTable& default_param_table();

// Draw each field uniformly from its range and convert to SI (kg, m).
PhysicalParams sample_physical_params(const std::string& category,
                                      const ParamRangeTable& table, Rng& rng);

// Anisotropic scaling so the axis-aligned bounding box matches `size`
// exactly, recentered at the origin.
TriMesh scale_mesh_to_size(const TriMesh& mesh, const Vec3& size);

// Wrap an already-scaled mesh into a single-link rigid asset whose URDF
// references the mesh by (relative) path.
urdf::AssetModel build_rigid_asset(const std::string& name,
                                   const TriMesh& mesh,
                                   const PhysicalParams& params,
                                   const std::string& mesh_relpath);

}  // namespace skillsim::phys
