#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "skillsim/geometry.hpp"
#include "skillsim/urdf/model.hpp"

namespace skillsim {

struct ScenePlacement {
  urdf::AssetModel model;
  Transform pose;  // root link pose in world
};

struct SceneSpec {
  std::vector<ScenePlacement> assets;
  Transform robot_base_pose;

  const urdf::AssetModel* find_asset(const std::string& name) const;
  void validate() const;  // asset names unique
};

// Scene manifest file: JSON {schema_version, seed, robot_base_pose,
// assets: [{urdf, pose}]} with URDF paths relative to the manifest. Mesh
// paths inside parsed assets are rewritten relative to their URDF's
// directory so they resolve later regardless of cwd.
struct SceneManifest {
  SceneSpec scene;
  uint64_t seed = 0;
};

SceneManifest load_scene_manifest(const std::filesystem::path& path);

// Stable digest of the scene's structure (asset descriptions + poses),
// recorded in task files to tie tasks to the scene they were generated for.
std::string scene_hash(const SceneSpec& scene);

}  // namespace skillsim
