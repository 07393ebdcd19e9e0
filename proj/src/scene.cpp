#include "skillsim/scene.hpp"

#include <nlohmann/json.hpp>

#include <set>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"

namespace skillsim {

using nlohmann::json;

const urdf::AssetModel* SceneSpec::find_asset(const std::string& name) const {
  for (const auto& placement : assets)
    if (placement.model.name == name) return &placement.model;
  return nullptr;
}

void SceneSpec::validate() const {
  std::set<std::string> names;
  for (const auto& placement : assets)
    if (!names.insert(placement.model.name).second)
      throw DuplicateName("asset \"" + placement.model.name +
                          "\" appears twice in the scene");
}

namespace {

Transform pose_from_json(const json& j) {
  Transform t;
  if (j.contains("pos")) {
    auto p = j.at("pos");
    t.pos = Vec3(p.at(0).get<double>(), p.at(1).get<double>(),
                 p.at(2).get<double>());
  }
  if (j.contains("rpy")) {
    auto r = j.at("rpy");
    t.rot = quat_from_rpy(r.at(0).get<double>(), r.at(1).get<double>(),
                          r.at(2).get<double>());
  } else if (j.contains("quat")) {
    auto q = j.at("quat");
    t.rot = canonical_quat(Quat(q.at(0).get<double>(), q.at(1).get<double>(),
                                q.at(2).get<double>(), q.at(3).get<double>()));
  }
  return t;
}

}  // namespace

SceneManifest load_scene_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("scene manifest " + path.string() + ": " + e.what());
  }
  if (doc.value("schema_version", 0) != 1)
    throw SchemaVersionMismatch("scene manifest " + path.string() +
                                " has unsupported schema_version");

  SceneManifest manifest;
  manifest.seed = doc.value("seed", 0ull);
  if (doc.contains("robot_base_pose"))
    manifest.scene.robot_base_pose = pose_from_json(doc.at("robot_base_pose"));

  const auto base_dir = path.has_parent_path()
                            ? path.parent_path()
                            : std::filesystem::path(".");
  for (const auto& entry : doc.value("assets", json::array())) {
    const std::string urdf_rel = entry.at("urdf").get<std::string>();
    const auto urdf_path = base_dir / urdf_rel;
    urdf::AssetModel model = urdf::parse_urdf(read_file(urdf_path));
    // Resolve mesh paths against the URDF location.
    for (auto& link : model.links) {
      if (link.geometry && link.geometry->kind == urdf::Geometry::Kind::Mesh) {
        std::filesystem::path mesh(link.geometry->mesh_path);
        if (mesh.is_relative())
          link.geometry->mesh_path = (urdf_path.parent_path() / mesh).string();
      }
    }
    ScenePlacement placement;
    placement.model = std::move(model);
    if (entry.contains("pose")) placement.pose = pose_from_json(entry.at("pose"));
    manifest.scene.assets.push_back(std::move(placement));
  }
  manifest.scene.validate();
  return manifest;
}

std::string scene_hash(const SceneSpec& scene) {
  std::string blob;
  for (const auto& placement : scene.assets) {
    blob += urdf::describe_asset(placement.model);
    for (double v :
         {placement.pose.pos.x(), placement.pose.pos.y(),
          placement.pose.pos.z(), placement.pose.rot.w(),
          placement.pose.rot.x(), placement.pose.rot.y(),
          placement.pose.rot.z()})
      blob += fmt_full(v) + ",";
    blob += "\n";
  }
  blob += "base:";
  for (double v :
       {scene.robot_base_pose.pos.x(), scene.robot_base_pose.pos.y(),
        scene.robot_base_pose.pos.z(), scene.robot_base_pose.rot.w(),
        scene.robot_base_pose.rot.x(), scene.robot_base_pose.rot.y(),
        scene.robot_base_pose.rot.z()})
    blob += fmt_full(v) + ",";
  return sha256_hex(blob);
}

}  // namespace skillsim
