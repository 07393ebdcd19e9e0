#include <nlohmann/json.hpp>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"
#include "skillsim/task/task.hpp"

namespace skillsim::task {

using nlohmann::json;

namespace {
constexpr int kSchemaVersion = 1;
}

void persist_tasks(const std::vector<TaskSpec>& tasks,
                   const std::string& scene_hash,
                   const std::filesystem::path& path) {
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["scene_hash"] = scene_hash;
  json arr = json::array();
  for (const auto& t : tasks) {
    json jt;
    jt["task_name"] = t.task_name;
    jt["description"] = t.description;
    json subs = json::array();
    for (const auto& st : t.subtasks) {
      subs.push_back({{"name", st.name},
                      {"description", st.description},
                      {"reward", rdsl::program_text(st.reward)}});
    }
    jt["subtasks"] = std::move(subs);
    arr.push_back(std::move(jt));
  }
  doc["tasks"] = std::move(arr);
  write_file_atomic(path, doc.dump(2) + "\n");
}

TaskFile load_tasks(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("task file " + path.string() + ": " + e.what());
  }
  if (doc.value("schema_version", -1) != kSchemaVersion)
    throw SchemaVersionMismatch("task file " + path.string() +
                                " has schema_version " +
                                doc.value("schema_version", json()).dump() +
                                ", expected " + std::to_string(kSchemaVersion));
  TaskFile out;
  out.scene_hash = doc.value("scene_hash", "");
  for (const auto& jt : doc.value("tasks", json::array())) {
    TaskSpec t;
    t.task_name = jt.at("task_name").get<std::string>();
    t.description = jt.value("description", "");
    for (const auto& js : jt.at("subtasks")) {
      SubtaskSpec st;
      st.name = js.at("name").get<std::string>();
      st.description = js.value("description", "");
      st.reward = rdsl::parse_reward(js.at("reward").get<std::string>());
      t.subtasks.push_back(std::move(st));
    }
    out.tasks.push_back(std::move(t));
  }
  return out;
}

}  // namespace skillsim::task
