#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skillsim/rdsl/reward.hpp"
#include "skillsim/scene.hpp"

namespace skillsim::task {

struct SubtaskSpec {
  std::string name;
  std::string description;
  rdsl::RewardProgram reward;

  bool operator==(const SubtaskSpec& o) const {
    return name == o.name && description == o.description && reward == o.reward;
  }
};

struct TaskSpec {
  std::string task_name;
  std::string description;
  std::vector<SubtaskSpec> subtasks;  // execution order

  bool operator==(const TaskSpec& o) const {
    return task_name == o.task_name && description == o.description &&
           subtasks == o.subtasks;
  }
};

// Parse an LLM response into raw (not yet scene-validated) TaskSpecs.
// Line-oriented and whitespace-tolerant: "Task:" opens a task, "Subtask N:"
// opens a subtask, "Description:" fills the innermost open block, and a
// fenced ``` block holds the subtask's reward program.
// Throws NoTaskFound, RewardParseError.
std::vector<TaskSpec> parse_task_response(const std::string& text);

// Check every reward reference against the scene: assets, links, joints
// exist; joint targets lie within limits. Returns the accepted task.
// Throws UnknownAsset, UnknownLink, UnknownJoint, TargetOutOfRange.
TaskSpec validate_task(const TaskSpec& task, const SceneSpec& scene);

// Task file: JSON {schema_version, scene_hash, tasks[...]} with reward
// programs stored as DSL source strings.
void persist_tasks(const std::vector<TaskSpec>& tasks,
                   const std::string& scene_hash,
                   const std::filesystem::path& path);

struct TaskFile {
  std::vector<TaskSpec> tasks;
  std::string scene_hash;
};
TaskFile load_tasks(const std::filesystem::path& path);

}  // namespace skillsim::task
