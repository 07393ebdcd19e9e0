#include <cmath>
#include <set>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"
#include "skillsim/task/task.hpp"

namespace skillsim::task {

namespace {

void check_ref(const rdsl::RefUse& use, const SceneSpec& scene,
               const rdsl::RewardProgram& program) {
  const urdf::AssetModel* asset = scene.find_asset(use.ref.asset);
  if (!asset)
    throw UnknownAsset("\"" + use.ref.asset + "\" referenced by reward");
  if (use.is_joint) {
    if (!asset->find_joint(use.ref.name))
      throw UnknownJoint("\"" + use.ref.str() + "\"");
  } else {
    if (!asset->find_link(use.ref.name))
      throw UnknownLink("asset " + use.ref.asset + " has no link \"" +
                        use.ref.name + "\"");
  }
  (void)program;
}

void check_target(const rdsl::Ref& joint_ref, double target,
                  const SceneSpec& scene) {
  const urdf::AssetModel* asset = scene.find_asset(joint_ref.asset);
  const urdf::Joint* joint = asset->find_joint(joint_ref.name);
  if (!joint->movable())
    throw UnknownJoint("\"" + joint_ref.str() +
                       "\" is fixed and has no commandable position");
  const auto [lower, upper] = urdf::effective_limits(*joint);
  if (target < lower || target > upper)
    throw TargetOutOfRange("joint " + joint_ref.str() + " target " +
                           fmt_compact(target) + " outside limits [" +
                           fmt_compact(lower) + ", " + fmt_compact(upper) +
                           "]");
}

void validate_program(const rdsl::RewardProgram& program,
                      const SceneSpec& scene) {
  for (const auto& use : rdsl::referenced(program))
    check_ref(use, scene, program);
  for (const auto& wt : program.terms)
    if (const auto* j = std::get_if<rdsl::JointErr>(&wt.term))
      check_target(j->joint, j->target, scene);
  for (const auto& pred : program.success)
    if (const auto* jn = std::get_if<rdsl::JointNear>(&pred))
      check_target(jn->joint, jn->target, scene);
}

}  // namespace

TaskSpec validate_task(const TaskSpec& task, const SceneSpec& scene) {
  scene.validate();
  if (task.subtasks.empty())
    throw RewardParseError("task " + task.task_name + " has no subtasks");
  std::set<std::string> names;
  for (const auto& st : task.subtasks) {
    if (!names.insert(st.name).second)
      throw DuplicateName("subtask \"" + st.name + "\" in task " +
                          task.task_name);
    validate_program(st.reward, scene);
  }
  return task;
}

}  // namespace skillsim::task
