#include "skillsim/error.hpp"
#include "skillsim/llm/gateway.hpp"

namespace skillsim::llm {

std::string api_instructions_text() {
  return
      "You can inspect the simulated scene with these read-only functions:\n"
      "  get_ee_pose() -> end-effector pose (position, orientation quaternion)\n"
      "  get_asset_pose(asset) -> root pose of the named asset\n"
      "  get_joint_state(asset, joint) -> (position, velocity)\n"
      "\n"
      "Respond with one or more tasks, each in exactly this layout:\n"
      "  Task: <TaskName>\n"
      "  Description: <one line>\n"
      "  Subtask 1: <SubtaskName>\n"
      "  Description: <one line>\n"
      "  ```reward\n"
      "  <reward program>\n"
      "  ```\n"
      "  (further Subtask blocks in execution order)\n"
      "\n"
      "Reward programs must follow this grammar:\n"
      "  program := (reward (term WEIGHT TERM) ...) (success PRED ...) "
      "[(bonus FLOAT)]\n"
      "  TERM    := (dist-ee ASSET.LINK) | (joint-err ASSET.JOINT TARGET) | "
      "(grasped ASSET.LINK)\n"
      "  PRED    := (joint-near ASSET.JOINT TARGET TOL) | (ee-near ASSET.LINK "
      "TOL) | (grasped ASSET.LINK)\n"
      "Weights must be nonnegative; joint targets must lie within the joint's "
      "limits; name only assets, links, and joints that appear in the scene "
      "description.\n";
}

const std::vector<std::pair<std::string, std::string>>& default_exemplars() {
  static const std::vector<std::pair<std::string, std::string>> exemplars = {
      {
          "asset: Dishwasher\n"
          "parts:\n"
          "- body\n"
          "- door\n"
          "- handle\n"
          "- rack\n"
          "joints:\n"
          "- door-joint (revolute), range [0, 1]\n"
          "\n"
          "asset: Mug\n"
          "parts:\n"
          "- body\n"
          "joints: none\n"
          "\n"
          "Propose manipulation tasks for this scene.",

          "Task: PutMugInDishwasher\n"
          "Description: Open the dishwasher door, pick up the mug, and put it "
          "inside the dishwasher.\n"
          "Subtask 1: OpenDishwasherDoor\n"
          "Description: Grasp the dishwasher handle and pull the door fully "
          "open.\n"
          "```reward\n"
          "(reward (term 1.0 (dist-ee Dishwasher.handle))\n"
          "        (term 1.0 (joint-err Dishwasher.door-joint 1.0))\n"
          "        (term 1.0 (grasped Dishwasher.handle)))\n"
          "(success (joint-near Dishwasher.door-joint 1.0 0.05))\n"
          "```\n"
          "Subtask 2: PickUpMug\n"
          "Description: Move to the mug and grasp it.\n"
          "```reward\n"
          "(reward (term 1.0 (dist-ee Mug.body))\n"
          "        (term 1.0 (grasped Mug.body)))\n"
          "(success (grasped Mug.body))\n"
          "```\n"
          "Subtask 3: PlaceMugInside\n"
          "Description: Carry the mug onto the dishwasher rack.\n"
          "```reward\n"
          "(reward (term 1.0 (dist-ee Dishwasher.rack))\n"
          "        (term 1.0 (grasped Mug.body)))\n"
          "(success (grasped Mug.body) (ee-near Dishwasher.rack 0.08))\n"
          "```\n",
      },
  };
  return exemplars;
}

std::string default_query_text() {
  return "Propose manipulation tasks for this scene.";
}

PromptBundle assemble_prompt(
    const SceneSpec& scene,
    const std::vector<std::pair<std::string, std::string>>& exemplars,
    const std::string& query) {
  if (scene.assets.empty())
    throw EmptyScene("cannot assemble a prompt for a scene with no assets");
  PromptBundle bundle;
  for (const auto& placement : scene.assets)
    bundle.asset_descriptions.push_back(urdf::describe_asset(placement.model));
  bundle.api_instructions = api_instructions_text();
  bundle.exemplars = exemplars;
  bundle.query = query;
  return bundle;
}

LLMRequest render_messages(const PromptBundle& bundle,
                           const std::string& model_id, double temperature) {
  if (bundle.query.empty()) throw EmptyQuery("prompt bundle has empty query");

  std::string system = "You design manipulation tasks and reward programs "
                       "for a robot simulator.\n\nScene assets:\n\n";
  for (const auto& desc : bundle.asset_descriptions) system += desc + "\n";
  system += bundle.api_instructions;

  LLMRequest request;
  request.model_id = model_id;
  request.temperature = temperature;
  request.messages.push_back({"system", system});
  for (const auto& [q, a] : bundle.exemplars) {
    request.messages.push_back({"user", q});
    request.messages.push_back({"assistant", a});
  }
  request.messages.push_back({"user", bundle.query});
  return request;
}

}  // namespace skillsim::llm
