#pragma once

#include <array>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "skillsim/rdsl/reward.hpp"
#include "skillsim/rng.hpp"
#include "skillsim/scene.hpp"

namespace skillsim::sim {

struct SimConfig {
  double dt = 0.05;               // s
  double max_ee_speed = 0.5;      // m/s
  double max_ee_ang_speed = 1.5;  // rad/s
  double grasp_radius = 0.06;     // m
  double close_threshold = 0.4;   // aperture below which the gripper grips
  double gripper_rate = 4.0;      // full aperture range per second
  double reset_jitter = 0.02;     // m, uniform per-axis ee jitter at reset
  Vec3 workspace_lo{-0.2, -0.9, 0.0};
  Vec3 workspace_hi{1.3, 0.9, 1.4};
  uint64_t seed = 0;
};

struct ActionCommand {
  Vec3 delta_pos{0, 0, 0};   // m; norm-clamped to max_ee_speed * dt
  Vec3 delta_rot{0, 0, 0};   // axis-angle rad; clamped to max_ee_ang_speed * dt
  double gripper_cmd = 0.0;  // [-1, 1]; negative closes
};

struct AssetState {
  Transform root_pose;
  std::vector<double> joint_pos;
  std::vector<double> joint_vel;
};

// Full simulator state; a plain value that can be stored, restored, hashed.
struct SimState {
  std::array<double, 11> q{};     // [base_x, base_y, ee-in-base pos (3),
                                  //  ee-in-base rotvec (3), 0, jaw_l, jaw_r]
  std::array<double, 11> qdot{};
  Transform ee_pose;
  double aperture = 1.0;          // [0, 1], 1 = fully open
  std::optional<std::pair<std::string, std::string>> grasp;  // (asset, link)
  std::vector<AssetState> assets;  // scene order
  double time = 0.0;
};

std::string state_json(const SimState& state);
SimState state_from_json(const std::string& text);
// SHA-256 of the canonical serialization; used by chain-handoff checks.
std::string state_digest(const SimState& state);

// Successful terminal states kept for curriculum reset seeding.
// FIFO eviction at capacity.
class TerminalBuffer {
 public:
  explicit TerminalBuffer(size_t capacity = 1000) : capacity_(capacity) {}
  void push(SimState state);
  size_t size() const { return states_.size(); }
  bool empty() const { return states_.empty(); }
  const SimState& at(size_t i) const { return states_[i]; }
  const std::deque<SimState>& states() const { return states_; }

 private:
  size_t capacity_;
  std::deque<SimState> states_;
};

struct DefaultInit {};
struct TerminalBufferInit {
  const TerminalBuffer* buffer = nullptr;
};
using InitDistribution = std::variant<DefaultInit, TerminalBufferInit>;

// Observation layout (fixed 151 floats, zero-padded):
//   [0..10]    q                  [11..21]  qdot
//   [22..24]   ee position        [25..28]  ee quaternion (w x y z)
//   [29]       aperture           [30]      grasp flag
//   [31..126]  4 asset slots of 24: root pose (7) + joint pos (4)
//              + joint vel (4) + reserved (9)
//   [127..150] target-part AABB corners, lexicographic (+-x, +-y, +-z)
inline constexpr int kMaxAssets = 4;
inline constexpr int kMaxJointsPerAsset = 4;
inline constexpr int kAssetSlotSize = 24;
inline constexpr int kObsDim = 31 + kMaxAssets * kAssetSlotSize + 24;
static_assert(kObsDim == 151);

inline constexpr int kActionDim = 7;  // delta_pos 3, delta_rot 3, gripper 1
inline constexpr int kEpisodeStepCap = 256;

class SimView;

// Free-flying position-controlled gripper over articulated assets with
// proximity-grasp coupling. Single-threaded per instance; run N instances
// for vectorized rollouts.
class Simulator {
 public:
  Simulator(SceneSpec scene, SimConfig cfg);  // load_scene
  Simulator(const Simulator&);
  Simulator(Simulator&&) noexcept;
  Simulator& operator=(const Simulator&);
  Simulator& operator=(Simulator&&) noexcept;
  ~Simulator();

  // Designate target part and graspable links from a reward program:
  // graspable = links named "handle" plus links referenced by grasped /
  // dist-ee terms; target part = first referenced link (a joint reference
  // designates the joint's child link).
  void bind_task(const rdsl::RewardProgram& program);

  SimState reset(Rng& rng, const InitDistribution& init = DefaultInit{});
  const SimState& step(const ActionCommand& action);
  std::vector<double> observe() const;

  Transform get_ee_pose() const;
  Transform get_asset_pose(const std::string& asset) const;
  std::pair<double, double> get_joint_state(const std::string& asset,
                                            const std::string& joint) const;

  const SimState& state() const { return state_; }
  void set_state(const SimState& state);  // exact restore (chain handoff)
  const SceneSpec& scene() const { return scene_; }
  const SimConfig& config() const { return cfg_; }

  // World-frame pose of a link at the current state.
  Transform link_pose(const std::string& asset, const std::string& link) const;
  // World-frame AABB corners of a link's geometry (point box if none).
  std::array<Vec3, 8> link_box_corners(const std::string& asset,
                                       const std::string& link) const;

  SimView view() const;

 private:
  struct AssetInfo;  // resolved indices, per-link geometry boxes

  void rebuild_grasp_offsets();
  const AssetInfo& asset_info(const std::string& name) const;
  Transform link_pose_internal(int asset_idx, int link_idx) const;
  void sync_q_from_pose();
  void apply_grasp_coupling(const Vec3& ee_delta);

  SceneSpec scene_;
  SimConfig cfg_;
  SimState state_;
  SimState canonical_;  // load-time state, basis for Default resets

  std::vector<AssetInfo> infos_;
  std::optional<std::pair<std::string, std::string>> target_part_;
  std::vector<std::pair<std::string, std::string>> graspable_;

  // While grasped: the ee expressed in the grasped link's frame (articulated
  // assets snap the ee to this), or the asset root expressed in the ee frame
  // (free rigid assets follow the ee).
  Transform grasp_offset_;
  bool grasp_is_articulated_ = false;
  int grasp_asset_ = -1;
  int grasp_link_ = -1;
};

// Read-only adapter from the simulator to the reward evaluator.
class SimView : public rdsl::WorldView {
 public:
  explicit SimView(const Simulator& sim) : sim_(&sim) {}
  Vec3 ee_position() const override;
  Vec3 link_position(const rdsl::Ref& link) const override;
  double joint_position(const rdsl::Ref& joint) const override;
  std::pair<double, double> joint_limits(const rdsl::Ref& joint) const override;
  bool is_grasped(const rdsl::Ref& link) const override;

 private:
  const Simulator* sim_;
};

}  // namespace skillsim::sim
