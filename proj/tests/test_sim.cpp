#include <doctest.h>

#include <cmath>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"
#include "skillsim/sim/simulator.hpp"
#include "test_helpers.hpp"

using namespace skillsim;
using namespace skillsim::sim;

namespace {

SceneSpec microwave_scene() {
  return load_scene_manifest(testutil::data_path("scenes/microwave_scene.json"))
      .scene;
}

SceneSpec kitchen_scene() {
  return load_scene_manifest(testutil::data_path("scenes/kitchen_scene.json"))
      .scene;
}

rdsl::RewardProgram door_program() {
  return rdsl::parse_reward(
      "(reward (term 1 (dist-ee Microwave.handle))"
      " (term 1 (joint-err Microwave.door-joint 1.0))"
      " (term 1 (grasped Microwave.handle)))"
      " (success (joint-near Microwave.door-joint 1.0 0.05))");
}

SceneSpec drawer_scene() {
  const char* urdf = R"(<robot name="Drawer">
    <link name="base">
      <visual><geometry><box size="0.3 0.3 0.2"/></geometry></visual>
    </link>
    <link name="slider"/>
    <link name="handle">
      <visual><geometry><box size="0.02 0.1 0.02"/></geometry></visual>
    </link>
    <joint name="slide" type="prismatic">
      <parent link="base"/><child link="slider"/>
      <origin xyz="0 0 0"/><axis xyz="1 0 0"/>
      <limit lower="0" upper="0.02"/>
    </joint>
    <joint name="grip" type="fixed">
      <parent link="slider"/><child link="handle"/>
      <origin xyz="-0.17 0 0"/>
    </joint>
  </robot>)";
  SceneSpec scene;
  ScenePlacement placement;
  placement.model = urdf::parse_urdf(urdf);
  placement.pose = Transform{Vec3(0.6, 0.0, 0.3), Quat::Identity()};
  scene.assets.push_back(placement);
  return scene;
}

rdsl::RewardProgram drawer_program() {
  return rdsl::parse_reward(
      "(reward (term 1 (dist-ee Drawer.handle))"
      " (term 1 (joint-err Drawer.slide 0.02))"
      " (term 1 (grasped Drawer.handle)))"
      " (success (joint-near Drawer.slide 0.02 0.002))");
}

// Close the gripper in place until it attaches.
void close_gripper(Simulator& sim, int steps = 5) {
  for (int i = 0; i < steps; ++i) {
    ActionCommand cmd;
    cmd.gripper_cmd = -1.0;
    sim.step(cmd);
  }
}

}  // namespace

TEST_CASE("load_scene initializes joints at their lower limits") {
  Simulator sim(microwave_scene(), SimConfig{});
  const auto [pos, vel] = sim.get_joint_state("Microwave", "door-joint");
  CHECK(pos == 0.0);
  CHECK(vel == 0.0);
  CHECK(sim.get_asset_pose("Microwave").pos.x() == doctest::Approx(0.75));
}

TEST_CASE("two-asset scene passes poses through") {
  Simulator sim(kitchen_scene(), SimConfig{});
  CHECK((sim.get_asset_pose("Microwave").pos - Vec3(0.75, 0.1, 0.35)).norm() <
        1e-12);
  CHECK((sim.get_asset_pose("Cup").pos - Vec3(0.45, -0.35, 0.06)).norm() <
        1e-12);
}

TEST_CASE("asset outside the workspace is rejected at load") {
  SceneSpec scene = microwave_scene();
  scene.assets[0].pose.pos = Vec3(9.0, 0, 0.3);
  CHECK_THROWS_AS(Simulator(scene, SimConfig{}), OutOfWorkspace);
}

TEST_CASE("query APIs read the live state") {
  Simulator sim(microwave_scene(), SimConfig{});
  CHECK(sim.get_ee_pose().approx_equal(sim.state().ee_pose));
  CHECK_THROWS_AS(sim.get_asset_pose("Toaster"), UnknownAsset);
  CHECK_THROWS_AS(sim.get_joint_state("Microwave", "nope"), UnknownJoint);
}

TEST_CASE("zero action is a fixed point except for time") {
  Simulator sim(microwave_scene(), SimConfig{});
  Rng rng(3);
  sim.reset(rng);
  const SimState before = sim.state();
  sim.step(ActionCommand{});
  const SimState& after = sim.state();
  CHECK(after.time == doctest::Approx(before.time + sim.config().dt));
  CHECK((after.ee_pose.pos - before.ee_pose.pos).norm() == 0.0);
  CHECK(after.aperture == before.aperture);
  for (size_t i = 0; i < after.q.size(); ++i) CHECK(after.q[i] == before.q[i]);
  CHECK(after.assets[0].joint_pos == before.assets[0].joint_pos);
}

TEST_CASE("reset is deterministic given the seed") {
  Simulator a(microwave_scene(), SimConfig{});
  Simulator b(microwave_scene(), SimConfig{});
  Rng ra(42), rb(42);
  a.reset(ra);
  b.reset(rb);
  CHECK(state_json(a.state()) == state_json(b.state()));
  CHECK(state_digest(a.state()) == state_digest(b.state()));

  Rng rc(43);
  b.reset(rc);
  CHECK(state_json(a.state()) != state_json(b.state()));
}

TEST_CASE("terminal-buffer reset lands near a stored entry") {
  Simulator sim(microwave_scene(), SimConfig{});
  Rng rng(7);
  sim.reset(rng);

  TerminalBuffer buffer;
  for (int i = 0; i < 5; ++i) {
    SimState s = sim.state();
    s.ee_pose.pos += Vec3(0.01 * i, -0.02 * i, 0.005 * i);
    s.assets[0].joint_pos[0] = 0.1 * i;
    buffer.push(std::move(s));
  }

  Rng reset_rng(11);
  const SimState out =
      sim.reset(reset_rng, TerminalBufferInit{&buffer});

  // Some entry matches every joint coordinate exactly and the ee within
  // the jitter bound per axis.
  bool matched = false;
  for (size_t i = 0; i < buffer.size(); ++i) {
    const SimState& cand = buffer.at(i);
    if (cand.assets[0].joint_pos != out.assets[0].joint_pos) continue;
    const Vec3 d = (out.ee_pose.pos - cand.ee_pose.pos).cwiseAbs();
    if (d.maxCoeff() <= sim.config().reset_jitter + 1e-12) matched = true;
  }
  CHECK(matched);
  CHECK(out.time == 0.0);

  TerminalBuffer empty;
  CHECK_THROWS_AS(sim.reset(reset_rng, TerminalBufferInit{&empty}),
                  EmptyTerminalBuffer);
}

TEST_CASE("terminal buffer evicts FIFO at capacity") {
  TerminalBuffer buffer(3);
  Simulator sim(microwave_scene(), SimConfig{});
  for (int i = 0; i < 5; ++i) {
    SimState s = sim.state();
    s.time = i;
    buffer.push(std::move(s));
  }
  CHECK(buffer.size() == 3);
  CHECK(buffer.at(0).time == doctest::Approx(2.0));
  CHECK(buffer.at(2).time == doctest::Approx(4.0));
}

TEST_CASE("prismatic grasp coupling projects displacement and clamps") {
  SimConfig cfg;
  cfg.max_ee_speed = 1.0;  // per-step cap 0.05 m
  cfg.reset_jitter = 0.0;
  Simulator sim(drawer_scene(), cfg);
  sim.bind_task(drawer_program());

  // Teleport the open gripper onto the handle.
  SimState s = sim.state();
  s.ee_pose.pos = sim.link_pose("Drawer", "handle").pos;
  sim.set_state(s);
  close_gripper(sim);
  REQUIRE(sim.state().grasp.has_value());
  CHECK(sim.state().grasp->second == "handle");

  // Displacement along the axis: projection hits the upper limit.
  ActionCommand pull;
  pull.delta_pos = Vec3(0.03, 0.0, 0.0);
  sim.step(pull);
  const auto [pos, vel] = sim.get_joint_state("Drawer", "slide");
  CHECK(pos == doctest::Approx(0.02).epsilon(1e-12));  // clamped from 0.03
  CHECK(vel == doctest::Approx(0.02 / cfg.dt));

  // The hand rides with the drawer, not the raw command.
  CHECK((sim.state().ee_pose.pos -
         sim.link_pose("Drawer", "handle").pos).norm() < 1e-9);
}

TEST_CASE("orthogonal displacement does not drive a prismatic joint") {
  SimConfig cfg;
  cfg.reset_jitter = 0.0;
  Simulator sim(drawer_scene(), cfg);
  sim.bind_task(drawer_program());
  SimState s = sim.state();
  s.ee_pose.pos = sim.link_pose("Drawer", "handle").pos;
  sim.set_state(s);
  close_gripper(sim);
  REQUIRE(sim.state().grasp.has_value());

  ActionCommand sideways;
  sideways.delta_pos = Vec3(0.0, 0.02, 0.0);
  sim.step(sideways);
  CHECK(sim.get_joint_state("Drawer", "slide").first == doctest::Approx(0.0));
}

TEST_CASE("revolute grasp coupling follows the tangential arc") {
  SimConfig cfg;
  cfg.reset_jitter = 0.0;
  Simulator sim(microwave_scene(), cfg);
  sim.bind_task(door_program());

  SimState s = sim.state();
  s.ee_pose.pos = sim.link_pose("Microwave", "handle").pos;
  sim.set_state(s);
  close_gripper(sim);
  REQUIRE(sim.state().grasp.has_value());
  CHECK(sim.state().grasp->second == "handle");

  // Hinge at body + (-0.21, -0.25, 0); radial arm from the handle.
  const Vec3 anchor = Vec3(0.75, 0.1, 0.35) + Vec3(-0.21, -0.25, 0);
  const Vec3 r = sim.state().ee_pose.pos - anchor;
  const double arm = Vec3(r.x(), r.y(), 0.0).norm();
  const Vec3 tangent = Vec3(0, 0, 1).cross(r).normalized();

  ActionCommand pull;
  pull.delta_pos = tangent * 0.02;
  sim.step(pull);
  const double expected_dq = 0.02 / arm;
  CHECK(sim.get_joint_state("Microwave", "door-joint").first ==
        doctest::Approx(expected_dq).epsilon(1e-9));

  // Radial pull (recomputed at the current pose) does not move the hinge.
  const double q_before = sim.get_joint_state("Microwave", "door-joint").first;
  const Vec3 r_now = sim.state().ee_pose.pos - anchor;
  ActionCommand radial;
  radial.delta_pos = Vec3(r_now.x(), r_now.y(), 0).normalized() * 0.01;
  sim.step(radial);
  CHECK(sim.get_joint_state("Microwave", "door-joint").first ==
        doctest::Approx(q_before).epsilon(1e-9));
}

TEST_CASE("open gripper far from links never moves asset joints") {
  Simulator sim(microwave_scene(), SimConfig{});
  sim.bind_task(door_program());
  Rng rng(5);
  sim.reset(rng);
  for (int i = 0; i < 50; ++i) {
    ActionCommand cmd;
    cmd.delta_pos = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)) * 0.02;
    cmd.gripper_cmd = 1.0;  // keep open
    sim.step(cmd);
    CHECK(sim.get_joint_state("Microwave", "door-joint").first == 0.0);
  }
}

TEST_CASE("free rigid asset follows the hand while grasped") {
  SimConfig cfg;
  cfg.reset_jitter = 0.0;
  Simulator sim(kitchen_scene(), cfg);
  sim.bind_task(rdsl::parse_reward(
      "(reward (term 1 (dist-ee Cup.body)) (term 1 (grasped Cup.body)))"
      " (success (grasped Cup.body))"));

  SimState s = sim.state();
  s.ee_pose.pos = sim.get_asset_pose("Cup").pos;
  sim.set_state(s);
  close_gripper(sim);
  REQUIRE(sim.state().grasp.has_value());
  CHECK(sim.state().grasp->first == "Cup");

  const Vec3 offset = sim.get_asset_pose("Cup").pos - sim.state().ee_pose.pos;
  ActionCommand carry;
  carry.delta_pos = Vec3(0.0, 0.02, 0.015);
  for (int i = 0; i < 10; ++i) sim.step(carry);
  CHECK((sim.get_asset_pose("Cup").pos - sim.state().ee_pose.pos - offset)
            .norm() < 1e-9);

  // Opening the gripper releases the cup where it is.
  const Vec3 dropped = sim.get_asset_pose("Cup").pos;
  ActionCommand open;
  open.gripper_cmd = 1.0;
  for (int i = 0; i < 5; ++i) sim.step(open);
  CHECK_FALSE(sim.state().grasp.has_value());
  ActionCommand away;
  away.delta_pos = Vec3(-0.02, 0, 0);
  sim.step(away);
  CHECK((sim.get_asset_pose("Cup").pos - dropped).norm() == 0.0);
}

TEST_CASE("observation layout and padding") {
  Simulator sim(microwave_scene(), SimConfig{});
  sim.bind_task(door_program());
  const std::vector<double> obs = sim.observe();
  REQUIRE(obs.size() == static_cast<size_t>(kObsDim));
  REQUIRE(kObsDim == 151);

  // q/qdot prefix, then ee pose.
  CHECK(obs[22] == doctest::Approx(sim.state().ee_pose.pos.x()));
  CHECK(obs[25] == doctest::Approx(1.0));  // identity quaternion w
  CHECK(obs[29] == doctest::Approx(1.0));  // aperture open
  CHECK(obs[30] == 0.0);                   // no grasp

  // Asset slot 0: microwave root pose; door-joint reads 0.
  CHECK(obs[31] == doctest::Approx(0.75));
  CHECK(obs[31 + 7] == 0.0);  // door-joint position
  // Reserved tail of slot 0 and all of slots 1..3 are zero padding.
  for (int i = 31 + 15; i < 31 + 24; ++i) CHECK(obs[i] == 0.0);
  for (int i = 31 + kAssetSlotSize; i < 31 + 4 * kAssetSlotSize; ++i)
    CHECK(obs[i] == 0.0);
}

TEST_CASE("observe requires a bound task") {
  Simulator sim(microwave_scene(), SimConfig{});
  CHECK_THROWS_AS(sim.observe(), NoTargetPart);
}

TEST_CASE("target box corners equal the recomputed world AABB") {
  Simulator sim(microwave_scene(), SimConfig{});
  sim.bind_task(door_program());

  // Swing the door to a non-trivial angle so the AABB is rotation-aware.
  SimState s = sim.state();
  s.assets[0].joint_pos[0] = 0.3;
  sim.set_state(s);

  const std::vector<double> obs = sim.observe();
  const int base = 31 + 4 * kAssetSlotSize;

  // Recompute: handle box (0.02, 0.02, 0.2) centered at the handle frame.
  const Transform pose = sim.link_pose("Microwave", "handle");
  const Vec3 half(0.01, 0.01, 0.1);
  Vec3 lo = pose.pos, hi = pose.pos;
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner = pose.apply(Vec3((c & 4) ? half.x() : -half.x(),
                                        (c & 2) ? half.y() : -half.y(),
                                        (c & 1) ? half.z() : -half.z()));
    lo = lo.cwiseMin(corner);
    hi = hi.cwiseMax(corner);
  }
  int k = base;
  for (double x : {lo.x(), hi.x()})
    for (double y : {lo.y(), hi.y()})
      for (double z : {lo.z(), hi.z()}) {
        CHECK(obs[k++] == doctest::Approx(x).epsilon(1e-12));
        CHECK(obs[k - 1] == obs[k - 1]);  // finite
        CHECK(obs[k++] == doctest::Approx(y).epsilon(1e-12));
        CHECK(obs[k++] == doctest::Approx(z).epsilon(1e-12));
      }
}

TEST_CASE("trajectories are bitwise deterministic") {
  auto run = [](uint64_t seed) {
    Simulator sim(kitchen_scene(), SimConfig{});
    sim.bind_task(door_program());
    Rng rng(seed);
    sim.reset(rng);
    std::string trace;
    for (int i = 0; i < 200; ++i) {
      ActionCommand cmd;
      cmd.delta_pos = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1),
                           rng.uniform(-1, 1)) * 0.05;
      cmd.delta_rot = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1),
                           rng.uniform(-1, 1)) * 0.1;
      cmd.gripper_cmd = rng.uniform(-1, 1);
      sim.step(cmd);
      trace += state_digest(sim.state());
    }
    return trace;
  };
  CHECK(run(123) == run(123));
  CHECK(run(123) != run(124));
}

TEST_CASE("joint limits and speed caps hold under action fuzzing") {
  SimConfig cfg;
  Simulator sim(kitchen_scene(), cfg);
  sim.bind_task(door_program());
  Rng rng(31337);
  sim.reset(rng);

  const double cap = cfg.max_ee_speed * cfg.dt + 1e-12;
  const urdf::AssetModel& microwave = sim.scene().assets[0].model;
  for (int i = 0; i < 100000; ++i) {
    const Vec3 before = sim.state().ee_pose.pos;
    ActionCommand cmd;
    cmd.delta_pos = Vec3(rng.normal(), rng.normal(), rng.normal()) * 0.2;
    cmd.delta_rot = Vec3(rng.normal(), rng.normal(), rng.normal());
    cmd.gripper_cmd = rng.uniform(-1.5, 1.5);
    sim.step(cmd);

    CHECK((sim.state().ee_pose.pos - before).norm() <= cap);
    for (size_t ji = 0; ji < microwave.joints.size(); ++ji) {
      const auto lim = urdf::effective_limits(microwave.joints[ji]);
      const double q = sim.state().assets[0].joint_pos[ji];
      CHECK(q >= lim.lower - 1e-12);
      CHECK(q <= lim.upper + 1e-12);
    }
    if (sim.state().grasp) {
      const auto& [asset, link] = *sim.state().grasp;
      CHECK((sim.link_pose(asset, link).pos - sim.state().ee_pose.pos).norm() <=
            cfg.grasp_radius + 1e-9);
    }
    if (i % 256 == 255) sim.reset(rng);
  }
}

TEST_CASE("bind_task retargets without touching the state") {
  Simulator sim(kitchen_scene(), SimConfig{});
  sim.bind_task(door_program());
  Rng rng(9);
  sim.reset(rng);
  const std::string digest = state_digest(sim.state());
  sim.bind_task(rdsl::parse_reward(
      "(reward (term 1 (dist-ee Cup.body))) (success (grasped Cup.body))"));
  CHECK(state_digest(sim.state()) == digest);
}

TEST_CASE("sim state serializes and restores exactly") {
  Simulator sim(kitchen_scene(), SimConfig{});
  sim.bind_task(door_program());
  Rng rng(77);
  sim.reset(rng);
  for (int i = 0; i < 37; ++i) {
    ActionCommand cmd;
    cmd.delta_pos = Vec3(0.01, -0.004, 0.002);
    cmd.gripper_cmd = -0.5;
    sim.step(cmd);
  }
  const SimState snapshot = sim.state();
  const SimState restored = state_from_json(state_json(snapshot));
  CHECK(state_json(restored) == state_json(snapshot));

  Simulator other(kitchen_scene(), SimConfig{});
  other.set_state(snapshot);
  CHECK(state_digest(other.state()) == state_digest(snapshot));
}

TEST_CASE("grasp state survives serialization") {
  SimConfig cfg;
  cfg.reset_jitter = 0.0;
  Simulator sim(kitchen_scene(), cfg);
  sim.bind_task(rdsl::parse_reward(
      "(reward (term 1 (grasped Cup.body))) (success (grasped Cup.body))"));
  SimState s = sim.state();
  s.ee_pose.pos = sim.get_asset_pose("Cup").pos;
  sim.set_state(s);
  close_gripper(sim);
  REQUIRE(sim.state().grasp.has_value());

  const SimState back = state_from_json(state_json(sim.state()));
  REQUIRE(back.grasp.has_value());
  CHECK(back.grasp->first == "Cup");
  CHECK(back.grasp->second == "body");
}
