#include "skillsim/sim/simulator.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"
#include "skillsim/phys/trimesh.hpp"

namespace skillsim::sim {

using nlohmann::json;

namespace {

// EE home pose relative to the robot base.
const Vec3 kEeHomeOffset{0.35, 0.0, 0.45};
constexpr double kJawTravel = 0.04;   // m, per jaw at full aperture
constexpr double kMinMomentArm = 0.01;  // m, revolute coupling floor

Vec3 clamp_vec(const Vec3& v, const Vec3& lo, const Vec3& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

json pose_json(const Transform& t) {
  return json{{"pos", {t.pos.x(), t.pos.y(), t.pos.z()}},
              {"quat", {t.rot.w(), t.rot.x(), t.rot.y(), t.rot.z()}}};
}

Transform pose_from(const json& j) {
  Transform t;
  const auto& p = j.at("pos");
  t.pos = Vec3(p.at(0).get<double>(), p.at(1).get<double>(),
               p.at(2).get<double>());
  const auto& q = j.at("quat");
  t.rot = Quat(q.at(0).get<double>(), q.at(1).get<double>(),
               q.at(2).get<double>(), q.at(3).get<double>());
  return t;
}

}  // namespace

void TerminalBuffer::push(SimState state) {
  states_.push_back(std::move(state));
  while (states_.size() > capacity_) states_.pop_front();
}

std::string state_json(const SimState& state) {
  json doc;
  doc["q"] = state.q;
  doc["qdot"] = state.qdot;
  doc["ee_pose"] = pose_json(state.ee_pose);
  doc["aperture"] = state.aperture;
  if (state.grasp)
    doc["grasp"] = {{"asset", state.grasp->first}, {"link", state.grasp->second}};
  else
    doc["grasp"] = nullptr;
  json assets = json::array();
  for (const auto& a : state.assets) {
    assets.push_back({{"root_pose", pose_json(a.root_pose)},
                      {"joint_pos", a.joint_pos},
                      {"joint_vel", a.joint_vel}});
  }
  doc["assets"] = std::move(assets);
  doc["time"] = state.time;
  return doc.dump();
}

SimState state_from_json(const std::string& text) {
  json doc = json::parse(text);
  SimState s;
  for (size_t i = 0; i < 11; ++i) {
    s.q[i] = doc.at("q").at(i).get<double>();
    s.qdot[i] = doc.at("qdot").at(i).get<double>();
  }
  s.ee_pose = pose_from(doc.at("ee_pose"));
  s.aperture = doc.at("aperture").get<double>();
  if (!doc.at("grasp").is_null())
    s.grasp = {doc.at("grasp").at("asset").get<std::string>(),
               doc.at("grasp").at("link").get<std::string>()};
  for (const auto& ja : doc.at("assets")) {
    AssetState a;
    a.root_pose = pose_from(ja.at("root_pose"));
    a.joint_pos = ja.at("joint_pos").get<std::vector<double>>();
    a.joint_vel = ja.at("joint_vel").get<std::vector<double>>();
    s.assets.push_back(std::move(a));
  }
  s.time = doc.at("time").get<double>();
  return s;
}

std::string state_digest(const SimState& state) {
  return sha256_hex(state_json(state));
}

struct Simulator::AssetInfo {
  struct LinkBox {
    Vec3 center{0, 0, 0};
    Vec3 half{0, 0, 0};
  };
  std::map<std::string, int> link_idx;
  std::map<std::string, int> joint_idx;
  std::vector<int> parent_joint;      // per link, -1 for the root
  std::vector<int> movable_ancestor;  // per link, joint index or -1
  std::vector<LinkBox> boxes;         // per link
  bool free_rigid = false;            // zero-joint asset follows the ee
};

Simulator::Simulator(const Simulator&) = default;
Simulator::Simulator(Simulator&&) noexcept = default;
Simulator& Simulator::operator=(const Simulator&) = default;
Simulator& Simulator::operator=(Simulator&&) noexcept = default;
Simulator::~Simulator() = default;

SimView Simulator::view() const { return SimView(*this); }

Vec3 SimView::ee_position() const { return sim_->state().ee_pose.pos; }

Vec3 SimView::link_position(const rdsl::Ref& link) const {
  return sim_->link_pose(link.asset, link.name).pos;
}

double SimView::joint_position(const rdsl::Ref& joint) const {
  return sim_->get_joint_state(joint.asset, joint.name).first;
}

std::pair<double, double> SimView::joint_limits(const rdsl::Ref& ref) const {
  const urdf::AssetModel* asset = sim_->scene().find_asset(ref.asset);
  if (!asset) throw UnknownAsset("\"" + ref.asset + "\"");
  const urdf::Joint* joint = asset->find_joint(ref.name);
  if (!joint) throw UnknownJoint("\"" + ref.str() + "\"");
  const auto lim = urdf::effective_limits(*joint);
  return {lim.lower, lim.upper};
}

bool SimView::is_grasped(const rdsl::Ref& link) const {
  const auto& g = sim_->state().grasp;
  return g && g->first == link.asset && g->second == link.name;
}

Simulator::Simulator(SceneSpec scene, SimConfig cfg)
    : scene_(std::move(scene)), cfg_(std::move(cfg)) {
  scene_.validate();
  if (scene_.assets.size() > static_cast<size_t>(kMaxAssets))
    throw InvalidAsset("scene has " + std::to_string(scene_.assets.size()) +
                       " assets; the observation layout holds at most " +
                       std::to_string(kMaxAssets));

  for (const auto& placement : scene_.assets) {
    const auto& model = placement.model;
    if (model.joints.size() > static_cast<size_t>(kMaxJointsPerAsset))
      throw InvalidAsset("asset " + model.name + " has " +
                         std::to_string(model.joints.size()) +
                         " joints; at most " +
                         std::to_string(kMaxJointsPerAsset) + " supported");

    AssetInfo info;
    info.free_rigid = model.joints.empty();
    info.parent_joint.assign(model.links.size(), -1);
    for (size_t li = 0; li < model.links.size(); ++li)
      info.link_idx[model.links[li].name] = static_cast<int>(li);
    for (size_t ji = 0; ji < model.joints.size(); ++ji) {
      info.joint_idx[model.joints[ji].name] = static_cast<int>(ji);
      info.parent_joint[info.link_idx.at(model.joints[ji].child)] =
          static_cast<int>(ji);
    }
    for (size_t li = 0; li < model.links.size(); ++li) {
      int walk = static_cast<int>(li), ancestor = -1;
      while (true) {
        const int pj = info.parent_joint[walk];
        if (pj < 0) break;
        if (model.joints[pj].movable()) {
          ancestor = pj;
          break;
        }
        walk = info.link_idx.at(model.joints[pj].parent);
      }
      info.movable_ancestor.push_back(ancestor);
    }
    for (const auto& link : model.links) {
      AssetInfo::LinkBox box;
      if (link.geometry) {
        box.center = link.geometry->origin;
        if (link.geometry->kind == urdf::Geometry::Kind::Box) {
          box.half = 0.5 * link.geometry->box_size;
        } else {
          try {
            const phys::Aabb aabb =
                phys::mesh_aabb(phys::load_obj(link.geometry->mesh_path));
            box.center += aabb.center();
            box.half = 0.5 * aabb.extents();
          } catch (const Error&) {
            // Unresolvable mesh: treat as a point at the link origin.
            box.center = link.geometry->origin;
          }
        }
      }
      info.boxes.push_back(box);
    }
    infos_.push_back(std::move(info));

    const Vec3& p = placement.pose.pos;
    if ((p.array() < cfg_.workspace_lo.array()).any() ||
        (p.array() > cfg_.workspace_hi.array()).any())
      throw OutOfWorkspace("asset " + model.name + " root at (" +
                           fmt_compact(p.x()) + ", " + fmt_compact(p.y()) +
                           ", " + fmt_compact(p.z()) +
                           ") lies outside the workspace");
  }

  // Canonical load state: assets at their scene poses, movable joints at
  // their lower limits (continuous joints at 0), gripper open at home.
  state_.assets.clear();
  for (const auto& placement : scene_.assets) {
    AssetState as;
    as.root_pose = placement.pose;
    as.joint_pos.assign(placement.model.joints.size(), 0.0);
    as.joint_vel.assign(placement.model.joints.size(), 0.0);
    for (size_t ji = 0; ji < placement.model.joints.size(); ++ji) {
      const auto& joint = placement.model.joints[ji];
      if (joint.movable() && joint.limits) as.joint_pos[ji] = joint.limits->lower;
    }
    state_.assets.push_back(std::move(as));
  }
  state_.ee_pose = scene_.robot_base_pose * Transform{kEeHomeOffset, Quat::Identity()};
  state_.ee_pose.pos = clamp_vec(state_.ee_pose.pos, cfg_.workspace_lo, cfg_.workspace_hi);
  state_.aperture = 1.0;
  state_.grasp.reset();
  state_.time = 0.0;
  sync_q_from_pose();
  state_.qdot.fill(0.0);
  canonical_ = state_;
}

const Simulator::AssetInfo& Simulator::asset_info(const std::string& name) const {
  for (size_t i = 0; i < scene_.assets.size(); ++i)
    if (scene_.assets[i].model.name == name) return infos_[i];
  throw UnknownAsset("\"" + name + "\"");
}

void Simulator::bind_task(const rdsl::RewardProgram& program) {
  target_part_.reset();
  graspable_.clear();

  auto child_link_of = [&](const rdsl::Ref& joint_ref) {
    const urdf::AssetModel* asset = scene_.find_asset(joint_ref.asset);
    if (!asset) throw UnknownAsset("\"" + joint_ref.asset + "\"");
    const urdf::Joint* joint = asset->find_joint(joint_ref.name);
    if (!joint) throw UnknownJoint("\"" + joint_ref.str() + "\"");
    return std::pair<std::string, std::string>{joint_ref.asset, joint->child};
  };

  for (const auto& use : rdsl::referenced(program)) {
    std::pair<std::string, std::string> link;
    if (use.is_joint) {
      link = child_link_of(use.ref);
    } else {
      const urdf::AssetModel* asset = scene_.find_asset(use.ref.asset);
      if (!asset) throw UnknownAsset("\"" + use.ref.asset + "\"");
      if (!asset->find_link(use.ref.name))
        throw UnknownLink("asset " + use.ref.asset + " has no link \"" +
                          use.ref.name + "\"");
      link = {use.ref.asset, use.ref.name};
    }
    if (!target_part_) target_part_ = link;
  }

  // Grasp-designated links: any link named "handle", plus links referenced
  // by grasped / dist-ee terms (and grasped predicates).
  auto designate = [&](const std::string& asset, const std::string& link) {
    std::pair<std::string, std::string> key{asset, link};
    if (std::find(graspable_.begin(), graspable_.end(), key) ==
        graspable_.end())
      graspable_.push_back(key);
  };
  for (const auto& placement : scene_.assets)
    for (const auto& link : placement.model.links)
      if (link.name == "handle") designate(placement.model.name, link.name);
  for (const auto& wt : program.terms) {
    if (const auto* d = std::get_if<rdsl::DistEE>(&wt.term))
      designate(d->link.asset, d->link.name);
    else if (const auto* g = std::get_if<rdsl::GraspedTerm>(&wt.term))
      designate(g->link.asset, g->link.name);
  }
  for (const auto& pred : program.success)
    if (const auto* gp = std::get_if<rdsl::GraspedPred>(&pred))
      designate(gp->link.asset, gp->link.name);
}

Transform Simulator::link_pose_internal(int asset_idx, int link_idx) const {
  const auto& info = infos_[asset_idx];
  const auto& model = scene_.assets[asset_idx].model;
  const int pj = info.parent_joint[link_idx];
  if (pj < 0) return state_.assets[asset_idx].root_pose;

  const urdf::Joint& joint = model.joints[pj];
  const Transform parent =
      link_pose_internal(asset_idx, info.link_idx.at(joint.parent));
  Transform motion;
  const double q = state_.assets[asset_idx].joint_pos[pj];
  switch (joint.kind) {
    case urdf::JointKind::Revolute:
    case urdf::JointKind::Continuous:
      motion.rot = quat_from_rotvec(joint.axis * q);
      break;
    case urdf::JointKind::Prismatic:
      motion.pos = joint.axis * q;
      break;
    case urdf::JointKind::Fixed:
      break;
  }
  return parent * joint.origin * motion;
}

Transform Simulator::link_pose(const std::string& asset,
                               const std::string& link) const {
  for (size_t i = 0; i < scene_.assets.size(); ++i) {
    if (scene_.assets[i].model.name != asset) continue;
    auto it = infos_[i].link_idx.find(link);
    if (it == infos_[i].link_idx.end())
      throw UnknownLink("asset " + asset + " has no link \"" + link + "\"");
    return link_pose_internal(static_cast<int>(i), it->second);
  }
  throw UnknownAsset("\"" + asset + "\"");
}

std::array<Vec3, 8> Simulator::link_box_corners(const std::string& asset,
                                                const std::string& link) const {
  for (size_t i = 0; i < scene_.assets.size(); ++i) {
    if (scene_.assets[i].model.name != asset) continue;
    auto it = infos_[i].link_idx.find(link);
    if (it == infos_[i].link_idx.end())
      throw UnknownLink("asset " + asset + " has no link \"" + link + "\"");
    const auto& box = infos_[i].boxes[it->second];
    const Transform pose = link_pose_internal(static_cast<int>(i), it->second);

    // World AABB of the transformed local box, then its 8 corners in
    // lexicographic (+-x, +-y, +-z) order.
    Vec3 lo = pose.apply(box.center), hi = lo;
    for (int c = 0; c < 8; ++c) {
      const Vec3 local = box.center + Vec3((c & 4) ? box.half.x() : -box.half.x(),
                                           (c & 2) ? box.half.y() : -box.half.y(),
                                           (c & 1) ? box.half.z() : -box.half.z());
      const Vec3 world = pose.apply(local);
      lo = lo.cwiseMin(world);
      hi = hi.cwiseMax(world);
    }
    std::array<Vec3, 8> corners;
    int k = 0;
    for (double x : {lo.x(), hi.x()})
      for (double y : {lo.y(), hi.y()})
        for (double z : {lo.z(), hi.z()}) corners[k++] = Vec3(x, y, z);
    return corners;
  }
  throw UnknownAsset("\"" + asset + "\"");
}

void Simulator::sync_q_from_pose() {
  const Transform& base = scene_.robot_base_pose;
  const Quat base_inv = base.rot.conjugate();
  const Vec3 rel_pos = base_inv * (state_.ee_pose.pos - base.pos);
  const Vec3 rel_rot = rotvec_from_quat(base_inv * state_.ee_pose.rot);
  state_.q[0] = base.pos.x();
  state_.q[1] = base.pos.y();
  state_.q[2] = rel_pos.x();
  state_.q[3] = rel_pos.y();
  state_.q[4] = rel_pos.z();
  state_.q[5] = rel_rot.x();
  state_.q[6] = rel_rot.y();
  state_.q[7] = rel_rot.z();
  state_.q[8] = 0.0;  // redundant arm coordinate, fixed at zero
  state_.q[9] = kJawTravel * state_.aperture;
  state_.q[10] = kJawTravel * state_.aperture;
}

void Simulator::rebuild_grasp_offsets() {
  grasp_asset_ = grasp_link_ = -1;
  grasp_is_articulated_ = false;
  if (!state_.grasp) return;
  for (size_t i = 0; i < scene_.assets.size(); ++i) {
    if (scene_.assets[i].model.name != state_.grasp->first) continue;
    auto it = infos_[i].link_idx.find(state_.grasp->second);
    if (it == infos_[i].link_idx.end()) break;
    grasp_asset_ = static_cast<int>(i);
    grasp_link_ = it->second;
    grasp_is_articulated_ = !infos_[i].free_rigid;
    if (grasp_is_articulated_) {
      grasp_offset_ =
          link_pose_internal(grasp_asset_, grasp_link_).inverse() * state_.ee_pose;
    } else {
      grasp_offset_ =
          state_.ee_pose.inverse() * state_.assets[grasp_asset_].root_pose;
    }
    return;
  }
  throw UnknownLink("grasp references unknown link " + state_.grasp->first +
                    "." + state_.grasp->second);
}

SimState Simulator::reset(Rng& rng, const InitDistribution& init) {
  if (const auto* tb = std::get_if<TerminalBufferInit>(&init)) {
    if (!tb->buffer || tb->buffer->empty())
      throw EmptyTerminalBuffer("terminal-state reset requested with no entries");
    const int idx = rng.uniform_int(static_cast<int>(tb->buffer->size()));
    state_ = tb->buffer->at(static_cast<size_t>(idx));
  } else {
    state_ = canonical_;
  }

  Vec3 jitter(rng.uniform(-cfg_.reset_jitter, cfg_.reset_jitter),
              rng.uniform(-cfg_.reset_jitter, cfg_.reset_jitter),
              rng.uniform(-cfg_.reset_jitter, cfg_.reset_jitter));
  state_.ee_pose.pos =
      clamp_vec(state_.ee_pose.pos + jitter, cfg_.workspace_lo, cfg_.workspace_hi);

  state_.time = 0.0;
  state_.qdot.fill(0.0);
  for (auto& a : state_.assets)
    std::fill(a.joint_vel.begin(), a.joint_vel.end(), 0.0);
  rebuild_grasp_offsets();
  sync_q_from_pose();
  return state_;
}

void Simulator::set_state(const SimState& state) {
  if (state.assets.size() != scene_.assets.size())
    throw InvalidAsset("state asset count does not match the scene");
  state_ = state;
  rebuild_grasp_offsets();
  sync_q_from_pose();
}

const SimState& Simulator::step(const ActionCommand& action) {
  const SimState prev = state_;
  const double dt = cfg_.dt;

  // Per-step caps.
  Vec3 dp = action.delta_pos;
  const double cap_p = cfg_.max_ee_speed * dt;
  if (dp.norm() > cap_p) dp *= cap_p / dp.norm();
  Vec3 dr = action.delta_rot;
  const double cap_r = cfg_.max_ee_ang_speed * dt;
  if (dr.norm() > cap_r) dr *= cap_r / dr.norm();
  const double grip = std::clamp(action.gripper_cmd, -1.0, 1.0);

  state_.aperture =
      std::clamp(state_.aperture + grip * cfg_.gripper_rate * dt, 0.0, 1.0);

  // Detach when the gripper opens past the threshold.
  if (state_.grasp && state_.aperture >= cfg_.close_threshold) {
    state_.grasp.reset();
    grasp_asset_ = grasp_link_ = -1;
  }

  if (state_.grasp && grasp_is_articulated_) {
    // The hand is locked on an articulated link: the commanded translation
    // drives the nearest movable ancestor joint through its motion
    // subspace, and the ee follows the link.
    const auto& info = infos_[grasp_asset_];
    const auto& model = scene_.assets[grasp_asset_].model;
    const int ji = info.movable_ancestor[grasp_link_];
    if (ji >= 0) {
      const urdf::Joint& joint = model.joints[ji];
      const Transform anchor =
          link_pose_internal(grasp_asset_, info.link_idx.at(joint.parent)) *
          joint.origin;
      const Vec3 axis_w = anchor.rot * joint.axis;
      double dq = 0.0;
      if (joint.kind == urdf::JointKind::Prismatic) {
        dq = dp.dot(axis_w);
      } else {
        const Vec3 r = state_.ee_pose.pos - anchor.pos;
        const Vec3 r_perp = r - r.dot(axis_w) * axis_w;
        const double arm = r_perp.norm();
        if (arm > 1e-9) {
          const Vec3 tangent = axis_w.cross(r_perp).normalized();
          dq = dp.dot(tangent) / std::max(arm, kMinMomentArm);
        }
      }
      auto& qj = state_.assets[grasp_asset_].joint_pos[ji];
      const auto lim = urdf::effective_limits(joint);
      qj = std::clamp(qj + dq, lim.lower, lim.upper);
    }
    state_.ee_pose = link_pose_internal(grasp_asset_, grasp_link_) * grasp_offset_;
  } else {
    state_.ee_pose.pos =
        clamp_vec(state_.ee_pose.pos + dp, cfg_.workspace_lo, cfg_.workspace_hi);
    state_.ee_pose.rot = canonical_quat(quat_from_rotvec(dr) * state_.ee_pose.rot);
    if (state_.grasp) {
      // Free rigid asset rides along with the hand.
      state_.assets[grasp_asset_].root_pose = state_.ee_pose * grasp_offset_;
    }
  }

  // Attach: gripper closed within reach of a grasp-designated link.
  if (!state_.grasp && state_.aperture < cfg_.close_threshold) {
    double best = cfg_.grasp_radius;
    int best_idx = -1;
    for (size_t gi = 0; gi < graspable_.size(); ++gi) {
      const Transform pose = link_pose(graspable_[gi].first, graspable_[gi].second);
      const double d = (pose.pos - state_.ee_pose.pos).norm();
      if (d <= best) {
        best = d;
        best_idx = static_cast<int>(gi);
      }
    }
    if (best_idx >= 0) {
      state_.grasp = graspable_[static_cast<size_t>(best_idx)];
      rebuild_grasp_offsets();
    }
  }

  // Finite-difference velocities.
  for (size_t ai = 0; ai < state_.assets.size(); ++ai)
    for (size_t ji = 0; ji < state_.assets[ai].joint_pos.size(); ++ji)
      state_.assets[ai].joint_vel[ji] =
          (state_.assets[ai].joint_pos[ji] - prev.assets[ai].joint_pos[ji]) / dt;

  state_.time = prev.time + dt;
  sync_q_from_pose();
  for (size_t i = 0; i < state_.q.size(); ++i)
    state_.qdot[i] = (state_.q[i] - prev.q[i]) / dt;

  return state_;
}

std::vector<double> Simulator::observe() const {
  if (!target_part_)
    throw NoTargetPart("observe() requires a bound task (call bind_task)");

  std::vector<double> obs(kObsDim, 0.0);
  int k = 0;
  for (double v : state_.q) obs[k++] = v;
  for (double v : state_.qdot) obs[k++] = v;
  const Transform& ee = state_.ee_pose;
  obs[k++] = ee.pos.x();
  obs[k++] = ee.pos.y();
  obs[k++] = ee.pos.z();
  obs[k++] = ee.rot.w();
  obs[k++] = ee.rot.x();
  obs[k++] = ee.rot.y();
  obs[k++] = ee.rot.z();
  obs[k++] = state_.aperture;
  obs[k++] = state_.grasp ? 1.0 : 0.0;

  for (size_t ai = 0; ai < state_.assets.size(); ++ai) {
    int slot = 31 + static_cast<int>(ai) * kAssetSlotSize;
    const auto& a = state_.assets[ai];
    obs[slot + 0] = a.root_pose.pos.x();
    obs[slot + 1] = a.root_pose.pos.y();
    obs[slot + 2] = a.root_pose.pos.z();
    obs[slot + 3] = a.root_pose.rot.w();
    obs[slot + 4] = a.root_pose.rot.x();
    obs[slot + 5] = a.root_pose.rot.y();
    obs[slot + 6] = a.root_pose.rot.z();
    for (size_t ji = 0; ji < a.joint_pos.size() && ji < kMaxJointsPerAsset; ++ji) {
      obs[slot + 7 + static_cast<int>(ji)] = a.joint_pos[ji];
      obs[slot + 11 + static_cast<int>(ji)] = a.joint_vel[ji];
    }
    // slot + 15 .. slot + 23 reserved, stay zero.
  }

  const auto corners = link_box_corners(target_part_->first, target_part_->second);
  int base = 31 + kMaxAssets * kAssetSlotSize;
  for (const auto& c : corners) {
    obs[base++] = c.x();
    obs[base++] = c.y();
    obs[base++] = c.z();
  }
  return obs;
}

Transform Simulator::get_ee_pose() const { return state_.ee_pose; }

Transform Simulator::get_asset_pose(const std::string& asset) const {
  for (size_t i = 0; i < scene_.assets.size(); ++i)
    if (scene_.assets[i].model.name == asset)
      return state_.assets[i].root_pose;
  throw UnknownAsset("\"" + asset + "\"");
}

std::pair<double, double> Simulator::get_joint_state(
    const std::string& asset, const std::string& joint) const {
  for (size_t i = 0; i < scene_.assets.size(); ++i) {
    if (scene_.assets[i].model.name != asset) continue;
    auto it = infos_[i].joint_idx.find(joint);
    if (it == infos_[i].joint_idx.end())
      throw UnknownJoint("asset " + asset + " has no joint \"" + joint + "\"");
    return {state_.assets[i].joint_pos[it->second],
            state_.assets[i].joint_vel[it->second]};
  }
  throw UnknownAsset("\"" + asset + "\"");
}

}  // namespace skillsim::sim
