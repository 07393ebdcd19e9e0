#include <cmath>

#include "skillsim/rdsl/reward.hpp"

namespace skillsim::rdsl {

namespace {

double term_value(const Term& term, const WorldView& view) {
  if (const auto* d = std::get_if<DistEE>(&term)) {
    return -(view.ee_position() - view.link_position(d->link)).norm();
  }
  if (const auto* j = std::get_if<JointErr>(&term)) {
    const auto [lower, upper] = view.joint_limits(j->joint);
    const double span = std::max(upper - lower, 1e-12);
    return -std::abs(view.joint_position(j->joint) - j->target) / span;
  }
  const auto* g = std::get_if<GraspedTerm>(&term);
  return view.is_grasped(g->link) ? 1.0 : 0.0;
}

bool pred_holds(const Pred& pred, const WorldView& view) {
  if (const auto* jn = std::get_if<JointNear>(&pred))
    return std::abs(view.joint_position(jn->joint) - jn->target) <= jn->tol;
  if (const auto* en = std::get_if<EENear>(&pred))
    return (view.ee_position() - view.link_position(en->link)).norm() <=
           en->tol;
  const auto* gp = std::get_if<GraspedPred>(&pred);
  return view.is_grasped(gp->link);
}

}  // namespace

double evaluate(const RewardProgram& program, const WorldView& view) {
  double r = 0.0;
  for (const auto& wt : program.terms)
    r += wt.weight * term_value(wt.term, view);
  if (check_success(program, view)) r += program.success_bonus;
  return r;
}

bool check_success(const RewardProgram& program, const WorldView& view) {
  for (const auto& pred : program.success)
    if (!pred_holds(pred, view)) return false;
  return true;
}

}  // namespace skillsim::rdsl
