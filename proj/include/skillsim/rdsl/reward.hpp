#pragma once

#include <string>
#include <variant>
#include <vector>

#include "skillsim/geometry.hpp"

namespace skillsim::rdsl {

// ASSET "." NAME reference into the scene.
struct Ref {
  std::string asset;
  std::string name;
  bool operator==(const Ref&) const = default;
  std::string str() const { return asset + "." + name; }
};

// Shaping terms. Values (see evaluate):
//   dist-ee:   -|p_ee - p_link|
//   joint-err: -|q - target| / (upper - lower)
//   grasped:   +1 while the grasp is attached to that link, else 0
struct DistEE {
  Ref link;
  bool operator==(const DistEE&) const = default;
};
struct JointErr {
  Ref joint;
  double target = 0.0;
  bool operator==(const JointErr&) const = default;
};
struct GraspedTerm {
  Ref link;
  bool operator==(const GraspedTerm&) const = default;
};
using Term = std::variant<DistEE, JointErr, GraspedTerm>;

struct WeightedTerm {
  double weight = 1.0;
  Term term;
  int line = 0, col = 0;  // source position, for error reporting
  bool operator==(const WeightedTerm& o) const {
    return weight == o.weight && term == o.term;
  }
};

struct JointNear {
  Ref joint;
  double target = 0.0;
  double tol = 0.0;
  bool operator==(const JointNear&) const = default;
};
struct EENear {
  Ref link;
  double tol = 0.0;
  bool operator==(const EENear&) const = default;
};
struct GraspedPred {
  Ref link;
  bool operator==(const GraspedPred&) const = default;
};
using Pred = std::variant<JointNear, EENear, GraspedPred>;

struct RewardProgram {
  std::vector<WeightedTerm> terms;  // >= 1
  std::vector<Pred> success;        // conjunction, >= 1
  double success_bonus = 10.0;
  std::string source;  // original DSL text, kept for persistence

  bool operator==(const RewardProgram& o) const {
    return terms == o.terms && success == o.success &&
           success_bonus == o.success_bonus;
  }
};

// Grammar (s-expression, whitespace-insensitive between tokens):
//   program  := "(reward" weighted+ ")" "(success" pred+ ")" ["(bonus" FLOAT ")"]
//   weighted := "(term" FLOAT term ")"
//   term     := "(dist-ee" REF ")" | "(joint-err" REF FLOAT ")" | "(grasped" REF ")"
//   pred     := "(joint-near" REF FLOAT FLOAT ")" | "(ee-near" REF FLOAT ")"
//             | "(grasped" REF ")"
//   REF      := ASSET "." NAME
// Throws SyntaxError, NegativeWeight, UnknownTermKind.
RewardProgram parse_reward(const std::string& source);

// Canonical source text regenerated from the AST.
std::string program_text(const RewardProgram& program);

// Read-only world access used by the evaluator; implemented by the
// simulator (and by test doubles).
class WorldView {
 public:
  virtual ~WorldView() = default;
  virtual Vec3 ee_position() const = 0;
  virtual Vec3 link_position(const Ref& link) const = 0;
  virtual double joint_position(const Ref& joint) const = 0;
  // (lower, upper); continuous joints report their clamped +-4*pi range.
  virtual std::pair<double, double> joint_limits(const Ref& joint) const = 0;
  virtual bool is_grasped(const Ref& link) const = 0;
};

// r = sum_i weight_i * value(term_i) + (success_bonus if all predicates hold).
double evaluate(const RewardProgram& program, const WorldView& view);
bool check_success(const RewardProgram& program, const WorldView& view);

// All (asset, link/joint) references in terms then predicates, in order.
struct RefUse {
  Ref ref;
  bool is_joint = false;
};
std::vector<RefUse> referenced(const RewardProgram& program);

}  // namespace skillsim::rdsl
