#include <cctype>
#include <cmath>
#include <optional>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"
#include "skillsim/rdsl/reward.hpp"

namespace skillsim::rdsl {

namespace {

struct Cursor {
  const std::string& src;
  size_t pos = 0;
  int line = 1, col = 1;

  bool eof() const { return pos >= src.size(); }
  char peek() const { return src[pos]; }

  void advance() {
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  [[noreturn]] void fail(const std::string& expected) const {
    throw SyntaxError(line, col, expected);
  }

  void expect(char c, const std::string& what) {
    skip_ws();
    if (eof() || peek() != c) fail(what);
    advance();
  }

  // Symbols: anything up to whitespace or parentheses.
  std::string symbol(const std::string& what) {
    skip_ws();
    size_t start = pos;
    while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) &&
           peek() != '(' && peek() != ')')
      advance();
    if (pos == start) fail(what);
    return src.substr(start, pos - start);
  }

  // Peek the head symbol of the next list without consuming anything.
  std::optional<std::string> peek_head() const {
    Cursor probe = *this;
    probe.skip_ws();
    if (probe.eof() || probe.peek() != '(') return std::nullopt;
    probe.advance();
    probe.skip_ws();
    size_t start = probe.pos;
    while (!probe.eof() &&
           !std::isspace(static_cast<unsigned char>(probe.peek())) &&
           probe.peek() != '(' && probe.peek() != ')')
      probe.advance();
    return probe.src.substr(start, probe.pos - start);
  }

  double number() {
    skip_ws();
    const int l = line, c = col;
    std::string tok = symbol("number");
    try {
      size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size() || !std::isfinite(v))
        throw SyntaxError(l, c, "finite number, got \"" + tok + "\"");
      return v;
    } catch (const SyntaxError&) {
      throw;
    } catch (const std::exception&) {
      throw SyntaxError(l, c, "number, got \"" + tok + "\"");
    }
  }

  Ref ref() {
    skip_ws();
    const int l = line, c = col;
    std::string tok = symbol("ASSET.NAME reference");
    auto dot = tok.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == tok.size())
      throw SyntaxError(l, c, "ASSET.NAME reference, got \"" + tok + "\"");
    return {tok.substr(0, dot), tok.substr(dot + 1)};
  }
};

Term parse_term(Cursor& cur) {
  cur.expect('(', "( to open a term");
  const int l = cur.line, c = cur.col;
  std::string head = cur.symbol("term kind");
  Term term;
  if (head == "dist-ee") {
    term = DistEE{cur.ref()};
  } else if (head == "joint-err") {
    Ref r = cur.ref();
    double target = cur.number();
    term = JointErr{r, target};
  } else if (head == "grasped") {
    term = GraspedTerm{cur.ref()};
  } else {
    throw UnknownTermKind("\"" + head + "\" at line " + std::to_string(l) +
                          ", col " + std::to_string(c));
  }
  cur.expect(')', ") to close the term");
  return term;
}

WeightedTerm parse_weighted(Cursor& cur) {
  cur.expect('(', "( to open (term ...)");
  WeightedTerm wt;
  wt.line = cur.line;
  wt.col = cur.col;
  std::string head = cur.symbol("\"term\"");
  if (head != "term") cur.fail("\"term\", got \"" + head + "\"");
  const int l = cur.line, c = cur.col;
  wt.weight = cur.number();
  if (wt.weight < 0.0)
    throw NegativeWeight("weight " + fmt_compact(wt.weight) + " at line " +
                         std::to_string(l) + ", col " + std::to_string(c));
  wt.term = parse_term(cur);
  cur.expect(')', ") to close (term ...)");
  return wt;
}

Pred parse_pred(Cursor& cur) {
  cur.expect('(', "( to open a predicate");
  const int l = cur.line, c = cur.col;
  std::string head = cur.symbol("predicate kind");
  Pred pred;
  if (head == "joint-near") {
    Ref r = cur.ref();
    double target = cur.number();
    double tol = cur.number();
    if (!(tol > 0.0))
      throw SyntaxError(l, c, "positive tolerance in joint-near");
    pred = JointNear{r, target, tol};
  } else if (head == "ee-near") {
    Ref r = cur.ref();
    double tol = cur.number();
    if (!(tol > 0.0)) throw SyntaxError(l, c, "positive tolerance in ee-near");
    pred = EENear{r, tol};
  } else if (head == "grasped") {
    pred = GraspedPred{cur.ref()};
  } else {
    throw UnknownTermKind("predicate \"" + head + "\" at line " +
                          std::to_string(l) + ", col " + std::to_string(c));
  }
  cur.expect(')', ") to close the predicate");
  return pred;
}

}  // namespace

RewardProgram parse_reward(const std::string& source) {
  Cursor cur{source};
  RewardProgram program;
  program.source = source;

  cur.expect('(', "( to open (reward ...)");
  std::string head = cur.symbol("\"reward\"");
  if (head != "reward") cur.fail("\"reward\", got \"" + head + "\"");

  cur.skip_ws();
  while (!cur.eof() && cur.peek() == '(')
    program.terms.push_back(parse_weighted(cur)), cur.skip_ws();
  if (program.terms.empty()) cur.fail("at least one (term ...)");
  cur.expect(')', ") to close (reward ...)");

  cur.expect('(', "( to open (success ...)");
  head = cur.symbol("\"success\"");
  if (head != "success") cur.fail("\"success\", got \"" + head + "\"");
  cur.skip_ws();
  while (!cur.eof() && cur.peek() == '(')
    program.success.push_back(parse_pred(cur)), cur.skip_ws();
  if (program.success.empty()) cur.fail("at least one success predicate");
  cur.expect(')', ") to close (success ...)");

  if (cur.peek_head() == std::optional<std::string>("bonus")) {
    cur.expect('(', "(");
    cur.symbol("\"bonus\"");
    program.success_bonus = cur.number();
    cur.expect(')', ") to close (bonus ...)");
  }

  cur.skip_ws();
  if (!cur.eof()) cur.fail("end of program");
  return program;
}

std::string program_text(const RewardProgram& program) {
  std::string out = "(reward";
  for (const auto& wt : program.terms) {
    out += " (term " + fmt_compact(wt.weight) + " ";
    if (const auto* d = std::get_if<DistEE>(&wt.term))
      out += "(dist-ee " + d->link.str() + ")";
    else if (const auto* j = std::get_if<JointErr>(&wt.term))
      out += "(joint-err " + j->joint.str() + " " + fmt_compact(j->target) + ")";
    else if (const auto* g = std::get_if<GraspedTerm>(&wt.term))
      out += "(grasped " + g->link.str() + ")";
    out += ")";
  }
  out += ") (success";
  for (const auto& pred : program.success) {
    if (const auto* jn = std::get_if<JointNear>(&pred))
      out += " (joint-near " + jn->joint.str() + " " + fmt_compact(jn->target) +
             " " + fmt_compact(jn->tol) + ")";
    else if (const auto* en = std::get_if<EENear>(&pred))
      out += " (ee-near " + en->link.str() + " " + fmt_compact(en->tol) + ")";
    else if (const auto* gp = std::get_if<GraspedPred>(&pred))
      out += " (grasped " + gp->link.str() + ")";
  }
  out += ") (bonus " + fmt_compact(program.success_bonus) + ")";
  return out;
}

std::vector<RefUse> referenced(const RewardProgram& program) {
  std::vector<RefUse> out;
  for (const auto& wt : program.terms) {
    if (const auto* d = std::get_if<DistEE>(&wt.term))
      out.push_back({d->link, false});
    else if (const auto* j = std::get_if<JointErr>(&wt.term))
      out.push_back({j->joint, true});
    else if (const auto* g = std::get_if<GraspedTerm>(&wt.term))
      out.push_back({g->link, false});
  }
  for (const auto& pred : program.success) {
    if (const auto* jn = std::get_if<JointNear>(&pred))
      out.push_back({jn->joint, true});
    else if (const auto* en = std::get_if<EENear>(&pred))
      out.push_back({en->link, false});
    else if (const auto* gp = std::get_if<GraspedPred>(&pred))
      out.push_back({gp->link, false});
  }
  return out;
}

}  // namespace skillsim::rdsl
