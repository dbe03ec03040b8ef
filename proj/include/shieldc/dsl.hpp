#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "shieldc/bitset.hpp"
#include "shieldc/env.hpp"
#include "shieldc/error.hpp"

namespace shieldc {

// ---------------------------------------------------------------------------
// Abstract syntax

struct SetExpr;
using SetExprPtr = std::shared_ptr<const SetExpr>;
using StateLiteral = std::vector<Cell>;

struct SetExpr {
  enum class Kind { NamedRef, Literal, All, Safe, Obs, Union, Intersection, Difference, Complement };

  Kind kind = Kind::All;
  std::string name;                  // NamedRef
  std::vector<StateLiteral> states;  // Literal
  int agent = 0;                     // Obs, 1-based
  std::string observation;           // Obs
  SetExprPtr lhs;                    // binary operators, Complement
  SetExprPtr rhs;                    // binary operators
};

namespace set {
SetExprPtr named(std::string name);
SetExprPtr literal(std::vector<StateLiteral> states);
SetExprPtr all();
SetExprPtr safe();
SetExprPtr obs(int agent, std::string observation);
SetExprPtr unite(SetExprPtr l, SetExprPtr r);
SetExprPtr intersect(SetExprPtr l, SetExprPtr r);
SetExprPtr minus(SetExprPtr l, SetExprPtr r);
SetExprPtr complement(SetExprPtr e);
}  // namespace set

struct Term;
using TermPtr = std::shared_ptr<const Term>;

/// Shield process term. `set` holds the prefix shield (Prefix) or the guard
/// (Choice); `left` is the Mu body, the Prefix continuation or the left branch.
struct Term {
  enum class Kind { Idle, Fail, Mu, Var, Prefix, Choice };

  Kind kind = Kind::Idle;
  std::string name;  // Mu, Var
  SetExprPtr set;
  TermPtr left;
  TermPtr right;
};

namespace term {
TermPtr idle();
TermPtr fail();
TermPtr mu(std::string var, TermPtr body);
TermPtr var(std::string name);
TermPtr prefix(SetExprPtr shield, TermPtr cont);
TermPtr choice(TermPtr left, SetExprPtr guard, TermPtr right);
}  // namespace term

struct ShieldSpec {
  std::vector<std::pair<std::string, SetExprPtr>> bindings;
  std::string name = "P";
  TermPtr root;

  const SetExpr* binding(std::string_view n) const;
};

// ---------------------------------------------------------------------------
// Concrete syntax

/// Parses a shield document. Throws SyntaxError or Error(DuplicateBinding).
ShieldSpec parse_spec(std::string_view text);

std::string print_set(const SetExpr& e);
std::string print_term(const Term& t);
std::string print_spec(const ShieldSpec& spec);

bool structurally_equal(const SetExpr& a, const SetExpr& b);
bool structurally_equal(const Term& a, const Term& b);
bool structurally_equal(const ShieldSpec& a, const ShieldSpec& b);

// ---------------------------------------------------------------------------
// Well-formedness

struct Violation {
  ErrorKind kind;
  std::string name;
  std::string path;

  std::string message() const;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Closedness, guarded recursion (only Prefix guards) and bound set names.
ValidationReport check_wellformed(const ShieldSpec& spec);
/// Throws Error for the first violation, if any.
void require_wellformed(const ShieldSpec& spec);

// ---------------------------------------------------------------------------
// Set semantics

/// Evaluates a set expression; NamedRefs are looked up in `bound`.
StateSet eval_set(const SetExpr& expr, const Environment& env,
                  const std::map<std::string, StateSet>& bound = {});

/// The named sets of a document evaluated eagerly against an environment.
class BoundSets {
 public:
  BoundSets(const ShieldSpec& spec, const Environment& env);

  StateSet eval(const SetExpr& expr) const { return eval_set(expr, *env_, sets_); }
  const std::map<std::string, StateSet>& sets() const { return sets_; }
  std::size_t universe() const { return env_->num_states(); }
  /// A display name for `s`: a bound name, `S\name`, `S`, `∅`, or nothing.
  std::optional<std::string> name_of(const StateSet& s) const;

 private:
  const Environment* env_;
  std::vector<std::string> order_;
  std::map<std::string, StateSet> sets_;
};

}  // namespace shieldc
