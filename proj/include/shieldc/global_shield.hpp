#pragma once

#include <string>
#include <vector>

#include "shieldc/env.hpp"
#include "shieldc/procauto.hpp"

namespace shieldc {

enum class IdlePolicy { Hold, All };
enum class DecMode { Exhaustive, Greedy };

struct SynthesisOptions {
  IdlePolicy idle_policy = IdlePolicy::Hold;
  bool refine_belief = true;
  DecMode dec = DecMode::Exhaustive;
};

/// Output of a global shield edge: either ⊥ or one action set per agent,
/// each nonempty.
struct MealyOutput {
  bool bot = true;
  std::vector<ActionSet> sets;

  static MealyOutput bottom() { return {}; }
  /// `BOT` or `[{↓},{·}]`.
  std::string to_string() const;
  friend bool operator==(const MealyOutput&, const MealyOutput&) = default;
};

/// Joint actions that take every source state into `targets`.
JointActionSet allowed_joint(const Environment& env, const StateSet& sources, const StateSet& targets);

/// Max-cardinality product U_1 x ... x U_n contained in `hat` (Dec).
///
/// Ties go to the lexicographically larger cardinality vector, then to the
/// lexicographically smallest per-agent action lists. The greedy mode grows
/// singleton sets coordinate-wise and is not guaranteed maximal.
MealyOutput decompose(int num_agents, const JointActionSet& hat, DecMode mode = DecMode::Exhaustive);

/// The joint actions in U_1 x ... x U_n (empty for ⊥).
JointActionSet product_actions(int num_agents, const MealyOutput& out);

struct GlobalState {
  enum class Kind { Fail, Idle, Live };
  Kind kind = Kind::Fail;
  StateSet set;  // Live: belief S_cur; Idle: hold set
  int proc = -1; // Live: process automaton state
};

struct GlobalEdge {
  StateSet label;
  int target = -1;
  MealyOutput output;
  /// Â of the edge; empty-sized for edges that never asserted a target set.
  JointActionSet allowed;
  /// The set the successor is required to lie in (Head shield or hold set).
  StateSet asserted;
};

class GlobalMealy {
 public:
  static constexpr int kInitial = 0;
  static constexpr int kFail = 1;

  const std::vector<GlobalState>& states() const { return states_; }
  const GlobalState& state(int g) const { return states_[static_cast<std::size_t>(g)]; }
  const std::vector<GlobalEdge>& edges(int g) const { return edges_[static_cast<std::size_t>(g)]; }
  std::size_t num_states() const { return states_.size(); }
  std::size_t num_edges() const;
  int num_agents() const { return num_agents_; }
  std::uint64_t env_fingerprint() const { return env_fingerprint_; }
  const SynthesisOptions& options() const { return options_; }

  const GlobalEdge& edge_for(int g, StateId s) const;

 private:
  friend GlobalMealy synthesize_global(const ProcessAutomaton&, const Environment&, const SynthesisOptions&);

  std::vector<GlobalState> states_;
  std::vector<std::vector<GlobalEdge>> edges_;
  int num_agents_ = 0;
  std::uint64_t env_fingerprint_ = 0;
  SynthesisOptions options_;
};

/// Forward exploration from (S_0, start).
GlobalMealy synthesize_global(const ProcessAutomaton& automaton, const Environment& env,
                              const SynthesisOptions& options = {});

}  // namespace shieldc
