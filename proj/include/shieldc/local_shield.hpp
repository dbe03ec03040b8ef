#pragma once

#include <string>
#include <vector>

#include "shieldc/global_shield.hpp"

namespace shieldc {

/// Which environment states a global state is taken to stand for when
/// matching an observation during projection.
enum class BeliefDomain {
  /// Every state of S (the global machine is total); `fail` joins beliefs as
  /// soon as some observation-consistent input would fail.
  Observation,
  /// Only the states recorded in the global state (S_cur, hold set, S for fail).
  Reachable,
};

struct ProjectionOptions {
  BeliefDomain domain = BeliefDomain::Observation;
};

struct LocalOutput {
  bool bot = true;
  ActionSet actions;

  static LocalOutput bottom() { return {}; }
  std::string to_string() const { return bot ? "BOT" : actions.to_string(); }
  friend bool operator==(const LocalOutput&, const LocalOutput&) = default;
};

struct LocalTransition {
  int target = -1;
  LocalOutput output;
};

using Belief = std::vector<int>;

/// Index from (global state, observation) to the consistent global edges.
class ObservationIndex {
 public:
  ObservationIndex(const GlobalMealy& global, const Environment& env, int agent, ProjectionOptions options);
  /// Indices into global.edges(g) consistent with observation o.
  const std::vector<int>& edges(int g, ObsId o) const {
    return index_[static_cast<std::size_t>(g)][static_cast<std::size_t>(o)];
  }
  int agent() const { return agent_; }

 private:
  int agent_;
  std::vector<std::vector<std::vector<int>>> index_;
};

struct LocalStepResult {
  Belief belief;
  LocalOutput output;
};

/// One step of the belief construction for agent `index.agent()`.
LocalStepResult local_step(const GlobalMealy& global, const ObservationIndex& index, const Belief& belief, ObsId o);

/// Per-agent shield over observations; states are belief subsets of global
/// shield states. State 0 is the initial belief {(S_0, start)}.
class LocalMealy {
 public:
  int agent() const { return agent_; }
  std::size_t num_states() const { return beliefs_.size(); }
  std::size_t alphabet_size() const { return alphabet_size_; }
  const Belief& belief(int q) const { return beliefs_[static_cast<std::size_t>(q)]; }
  const LocalTransition& step(int q, ObsId o) const {
    return table_[static_cast<std::size_t>(q) * alphabet_size_ + o];
  }
  /// The belief {fail}, or -1 if unreachable.
  int fail_state() const { return fail_state_; }
  std::uint64_t env_fingerprint() const { return env_fingerprint_; }
  int find_belief(const Belief& b) const;

 private:
  friend LocalMealy project_local(const GlobalMealy&, const Environment&, int, ProjectionOptions);

  int agent_ = 0;
  std::size_t alphabet_size_ = 0;
  std::vector<Belief> beliefs_;
  std::vector<LocalTransition> table_;
  int fail_state_ = -1;
  std::uint64_t env_fingerprint_ = 0;
};

LocalMealy project_local(const GlobalMealy& global, const Environment& env, int agent,
                         ProjectionOptions options = {});
std::vector<LocalMealy> project_all(const GlobalMealy& global, const Environment& env, ProjectionOptions options = {});

}  // namespace shieldc
