#pragma once

#include <memory>
#include <string>
#include <vector>

#include "shieldc/dsl.hpp"

namespace shieldc {

/// A closed process term flattened into an arena, with every variable linked
/// to its binder and every set expression evaluated to a bitset.
class TermArena {
 public:
  struct Node {
    Term::Kind kind = Term::Kind::Idle;
    int left = -1;     // Mu body, Prefix continuation, Choice left
    int right = -1;    // Choice right
    int binder = -1;   // Var: the Mu node it refers to
    std::string name;  // Mu/Var source name
    StateSet set;      // Prefix shield / Choice guard
    std::string set_text;
  };

  /// `root` must be closed (see check_wellformed).
  TermArena(const Term& root, const BoundSets& sets);

  int root() const { return root_; }
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t prefix_count() const;
  std::size_t universe() const { return universe_; }

  /// Printed form with binders renamed canonically; equal strings denote
  /// the same continuation behaviour.
  std::string canonical(int i) const;

 private:
  int add(const Term& t, std::vector<std::pair<std::string, int>>& scope, const BoundSets& sets);

  std::vector<Node> nodes_;
  std::vector<std::string> binder_names_;
  int root_ = -1;
  std::size_t universe_ = 0;
};

/// Guard-free head reached by resolving a term against a state.
struct Resolution {
  enum class Kind { Idle, Fail, Head };
  Kind kind = Kind::Idle;
  int prefix_node = -1;  // Head: arena index of the Prefix node
  StateSet constraint;   // states that take the same resolution path
};

/// Unfolds recursion and selects guarded-choice branches by membership of s
/// until reaching idle, fail or a prefix. Throws Error(NonTermination) if the
/// unfolding exceeds the arena size (impossible for guarded terms).
Resolution resolve(const TermArena& arena, int node, StateId s);

struct AutomatonState {
  enum class Kind { Start, Idle, Fail, Head };
  Kind kind = Kind::Start;
  StateSet prefix_shield;  // Head only
  int continuation = -1;   // Head only: arena index of the continuation
  std::string display;
};

struct AutomatonEdge {
  StateSet label;
  int target = -1;
};

/// Deterministic automaton over the alphabet S; per-state labels partition S.
class ProcessAutomaton {
 public:
  static constexpr int kStart = 0;
  static constexpr int kIdle = 1;
  static constexpr int kFail = 2;

  const std::vector<AutomatonState>& states() const { return states_; }
  const AutomatonState& state(int q) const { return states_[static_cast<std::size_t>(q)]; }
  const std::vector<AutomatonEdge>& edges(int q) const { return edges_[static_cast<std::size_t>(q)]; }
  std::size_t num_states() const { return states_.size(); }
  std::size_t num_edges() const;
  std::size_t alphabet_size() const { return alphabet_size_; }
  const TermArena& arena() const { return *arena_; }

  /// Successor of q on input s.
  int step(int q, StateId s) const;
  int find_head(const std::string& display) const;

 private:
  friend ProcessAutomaton compile_automaton(const ShieldSpec&, const Environment&, const BoundSets&);

  std::vector<AutomatonState> states_;
  std::vector<std::vector<AutomatonEdge>> edges_;
  std::size_t alphabet_size_ = 0;
  std::shared_ptr<const TermArena> arena_;
};

/// Breadth-first compilation of a well-formed shield process.
ProcessAutomaton compile_automaton(const ShieldSpec& spec, const Environment& env, const BoundSets& sets);
ProcessAutomaton compile_automaton(const ShieldSpec& spec, const Environment& env);

}  // namespace shieldc
