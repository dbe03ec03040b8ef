#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shieldc/bitset.hpp"

namespace shieldc {

/// Grid coordinate, column first; row 0 is the bottom row.
struct Cell {
  int col = 0;
  int row = 0;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Canonical action order; also the tie-breaking order everywhere.
enum class Action : std::uint8_t { Left = 0, Right = 1, Up = 2, Down = 3, Stay = 4 };
inline constexpr int kNumActions = 5;

const char* action_glyph(Action a);
const char* action_name(Action a);

/// Subset of the five per-agent actions, stored as a 5-bit mask.
class ActionSet {
 public:
  constexpr ActionSet() = default;
  constexpr explicit ActionSet(std::uint8_t bits) : bits_(bits & 0x1F) {}
  static constexpr ActionSet all() { return ActionSet(0x1F); }
  static constexpr ActionSet of(Action a) { return ActionSet(std::uint8_t(1U << static_cast<int>(a))); }

  constexpr bool contains(Action a) const { return (bits_ >> static_cast<int>(a)) & 1U; }
  constexpr bool contains(int a) const { return (bits_ >> a) & 1U; }
  constexpr void insert(Action a) { bits_ |= std::uint8_t(1U << static_cast<int>(a)); }
  constexpr bool empty() const { return bits_ == 0; }
  int size() const;
  constexpr std::uint8_t bits() const { return bits_; }
  std::vector<Action> actions() const;
  /// Renders as e.g. `{↓,·}`.
  std::string to_string() const;

  constexpr ActionSet operator&(ActionSet o) const { return ActionSet(bits_ & o.bits_); }
  constexpr ActionSet operator|(ActionSet o) const { return ActionSet(bits_ | o.bits_); }
  friend constexpr bool operator==(ActionSet, ActionSet) = default;

 private:
  std::uint8_t bits_ = 0;
};

/// Lexicographic comparison of the sorted action lists of two sets.
bool action_list_less(ActionSet a, ActionSet b);

enum class CellClass : std::uint8_t { Blocked = 0, Free = 1, Agent = 2 };

/// Local observation: a (2R+1)x(2R+1) patch listed top row first, left to
/// right, plus the sign of the offset to the agent's target.
struct Observation {
  std::vector<CellClass> patch;
  int dx = 0;
  int dy = 0;

  friend auto operator<=>(const Observation&, const Observation&) = default;

  /// Textual form used in shield documents, e.g. `#.#/.A./#.#@1,0`.
  std::string to_string(int radius) const;
  static std::optional<Observation> parse(std::string_view text, int radius);
};

struct AgentSpec {
  Cell start;
  Cell target;
};

using StateId = std::uint32_t;
using JointAction = std::uint32_t;
using ObsId = std::uint32_t;

/// A MAPF instance viewed as Dec-POMDP support descriptions: the enumerated
/// state space S (all n-tuples of free cells), the deterministic transition
/// description, per-agent deterministic observations and the initial set.
class Environment {
 public:
  Environment(int width, int height, std::vector<Cell> obstacles, std::vector<AgentSpec> agents,
              int radius);

  static Environment from_json_text(const std::string& text);
  static Environment from_file(const std::string& path);
  std::string to_json_text() const;

  int width() const { return width_; }
  int height() const { return height_; }
  int radius() const { return radius_; }
  int num_agents() const { return static_cast<int>(agents_.size()); }
  const std::vector<AgentSpec>& agents() const { return agents_; }
  const std::vector<Cell>& obstacles() const { return obstacles_; }
  const std::vector<Cell>& free_cells() const { return free_cells_; }
  int num_free_cells() const { return static_cast<int>(free_cells_.size()); }
  std::size_t num_states() const { return num_states_; }
  std::size_t num_joint_actions() const { return num_joint_actions_; }

  bool in_grid(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_; }
  bool is_obstacle(Cell c) const;
  /// Index into free_cells(), or -1 for obstacles and off-grid cells.
  int cell_index(Cell c) const;

  StateId encode(const std::vector<int>& cell_indices) const;
  std::vector<int> decode(StateId s) const;
  std::vector<Cell> positions(StateId s) const;
  std::optional<StateId> state_of(const std::vector<Cell>& cells) const;
  /// Cell index of agent i (0-based) in state s.
  int agent_cell(StateId s, int agent) const;

  JointAction encode_action(const std::vector<Action>& acts) const;
  std::vector<Action> decode_action(JointAction a) const;
  Action agent_action(JointAction a, int agent) const;

  /// Free-cell index reached from `cell` by `a` under the bump rule.
  int move(int cell, Action a) const { return moves_[static_cast<std::size_t>(cell) * kNumActions + static_cast<int>(a)]; }

  StateId apply_joint(StateId s, JointAction a) const;
  /// All joint actions taking s to s_next.
  JointActionSet sas(StateId s, StateId s_next) const;

  Observation observe(StateId s, int agent) const;
  /// Realizable observations of an agent, sorted canonically.
  const std::vector<Observation>& alphabet(int agent) const { return alphabets_[agent]; }
  ObsId obs_id(int agent, StateId s) const { return obs_of_state_[agent][s]; }
  std::optional<ObsId> find_obs(int agent, const Observation& o) const;
  /// { s : observe(s, agent) = alphabet(agent)[o] }.
  const StateSet& obs_set(int agent, ObsId o) const { return obs_sets_[agent][o]; }

  const StateSet& safe_set() const { return safe_; }
  const StateSet& initial_set() const { return initial_; }
  StateSet all_states() const { return StateSet::full(num_states_); }
  StateId initial_state() const { return initial_state_; }
  bool is_safe(StateId s) const { return safe_.test(s); }
  bool all_reached(StateId s) const;

  /// Stable 64-bit fingerprint of the instance (FNV-1a over the canonical JSON).
  std::uint64_t fingerprint() const { return fingerprint_; }

  /// Renders a state as a literal `((c,r),(c,r))`.
  std::string state_literal(StateId s) const;

  static constexpr std::size_t kMaxStates = std::size_t{1} << 22;

 private:
  int width_;
  int height_;
  int radius_;
  std::vector<Cell> obstacles_;
  std::vector<AgentSpec> agents_;
  std::vector<Cell> free_cells_;
  std::vector<int> cell_index_;
  std::vector<int> moves_;
  std::size_t num_states_ = 0;
  std::size_t num_joint_actions_ = 0;
  std::vector<std::size_t> state_radix_;
  std::vector<std::size_t> action_radix_;
  std::vector<StateId> successors_;
  StateSet safe_;
  StateSet initial_;
  StateId initial_state_ = 0;
  std::vector<std::vector<Observation>> alphabets_;
  std::vector<std::vector<ObsId>> obs_of_state_;
  std::vector<std::vector<StateSet>> obs_sets_;
  std::uint64_t fingerprint_ = 0;
};

std::uint64_t fnv1a64(std::string_view data);

}  // namespace shieldc
