#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shieldc/local_shield.hpp"

namespace shieldc {

/// Finite MDP with an explicit successor distribution per choice.
struct ExplicitMdp {
  struct Choice {
    std::vector<std::pair<int, double>> successors;
  };
  /// Per state: environment state, shield state vector and failure flag.
  struct StateKey {
    StateId env_state = 0;
    std::vector<int> shield;
    bool failed = false;
    friend bool operator==(const StateKey&, const StateKey&) = default;
  };

  std::vector<StateKey> keys;
  std::vector<std::vector<Choice>> choices;
  std::vector<bool> unsafe;
  std::vector<bool> shield_failure;
  int initial = 0;

  std::size_t num_states() const { return keys.size(); }
  std::size_t num_transitions() const;
  /// Key vector -> state index; see find().
  std::map<std::vector<std::int64_t>, int> index;

  /// Index of a state, or -1.
  int find(const StateKey& key) const;
  static std::vector<std::int64_t> flatten(const StateKey& key);
};

enum class ShieldMode { Local, Global, None };

struct PrismModel {
  std::string model_text;
  std::string property_text;
  std::map<std::string, std::string> label_map;
  ShieldMode mode = ShieldMode::Local;
  ExplicitMdp mdp;
};

struct ReachBounds {
  double pmin_fail = 0.0;
  double pmax_fail = 0.0;
  double pmin_unsafe = 0.0;
  double pmax_unsafe = 0.0;
};

inline constexpr std::size_t kDefaultPrismStateCap = 1'000'000;

/// Product of the environment with the local shields (one per agent). Unsafe
/// states and the failure state are absorbing; a ⊥ output moves to the
/// failure state. Throws Error(StateSpaceTooLarge) past `cap` reachable states.
PrismModel export_model(const Environment& env, const std::vector<LocalMealy>& shields,
                        std::size_t cap = kDefaultPrismStateCap);
/// Same, driven by the global shield on true states.
PrismModel export_model(const Environment& env, const GlobalMealy& global, std::size_t cap = kDefaultPrismStateCap);
/// Unshielded: every joint action is available.
PrismModel export_model(const Environment& env, std::size_t cap = kDefaultPrismStateCap);

/// Min/max probability of eventually reaching `target` (value iteration after
/// graph-based precomputation of the zero-probability states).
std::vector<double> reach_probability(const ExplicitMdp& mdp, const std::vector<bool>& target, bool maximize);
ReachBounds solve_internal(const ExplicitMdp& mdp);

/// `pmin_fail pmax_fail pmin_unsafe pmax_unsafe` with six decimals.
std::string format_bounds(const ReachBounds& b);

/// Writes model.nm and props.pctl into `dir` (created if missing).
void write_files(const PrismModel& model, const std::string& dir);

/// Runs the external checker once per property and parses its `Result:`
/// lines. Files are written before the binary is looked up.
ReachBounds run_external(const PrismModel& model, const std::string& binary, const std::string& dir,
                         std::chrono::milliseconds timeout);

/// Extracts the value of the first `Result:` line, if any.
std::optional<double> parse_result_line(const std::string& output);

}  // namespace shieldc
