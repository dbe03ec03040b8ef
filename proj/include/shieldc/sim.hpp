#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "shieldc/local_shield.hpp"

namespace shieldc {

using Rng = std::mt19937_64;

/// Seed for the index-th independent stream derived from `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

struct UniformRandom {};

/// Independent per-agent Q-tables indexed by the agent's own observation.
struct QTablePolicy {
  std::vector<std::vector<std::array<double, kNumActions>>> q;
  double epsilon = 0.0;

  static QTablePolicy zeros(const Environment& env, double epsilon);
  double value(int agent, ObsId o, Action a) const {
    return q[static_cast<std::size_t>(agent)][o][static_cast<std::size_t>(a)];
  }
};

using Policy = std::variant<UniformRandom, QTablePolicy>;

/// Picks an action from `allowed` (nonempty).
Action choose_action(const Policy& policy, int agent, ObsId o, ActionSet allowed, Rng& rng);

struct TraceStep {
  StateId state = 0;
  std::vector<ObsId> observations;
  std::vector<int> local_states;  // before the step; empty when unshielded
  std::vector<LocalOutput> outputs;
  JointAction action = 0;
};

struct EpisodeResult {
  bool collision = false;
  bool shield_failure = false;
  bool reached = false;
  int steps = 0;
  StateId final_state = 0;
  std::vector<TraceStep> trace;
};

struct Metrics {
  std::size_t episodes = 0;
  double collision_rate = 0.0;
  double shield_failure_rate = 0.0;
  double reached_rate = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr int kDefaultHorizon = 64;

/// Shields, if given, must be one per agent and built for `env`
/// (Error(MismatchedShield) otherwise).
EpisodeResult run_episode(const Environment& env, const std::vector<LocalMealy>* shields, const Policy& policy,
                          int horizon, std::uint64_t seed, bool record_trace = false);

std::vector<EpisodeResult> run_episodes(const Environment& env, const std::vector<LocalMealy>* shields,
                                        const Policy& policy, std::size_t episodes, int horizon, std::uint64_t seed);
Metrics summarize(const std::vector<EpisodeResult>& results, std::uint64_t seed);
Metrics evaluate(const Environment& env, const std::vector<LocalMealy>* shields, const Policy& policy,
                 std::size_t episodes, int horizon, std::uint64_t seed);

enum class RewardMode { Reach, Safe };

struct QLearningParams {
  double alpha = 0.1;
  double gamma = 0.95;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  RewardMode reward = RewardMode::Reach;
  int horizon = kDefaultHorizon;
  std::size_t episodes = 2000;
  std::size_t eval_every = 100;
  std::size_t eval_episodes = 200;

  /// Throws Error(InvalidConfig) on out-of-range values.
  void validate() const;
};

struct CurvePoint {
  std::size_t checkpoint = 0;  // training episodes completed
  Metrics metrics;
};

struct TrainingResult {
  QTablePolicy policy;
  std::vector<CurvePoint> curve;
};

/// Tabular Q-learning from a shared reward. With shields, exploration and
/// the bootstrap max both range over the shield's output set.
TrainingResult train_q(const Environment& env, const std::vector<LocalMealy>* shields,
                       const QLearningParams& params, std::uint64_t seed);

std::string metrics_csv(const std::vector<EpisodeResult>& results);
std::string curve_csv(const std::vector<CurvePoint>& curve);
/// One JSON object per step.
std::string trace_jsonl(const Environment& env, const EpisodeResult& result);

}  // namespace shieldc
