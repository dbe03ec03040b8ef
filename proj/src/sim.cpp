#include "shieldc/sim.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "shieldc/error.hpp"

namespace shieldc {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer over a golden-ratio stride
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

QTablePolicy QTablePolicy::zeros(const Environment& env, double epsilon) {
  QTablePolicy p;
  p.epsilon = epsilon;
  for (int i = 0; i < env.num_agents(); ++i) {
    p.q.emplace_back(env.alphabet(i).size(), std::array<double, kNumActions>{});
  }
  return p;
}

namespace {

Action uniform_from(ActionSet allowed, Rng& rng) {
  const auto acts = allowed.actions();
  std::uniform_int_distribution<std::size_t> pick(0, acts.size() - 1);
  return acts[pick(rng)];
}

Action greedy_from(const QTablePolicy& p, int agent, ObsId o, ActionSet allowed, Rng& rng) {
  double best = -std::numeric_limits<double>::infinity();
  ActionSet ties;
  for (Action a : allowed.actions()) {
    const double v = p.value(agent, o, a);
    if (v > best) {
      best = v;
      ties = ActionSet::of(a);
    } else if (v == best) {
      ties.insert(a);
    }
  }
  return ties.size() == 1 ? ties.actions().front() : uniform_from(ties, rng);
}

double masked_max(const QTablePolicy& p, int agent, ObsId o, ActionSet allowed) {
  double best = -std::numeric_limits<double>::infinity();
  for (Action a : allowed.actions()) best = std::max(best, p.value(agent, o, a));
  return best;
}

void check_shields(const Environment& env, const std::vector<LocalMealy>* shields) {
  if (shields == nullptr) return;
  if (static_cast<int>(shields->size()) != env.num_agents()) {
    throw Error(ErrorKind::MismatchedShield, "expected one local shield per agent");
  }
  for (const LocalMealy& lm : *shields) {
    if (lm.env_fingerprint() != env.fingerprint()) {
      throw Error(ErrorKind::MismatchedShield,
                  "local shield for agent " + std::to_string(lm.agent() + 1) + " was built for another environment");
    }
  }
}

// Per-agent view of one step: observations, shield transitions, masks.
struct StepView {
  std::vector<ObsId> obs;
  std::vector<LocalTransition> moves;
  std::vector<ActionSet> masks;
  bool failure = false;
};

StepView view_step(const Environment& env, const std::vector<LocalMealy>* shields, StateId s,
                   const std::vector<int>& local) {
  StepView v;
  const int n = env.num_agents();
  v.obs.resize(static_cast<std::size_t>(n));
  v.masks.assign(static_cast<std::size_t>(n), ActionSet::all());
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    v.obs[k] = env.obs_id(i, s);
    if (shields == nullptr) continue;
    const LocalTransition& t = (*shields)[k].step(local[k], v.obs[k]);
    v.moves.push_back(t);
    if (t.output.bot) v.failure = true;
    v.masks[k] = t.output.actions;
  }
  return v;
}

}  // namespace

Action choose_action(const Policy& policy, int agent, ObsId o, ActionSet allowed, Rng& rng) {
  if (std::holds_alternative<UniformRandom>(policy)) return uniform_from(allowed, rng);
  const auto& p = std::get<QTablePolicy>(policy);
  if (p.epsilon > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < p.epsilon) return uniform_from(allowed, rng);
  }
  return greedy_from(p, agent, o, allowed, rng);
}

EpisodeResult run_episode(const Environment& env, const std::vector<LocalMealy>* shields, const Policy& policy,
                          int horizon, std::uint64_t seed, bool record_trace) {
  check_shields(env, shields);
  Rng rng(seed);
  EpisodeResult r;
  StateId s = env.initial_state();
  const int n = env.num_agents();
  std::vector<int> local(shields ? static_cast<std::size_t>(n) : 0, 0);
  std::vector<Action> acts(static_cast<std::size_t>(n));

  for (int t = 0; t < horizon; ++t) {
    StepView v = view_step(env, shields, s, local);
    TraceStep step;
    if (record_trace) {
      step.state = s;
      step.observations = v.obs;
      step.local_states = local;
      for (const auto& m : v.moves) step.outputs.push_back(m.output);
    }
    if (v.failure) {
      r.shield_failure = true;
      if (record_trace) r.trace.push_back(std::move(step));
      break;
    }
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      acts[k] = choose_action(policy, i, v.obs[k], v.masks[k], rng);
      if (shields) local[k] = v.moves[k].target;
    }
    const JointAction a = env.encode_action(acts);
    if (record_trace) {
      step.action = a;
      r.trace.push_back(std::move(step));
    }
    s = env.apply_joint(s, a);
    ++r.steps;
    if (!env.is_safe(s)) {
      r.collision = true;
      break;
    }
    if (env.all_reached(s)) {
      r.reached = true;
      break;
    }
  }
  r.final_state = s;
  return r;
}

std::vector<EpisodeResult> run_episodes(const Environment& env, const std::vector<LocalMealy>* shields,
                                        const Policy& policy, std::size_t episodes, int horizon, std::uint64_t seed) {
  std::vector<EpisodeResult> out;
  out.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    out.push_back(run_episode(env, shields, policy, horizon, derive_seed(seed, e)));
  }
  return out;
}

Metrics summarize(const std::vector<EpisodeResult>& results, std::uint64_t seed) {
  Metrics m;
  m.episodes = results.size();
  m.seed = seed;
  if (results.empty()) return m;
  std::size_t c = 0, f = 0, g = 0;
  for (const auto& r : results) {
    c += r.collision;
    f += r.shield_failure;
    g += r.reached;
  }
  const auto total = static_cast<double>(results.size());
  m.collision_rate = static_cast<double>(c) / total;
  m.shield_failure_rate = static_cast<double>(f) / total;
  m.reached_rate = static_cast<double>(g) / total;
  return m;
}

Metrics evaluate(const Environment& env, const std::vector<LocalMealy>* shields, const Policy& policy,
                 std::size_t episodes, int horizon, std::uint64_t seed) {
  if (episodes == 0) throw Error(ErrorKind::InvalidConfig, "episodes must be at least 1");
  return summarize(run_episodes(env, shields, policy, episodes, horizon, seed), seed);
}

void QLearningParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (!(alpha > 0.0 && alpha <= 1.0)) bad("alpha must lie in (0,1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) bad("gamma must lie in (0,1]");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) || !(epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
    bad("epsilon must lie in [0,1]");
  }
  if (epsilon_end > epsilon_start) bad("epsilon schedule must be non-increasing");
  if (horizon < 0) bad("horizon must be non-negative");
  if (episodes == 0) bad("episodes must be at least 1");
  if (eval_every == 0) bad("eval-every must be at least 1");
  if (eval_episodes == 0) bad("eval-episodes must be at least 1");
}

TrainingResult train_q(const Environment& env, const std::vector<LocalMealy>* shields,
                       const QLearningParams& params, std::uint64_t seed) {
  params.validate();
  check_shields(env, shields);
  const int n = env.num_agents();
  TrainingResult out;
  out.policy = QTablePolicy::zeros(env, 0.0);
  QTablePolicy& table = out.policy;
  // Every checkpoint is evaluated on the same episode seeds.
  const std::uint64_t eval_seed = derive_seed(seed, 0xE7A1ULL << 32);

  auto checkpoint = [&](std::size_t done) {
    QTablePolicy greedy = table;
    greedy.epsilon = 0.0;
    out.curve.push_back({done, evaluate(env, shields, greedy, params.eval_episodes, params.horizon, eval_seed)});
  };

  std::vector<Action> acts(static_cast<std::size_t>(n));
  for (std::size_t ep = 0; ep < params.episodes; ++ep) {
    if (ep % params.eval_every == 0) checkpoint(ep);
    const double frac = params.episodes > 1 ? static_cast<double>(ep) / static_cast<double>(params.episodes - 1) : 1.0;
    table.epsilon = params.epsilon_start + (params.epsilon_end - params.epsilon_start) * frac;

    Rng rng(derive_seed(seed, ep));
    StateId s = env.initial_state();
    std::vector<int> local(shields ? static_cast<std::size_t>(n) : 0, 0);
    StepView v = view_step(env, shields, s, local);
    for (int t = 0; t < params.horizon && !v.failure; ++t) {
      for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        acts[k] = choose_action(table, i, v.obs[k], v.masks[k], rng);
        if (shields) local[k] = v.moves[k].target;
      }
      s = env.apply_joint(s, env.encode_action(acts));
      const bool collision = !env.is_safe(s);
      const bool reached = !collision && env.all_reached(s);
      double reward = reached ? 1.0 : 0.0;
      if (collision && params.reward == RewardMode::Safe) reward = -1.0;

      const bool terminal = collision || reached;
      StepView next;
      if (!terminal) next = view_step(env, shields, s, local);
      const bool bootstrap = !terminal && !next.failure;
      for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        double target = reward;
        if (bootstrap) target += params.gamma * masked_max(table, i, next.obs[k], next.masks[k]);
        double& q = table.q[k][v.obs[k]][static_cast<std::size_t>(acts[k])];
        q += params.alpha * (target - q);
      }
      if (!bootstrap) break;
      v = std::move(next);
    }
  }
  checkpoint(params.episodes);
  table.epsilon = 0.0;
  return out;
}

std::string metrics_csv(const std::vector<EpisodeResult>& results) {
  std::ostringstream os;
  os << "episode,collision,shield_failure,reached\n";
  for (std::size_t e = 0; e < results.size(); ++e) {
    os << e << ',' << int(results[e].collision) << ',' << int(results[e].shield_failure) << ','
       << int(results[e].reached) << '\n';
  }
  return os.str();
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream os;
  os << "checkpoint,collision_rate,shield_failure_rate,reached_rate\n";
  char buf[128];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", p.checkpoint, p.metrics.collision_rate,
                  p.metrics.shield_failure_rate, p.metrics.reached_rate);
    os << buf;
  }
  return os.str();
}

std::string trace_jsonl(const Environment& env, const EpisodeResult& result) {
  std::ostringstream os;
  for (std::size_t t = 0; t < result.trace.size(); ++t) {
    const TraceStep& st = result.trace[t];
    nlohmann::ordered_json j;
    j["step"] = t;
    j["state"] = env.state_literal(st.state);
    std::vector<std::string> obs;
    for (std::size_t i = 0; i < st.observations.size(); ++i) {
      obs.push_back(env.alphabet(static_cast<int>(i))[st.observations[i]].to_string(env.radius()));
    }
    j["observations"] = obs;
    j["local_states"] = st.local_states;
    std::vector<std::string> outs;
    for (const auto& o : st.outputs) outs.push_back(o.to_string());
    j["outputs"] = outs;
    if (t + 1 < result.trace.size() || !result.shield_failure) {
      std::vector<std::string> act;
      for (Action a : env.decode_action(st.action)) act.push_back(action_name(a));
      j["action"] = act;
    }
    os << j.dump() << '\n';
  }
  return os.str();
}

}  // namespace shieldc
