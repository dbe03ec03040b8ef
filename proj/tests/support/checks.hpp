#pragma once

// Whole-machine invariant checks. Each check appends a message per violation
// so that property tests and the acceptance binary can share them.

#include <deque>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "shieldc/gen.hpp"
#include "shieldc/prism.hpp"
#include "shieldc/sim.hpp"

namespace checks {

using namespace shieldc;

struct Report {
  std::size_t checked = 0;
  std::vector<std::string> violations;

  void fail(const std::string& what) {
    if (violations.size() < 20) violations.push_back(what);
    else if (violations.size() == 20) violations.push_back("...");
  }
  bool ok() const { return violations.empty(); }
  std::string summary() const {
    std::ostringstream os;
    os << checked << " checks, " << violations.size() << " violations";
    for (const auto& v : violations) os << "\n  " << v;
    return os.str();
  }
};

template <class Edges>
void check_partition(const Edges& edges, std::size_t universe, const std::string& where, Report& rep) {
  StateSet seen(universe);
  for (const auto& e : edges) {
    ++rep.checked;
    if (e.label.intersects(seen)) rep.fail(where + ": overlapping labels");
    seen |= e.label;
  }
  if (!seen.all()) rep.fail(where + ": labels do not cover S");
}

inline void check_labels(const ProcessAutomaton& a, const GlobalMealy& g, std::size_t universe, Report& rep) {
  for (std::size_t q = 0; q < a.num_states(); ++q) {
    check_partition(a.edges(static_cast<int>(q)), universe, "automaton state " + std::to_string(q), rep);
  }
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    check_partition(g.edges(static_cast<int>(s)), universe, "global state " + std::to_string(s), rep);
  }
}

/// Sources of the Â computation on edge `e` leaving global state `gs`.
inline StateSet edge_sources(const GlobalState& gs, const GlobalEdge& e) {
  if (gs.kind == GlobalState::Kind::Idle) return gs.set;
  return gs.set & e.label;
}

/// ∏U ⊆ Â with nonempty components, and ⊥ exactly when Â is empty.
inline void check_dec_contract(const Environment& env, const GlobalMealy& g, Report& rep) {
  const int n = env.num_agents();
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    for (const auto& e : g.edges(static_cast<int>(s))) {
      if (e.allowed.size() == 0) continue;  // never asserted a target set
      ++rep.checked;
      const std::string where = "global " + std::to_string(s) + " -> " + std::to_string(e.target);
      if (e.output.bot != e.allowed.none()) rep.fail(where + ": bot does not match emptiness of Â");
      if (e.output.bot) continue;
      if (static_cast<int>(e.output.sets.size()) != n) {
        rep.fail(where + ": wrong number of components");
        continue;
      }
      for (const auto& u : e.output.sets) {
        if (u.empty()) rep.fail(where + ": empty component");
      }
      std::vector<std::vector<Action>> prods{{}};
      for (const auto& u : e.output.sets) {
        std::vector<std::vector<Action>> next;
        for (const auto& p : prods) {
          for (Action a : u.actions()) {
            auto v = p;
            v.push_back(a);
            next.push_back(std::move(v));
          }
        }
        prods = std::move(next);
      }
      const JointActionSet fresh = allowed_joint(env, edge_sources(g.state(static_cast<int>(s)), e), e.asserted);
      for (const auto& p : prods) {
        if (!fresh.test(env.encode_action(p))) {
          rep.fail(where + ": product leaves Â");
          break;
        }
      }
    }
  }
}

/// Every edge's Â and Dec against the brute-force oracles.
inline void check_oracle_equivalence(const Environment& env, const GlobalMealy& g, Report& rep) {
  for (std::size_t s = 0; s < g.num_states(); ++s) {
    for (const auto& e : g.edges(static_cast<int>(s))) {
      if (e.allowed.size() == 0) continue;
      ++rep.checked;
      const std::string where = "global " + std::to_string(s) + " -> " + std::to_string(e.target);
      const auto hat = oracle::allowed_joint(env, edge_sources(g.state(static_cast<int>(s)), e), e.asserted);
      if (hat != oracle::to_actions(env, e.allowed)) rep.fail(where + ": Â differs from brute force");
      const MealyOutput want = oracle::decompose(env.num_agents(), hat);
      if (!(want == e.output)) rep.fail(where + ": Dec " + e.output.to_string() + " but oracle " + want.to_string());
    }
  }
}

/// From every Idle(hold) state, 100 steps of random loop-output actions stay
/// inside hold.
inline void check_idle_persistence(const Environment& env, const GlobalMealy& g, std::mt19937_64& rng, Report& rep) {
  for (std::size_t q = 0; q < g.num_states(); ++q) {
    const auto& gs = g.state(static_cast<int>(q));
    if (gs.kind != GlobalState::Kind::Idle) continue;
    const auto& loop = g.edges(static_cast<int>(q)).front();
    if (loop.output.bot) continue;
    gs.set.for_each([&](std::size_t start) {
      ++rep.checked;
      StateId s = static_cast<StateId>(start);
      for (int t = 0; t < 100; ++t) {
        std::vector<Action> acts;
        for (const auto& u : loop.output.sets) {
          const auto opts = u.actions();
          acts.push_back(opts[std::uniform_int_distribution<std::size_t>(0, opts.size() - 1)(rng)]);
        }
        s = oracle::successor(env, s, acts);
        if (!gs.set.test(s)) {
          rep.fail("idle " + std::to_string(q) + " left its hold set from " + env.state_literal(static_cast<StateId>(start)));
          break;
        }
      }
    });
  }
}

/// One co-simulated step from (s, g, q). Checks belief correctness,
/// containment and one-step safety; returns the admissible joint actions
/// (empty when a local output is ⊥).
struct CoStep {
  int g_next = 0;
  std::vector<int> q_next;
  std::vector<std::vector<Action>> actions;
};

inline CoStep co_step(const Environment& env, const Pipeline& p, StateId s, int g, const std::vector<int>& q,
                      Report& rep) {
  const int n = env.num_agents();
  const GlobalEdge& e = p.global.edge_for(g, s);
  CoStep out;
  out.g_next = e.target;
  bool any_bot = false;
  std::vector<ActionSet> outs;
  for (int i = 0; i < n; ++i) {
    const auto& tr = p.locals[static_cast<std::size_t>(i)].step(q[static_cast<std::size_t>(i)], env.obs_id(i, s));
    out.q_next.push_back(tr.target);
    const Belief& b = p.locals[static_cast<std::size_t>(i)].belief(tr.target);
    ++rep.checked;
    if (!std::binary_search(b.begin(), b.end(), e.target)) {
      rep.fail("agent " + std::to_string(i + 1) + " lost the true global state at " + env.state_literal(s));
    }
    any_bot = any_bot || tr.output.bot;
    outs.push_back(tr.output.actions);
  }
  if (any_bot) return out;

  std::vector<std::vector<Action>> prods{{}};
  for (const auto& u : outs) {
    std::vector<std::vector<Action>> next;
    for (const auto& pr : prods) {
      for (Action a : u.actions()) {
        auto v = pr;
        v.push_back(a);
        next.push_back(std::move(v));
      }
    }
    prods = std::move(next);
  }
  if (!e.output.bot) {
    for (const auto& a : prods) {
      ++rep.checked;
      if (!e.allowed.test(env.encode_action(a))) {
        rep.fail("local product leaves Â at " + env.state_literal(s));
        break;
      }
      if (!e.asserted.test(oracle::successor(env, s, a))) {
        rep.fail("successor outside the asserted set at " + env.state_literal(s));
        break;
      }
    }
  }
  out.actions = std::move(prods);
  return out;
}

/// Exhaustive co-simulation over every action sequence drawn from the local
/// outputs; episodes stop on collision or when all targets are reached.
inline void check_cosim_exhaustive(const Environment& env, const Pipeline& p, Report& rep,
                                   std::size_t cap = 2'000'000) {
  std::set<std::vector<int>> seen;
  std::deque<std::vector<int>> queue;
  std::vector<int> start{static_cast<int>(env.initial_state()), GlobalMealy::kInitial};
  start.resize(2 + static_cast<std::size_t>(env.num_agents()), 0);
  seen.insert(start);
  queue.push_back(start);
  while (!queue.empty()) {
    const auto key = queue.front();
    queue.pop_front();
    const auto s = static_cast<StateId>(key[0]);
    const std::vector<int> q(key.begin() + 2, key.end());
    CoStep st = co_step(env, p, s, key[1], q, rep);
    for (const auto& a : st.actions) {
      const StateId s2 = oracle::successor(env, s, a);
      std::vector<int> next{static_cast<int>(s2), st.g_next};
      next.insert(next.end(), st.q_next.begin(), st.q_next.end());
      if (!env.is_safe(s2) || env.all_reached(s2)) {
        ++rep.checked;
        continue;
      }
      if (seen.insert(next).second) {
        if (seen.size() > cap) {
          rep.fail("co-simulation product exceeds the cap");
          return;
        }
        queue.push_back(std::move(next));
      }
    }
  }
}

/// Random co-simulation runs for instances too large to enumerate.
inline void check_cosim_random(const Environment& env, const Pipeline& p, std::mt19937_64& rng, int runs, int horizon,
                               Report& rep) {
  for (int r = 0; r < runs; ++r) {
    StateId s = env.initial_state();
    int g = GlobalMealy::kInitial;
    std::vector<int> q(static_cast<std::size_t>(env.num_agents()), 0);
    for (int t = 0; t < horizon; ++t) {
      CoStep st = co_step(env, p, s, g, q, rep);
      if (st.actions.empty()) break;
      const auto& a = st.actions[std::uniform_int_distribution<std::size_t>(0, st.actions.size() - 1)(rng)];
      s = oracle::successor(env, s, a);
      g = st.g_next;
      q = st.q_next;
      if (!env.is_safe(s) || env.all_reached(s)) break;
    }
  }
}

/// Every transition of a simulated trace is a transition of the exported MDP.
inline void check_trace_in_mdp(const Environment& env, const std::vector<LocalMealy>& shields, const ExplicitMdp& mdp,
                               const EpisodeResult& run, Report& rep) {
  for (const auto& step : run.trace) {
    ++rep.checked;
    const int x = mdp.find({step.state, step.local_states, false});
    if (x < 0) {
      rep.fail("trace state missing from the MDP: " + env.state_literal(step.state));
      return;
    }
    bool bot = false;
    std::vector<int> next_q;
    for (std::size_t i = 0; i < shields.size(); ++i) {
      const auto& tr = shields[i].step(step.local_states[i], step.observations[i]);
      bot = bot || tr.output.bot;
      next_q.push_back(tr.target);
    }
    const int y = bot ? mdp.find({0, {}, true})
                      : mdp.find({env.apply_joint(step.state, step.action), next_q, false});
    bool found = false;
    for (const auto& c : mdp.choices[static_cast<std::size_t>(x)]) {
      for (const auto& [t, pr] : c.successors) found = found || (t == y && pr > 0.0);
    }
    if (y < 0 || !found) {
      rep.fail("trace transition missing from the MDP at " + env.state_literal(step.state));
      return;
    }
  }
}

}  // namespace checks
