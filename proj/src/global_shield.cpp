#include "shieldc/global_shield.hpp"

#include <deque>
#include <functional>
#include <map>
#include <tuple>
#include <unordered_map>

namespace shieldc {

namespace {

std::size_t pow5(int n) {
  std::size_t r = 1;
  for (int i = 0; i < n; ++i) r *= kNumActions;
  return r;
}

// Enumerates the joint actions of a product in increasing index order.
void for_each_tuple(const std::vector<ActionSet>& sets, const std::function<void(JointAction)>& fn) {
  std::vector<JointAction> partial{0};
  for (ActionSet u : sets) {
    std::vector<JointAction> next;
    next.reserve(partial.size() * static_cast<std::size_t>(u.size()));
    for (JointAction p : partial)
      for (Action a : u.actions()) next.push_back(p * kNumActions + static_cast<JointAction>(a));
    partial = std::move(next);
  }
  for (JointAction a : partial) fn(a);
}

bool product_within(const std::vector<ActionSet>& sets, const JointActionSet& hat) {
  bool ok = true;
  for_each_tuple(sets, [&](JointAction a) { ok = ok && hat.test(a); });
  return ok;
}

struct Candidate {
  std::size_t product = 0;
  std::vector<ActionSet> sets;
};

// true if `a` is preferred to `b`.
bool better(const Candidate& a, const Candidate& b) {
  if (a.product != b.product) return a.product > b.product;
  for (std::size_t i = 0; i < a.sets.size(); ++i)
    if (a.sets[i].size() != b.sets[i].size()) return a.sets[i].size() > b.sets[i].size();
  for (std::size_t i = 0; i < a.sets.size(); ++i) {
    if (a.sets[i] == b.sets[i]) continue;
    return action_list_less(a.sets[i], b.sets[i]);
  }
  return false;
}

MealyOutput decompose_exhaustive(int n, const JointActionSet& hat) {
  // For fixed U_1..U_{n-1} the best U_n is the largest feasible one, so only
  // the first n-1 sets are enumerated.
  const std::size_t prefixes = pow5(n - 1);
  std::vector<std::uint8_t> last(prefixes, 0);
  for (std::size_t p = 0; p < prefixes; ++p)
    for (int a = 0; a < kNumActions; ++a)
      if (hat.test(p * kNumActions + static_cast<std::size_t>(a))) last[p] |= std::uint8_t(1U << a);

  Candidate best;
  Candidate cur;
  cur.sets.assign(static_cast<std::size_t>(n), ActionSet());

  // Depth-first over prefix masks; `tuples` holds the prefix indices so far.
  std::function<void(int, const std::vector<std::size_t>&, std::size_t)> rec =
      [&](int level, const std::vector<std::size_t>& tuples, std::size_t partial_product) {
        if (level == n - 1) {
          std::uint8_t u = 0x1F;
          for (std::size_t t : tuples) {
            u &= last[t];
            if (u == 0) return;
          }
          cur.sets[static_cast<std::size_t>(level)] = ActionSet(u);
          cur.product = partial_product * static_cast<std::size_t>(ActionSet(u).size());
          if (best.sets.empty() || better(cur, best)) best = cur;
          return;
        }
        if (!best.sets.empty() && partial_product * pow5(n - level) < best.product) return;
        for (std::uint8_t m = 1; m < 32; ++m) {
          ActionSet u(m);
          std::vector<std::size_t> next;
          next.reserve(tuples.size() * static_cast<std::size_t>(u.size()));
          bool dead = false;
          for (std::size_t t : tuples) {
            for (Action a : u.actions()) next.push_back(t * kNumActions + static_cast<std::size_t>(a));
          }
          // Every extended prefix must admit at least one completion.
          if (level + 1 == n - 1) {
            for (std::size_t t : next)
              if (last[t] == 0) {
                dead = true;
                break;
              }
          }
          if (dead) continue;
          cur.sets[static_cast<std::size_t>(level)] = u;
          rec(level + 1, next, partial_product * static_cast<std::size_t>(u.size()));
        }
      };
  rec(0, {0}, 1);
  if (best.sets.empty()) return MealyOutput::bottom();
  return {false, best.sets};
}

MealyOutput decompose_greedy(int n, const JointActionSet& hat) {
  const JointAction seed = static_cast<JointAction>(hat.first());
  std::vector<ActionSet> sets(static_cast<std::size_t>(n));
  JointAction rest = seed;
  for (int i = n - 1; i >= 0; --i) {
    sets[static_cast<std::size_t>(i)] = ActionSet::of(static_cast<Action>(rest % kNumActions));
    rest /= kNumActions;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      for (int a = 0; a < kNumActions; ++a) {
        if (sets[i].contains(a)) continue;
        auto trial = sets;
        trial[i] = sets[i] | ActionSet::of(static_cast<Action>(a));
        if (product_within(trial, hat)) {
          sets = std::move(trial);
          changed = true;
        }
      }
    }
  }
  return {false, sets};
}

}  // namespace

std::string MealyOutput::to_string() const {
  if (bot) return "BOT";
  std::string out = "[";
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (i > 0) out += ",";
    out += sets[i].to_string();
  }
  return out + "]";
}

JointActionSet allowed_joint(const Environment& env, const StateSet& sources, const StateSet& targets) {
  const std::size_t na = env.num_joint_actions();
  JointActionSet result = JointActionSet::full(na);
  JointActionSet mask(na);
  bool empty = false;
  sources.for_each([&](std::size_t s) {
    if (empty) return;
    mask = JointActionSet(na);
    for (JointAction a = 0; a < na; ++a)
      if (targets.test(env.apply_joint(static_cast<StateId>(s), a))) mask.set(a);
    result &= mask;
    empty = result.none();
  });
  return result;
}

MealyOutput decompose(int num_agents, const JointActionSet& hat, DecMode mode) {
  if (hat.none()) return MealyOutput::bottom();
  return mode == DecMode::Exhaustive ? decompose_exhaustive(num_agents, hat) : decompose_greedy(num_agents, hat);
}

JointActionSet product_actions(int num_agents, const MealyOutput& out) {
  JointActionSet r(pow5(num_agents));
  if (out.bot) return r;
  for_each_tuple(out.sets, [&](JointAction a) { r.set(a); });
  return r;
}

std::size_t GlobalMealy::num_edges() const {
  std::size_t k = 0;
  for (const auto& e : edges_) k += e.size();
  return k;
}

const GlobalEdge& GlobalMealy::edge_for(int g, StateId s) const {
  for (const auto& e : edges(g))
    if (e.label.test(s)) return e;
  throw Error(ErrorKind::NonTermination, "global shield state has no edge for input");
}

GlobalMealy synthesize_global(const ProcessAutomaton& automaton, const Environment& env,
                              const SynthesisOptions& options) {
  GlobalMealy gm;
  gm.num_agents_ = env.num_agents();
  gm.env_fingerprint_ = env.fingerprint();
  gm.options_ = options;
  const int n = env.num_agents();
  const std::size_t ns = env.num_states();
  const StateSet all = StateSet::full(ns);

  using Key = std::tuple<int, int, StateSet>;
  std::map<Key, int> index;
  std::deque<int> queue;
  std::unordered_map<JointActionSet, MealyOutput, BitsetHash> dec_cache;

  auto intern = [&](GlobalState st) {
    Key key{static_cast<int>(st.kind), st.proc, st.set};
    auto [it, inserted] = index.emplace(key, static_cast<int>(gm.states_.size()));
    if (inserted) {
      gm.states_.push_back(std::move(st));
      gm.edges_.emplace_back();
      queue.push_back(it->second);
    }
    return it->second;
  };
  auto dec = [&](const JointActionSet& hat) -> const MealyOutput& {
    auto it = dec_cache.find(hat);
    if (it == dec_cache.end()) it = dec_cache.emplace(hat, decompose(n, hat, options.dec)).first;
    return it->second;
  };
  auto post = [&](const StateSet& from, const MealyOutput& out) {
    StateSet r(ns);
    std::vector<JointAction> acts;
    for_each_tuple(out.sets, [&](JointAction a) { acts.push_back(a); });
    from.for_each([&](std::size_t s) {
      for (JointAction a : acts) r.set(env.apply_joint(static_cast<StateId>(s), a));
    });
    return r;
  };

  intern({GlobalState::Kind::Live, env.initial_set(), ProcessAutomaton::kStart});
  intern({GlobalState::Kind::Fail, StateSet(ns), -1});

  while (!queue.empty()) {
    const int g = queue.front();
    queue.pop_front();
    const GlobalState cur = gm.states_[static_cast<std::size_t>(g)];
    std::vector<GlobalEdge> out;

    switch (cur.kind) {
      case GlobalState::Kind::Fail:
        out.push_back({all, GlobalMealy::kFail, MealyOutput::bottom(), {}, {}});
        break;
      case GlobalState::Kind::Idle: {
        JointActionSet hat = allowed_joint(env, cur.set, cur.set);
        out.push_back({all, g, dec(hat), hat, cur.set});
        break;
      }
      case GlobalState::Kind::Live: {
        for (const auto& ae : automaton.edges(cur.proc)) {
          const StateSet rel = cur.set & ae.label;
          const auto& target = automaton.state(ae.target);
          if (target.kind == AutomatonState::Kind::Fail || rel.none()) {
            out.push_back({ae.label, GlobalMealy::kFail, MealyOutput::bottom(), {}, {}});
            continue;
          }
          if (target.kind == AutomatonState::Kind::Head) {
            JointActionSet hat = allowed_joint(env, rel, target.prefix_shield);
            if (hat.none()) {
              out.push_back({ae.label, GlobalMealy::kFail, MealyOutput::bottom(), hat, target.prefix_shield});
              continue;
            }
            const MealyOutput& o = dec(hat);
            StateSet next = target.prefix_shield;
            if (options.refine_belief) next &= post(rel, o);
            int t = intern({GlobalState::Kind::Live, std::move(next), ae.target});
            out.push_back({ae.label, t, o, hat, target.prefix_shield});
            continue;
          }
          // Process terminated: hold the last consumed shield set.
          StateSet hold = (options.idle_policy == IdlePolicy::All || cur.proc == ProcessAutomaton::kStart)
                              ? all
                              : ae.label;
          JointActionSet hat = allowed_joint(env, rel, hold);
          if (hat.none()) {
            out.push_back({ae.label, GlobalMealy::kFail, MealyOutput::bottom(), hat, hold});
            continue;
          }
          const MealyOutput& o = dec(hat);
          int t = intern({GlobalState::Kind::Idle, hold, -1});
          out.push_back({ae.label, t, o, hat, hold});
        }
        break;
      }
    }
    gm.edges_[static_cast<std::size_t>(g)] = std::move(out);
  }
  return gm;
}

}  // namespace shieldc
