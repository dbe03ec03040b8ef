#include "shieldc/procauto.hpp"

#include <deque>
#include <map>

namespace shieldc {

TermArena::TermArena(const Term& root, const BoundSets& sets) : universe_(sets.universe()) {
  std::vector<std::pair<std::string, int>> scope;
  root_ = add(root, scope, sets);

  std::map<std::string, int> seen;
  for (const auto& n : nodes_)
    if (n.kind == Term::Kind::Mu) ++seen[n.name];
  std::map<std::string, int> ordinal;
  binder_names_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.kind != Term::Kind::Mu) continue;
    binder_names_[i] = seen[n.name] == 1 ? n.name : n.name + "_" + std::to_string(++ordinal[n.name]);
  }
}

int TermArena::add(const Term& t, std::vector<std::pair<std::string, int>>& scope, const BoundSets& sets) {
  const int idx = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Node n;
  n.kind = t.kind;
  n.name = t.name;
  switch (t.kind) {
    case Term::Kind::Idle:
    case Term::Kind::Fail: break;
    case Term::Kind::Var: {
      for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
        if (it->first == t.name) {
          n.binder = it->second;
          break;
        }
      }
      if (n.binder < 0) throw Error(ErrorKind::UnboundVariable, "unbound recursion variable '" + t.name + "'");
      break;
    }
    case Term::Kind::Mu:
      scope.emplace_back(t.name, idx);
      n.left = add(*t.left, scope, sets);
      scope.pop_back();
      break;
    case Term::Kind::Prefix:
      n.set = sets.eval(*t.set);
      n.set_text = print_set(*t.set);
      n.left = add(*t.left, scope, sets);
      break;
    case Term::Kind::Choice:
      n.set = sets.eval(*t.set);
      n.set_text = print_set(*t.set);
      n.left = add(*t.left, scope, sets);
      n.right = add(*t.right, scope, sets);
      break;
  }
  nodes_[static_cast<std::size_t>(idx)] = std::move(n);
  return idx;
}

std::size_t TermArena::prefix_count() const {
  std::size_t k = 0;
  for (const auto& n : nodes_)
    if (n.kind == Term::Kind::Prefix) ++k;
  return k;
}

std::string TermArena::canonical(int i) const {
  const Node& n = node(i);
  switch (n.kind) {
    case Term::Kind::Idle: return "idle";
    case Term::Kind::Fail: return "fail";
    case Term::Kind::Var: return binder_names_[static_cast<std::size_t>(n.binder)];
    case Term::Kind::Mu: return "mu " + binder_names_[static_cast<std::size_t>(i)] + "." + canonical(n.left);
    case Term::Kind::Prefix: return n.set_text + "." + canonical(n.left);
    case Term::Kind::Choice: return "(" + canonical(n.left) + " ||[" + n.set_text + "] " + canonical(n.right) + ")";
  }
  return {};
}

Resolution resolve(const TermArena& arena, int node, StateId s) {
  Resolution r;
  r.constraint = StateSet::full(arena.universe());
  for (std::size_t steps = 0;; ++steps) {
    if (steps > arena.size())
      throw Error(ErrorKind::NonTermination, "resolution exceeded " + std::to_string(arena.size()) + " unfoldings");
    const auto& n = arena.node(node);
    switch (n.kind) {
      case Term::Kind::Idle:
        r.kind = Resolution::Kind::Idle;
        return r;
      case Term::Kind::Fail:
        r.kind = Resolution::Kind::Fail;
        return r;
      case Term::Kind::Prefix:
        r.kind = Resolution::Kind::Head;
        r.prefix_node = node;
        return r;
      case Term::Kind::Mu: node = n.left; break;
      case Term::Kind::Var: node = arena.node(n.binder).left; break;
      case Term::Kind::Choice: {
        if (n.set.test(s)) {
          r.constraint &= n.set;
          node = n.left;
        } else {
          r.constraint -= n.set;
          node = n.right;
        }
        break;
      }
    }
  }
}

std::size_t ProcessAutomaton::num_edges() const {
  std::size_t k = 0;
  for (const auto& e : edges_) k += e.size();
  return k;
}

int ProcessAutomaton::step(int q, StateId s) const {
  for (const auto& e : edges(q))
    if (e.label.test(s)) return e.target;
  throw Error(ErrorKind::NonTermination, "automaton state has no edge for input");
}

int ProcessAutomaton::find_head(const std::string& display) const {
  for (std::size_t q = 0; q < states_.size(); ++q)
    if (states_[q].kind == AutomatonState::Kind::Head && states_[q].display == display) return static_cast<int>(q);
  return -1;
}

ProcessAutomaton compile_automaton(const ShieldSpec& spec, const Environment& env, const BoundSets& sets) {
  require_wellformed(spec);
  ProcessAutomaton pa;
  const std::size_t n = env.num_states();
  const StateSet all = StateSet::full(n);
  pa.alphabet_size_ = n;
  pa.arena_ = std::make_shared<const TermArena>(*spec.root, sets);
  const TermArena& arena = *pa.arena_;

  pa.states_.push_back({AutomatonState::Kind::Start, {}, -1, "start"});
  pa.states_.push_back({AutomatonState::Kind::Idle, {}, -1, "idle"});
  pa.states_.push_back({AutomatonState::Kind::Fail, {}, -1, "fail"});
  pa.edges_.resize(3);

  std::map<std::string, int> heads;
  std::deque<int> queue;

  auto target_of = [&](const Resolution& r) {
    switch (r.kind) {
      case Resolution::Kind::Idle: return ProcessAutomaton::kIdle;
      case Resolution::Kind::Fail: return ProcessAutomaton::kFail;
      case Resolution::Kind::Head: break;
    }
    std::string key = arena.canonical(r.prefix_node);
    auto [it, inserted] = heads.emplace(key, static_cast<int>(pa.states_.size()));
    if (inserted) {
      const auto& node = arena.node(r.prefix_node);
      pa.states_.push_back({AutomatonState::Kind::Head, node.set, node.left, key});
      pa.edges_.emplace_back();
      queue.push_back(it->second);
    }
    return it->second;
  };

  // Edges for inputs in `domain`, resolving `node` against each input.
  auto expand = [&](int q, int node, const StateSet& domain) {
    StateSet uncovered = domain;
    while (uncovered.any()) {
      const auto s = static_cast<StateId>(uncovered.first());
      Resolution r = resolve(arena, node, s);
      StateSet label = uncovered & r.constraint;
      int t = target_of(r);
      pa.edges_[static_cast<std::size_t>(q)].push_back({label, t});
      uncovered -= label;
    }
  };

  expand(ProcessAutomaton::kStart, arena.root(), all);
  while (!queue.empty()) {
    const int q = queue.front();
    queue.pop_front();
    const StateSet shield = pa.states_[static_cast<std::size_t>(q)].prefix_shield;
    const int cont = pa.states_[static_cast<std::size_t>(q)].continuation;
    StateSet outside = all - shield;
    if (outside.any()) pa.edges_[static_cast<std::size_t>(q)].push_back({outside, ProcessAutomaton::kFail});
    expand(q, cont, shield);
  }
  pa.edges_[ProcessAutomaton::kIdle].push_back({all, ProcessAutomaton::kIdle});
  pa.edges_[ProcessAutomaton::kFail].push_back({all, ProcessAutomaton::kFail});

  if (pa.states_.size() > arena.prefix_count() + 3)
    throw Error(ErrorKind::NonTermination, "automaton exceeded the prefix-count bound");
  return pa;
}

ProcessAutomaton compile_automaton(const ShieldSpec& spec, const Environment& env) {
  require_wellformed(spec);
  BoundSets sets(spec, env);
  return compile_automaton(spec, env, sets);
}

}  // namespace shieldc
