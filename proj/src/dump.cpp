#include "shieldc/dump.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <json.hpp>

namespace shieldc {

using ojson = nlohmann::ordered_json;

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

const char* kind_name(AutomatonState::Kind k) {
  switch (k) {
    case AutomatonState::Kind::Start: return "start";
    case AutomatonState::Kind::Idle: return "idle";
    case AutomatonState::Kind::Fail: return "fail";
    case AutomatonState::Kind::Head: return "head";
  }
  return "?";
}

const char* kind_name(GlobalState::Kind k) {
  switch (k) {
    case GlobalState::Kind::Fail: return "fail";
    case GlobalState::Kind::Idle: return "idle";
    case GlobalState::Kind::Live: return "live";
  }
  return "?";
}

ojson output_json(const MealyOutput& out) {
  if (out.bot) return "BOT";
  ojson arr = ojson::array();
  for (const auto& u : out.sets) arr.push_back(u.to_string());
  return arr;
}

}  // namespace

std::string DumpNames::set(const StateSet& s) const {
  if (sets_ != nullptr) {
    if (auto name = sets_->name_of(s)) return *name;
  }
  return "|label|=" + std::to_string(s.count());
}

std::string DumpNames::global_state(int g) const {
  const GlobalState& st = global_->state(g);
  switch (st.kind) {
    case GlobalState::Kind::Fail: return "fail";
    case GlobalState::Kind::Idle: {
      const auto& all = global_->states();
      const auto idles = std::count_if(all.begin(), all.end(),
                                       [](const GlobalState& x) { return x.kind == GlobalState::Kind::Idle; });
      return idles == 1 ? std::string("idle") : "idle(" + set(st.set) + ")";
    }
    case GlobalState::Kind::Live: return "(" + set(st.set) + "," + automaton_.state(st.proc).display + ")";
  }
  return "?";
}

std::string DumpNames::belief(const Belief& b) const {
  std::vector<std::string> names;
  for (int g : b) names.push_back(global_state(g));
  std::sort(names.begin(), names.end());
  std::string out = "{";
  for (std::size_t k = 0; k < names.size(); ++k) out += (k ? ", " : "") + names[k];
  return out + "}";
}

std::string automaton_dot(const ProcessAutomaton& automaton, const BoundSets* sets) {
  DumpNames names(automaton, nullptr, sets);
  std::ostringstream os;
  os << "digraph process_automaton {\n  rankdir=LR;\n  node [shape=box, style=rounded];\n";
  for (std::size_t q = 0; q < automaton.num_states(); ++q) {
    os << "  q" << q << " [label=\"" << dot_escape(automaton.state(static_cast<int>(q)).display) << "\"];\n";
  }
  for (std::size_t q = 0; q < automaton.num_states(); ++q) {
    for (const auto& e : automaton.edges(static_cast<int>(q))) {
      os << "  q" << q << " -> q" << e.target << " [label=\"" << dot_escape(names.set(e.label)) << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

std::string automaton_json(const ProcessAutomaton& automaton) {
  ojson j;
  j["alphabet_size"] = automaton.alphabet_size();
  ojson states = ojson::array();
  ojson trans = ojson::array();
  for (std::size_t q = 0; q < automaton.num_states(); ++q) {
    const auto& st = automaton.state(static_cast<int>(q));
    states.push_back({{"id", q}, {"kind", kind_name(st.kind)}, {"name", st.display}});
    for (const auto& e : automaton.edges(static_cast<int>(q))) {
      trans.push_back({{"source", q}, {"target", e.target}, {"label", e.label.indices()}});
    }
  }
  j["states"] = std::move(states);
  j["transitions"] = std::move(trans);
  return j.dump(2) + "\n";
}

std::string global_dot(const GlobalMealy& global, const ProcessAutomaton& automaton, const BoundSets* sets) {
  DumpNames names(automaton, &global, sets);
  std::ostringstream os;
  os << "digraph global_shield {\n  rankdir=LR;\n  node [shape=box, style=rounded];\n";
  for (std::size_t g = 0; g < global.num_states(); ++g) {
    os << "  g" << g << " [label=\"" << dot_escape(names.global_state(static_cast<int>(g))) << "\"];\n";
  }
  for (std::size_t g = 0; g < global.num_states(); ++g) {
    for (const auto& e : global.edges(static_cast<int>(g))) {
      os << "  g" << g << " -> g" << e.target << " [label=\""
         << dot_escape(names.set(e.label) + " / " + e.output.to_string()) << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

std::string global_json(const GlobalMealy& global, const ProcessAutomaton& automaton, const BoundSets* sets) {
  DumpNames names(automaton, &global, sets);
  ojson j;
  j["num_agents"] = global.num_agents();
  ojson states = ojson::array();
  ojson trans = ojson::array();
  for (std::size_t g = 0; g < global.num_states(); ++g) {
    const auto& st = global.state(static_cast<int>(g));
    ojson s = {{"id", g}, {"kind", kind_name(st.kind)}, {"name", names.global_state(static_cast<int>(g))}};
    if (st.kind != GlobalState::Kind::Fail) s["set"] = st.set.indices();
    if (st.kind == GlobalState::Kind::Live) s["process_state"] = st.proc;
    states.push_back(std::move(s));
    for (const auto& e : global.edges(static_cast<int>(g))) {
      trans.push_back({{"source", g}, {"target", e.target}, {"label", e.label.indices()},
                       {"output", output_json(e.output)}});
    }
  }
  j["states"] = std::move(states);
  j["transitions"] = std::move(trans);
  return j.dump(2) + "\n";
}

std::string local_dot(const LocalMealy& local, const GlobalMealy& global, const ProcessAutomaton& automaton,
                      const Environment& env, const BoundSets* sets) {
  DumpNames names(automaton, &global, sets);
  std::ostringstream os;
  os << "digraph local_shield_" << local.agent() + 1 << " {\n  node [shape=box, style=rounded];\n";
  for (std::size_t q = 0; q < local.num_states(); ++q) {
    os << "  l" << q << " [label=\"" << dot_escape(names.belief(local.belief(static_cast<int>(q)))) << "\"];\n";
  }
  const auto& alphabet = env.alphabet(local.agent());
  for (std::size_t q = 0; q < local.num_states(); ++q) {
    std::map<std::pair<int, std::string>, std::string> grouped;
    for (ObsId o = 0; o < local.alphabet_size(); ++o) {
      const auto& t = local.step(static_cast<int>(q), o);
      auto& label = grouped[{t.target, t.output.to_string()}];
      label += (label.empty() ? "" : ", ") + alphabet[o].to_string(env.radius());
    }
    for (const auto& [key, obs] : grouped) {
      os << "  l" << q << " -> l" << key.first << " [label=\"" << dot_escape(obs + " / " + key.second) << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

std::string local_json(const LocalMealy& local, const GlobalMealy& global, const ProcessAutomaton& automaton,
                       const Environment& env, const BoundSets* sets) {
  DumpNames names(automaton, &global, sets);
  ojson j;
  j["agent"] = local.agent() + 1;
  ojson states = ojson::array();
  ojson trans = ojson::array();
  const auto& alphabet = env.alphabet(local.agent());
  for (std::size_t q = 0; q < local.num_states(); ++q) {
    const Belief& b = local.belief(static_cast<int>(q));
    states.push_back({{"id", q}, {"belief", b}, {"name", names.belief(b)}});
    for (ObsId o = 0; o < local.alphabet_size(); ++o) {
      const auto& t = local.step(static_cast<int>(q), o);
      trans.push_back({{"source", q},
                       {"observation", alphabet[o].to_string(env.radius())},
                       {"target", t.target},
                       {"output", t.output.to_string()}});
    }
  }
  j["states"] = std::move(states);
  j["transitions"] = std::move(trans);
  return j.dump(2) + "\n";
}

}  // namespace shieldc
