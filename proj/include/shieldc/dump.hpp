#pragma once

#include <string>

#include "shieldc/local_shield.hpp"

namespace shieldc {

/// Names used in dumps. `sets` may be null; unnamed sets print as `|label|=k`.
class DumpNames {
 public:
  DumpNames(const ProcessAutomaton& automaton, const GlobalMealy* global, const BoundSets* sets)
      : automaton_(automaton), global_(global), sets_(sets) {}

  std::string set(const StateSet& s) const;
  std::string global_state(int g) const;
  /// Sorted global-state names, e.g. `{(sh1,sh1.sh2.sh3.idle), fail}`.
  std::string belief(const Belief& b) const;

 private:
  const ProcessAutomaton& automaton_;
  const GlobalMealy* global_;
  const BoundSets* sets_;
};

std::string automaton_dot(const ProcessAutomaton& automaton, const BoundSets* sets);
std::string automaton_json(const ProcessAutomaton& automaton);

std::string global_dot(const GlobalMealy& global, const ProcessAutomaton& automaton, const BoundSets* sets);
std::string global_json(const GlobalMealy& global, const ProcessAutomaton& automaton, const BoundSets* sets);

/// Observations with the same target and output share one DOT edge.
std::string local_dot(const LocalMealy& local, const GlobalMealy& global, const ProcessAutomaton& automaton,
                      const Environment& env, const BoundSets* sets);
std::string local_json(const LocalMealy& local, const GlobalMealy& global, const ProcessAutomaton& automaton,
                       const Environment& env, const BoundSets* sets);

}  // namespace shieldc
