#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "shieldc/local_shield.hpp"

namespace shieldc {

enum class Template { P1, P2 };

/// Realizable joint observations as per-agent observation ids, in
/// lexicographic order (agent 1 first, then patch cells, then direction).
std::vector<std::vector<ObsId>> joint_observations(const Environment& env);

/// Shield document for a template. P2 is the right-nested guarded choice
/// over the joint-observation classes, ending in `fail`.
std::string generate(Template t, const Environment& env);

/// Every stage of the compilation for one document and environment.
/// `env` must outlive the result.
struct Pipeline {
  ShieldSpec spec;
  std::shared_ptr<BoundSets> sets;
  ProcessAutomaton automaton;
  GlobalMealy global;
  std::vector<LocalMealy> locals;
};

Pipeline run_pipeline(const std::string& document, const Environment& env, const SynthesisOptions& synth = {},
                      const ProjectionOptions& proj = {});

/// Uniform obstacle placement, distinct starts, distinct targets with
/// target != start, every target reachable from its start. The result
/// depends only on the grid, n, obstacle count, seed and index.
Environment sample_instance(int width, int height, int agents, int obstacles, int radius, std::uint64_t seed,
                            std::uint64_t index);

}  // namespace shieldc
