#include "shieldc/gen.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <sstream>

#include "shieldc/error.hpp"
#include "shieldc/sim.hpp"

namespace shieldc {

std::vector<std::vector<ObsId>> joint_observations(const Environment& env) {
  std::set<std::vector<ObsId>> seen;
  const int n = env.num_agents();
  std::vector<ObsId> key(static_cast<std::size_t>(n));
  for (StateId s = 0; s < env.num_states(); ++s) {
    for (int i = 0; i < n; ++i) key[static_cast<std::size_t>(i)] = env.obs_id(i, s);
    seen.insert(key);
  }
  // Alphabets are sorted, so id order is observation order.
  return {seen.begin(), seen.end()};
}

std::string generate(Template t, const Environment& env) {
  if (t == Template::P1) return "process P = mu X . SAFE . X;\n";
  const auto joints = joint_observations(env);
  std::ostringstream os;
  os << "process P = mu X .\n";
  for (std::size_t j = 0; j < joints.size(); ++j) {
    os << std::string(2 + j, ' ') << "(SAFE . X ||[";
    for (std::size_t i = 0; i < joints[j].size(); ++i) {
      if (i) os << " & ";
      os << "OBS(" << i + 1 << ", \"" << env.alphabet(static_cast<int>(i))[joints[j][i]].to_string(env.radius())
         << "\")";
    }
    os << "]\n";
  }
  os << std::string(2 + joints.size(), ' ') << "fail" << std::string(joints.size(), ')') << ";\n";
  return os.str();
}

Pipeline run_pipeline(const std::string& document, const Environment& env, const SynthesisOptions& synth,
                      const ProjectionOptions& proj) {
  Pipeline p;
  p.spec = parse_spec(document);
  require_wellformed(p.spec);
  p.sets = std::make_shared<BoundSets>(p.spec, env);
  p.automaton = compile_automaton(p.spec, env, *p.sets);
  p.global = synthesize_global(p.automaton, env, synth);
  p.locals = project_all(p.global, env, proj);
  return p;
}

namespace {

bool reachable(const std::vector<bool>& blocked, int width, int height, Cell from, Cell to) {
  std::vector<bool> seen(blocked.size(), false);
  std::deque<Cell> q{from};
  seen[static_cast<std::size_t>(from.row * width + from.col)] = true;
  const int dc[] = {-1, 1, 0, 0};
  const int dr[] = {0, 0, 1, -1};
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop_front();
    if (c == to) return true;
    for (int k = 0; k < 4; ++k) {
      const Cell d{c.col + dc[k], c.row + dr[k]};
      if (d.col < 0 || d.row < 0 || d.col >= width || d.row >= height) continue;
      const auto idx = static_cast<std::size_t>(d.row * width + d.col);
      if (blocked[idx] || seen[idx]) continue;
      seen[idx] = true;
      q.push_back(d);
    }
  }
  return false;
}

}  // namespace

Environment sample_instance(int width, int height, int agents, int obstacles, int radius, std::uint64_t seed,
                            std::uint64_t index) {
  const int cells = width * height;
  if (agents < 1 || obstacles < 0 || cells - obstacles < agents + 1) {
    throw Error(ErrorKind::InvalidConfig, "grid too small for the requested agents and obstacles");
  }
  std::uint64_t key = derive_seed(seed, index);
  for (int v : {width, height, agents, obstacles}) key = derive_seed(key, static_cast<std::uint64_t>(v));
  Rng rng(key);
  std::vector<int> order(static_cast<std::size_t>(cells));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    for (int c = 0; c < cells; ++c) order[static_cast<std::size_t>(c)] = c;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> blocked(static_cast<std::size_t>(cells), false);
    std::vector<Cell> obs;
    for (int k = 0; k < obstacles; ++k) {
      const int c = order[static_cast<std::size_t>(k)];
      blocked[static_cast<std::size_t>(c)] = true;
      obs.push_back({c % width, c / width});
    }
    std::vector<int> free(order.begin() + obstacles, order.end());
    std::vector<int> starts(free.begin(), free.end());
    std::shuffle(starts.begin(), starts.end(), rng);
    std::vector<int> targets(free.begin(), free.end());
    std::shuffle(targets.begin(), targets.end(), rng);
    std::vector<AgentSpec> specs;
    bool ok = true;
    for (int i = 0; i < agents && ok; ++i) {
      const int s = starts[static_cast<std::size_t>(i)];
      const int t = targets[static_cast<std::size_t>(i)];
      const Cell sc{s % width, s / width};
      const Cell tc{t % width, t / width};
      ok = s != t && reachable(blocked, width, height, sc, tc);
      specs.push_back({sc, tc});
    }
    if (!ok) continue;
    std::sort(obs.begin(), obs.end(), [](Cell a, Cell b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    return Environment(width, height, std::move(obs), std::move(specs), radius);
  }
  throw Error(ErrorKind::InvalidConfig, "could not sample a solvable instance");
}

}  // namespace shieldc
