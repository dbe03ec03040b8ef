#include "shieldc/local_shield.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace shieldc {

ObservationIndex::ObservationIndex(const GlobalMealy& global, const Environment& env, int agent,
                                   ProjectionOptions options)
    : agent_(agent) {
  const std::size_t k = env.alphabet(agent).size();
  const StateSet all = env.all_states();
  index_.resize(global.num_states());
  std::vector<int> last_seen(k, -1);
  for (std::size_t g = 0; g < global.num_states(); ++g) {
    const GlobalState& st = global.state(static_cast<int>(g));
    StateSet domain = all;
    if (options.domain == BeliefDomain::Reachable && st.kind != GlobalState::Kind::Fail) domain = st.set;
    auto& by_obs = index_[g];
    by_obs.assign(k, {});
    std::fill(last_seen.begin(), last_seen.end(), -1);
    const auto& edges = global.edges(static_cast<int>(g));
    for (std::size_t e = 0; e < edges.size(); ++e) {
      (domain & edges[e].label).for_each([&](std::size_t s) {
        const ObsId o = env.obs_id(agent, static_cast<StateId>(s));
        if (last_seen[o] == static_cast<int>(e)) return;
        last_seen[o] = static_cast<int>(e);
        by_obs[o].push_back(static_cast<int>(e));
      });
    }
  }
}

LocalStepResult local_step(const GlobalMealy& global, const ObservationIndex& index, const Belief& belief, ObsId o) {
  LocalStepResult r;
  ActionSet acc = ActionSet::all();
  bool consistent = false;
  bool contributed = false;
  const auto agent = static_cast<std::size_t>(index.agent());
  for (int g : belief) {
    const auto& edges = global.edges(g);
    for (int e : index.edges(g, o)) {
      consistent = true;
      const GlobalEdge& edge = edges[static_cast<std::size_t>(e)];
      r.belief.push_back(edge.target);
      if (!edge.output.bot) {
        acc = acc & edge.output.sets[agent];
        contributed = true;
      }
    }
  }
  if (!consistent) {
    r.belief = {GlobalMealy::kFail};
    return r;
  }
  std::sort(r.belief.begin(), r.belief.end());
  r.belief.erase(std::unique(r.belief.begin(), r.belief.end()), r.belief.end());
  // Failing branches contribute every action; an empty intersection means
  // no action is safe under all remaining branches.
  if (contributed && !acc.empty()) r.output = {false, acc};
  return r;
}

int LocalMealy::find_belief(const Belief& b) const {
  auto it = std::find(beliefs_.begin(), beliefs_.end(), b);
  return it == beliefs_.end() ? -1 : static_cast<int>(it - beliefs_.begin());
}

LocalMealy project_local(const GlobalMealy& global, const Environment& env, int agent, ProjectionOptions options) {
  ObservationIndex index(global, env, agent, options);
  LocalMealy lm;
  lm.agent_ = agent;
  lm.alphabet_size_ = env.alphabet(agent).size();
  lm.env_fingerprint_ = env.fingerprint();

  std::map<Belief, int> ids;
  std::deque<int> queue;
  auto intern = [&](Belief b) {
    auto [it, inserted] = ids.emplace(b, static_cast<int>(lm.beliefs_.size()));
    if (inserted) {
      if (b == Belief{GlobalMealy::kFail}) lm.fail_state_ = it->second;
      lm.beliefs_.push_back(std::move(b));
      lm.table_.resize(lm.beliefs_.size() * lm.alphabet_size_);
      queue.push_back(it->second);
    }
    return it->second;
  };
  intern({GlobalMealy::kInitial});
  while (!queue.empty()) {
    const int q = queue.front();
    queue.pop_front();
    for (ObsId o = 0; o < lm.alphabet_size_; ++o) {
      LocalStepResult r = local_step(global, index, lm.beliefs_[static_cast<std::size_t>(q)], o);
      const int t = intern(std::move(r.belief));
      lm.table_[static_cast<std::size_t>(q) * lm.alphabet_size_ + o] = {t, r.output};
    }
  }
  return lm;
}

std::vector<LocalMealy> project_all(const GlobalMealy& global, const Environment& env, ProjectionOptions options) {
  std::vector<LocalMealy> out;
  for (int i = 0; i < env.num_agents(); ++i) out.push_back(project_local(global, env, i, options));
  return out;
}

}  // namespace shieldc
