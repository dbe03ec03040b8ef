#include <gtest/gtest.h>

#include "../support/corpus.hpp"
#include "shieldc/dump.hpp"
#include "shieldc/local_shield.hpp"

using namespace shieldc;

namespace {

struct Blind {
  Environment env = corpus::blind_agents();
  Pipeline p = run_pipeline(corpus::blind_agents_shield(), env);
};

/// Runs the figure's action sequence and returns each agent's outputs.
std::vector<std::vector<LocalOutput>> figure_run(const Blind& b, std::vector<std::vector<std::string>>* beliefs) {
  const std::vector<std::vector<Action>> plan = {
      {Action::Down, Action::Stay}, {Action::Down, Action::Right}, {Action::Stay, Action::Right}, {Action::Stay, Action::Stay}};
  const DumpNames names(b.p.automaton, &b.p.global, b.p.sets.get());
  std::vector<std::vector<LocalOutput>> outs(2);
  if (beliefs) beliefs->assign(2, {});
  std::vector<int> q(2, 0);
  StateId s = b.env.initial_state();
  for (const auto& acts : plan) {
    for (int i = 0; i < 2; ++i) {
      const auto& tr = b.p.locals[static_cast<std::size_t>(i)].step(q[static_cast<std::size_t>(i)], b.env.obs_id(i, s));
      outs[static_cast<std::size_t>(i)].push_back(tr.output);
      q[static_cast<std::size_t>(i)] = tr.target;
      if (beliefs) (*beliefs)[static_cast<std::size_t>(i)].push_back(names.belief(b.p.locals[static_cast<std::size_t>(i)].belief(tr.target)));
    }
    s = b.env.apply_joint(s, b.env.encode_action(acts));
  }
  return outs;
}

ActionSet bump_class(const Environment& env, StateId s, int agent, Action a) {
  ActionSet out;
  const int cell = env.agent_cell(s, agent);
  for (int k = 0; k < kNumActions; ++k) {
    if (env.move(cell, static_cast<Action>(k)) == env.move(cell, a)) out.insert(static_cast<Action>(k));
  }
  return out;
}

}  // namespace

TEST(LocalStep, BlindAgentsFirstStep) {
  const Blind b;
  const ObservationIndex idx(b.p.global, b.env, 0, {});
  const auto r = local_step(b.p.global, idx, {GlobalMealy::kInitial}, b.env.obs_id(0, b.env.initial_state()));
  ASSERT_FALSE(r.output.bot);
  EXPECT_EQ(r.output.actions, ActionSet::of(Action::Down));
  const DumpNames names(b.p.automaton, &b.p.global, b.p.sets.get());
  EXPECT_EQ(names.belief(r.belief), "{(sh1,sh1.sh2.sh3.idle), fail}");
}

TEST(LocalStep, FailBeliefStaysFailed) {
  const Blind b;
  const ObservationIndex idx(b.p.global, b.env, 1, {});
  for (ObsId o = 0; o < b.env.alphabet(1).size(); ++o) {
    const auto r = local_step(b.p.global, idx, {GlobalMealy::kFail}, o);
    EXPECT_TRUE(r.output.bot);
    EXPECT_EQ(r.belief, Belief{GlobalMealy::kFail});
  }
}

TEST(Projection, BlindAgentsMatchesFigure) {
  const Blind b;
  std::vector<std::vector<std::string>> beliefs;
  const auto outs = figure_run(b, &beliefs);

  // Figure: A1 {↓},{↓},{·},{·}; A2 {·},{→},{→},{·}, each up to bump classes.
  const std::vector<std::vector<Action>> figure = {{Action::Down, Action::Down, Action::Stay, Action::Stay},
                                                   {Action::Stay, Action::Right, Action::Right, Action::Stay}};
  const std::vector<std::vector<Action>> plan = {
      {Action::Down, Action::Stay}, {Action::Down, Action::Right}, {Action::Stay, Action::Right}, {Action::Stay, Action::Stay}};
  StateId s = b.env.initial_state();
  for (std::size_t t = 0; t < plan.size(); ++t) {
    for (int i = 0; i < 2; ++i) {
      const auto& out = outs[static_cast<std::size_t>(i)][t];
      ASSERT_FALSE(out.bot);
      EXPECT_EQ(out.actions, bump_class(b.env, s, i, figure[static_cast<std::size_t>(i)][t])) << "agent " << i + 1 << " step " << t;
    }
    s = b.env.apply_joint(s, b.env.encode_action(plan[t]));
  }
  const std::vector<std::string> chain = {"{(sh1,sh1.sh2.sh3.idle), fail}", "{(sh2,sh2.sh3.idle), fail}",
                                          "{(sh3,sh3.idle), fail}", "{fail, idle}"};
  EXPECT_EQ(beliefs[0], chain);
  EXPECT_EQ(beliefs[1], chain);
  for (const auto& l : b.p.locals) {
    EXPECT_EQ(l.num_states(), 6U);
    EXPECT_EQ(l.belief(0), Belief{GlobalMealy::kInitial});
    EXPECT_GE(l.fail_state(), 0);
  }
}

TEST(Projection, IdleOnlyMachineLoopsWithEverything) {
  const Environment env = corpus::blind_agents();
  const Pipeline p = run_pipeline("process P = idle;", env);
  for (const auto& l : p.locals) {
    // initial belief plus the idle loop state
    ASSERT_EQ(l.num_states(), 2U);
    for (ObsId o = 0; o < l.alphabet_size(); ++o) {
      const auto& tr = l.step(1, o);
      EXPECT_EQ(tr.target, 1);
      EXPECT_EQ(tr.output, (LocalOutput{false, ActionSet::all()}));
    }
  }
}

TEST(Projection, DirectionSignalRefinesP2) {
  const Environment env(3, 1, {}, {{{0, 0}, {2, 0}}, {{2, 0}, {0, 0}}}, 1);
  const Pipeline p1 = run_pipeline(generate(Template::P1, env), env);
  const Pipeline p2 = run_pipeline(generate(Template::P2, env), env);
  for (int i = 0; i < 2; ++i) {
    const auto& l2 = p2.locals[static_cast<std::size_t>(i)];
    EXPECT_GE(l2.num_states(), 3U);  // initial, fail and at least two live beliefs
  }
  // Co-simulate both projections while the agents wait and compare the
  // output sets step by step.
  std::size_t sum1 = 0, sum2 = 0;
  std::vector<int> q1(2, 0), q2(2, 0);
  const StateId s = env.initial_state();
  for (int t = 0; t < 4; ++t) {
    for (int i = 0; i < 2; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const ObsId o = env.obs_id(i, s);
      const auto& t1 = p1.locals[k].step(q1[k], o);
      const auto& t2 = p2.locals[k].step(q2[k], o);
      ASSERT_FALSE(t1.output.bot);
      ASSERT_FALSE(t2.output.bot);
      EXPECT_EQ(t1.output.actions & t2.output.actions, t1.output.actions);
      sum1 += static_cast<std::size_t>(t1.output.actions.size());
      sum2 += static_cast<std::size_t>(t2.output.actions.size());
      q1[k] = t1.target;
      q2[k] = t2.target;
    }
  }
  EXPECT_GT(sum2, sum1);
}

TEST(Projection, ReachableDomainDropsFailFromBeliefs) {
  const Environment env = corpus::blind_agents();
  ProjectionOptions opts;
  opts.domain = BeliefDomain::Reachable;
  const Pipeline p = run_pipeline(corpus::blind_agents_shield(), env, {}, opts);
  const auto& l = p.locals[0];
  const auto& tr = l.step(0, env.obs_id(0, env.initial_state()));
  EXPECT_EQ(l.belief(tr.target).size(), 1U);
  EXPECT_EQ(tr.output.actions, ActionSet::of(Action::Down));
}

TEST(Projection, DeterministicTables) {
  for (const auto& [name, env] : corpus::small_envs()) {
    const Pipeline p = run_pipeline(generate(Template::P2, env), env);
    for (const auto& l : p.locals) {
      ASSERT_EQ(l.alphabet_size(), env.alphabet(l.agent()).size()) << name;
      for (std::size_t q = 0; q < l.num_states(); ++q) {
        EXPECT_FALSE(l.belief(static_cast<int>(q)).empty()) << name;
        for (ObsId o = 0; o < l.alphabet_size(); ++o) {
          const auto& tr = l.step(static_cast<int>(q), o);
          EXPECT_GE(tr.target, 0);
          EXPECT_LT(tr.target, static_cast<int>(l.num_states()));
          if (!tr.output.bot) EXPECT_FALSE(tr.output.actions.empty());
        }
      }
    }
  }
}
