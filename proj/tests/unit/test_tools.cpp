#include <gtest/gtest.h>

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../support/corpus.hpp"
#include "shieldc/bench.hpp"
#include "shieldc/chart.hpp"
#include "shieldc/dump.hpp"

using namespace shieldc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("shieldc_tools_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SHIELDC_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const fs::path kData = fs::path(SHIELDC_SOURCE_DIR) / "data";
const fs::path kGolden = fs::path(SHIELDC_SOURCE_DIR) / "tests" / "golden" / "blind_agents";

}  // namespace

TEST(Gen, P1IsTheSafetyLoop) {
  EXPECT_EQ(generate(Template::P1, corpus::blind_agents()), "process P = mu X . SAFE . X;\n");
}

TEST(Gen, P2PartitionsRealizableStates) {
  const Environment env = sample_instance(3, 3, 2, 2, 1, 4, 0);
  const auto joint = joint_observations(env);
  const ShieldSpec spec = parse_spec(generate(Template::P2, env));
  require_wellformed(spec);
  // count branches: right-nested choices down to fail
  std::size_t branches = 0;
  const Term* t = spec.root->left.get();
  while (t->kind == Term::Kind::Choice) {
    ++branches;
    EXPECT_EQ(t->left->kind, Term::Kind::Prefix);
    t = t->right.get();
  }
  EXPECT_EQ(t->kind, Term::Kind::Fail);
  EXPECT_EQ(branches, joint.size());
  // every state lies in exactly one joint-observation class
  for (StateId s = 0; s < env.num_states(); ++s) {
    int hits = 0;
    for (const auto& jo : joint) {
      bool in = true;
      for (int i = 0; i < env.num_agents(); ++i) in = in && env.obs_id(i, s) == jo[static_cast<std::size_t>(i)];
      hits += in;
    }
    EXPECT_EQ(hits, 1);
  }
}

TEST(Gen, BlindP2HasFewBranches) {
  const Environment env = corpus::blind_agents();
  EXPECT_LE(joint_observations(env).size(), 16U);
}

TEST(Gen, SampledInstancesAreSolvable) {
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Environment env = sample_instance(4, 4, 3, 9, 1, 99, k);
    EXPECT_EQ(env.obstacles().size(), 9U);
    EXPECT_TRUE(env.is_safe(env.initial_state()));
    const Environment again = sample_instance(4, 4, 3, 9, 2, 99, k);
    EXPECT_EQ(env.obstacles(), again.obstacles());  // radius does not change the layout
  }
  EXPECT_THROW(sample_instance(2, 2, 3, 2, 0, 1, 0), Error);
}

TEST(Dump, BlindAgentsGoldenFiles) {
  const Environment env = corpus::blind_agents();
  const Pipeline p = run_pipeline(slurp(kData / "blind_agents.shield"), env);
  const BoundSets* sets = p.sets.get();
  EXPECT_EQ(automaton_dot(p.automaton, sets), slurp(kGolden / "automaton.dot"));
  EXPECT_EQ(automaton_json(p.automaton), slurp(kGolden / "automaton.json"));
  EXPECT_EQ(global_dot(p.global, p.automaton, sets), slurp(kGolden / "global.dot"));
  EXPECT_EQ(global_json(p.global, p.automaton, sets), slurp(kGolden / "global.json"));
  for (int i = 0; i < 2; ++i) {
    const std::string n = std::to_string(i + 1);
    EXPECT_EQ(local_dot(p.locals[static_cast<std::size_t>(i)], p.global, p.automaton, env, sets),
              slurp(kGolden / ("local_" + n + ".dot")));
    EXPECT_EQ(local_json(p.locals[static_cast<std::size_t>(i)], p.global, p.automaton, env, sets),
              slurp(kGolden / ("local_" + n + ".json")));
  }
}

TEST(Chart, ParsesAndRendersDeterministically) {
  const std::string csv = "checkpoint,collision_rate,shield_failure_rate,reached_rate\n0,0.5,0,0.1\n100,0.25,0,0.4\n";
  const auto rows = parse_curve_csv(csv);
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_DOUBLE_EQ(rows[1].reached, 0.4);
  const std::string svg = render_chart({{"Q-reach", rows}}, "curves");
  EXPECT_EQ(svg, render_chart({{"Q-reach", rows}}, "curves"));
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_EQ(svg.find("shield_failure"), std::string::npos);  // identically zero, omitted
  EXPECT_NE(svg.find("collision"), std::string::npos);
  EXPECT_NE(svg.find("reached"), std::string::npos);
}

TEST(Chart, SingleRow) {
  const auto rows = parse_curve_csv("checkpoint,collision_rate,shield_failure_rate,reached_rate\n0,0.1,0.2,0.3\n");
  const std::string svg = render_chart({{"only", rows}}, "one");
  EXPECT_NE(svg.find("shield_failure"), std::string::npos);
}

TEST(Chart, SchemaMismatch) {
  auto kind = [](const std::string& text) {
    try {
      parse_curve_csv(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(kind("checkpoint,collision_rate,shield_failure_rate,reached_rate\n"), ErrorKind::SchemaMismatch);
  EXPECT_EQ(kind("a,b,c\n1,2,3\n"), ErrorKind::SchemaMismatch);
  EXPECT_EQ(kind("checkpoint,collision_rate,shield_failure_rate,reached_rate\n0,x,0,0\n"), ErrorKind::SchemaMismatch);
  EXPECT_EQ(kind("checkpoint,collision_rate,shield_failure_rate,reached_rate\n0,1.5,0,0\n"), ErrorKind::SchemaMismatch);
}

TEST(Bench, ConfigValidation) {
  EXPECT_THROW(parse_bench_config(R"({"episodes": 0, "cells": [{"grid": [3,3], "agents": 2, "obstacles": 3}]})"), Error);
  EXPECT_THROW(parse_bench_config(R"({"cells": []})"), Error);
  EXPECT_THROW(parse_bench_config(R"({"cells": [{"grid": [3,3], "agents": 2, "obstacles": 3, "shield": "p9"}]})"), Error);
  const BenchConfig cfg = parse_bench_config(slurp(kData / "bench_matrix.json"));
  EXPECT_EQ(cfg.cells.size(), 15U);
  EXPECT_EQ(cfg.episodes, 10000U);
}

TEST(Bench, SmallRunShape) {
  BenchConfig cfg = parse_bench_config(
      R"({"seed": 3, "episodes": 200, "instances": 2, "cells": [
          {"grid": [3,3], "agents": 2, "obstacles": 3, "shield": "none"},
          {"grid": [3,3], "agents": 2, "radius": 1, "obstacles": 3, "shield": "p2"},
          {"grid": [2,2], "agents": 3, "radius": 1, "obstacles": 3, "shield": "p1"}]})");
  const auto rows = run_bench(cfg);
  ASSERT_EQ(rows.size(), 3U);
  EXPECT_TRUE(rows[0].error.empty());
  EXPECT_EQ(rows[0].per_instance.size(), 2U);
  EXPECT_EQ(rows[1].mean.collision_rate, 0.0);
  EXPECT_FALSE(rows[2].error.empty());  // impossible cell is recorded, the run continues
  const std::string csv = bench_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "grid,n,R,obstacles,shield,collision,shield_failure,reached,instances,episodes,error");
  EXPECT_EQ(csv, bench_csv(run_bench(cfg)));
}

TEST(Cli, PipelineWritesGoldenDumps) {
  const fs::path out = scratch("pipeline");
  const std::string env = (kData / "blind_agents.json").string();
  const std::string shield = (kData / "blind_agents.shield").string();
  ASSERT_EQ(run_cli("--out " + out.string() + " project --env " + env + " --shield " + shield, out / "log"), 0);
  for (const char* f : {"automaton.dot", "global.json", "local_1.dot", "local_2.json"}) {
    EXPECT_EQ(slurp(out / f), slurp(kGolden / f)) << f;
  }
  EXPECT_NE(slurp(out / "log").find("local 2: 6 states"), std::string::npos);
}

TEST(Cli, IdleOnlySpec) {
  const fs::path out = scratch("idle");
  std::ofstream(out / "idle.shield") << "process P = idle;\n";
  ASSERT_EQ(run_cli("--out " + out.string() + " project --env " + (kData / "blind_agents.json").string() +
                        " --shield " + (out / "idle.shield").string(),
                    out / "log"),
            0);
  EXPECT_NE(slurp(out / "log").find("automaton: 3 states"), std::string::npos);
}

TEST(Cli, ExportPrismPrintsBounds) {
  const fs::path out = scratch("prism");
  ASSERT_EQ(run_cli("--out " + out.string() + " export-prism --env " + (kData / "blind_agents.json").string() +
                        " --shield " + (kData / "blind_agents.shield").string(),
                    out / "log"),
            0);
  EXPECT_NE(slurp(out / "log").find("internal 0.000000 0.000000 0.000000 0.000000"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "model.nm"));
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("codes");
  std::ofstream(out / "bad.shield") << "process P = mu X . (X ||[ALL] fail);\n";
  std::ofstream(out / "syntax.shield") << "process P = ;\n";
  const std::string env = (kData / "blind_agents.json").string();
  EXPECT_EQ(run_cli("check --shield " + (out / "bad.shield").string(), out / "log1"), 2);
  EXPECT_NE(slurp(out / "log1").find("unguarded recursion"), std::string::npos);
  EXPECT_EQ(run_cli("--out " + out.string() + " compile --env " + env + " --shield " + (out / "syntax.shield").string(),
                    out / "log2"),
            2);
  EXPECT_NE(slurp(out / "log2").find("1:13"), std::string::npos);
  EXPECT_EQ(run_cli("--out " + out.string() + " export-prism --env " + env + " --shield " +
                        (kData / "blind_agents.shield").string() + " --prism /nonexistent/prism",
                    out / "log3"),
            4);
  EXPECT_EQ(run_cli("--out " + out.string() + " export-prism --env " + env + " --shield " +
                        (kData / "blind_agents.shield").string() + " --cap 3",
                    out / "log4"),
            3);
}

TEST(Cli, SimulateIsDeterministic) {
  const fs::path a = scratch("sim_a"), b = scratch("sim_b");
  const std::string args = " --seed 5 simulate --env " + (kData / "blind_agents.json").string() + " --shield " +
                           (kData / "blind_agents.shield").string() + " --episodes 20 --trace";
  ASSERT_EQ(run_cli("--out " + a.string() + args, a / "log"), 0);
  ASSERT_EQ(run_cli("--out " + b.string() + args, b / "log"), 0);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "trace.jsonl"), slurp(b / "trace.jsonl"));
  EXPECT_FALSE(slurp(a / "trace.jsonl").empty());
}
