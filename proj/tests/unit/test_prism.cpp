#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <regex>

#include "../support/corpus.hpp"
#include "shieldc/prism.hpp"

using namespace shieldc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("shieldc_prism_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// A stand-in checker: a shell script with the given body.
std::string fake_checker(const fs::path& dir, const std::string& body) {
  const fs::path p = dir / "fakeprism";
  std::ofstream(p) << "#!/bin/sh\n" << body << "\n";
  fs::permissions(p, fs::perms::owner_all);
  return p.string();
}

ErrorKind external_error(const PrismModel& m, const std::string& bin, const fs::path& dir, int ms,
                         std::string* raw = nullptr) {
  try {
    run_external(m, bin, dir.string(), std::chrono::milliseconds(ms));
  } catch (const ExternalToolError& e) {
    if (raw) *raw = e.raw_output();
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::Io;
}

}  // namespace

TEST(Export, BlindAgentsBoundsAreZero) {
  const Environment env = corpus::blind_agents();
  const Pipeline p = run_pipeline(corpus::blind_agents_shield(), env);
  for (const PrismModel& m : {export_model(env, p.locals), export_model(env, p.global)}) {
    const ReachBounds b = solve_internal(m.mdp);
    EXPECT_NEAR(b.pmin_fail, 0.0, 1e-9);
    EXPECT_NEAR(b.pmax_fail, 0.0, 1e-9);
    EXPECT_NEAR(b.pmin_unsafe, 0.0, 1e-9);
    EXPECT_NEAR(b.pmax_unsafe, 0.0, 1e-9);
    EXPECT_EQ(format_bounds(b), "0.000000 0.000000 0.000000 0.000000");
  }
}

TEST(Export, ModelTextDeclaresVariablesAndLabels) {
  const Environment env = corpus::blind_agents();
  const Pipeline p = run_pipeline(corpus::blind_agents_shield(), env);
  const PrismModel m = export_model(env, p.locals);
  EXPECT_NE(m.model_text.find("mdp"), std::string::npos);
  EXPECT_NE(m.model_text.find("p1 : [0..4]"), std::string::npos);
  EXPECT_NE(m.model_text.find("p2 : [0..4]"), std::string::npos);
  EXPECT_NE(m.model_text.find("l1 : [0..5]"), std::string::npos);
  EXPECT_NE(m.model_text.find("failed : [0..1]"), std::string::npos);
  EXPECT_NE(m.model_text.find("label \"unsafe\""), std::string::npos);
  EXPECT_NE(m.model_text.find("label \"shield_failure\""), std::string::npos);
  EXPECT_EQ(m.label_map.count("unsafe"), 1U);
  for (const char* q : {"Pmin=? [ F \"shield_failure\" ]", "Pmax=? [ F \"shield_failure\" ]", "Pmin=? [ F \"unsafe\" ]",
                        "Pmax=? [ F \"unsafe\" ]"}) {
    EXPECT_NE(m.property_text.find(q), std::string::npos) << q;
  }
  // every update stays in range
  const std::regex upd(R"(\((p|l)(\d+)'=(\d+)\))");
  for (auto it = std::sregex_iterator(m.model_text.begin(), m.model_text.end(), upd); it != std::sregex_iterator(); ++it) {
    const int v = std::stoi((*it)[3]);
    const int bound = (*it)[1] == "p" ? 4 : 5;
    EXPECT_LE(v, bound);
  }
}

TEST(Export, LoneAgentCannotCollide) {
  const Environment env(2, 1, {}, {{{0, 0}, {0, 0}}}, 0);
  const Pipeline p = run_pipeline("process P = idle;", env);
  const ReachBounds b = solve_internal(export_model(env, p.locals).mdp);
  EXPECT_EQ(b.pmax_unsafe, 0.0);
  EXPECT_EQ(b.pmax_fail, 0.0);
}

TEST(Export, UnshieldedCorridor) {
  const Environment env(3, 1, {}, {{{0, 0}, {2, 0}}, {{2, 0}, {0, 0}}}, 0);
  const PrismModel m = export_model(env);
  EXPECT_LE(m.mdp.num_states(), 9U);
  const ReachBounds b = solve_internal(m.mdp);
  EXPECT_NEAR(b.pmin_unsafe, 0.0, 1e-9);
  EXPECT_NEAR(b.pmax_unsafe, 1.0, 1e-9);
  EXPECT_NEAR(b.pmax_fail, 0.0, 1e-9);
}

TEST(Export, ShieldedSamplesNeverReachUnsafe) {
  for (std::uint64_t k = 0; k < 4; ++k) {
    const Environment env = sample_instance(3, 3, 2, 3, 1, 21, k);
    for (auto t : {Template::P1, Template::P2}) {
      const Pipeline p = run_pipeline(generate(t, env), env);
      EXPECT_NEAR(solve_internal(export_model(env, p.locals).mdp).pmax_unsafe, 0.0, 1e-12);
    }
  }
}

TEST(Export, CapIsEnforced) {
  const Environment env = sample_instance(4, 4, 2, 4, 1, 2, 0);
  try {
    export_model(env, 10);
    FAIL() << "expected StateSpaceTooLarge";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::StateSpaceTooLarge);
  }
}

TEST(Solver, MinAndMaxOnHandBuiltMdp) {
  // 0 -a-> {1: 0.5, 2: 0.5}, 0 -b-> 3; 1, 2, 3 absorbing; target {2}.
  ExplicitMdp mdp;
  mdp.keys.resize(4);
  mdp.choices = {{{{{1, 0.5}, {2, 0.5}}}, {{{3, 1.0}}}}, {{{{1, 1.0}}}}, {{{{2, 1.0}}}}, {{{{3, 1.0}}}}};
  mdp.unsafe.assign(4, false);
  mdp.shield_failure.assign(4, false);
  const std::vector<bool> target = {false, false, true, false};
  EXPECT_NEAR(reach_probability(mdp, target, true)[0], 0.5, 1e-9);
  EXPECT_NEAR(reach_probability(mdp, target, false)[0], 0.0, 1e-9);
}

TEST(External, MissingBinaryStillWritesFiles) {
  const Environment env = corpus::blind_agents();
  const Pipeline p = run_pipeline(corpus::blind_agents_shield(), env);
  const PrismModel m = export_model(env, p.locals);
  const fs::path dir = scratch("missing");
  EXPECT_EQ(external_error(m, "/nonexistent/prism", dir, 1000), ErrorKind::BinaryNotFound);
  EXPECT_TRUE(fs::exists(dir / "model.nm"));
  EXPECT_TRUE(fs::exists(dir / "props.pctl"));
}

TEST(External, ParsesResultLines) {
  const Environment env = corpus::blind_agents();
  const PrismModel m = export_model(env, run_pipeline(corpus::blind_agents_shield(), env).locals);
  const fs::path dir = scratch("ok");
  const std::string bin = fake_checker(dir, "echo \"Model checking: property $4\"\necho \"Result: 0.0 (exact)\"");
  const ReachBounds b = run_external(m, bin, dir.string(), std::chrono::milliseconds(5000));
  EXPECT_EQ(format_bounds(b), "0.000000 0.000000 0.000000 0.000000");
  EXPECT_TRUE(fs::exists(dir / "prism_prop4.log"));
}

TEST(External, ParseFailureKeepsRawOutput) {
  const Environment env = corpus::blind_agents();
  const PrismModel m = export_model(env, run_pipeline(corpus::blind_agents_shield(), env).locals);
  const fs::path dir = scratch("garbled");
  const std::string bin = fake_checker(dir, "echo \"Error: something odd\"");
  std::string raw;
  EXPECT_EQ(external_error(m, bin, dir, 5000, &raw), ErrorKind::ParseFailure);
  EXPECT_NE(raw.find("something odd"), std::string::npos);
}

TEST(External, Timeout) {
  const Environment env = corpus::blind_agents();
  const PrismModel m = export_model(env, run_pipeline(corpus::blind_agents_shield(), env).locals);
  const fs::path dir = scratch("slow");
  const std::string bin = fake_checker(dir, "sleep 5");
  EXPECT_EQ(external_error(m, bin, dir, 200), ErrorKind::Timeout);
}

TEST(External, ResultLineParsing) {
  EXPECT_EQ(parse_result_line("foo\nResult: 0.25 (value in the initial state)\n"), 0.25);
  EXPECT_EQ(parse_result_line("Result: 1.0\nResult: 0.5\n"), 1.0);
  EXPECT_FALSE(parse_result_line("no result here").has_value());
}
