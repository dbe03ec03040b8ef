// Command-line front end: pipeline stages, template generation, simulation,
// training, benchmarking, PRISM export and charts.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "shieldc/bench.hpp"
#include "shieldc/chart.hpp"
#include "shieldc/dump.hpp"
#include "shieldc/error.hpp"
#include "shieldc/gen.hpp"
#include "shieldc/prism.hpp"
#include "shieldc/sim.hpp"

namespace fs = std::filesystem;
using namespace shieldc;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string idle_policy = "hold";
  bool no_refine = false;
  std::string dec = "exhaustive";
  std::string belief_domain = "observation";
};

// Error bookkeeping for exit codes and stage-tagged messages.
struct StageError {
  std::string stage;
  Error error;
  std::string raw;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::BinaryNotFound:
    case ErrorKind::Timeout:
    case ErrorKind::ParseFailure:
      return 4;
    case ErrorKind::NonTermination:
    case ErrorKind::MismatchedShield:
    case ErrorKind::StateSpaceTooLarge:
      return 3;
    default:
      return 2;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  f << text;
}

SynthesisOptions synthesis_options(const Globals& g) {
  SynthesisOptions o;
  o.idle_policy = g.idle_policy == "all" ? IdlePolicy::All : IdlePolicy::Hold;
  o.refine_belief = !g.no_refine;
  o.dec = g.dec == "greedy" ? DecMode::Greedy : DecMode::Exhaustive;
  return o;
}

ProjectionOptions projection_options(const Globals& g) {
  ProjectionOptions o;
  o.domain = g.belief_domain == "reachable" ? BeliefDomain::Reachable : BeliefDomain::Observation;
  return o;
}

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ExternalToolError& e) {
    throw StageError{name, e, e.raw_output()};
  } catch (const Error& e) {
    throw StageError{name, e, {}};
  }
}

Environment load_env(const std::string& path) {
  return stage("environment", [&] { return Environment::from_file(path); });
}

// Runs the stages up to and including `last` (0 compile, 1 synth, 2 project)
// and writes their dumps.
int cmd_pipeline(int last, const Globals& g, const std::string& env_path, const std::string& shield_path) {
  const Environment env = load_env(env_path);
  const std::string doc = stage("parse", [&] { return read_file(shield_path); });
  const ShieldSpec spec = stage("parse", [&] { return parse_spec(doc); });
  stage("check", [&] { require_wellformed(spec); });
  const BoundSets sets = stage("sets", [&] { return BoundSets(spec, env); });
  const ProcessAutomaton pa = stage("compile", [&] { return compile_automaton(spec, env, sets); });
  const fs::path out(g.out);
  write_file(out / "automaton.dot", automaton_dot(pa, &sets));
  write_file(out / "automaton.json", automaton_json(pa));
  std::cout << "automaton: " << pa.num_states() << " states, " << pa.num_edges() << " edges\n";
  if (last < 1) return 0;
  const GlobalMealy gm = stage("synth", [&] { return synthesize_global(pa, env, synthesis_options(g)); });
  write_file(out / "global.dot", global_dot(gm, pa, &sets));
  write_file(out / "global.json", global_json(gm, pa, &sets));
  std::cout << "global: " << gm.num_states() << " states, " << gm.num_edges() << " edges\n";
  if (last < 2) return 0;
  const auto locals = stage("project", [&] { return project_all(gm, env, projection_options(g)); });
  for (const auto& lm : locals) {
    const std::string base = "local_" + std::to_string(lm.agent() + 1);
    write_file(out / (base + ".dot"), local_dot(lm, gm, pa, env, &sets));
    write_file(out / (base + ".json"), local_json(lm, gm, pa, env, &sets));
    std::cout << "local " << lm.agent() + 1 << ": " << lm.num_states() << " states\n";
  }
  return 0;
}

std::optional<Pipeline> maybe_pipeline(const Globals& g, const Environment& env, const std::string& shield_path) {
  if (shield_path.empty()) return std::nullopt;
  const std::string doc = stage("parse", [&] { return read_file(shield_path); });
  return stage("pipeline", [&] { return run_pipeline(doc, env, synthesis_options(g), projection_options(g)); });
}

std::string qtable_json(const Environment& env, const QTablePolicy& p) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (int i = 0; i < env.num_agents(); ++i) {
    nlohmann::ordered_json agent = nlohmann::ordered_json::object();
    for (ObsId o = 0; o < env.alphabet(i).size(); ++o) {
      agent[env.alphabet(i)[o].to_string(env.radius())] = p.q[static_cast<std::size_t>(i)][o];
    }
    j.push_back(std::move(agent));
  }
  return j.dump(2) + "\n";
}

QTablePolicy load_qtable(const Environment& env, const std::string& path) {
  QTablePolicy p = QTablePolicy::zeros(env, 0.0);
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    if (!j.is_array() || static_cast<int>(j.size()) != env.num_agents()) {
      throw Error(ErrorKind::SchemaMismatch, "Q-table must list one object per agent");
    }
    for (int i = 0; i < env.num_agents(); ++i) {
      for (const auto& [key, values] : j[static_cast<std::size_t>(i)].items()) {
        const auto obs = Observation::parse(key, env.radius());
        const auto id = obs ? env.find_obs(i, *obs) : std::nullopt;
        if (!id) throw Error(ErrorKind::UnknownObservationLiteral, "Q-table observation '" + key + "'");
        p.q[static_cast<std::size_t>(i)][*id] = values.get<std::array<double, kNumActions>>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("Q-table: ") + e.what());
  }
  return p;
}

void print_metrics(const std::string& label, const Metrics& m) {
  std::printf("%s episodes=%zu collision=%.3f shield_failure=%.3f reached=%.3f\n", label.c_str(), m.episodes,
              m.collision_rate, m.shield_failure_rate, m.reached_rate);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shieldc: compile shield processes into decentralised Mealy shields"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Base random seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--idle-policy", g.idle_policy, "Behaviour after idle")->check(CLI::IsMember({"hold", "all"}));
  app.add_flag("--no-refine", g.no_refine, "Store raw shield sets as global beliefs");
  app.add_option("--dec", g.dec, "Joint-action decomposition")->check(CLI::IsMember({"exhaustive", "greedy"}));
  app.add_option("--belief-domain", g.belief_domain, "States matched against observations during projection")
      ->check(CLI::IsMember({"observation", "reachable"}));

  std::string env_path, shield_path;
  auto add_env = [&](CLI::App* c, bool required) {
    auto* o = c->add_option("--env", env_path, "Environment JSON")->check(CLI::ExistingFile);
    if (required) o->required();
  };
  auto add_shield = [&](CLI::App* c, bool required) {
    auto* o = c->add_option("--shield", shield_path, "Shield document")->check(CLI::ExistingFile);
    if (required) o->required();
  };

  auto* compile = app.add_subcommand("compile", "Build the process automaton");
  auto* synth = app.add_subcommand("synth", "Build the global shield");
  auto* project = app.add_subcommand("project", "Build the local shields");
  for (auto* c : {compile, synth, project}) {
    add_env(c, true);
    add_shield(c, true);
  }

  auto* gen = app.add_subcommand("gen", "Emit a shield template");
  std::string template_name = "p1", gen_output;
  gen->add_option("--template", template_name, "p1 or p2")->check(CLI::IsMember({"p1", "p2"}));
  gen->add_option("-o,--output", gen_output, "Write to a file instead of stdout");
  add_env(gen, true);

  auto* simulate = app.add_subcommand("simulate", "Run episodes and report metrics");
  std::size_t episodes = 1000;
  int horizon = kDefaultHorizon;
  std::string qtable_path;
  bool trace = false;
  add_env(simulate, true);
  add_shield(simulate, false);
  simulate->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
  simulate->add_option("--horizon", horizon)->check(CLI::NonNegativeNumber);
  simulate->add_option("--qtable", qtable_path, "Greedy policy from a trained Q-table")->check(CLI::ExistingFile);
  simulate->add_flag("--trace", trace, "Write the first episode as JSON lines");

  auto* train = app.add_subcommand("train", "Tabular Q-learning with optional shield masking");
  QLearningParams qp;
  std::string reward = "reach";
  add_env(train, true);
  add_shield(train, false);
  train->add_option("--episodes", qp.episodes)->check(CLI::PositiveNumber);
  train->add_option("--horizon", qp.horizon)->check(CLI::NonNegativeNumber);
  train->add_option("--eval-every", qp.eval_every)->check(CLI::PositiveNumber);
  train->add_option("--eval-episodes", qp.eval_episodes)->check(CLI::PositiveNumber);
  train->add_option("--alpha", qp.alpha);
  train->add_option("--gamma", qp.gamma);
  train->add_option("--eps-start", qp.epsilon_start);
  train->add_option("--eps-end", qp.epsilon_end);
  train->add_option("--reward", reward)->check(CLI::IsMember({"reach", "safe"}));

  auto* bench = app.add_subcommand("bench", "Run a benchmark matrix");
  std::string bench_path;
  bench->add_option("--config", bench_path, "Matrix JSON")->required()->check(CLI::ExistingFile);

  auto* prism = app.add_subcommand("export-prism", "Export the product MDP and compute bounds");
  std::string shield_mode = "local", prism_bin;
  std::size_t cap = kDefaultPrismStateCap;
  int timeout_ms = 60000;
  add_env(prism, true);
  add_shield(prism, false);
  prism->add_option("--shield-mode", shield_mode)->check(CLI::IsMember({"local", "global", "none"}));
  prism->add_option("--prism", prism_bin, "Also run this PRISM binary");
  prism->add_option("--timeout", timeout_ms, "External checker timeout in ms")->check(CLI::PositiveNumber);
  prism->add_option("--cap", cap, "Maximum product states")->check(CLI::PositiveNumber);

  auto* check = app.add_subcommand("check", "Validate a shield document");
  add_shield(check, true);
  add_env(check, false);

  auto* chart = app.add_subcommand("chart", "Render curve CSVs as an SVG line chart");
  std::vector<std::string> curves;
  std::string chart_output = "chart.svg", title = "Evaluation curves";
  chart->add_option("curves", curves, "Curve CSVs, optionally as name=path")->required();
  chart->add_option("-o,--output", chart_output);
  chart->add_option("--title", title);

  CLI11_PARSE(app, argc, argv);

  try {
    if (compile->parsed()) return cmd_pipeline(0, g, env_path, shield_path);
    if (synth->parsed()) return cmd_pipeline(1, g, env_path, shield_path);
    if (project->parsed()) return cmd_pipeline(2, g, env_path, shield_path);

    if (gen->parsed()) {
      const Environment env = load_env(env_path);
      const std::string doc = generate(template_name == "p2" ? Template::P2 : Template::P1, env);
      if (gen_output.empty()) {
        std::cout << doc;
      } else {
        write_file(gen_output, doc);
      }
      return 0;
    }

    if (simulate->parsed()) {
      const Environment env = load_env(env_path);
      const auto p = maybe_pipeline(g, env, shield_path);
      const std::vector<LocalMealy>* shields = p ? &p->locals : nullptr;
      Policy policy = UniformRandom{};
      if (!qtable_path.empty()) policy = load_qtable(env, qtable_path);
      const auto results = stage("simulate", [&] { return run_episodes(env, shields, policy, episodes, horizon, g.seed); });
      const fs::path out(g.out);
      write_file(out / "metrics.csv", metrics_csv(results));
      if (trace) {
        const auto first = run_episode(env, shields, policy, horizon, derive_seed(g.seed, 0), true);
        write_file(out / "trace.jsonl", trace_jsonl(env, first));
      }
      print_metrics(shields ? "shielded" : "unshielded", summarize(results, g.seed));
      return 0;
    }

    if (train->parsed()) {
      const Environment env = load_env(env_path);
      const auto p = maybe_pipeline(g, env, shield_path);
      qp.reward = reward == "safe" ? RewardMode::Safe : RewardMode::Reach;
      const auto result = stage("train", [&] { return train_q(env, p ? &p->locals : nullptr, qp, g.seed); });
      const fs::path out(g.out);
      write_file(out / "curve.csv", curve_csv(result.curve));
      write_file(out / "qtable.json", qtable_json(env, result.policy));
      print_metrics("final", result.curve.back().metrics);
      return 0;
    }

    if (bench->parsed()) {
      BenchConfig cfg = stage("config", [&] { return parse_bench_config(read_file(bench_path)); });
      cfg.synthesis = synthesis_options(g);
      const auto rows = run_bench(cfg);
      const std::string csv = bench_csv(rows);
      write_file(fs::path(g.out) / "bench.csv", csv);
      std::cout << csv;
      return 0;
    }

    if (prism->parsed()) {
      const Environment env = load_env(env_path);
      std::optional<Pipeline> p;
      if (shield_mode != "none") {
        if (shield_path.empty()) throw Error(ErrorKind::InvalidConfig, "--shield is required unless --shield-mode none");
        p = maybe_pipeline(g, env, shield_path);
      }
      const PrismModel model = stage("export", [&] {
        if (shield_mode == "local") return export_model(env, p->locals, cap);
        if (shield_mode == "global") return export_model(env, p->global, cap);
        return export_model(env, cap);
      });
      write_files(model, g.out);
      std::cout << "states=" << model.mdp.num_states() << " transitions=" << model.mdp.num_transitions() << "\n";
      std::cout << "internal " << format_bounds(solve_internal(model.mdp)) << "\n";
      if (!prism_bin.empty()) {
        const auto b = stage("prism", [&] {
          return run_external(model, prism_bin, g.out, std::chrono::milliseconds(timeout_ms));
        });
        std::cout << "prism " << format_bounds(b) << "\n";
      }
      return 0;
    }

    if (check->parsed()) {
      const std::string doc = stage("parse", [&] { return read_file(shield_path); });
      const ShieldSpec spec = stage("parse", [&] { return parse_spec(doc); });
      const ValidationReport report = check_wellformed(spec);
      for (const auto& v : report.violations) std::cout << v.message() << "\n";
      if (!report.ok()) return 2;
      if (!env_path.empty()) {
        const Environment env = load_env(env_path);
        const BoundSets sets = stage("sets", [&] { return BoundSets(spec, env); });
        for (const auto& [name, set] : sets.sets()) std::cout << name << ": " << set.count() << " states\n";
      }
      std::cout << "ok\n";
      return 0;
    }

    if (chart->parsed()) {
      std::vector<CurveSeries> series;
      for (const auto& arg : curves) {
        const auto eq = arg.find('=');
        const std::string path = eq == std::string::npos ? arg : arg.substr(eq + 1);
        const std::string name = eq == std::string::npos ? fs::path(path).stem().string() : arg.substr(0, eq);
        series.push_back({name, stage("chart", [&] { return parse_curve_csv(read_file(path)); })});
      }
      write_file(chart_output, render_chart(series, title));
      return 0;
    }
  } catch (const StageError& e) {
    std::cerr << "error [" << e.stage << "] " << to_string(e.error.kind()) << ": " << e.error.what() << "\n";
    if (!e.raw.empty()) std::cerr << e.raw << "\n";
    return exit_code(e.error.kind());
  } catch (const Error& e) {
    std::cerr << "error " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return 0;
}
