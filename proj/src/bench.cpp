#include "shieldc/bench.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "shieldc/error.hpp"

namespace shieldc {

const char* to_string(ShieldKind k) {
  switch (k) {
    case ShieldKind::None: return "none";
    case ShieldKind::P1: return "P1";
    case ShieldKind::P2: return "P2";
  }
  return "?";
}

void BenchConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (episodes == 0) bad("episodes must be at least 1");
  if (instances == 0) bad("instances must be at least 1");
  if (horizon < 0) bad("horizon must be non-negative");
  if (cells.empty()) bad("the bench matrix has no cells");
  for (const auto& c : cells) {
    if (c.width < 1 || c.height < 1) bad("grid dimensions must be positive");
    if (c.agents < 1) bad("agents must be at least 1");
    if (c.obstacles < 0 || c.obstacles >= c.width * c.height) bad("obstacle count out of range");
    if (c.radius < 0) bad("radius must be non-negative");
  }
}

BenchConfig parse_bench_config(const std::string& json_text) {
  BenchConfig cfg;
  try {
    const auto j = nlohmann::json::parse(json_text);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.episodes = j.value("episodes", cfg.episodes);
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.instances = j.value("instances", cfg.instances);
    for (const auto& c : j.at("cells")) {
      BenchCell cell;
      cell.width = c.at("grid").at(0).get<int>();
      cell.height = c.at("grid").at(1).get<int>();
      cell.agents = c.at("agents").get<int>();
      cell.obstacles = c.at("obstacles").get<int>();
      if (c.contains("radius") && !c["radius"].is_null()) cell.radius = c["radius"].get<int>();
      const std::string s = c.value("shield", std::string("none"));
      if (s == "none") {
        cell.shield = ShieldKind::None;
      } else if (s == "p1" || s == "P1") {
        cell.shield = ShieldKind::P1;
      } else if (s == "p2" || s == "P2") {
        cell.shield = ShieldKind::P2;
      } else {
        throw Error(ErrorKind::InvalidConfig, "unknown shield '" + s + "'");
      }
      cfg.cells.push_back(cell);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("bench config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

BenchRow run_cell(const BenchCell& cell, const BenchConfig& config) {
  BenchRow row;
  row.cell = cell;
  row.mean.seed = config.seed;
  try {
    for (std::size_t k = 0; k < config.instances; ++k) {
      const Environment env =
          sample_instance(cell.width, cell.height, cell.agents, cell.obstacles, cell.radius, config.seed, k);
      const std::uint64_t episode_seed = derive_seed(config.seed, 1000 + k);
      Metrics m;
      if (cell.shield == ShieldKind::None) {
        m = evaluate(env, nullptr, UniformRandom{}, config.episodes, config.horizon, episode_seed);
      } else {
        const Template t = cell.shield == ShieldKind::P1 ? Template::P1 : Template::P2;
        const Pipeline p = run_pipeline(generate(t, env), env, config.synthesis);
        m = evaluate(env, &p.locals, UniformRandom{}, config.episodes, config.horizon, episode_seed);
      }
      row.per_instance.push_back(m);
      row.mean.collision_rate += m.collision_rate;
      row.mean.shield_failure_rate += m.shield_failure_rate;
      row.mean.reached_rate += m.reached_rate;
      row.mean.episodes += m.episodes;
    }
  } catch (const Error& e) {
    row.error = std::string(to_string(e.kind())) + ": " + e.what();
  }
  if (!row.per_instance.empty()) {
    const auto k = static_cast<double>(row.per_instance.size());
    row.mean.collision_rate /= k;
    row.mean.shield_failure_rate /= k;
    row.mean.reached_rate /= k;
  }
  return row;
}

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  config.validate();
  std::vector<BenchRow> rows;
  for (const auto& cell : config.cells) rows.push_back(run_cell(cell, config));
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "grid,n,R,obstacles,shield,collision,shield_failure,reached,instances,episodes,error\n";
  char buf[256];
  for (const auto& r : rows) {
    const auto& c = r.cell;
    const std::string radius = c.shield == ShieldKind::None ? "-" : std::to_string(c.radius);
    std::snprintf(buf, sizeof buf, "%dx%d,%d,%s,%d,%s,%.3f,%.3f,%.3f,%zu,%zu,", c.width, c.height, c.agents,
                  radius.c_str(), c.obstacles, to_string(c.shield), r.mean.collision_rate, r.mean.shield_failure_rate,
                  r.mean.reached_rate, r.per_instance.size(), r.mean.episodes);
    std::string err = r.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    os << buf << err << '\n';
  }
  return os.str();
}

}  // namespace shieldc
