#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shieldc/gen.hpp"
#include "shieldc/sim.hpp"

namespace shieldc {

enum class ShieldKind { None, P1, P2 };

struct BenchCell {
  int width = 4;
  int height = 4;
  int agents = 2;
  int obstacles = 9;
  int radius = 0;  // ignored when unshielded
  ShieldKind shield = ShieldKind::None;
};

struct BenchConfig {
  std::uint64_t seed = 1;
  std::size_t episodes = 10000;
  int horizon = kDefaultHorizon;
  std::size_t instances = 5;
  SynthesisOptions synthesis;
  std::vector<BenchCell> cells;

  /// Throws Error(InvalidConfig).
  void validate() const;
};

/// Reads `{"seed","episodes","horizon","instances","cells":[{"grid":[w,h],
/// "agents","obstacles","radius","shield":"none|p1|p2"}]}`.
BenchConfig parse_bench_config(const std::string& json_text);

struct BenchRow {
  BenchCell cell;
  Metrics mean;  // averaged over instances
  std::vector<Metrics> per_instance;
  std::string error;
};

/// Instance k of every cell with the same grid, agent count and obstacle
/// count is the same layout, whatever the radius or shield.
BenchRow run_cell(const BenchCell& cell, const BenchConfig& config);
/// Failed cells are recorded in BenchRow::error; the run continues.
std::vector<BenchRow> run_bench(const BenchConfig& config);

std::string bench_csv(const std::vector<BenchRow>& rows);

const char* to_string(ShieldKind k);

}  // namespace shieldc
