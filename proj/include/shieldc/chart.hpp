#pragma once

#include <string>
#include <vector>

namespace shieldc {

struct CurveRow {
  double checkpoint = 0;
  double collision = 0;
  double shield_failure = 0;
  double reached = 0;
};

struct CurveSeries {
  std::string name;
  std::vector<CurveRow> rows;
};

/// Parses `checkpoint,collision_rate,shield_failure_rate,reached_rate`.
/// Throws Error(SchemaMismatch) on a wrong header, an empty body or a bad row.
std::vector<CurveRow> parse_curve_csv(const std::string& text);

/// Line chart with one polyline per metric per series; shield_failure is
/// left out for a series where it is zero throughout. Byte-identical output
/// for identical input.
std::string render_chart(const std::vector<CurveSeries>& series, const std::string& title);

}  // namespace shieldc
