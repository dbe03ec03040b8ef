#include "shieldc/chart.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "shieldc/error.hpp"

namespace shieldc {

namespace {

constexpr const char* kHeader = "checkpoint,collision_rate,shield_failure_rate,reached_rate";

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && s[b] == ' ') ++b;
  return s.substr(b);
}

double number(const std::string& field, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || end != field.c_str() + field.size()) {
    throw Error(ErrorKind::SchemaMismatch, "line " + std::to_string(line) + ": not a number: '" + field + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::vector<CurveRow> parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kHeader) {
    throw Error(ErrorKind::SchemaMismatch, std::string("expected header '") + kHeader + "'");
  }
  std::vector<CurveRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 4) {
      throw Error(ErrorKind::SchemaMismatch, "line " + std::to_string(lineno) + ": expected 4 fields");
    }
    CurveRow r{number(fields[0], lineno), number(fields[1], lineno), number(fields[2], lineno),
               number(fields[3], lineno)};
    for (double rate : {r.collision, r.shield_failure, r.reached}) {
      if (rate < 0.0 || rate > 1.0) {
        throw Error(ErrorKind::SchemaMismatch, "line " + std::to_string(lineno) + ": rate outside [0,1]");
      }
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw Error(ErrorKind::SchemaMismatch, "curve has no rows");
  return rows;
}

std::string render_chart(const std::vector<CurveSeries>& series, const std::string& title) {
  const double width = 760, height = 440;
  const double left = 60, right = 220, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  double xmin = 0, xmax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (const auto& r : s.rows) {
      xmin = first ? r.checkpoint : std::min(xmin, r.checkpoint);
      xmax = first ? r.checkpoint : std::max(xmax, r.checkpoint);
      first = false;
    }
  }
  if (xmax <= xmin) {
    xmin -= 1;
    xmax += 1;
  }
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (1.0 - y) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
     << "</text>\n";
  // axes, ticks and grid
  os << "<g stroke=\"#888\">\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n";
  os << "</g>\n";
  for (int k = 0; k <= 4; ++k) {
    const double y = k / 4.0;
    os << "<line x1=\"" << left << "\" y1=\"" << fmt(py(y)) << "\" x2=\"" << left + pw << "\" y2=\"" << fmt(py(y))
       << "\" stroke=\"#eee\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << fmt(py(y) + 4) << "\" text-anchor=\"end\">" << fmt(y)
       << "</text>\n";
    const double x = xmin + (xmax - xmin) * k / 4.0;
    os << "<text x=\"" << fmt(px(x)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << fmt(x)
       << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">checkpoint</text>\n";
  os << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << top + ph / 2 << ")\">rate</text>\n";

  struct Metric {
    const char* name;
    double CurveRow::*field;
    const char* dash;
  };
  const Metric metrics[] = {{"collision", &CurveRow::collision, "6,4"},
                            {"shield_failure", &CurveRow::shield_failure, "2,3"},
                            {"reached", &CurveRow::reached, ""}};
  double legend_y = top + 6;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
    for (const auto& m : metrics) {
      const bool all_zero =
          std::all_of(s.rows.begin(), s.rows.end(), [&](const CurveRow& r) { return r.*m.field == 0.0; });
      if (m.field == &CurveRow::shield_failure && all_zero) continue;
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"";
      if (*m.dash) os << " stroke-dasharray=\"" << m.dash << "\"";
      os << " points=\"";
      for (std::size_t k = 0; k < s.rows.size(); ++k) {
        os << (k ? " " : "") << fmt(px(s.rows[k].checkpoint)) << "," << fmt(py(s.rows[k].*m.field));
      }
      os << "\"/>\n";
      for (const auto& r : s.rows) {
        os << "<circle cx=\"" << fmt(px(r.checkpoint)) << "\" cy=\"" << fmt(py(r.*m.field)) << "\" r=\"2.5\" fill=\""
           << color << "\"/>\n";
      }
      const double lx = left + pw + 16;
      os << "<line x1=\"" << lx << "\" y1=\"" << fmt(legend_y) << "\" x2=\"" << lx + 24 << "\" y2=\"" << fmt(legend_y)
         << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
      if (*m.dash) os << " stroke-dasharray=\"" << m.dash << "\"";
      os << "/>\n";
      os << "<text x=\"" << lx + 30 << "\" y=\"" << fmt(legend_y + 4) << "\">" << escape(s.name) << ": " << m.name
         << "</text>\n";
      legend_y += 18;
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace shieldc
