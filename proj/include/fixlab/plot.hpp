#pragma once

// Static SVG rendering of result tables: points with +-2 standard-error bars,
// and the limit prediction (a dense g(delta sqrt N) sqrt(pi/N) curve for the
// fixed-delta figure, dashed g(c) levels otherwise).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fixlab/errors.hpp"
#include "fixlab/experiments.hpp"
#include "fixlab/limit_eval.hpp"

namespace fixlab {

struct ParsedTable {
  PlanKind kind = PlanKind::sweep;
  std::string experiment_id;
  std::vector<std::map<std::string, std::string>> rows;
};

inline ParsedTable parse_table(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ParsedTable t;
  if (!std::getline(in, line) || !line.starts_with("# " + std::string(kTableSchema))) {
    throw SchemaError("missing table preamble '# " + std::string(kTableSchema) + " kind=...'");
  }
  const auto kpos = line.find("kind=");
  if (kpos == std::string::npos) throw SchemaError("table preamble has no kind=");
  const auto kend = line.find(' ', kpos);
  t.kind = parse_plan_kind(line.substr(kpos + 5, kend == std::string::npos ? std::string::npos : kend - kpos - 5));
  if (const auto ipos = line.find("id="); ipos != std::string::npos) t.experiment_id = line.substr(ipos + 3);

  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
      if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    out.push_back(cur);
    return out;
  };

  const auto& expected = table_columns();
  std::string expected_list;
  for (const auto& c : expected) expected_list += (expected_list.empty() ? "" : ",") + c;
  if (!std::getline(in, line)) throw SchemaError("table has no header; expected columns: " + expected_list);
  if (split(line) != expected) {
    throw SchemaError("unexpected columns '" + line + "'; expected columns: " + expected_list);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != expected.size())
      throw SchemaError("row has " + std::to_string(fields.size()) + " fields, expected " +
                        std::to_string(expected.size()));
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < fields.size(); ++i) row[expected[i]] = fields[i];
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline ParsedTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str());
}

struct PlotStyle {
  std::string title;      // empty = derived from the table
  double width = 720;
  double height = 450;
  bool prediction = true;  // draw the limit prediction
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

inline std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

struct PlotPoint {
  double x, y, err;
};

}  // namespace detail

// Renders the table to SVG text. Throws SchemaError on a table without
// successful rows.
inline std::string render_svg(const ParsedTable& table, const PlotStyle& style = {}) {
  using detail::num;
  const bool infty = table.kind == PlanKind::fig_infty;
  const std::string y_col = infty ? "scaled_mean" : "n_mean";
  const std::string e_col = infty ? "scaled_std_error" : "n_std_error";

  std::vector<std::string> order;
  std::map<std::string, std::vector<detail::PlotPoint>> groups;
  std::map<std::string, double> levels;  // series label -> g(c) when constant
  std::map<std::string, bool> level_ok;
  double fixed_delta = -1.0;
  for (const auto& r : table.rows) {
    if (!r.at("error").empty() || r.at("mean").empty()) continue;
    const std::string key = r.at("series") + " (" + r.at("mode") + ")";
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back({std::stod(r.at("n")), std::stod(r.at(y_col)), 2.0 * std::stod(r.at(e_col))});
    const double gl = std::stod(r.at("g_limit"));
    const std::string& s = r.at("series");
    if (!levels.contains(s)) {
      levels[s] = gl;
      level_ok[s] = true;
    } else if (std::abs(levels[s] - gl) > 1e-9 * gl) {
      level_ok[s] = false;
    }
    fixed_delta = std::stod(r.at("delta"));
  }
  if (groups.empty()) throw SchemaError("table has no successful rows to plot");

  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& [k, pts] : groups)
    for (const auto& p : pts) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y - p.err);
      y1 = std::max(y1, p.y + p.err);
    }
  std::vector<std::pair<double, double>> curve;
  if (style.prediction && infty) {
    const int samples = 200;
    for (int i = 0; i <= samples; ++i) {
      const double n = x0 * std::pow(x1 / x0, static_cast<double>(i) / samples);
      const double v = g(fixed_delta * std::sqrt(n)).value * std::sqrt(std::numbers::pi / n);
      curve.emplace_back(n, v);
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  } else if (style.prediction) {
    for (const auto& [s, v] : levels)
      if (level_ok[s]) {
        y0 = std::min(y0, v);
        y1 = std::max(y1, v);
      }
  }
  if (x1 == x0) {
    x0 -= 1;
    x1 += 1;
  }
  if (y1 == y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.06 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const bool log_x = infty && x1 / x0 > 20;

  const double left = 70, right = 170, top = 40, bottom = 55;
  const double pw = style.width - left - right, ph = style.height - top - bottom;
  auto sx = [&](double x) {
    const double t = log_x ? std::log(x / x0) / std::log(x1 / x0) : (x - x0) / (x1 - x0);
    return left + t * pw;
  };
  auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  static const char* palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(style.width) << "\" height=\""
      << num(style.height) << "\" viewBox=\"0 0 " << num(style.width) << ' ' << num(style.height)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::string title = style.title.empty() ? table.experiment_id : style.title;
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << detail::xml_escape(title) << "</text>\n";
  svg << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Ticks.
  const double ystep = detail::nice_step(y1 - y0, 6);
  for (double y = std::ceil(y0 / ystep) * ystep; y <= y1 + 1e-12; y += ystep) {
    svg << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(sy(y)) << "\" x2=\"" << num(left) << "\" y2=\""
        << num(sy(y)) << "\" stroke=\"black\"/><text x=\"" << num(left - 8) << "\" y=\"" << num(sy(y) + 4)
        << "\" text-anchor=\"end\">" << num(std::abs(y) < 1e-12 ? 0.0 : y) << "</text>\n";
  }
  std::vector<double> xticks;
  if (log_x) {
    for (double d = std::pow(10.0, std::floor(std::log10(x0))); d <= x1; d *= 10)
      for (double m : {1.0, 2.0, 5.0})
        if (m * d >= x0 && m * d <= x1) xticks.push_back(m * d);
  } else {
    const double xstep = detail::nice_step(x1 - x0, 8);
    for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + 1e-9; x += xstep) xticks.push_back(x);
  }
  for (double x : xticks) {
    svg << "<line x1=\"" << num(sx(x)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(sx(x)) << "\" y2=\""
        << num(top + ph + 5) << "\" stroke=\"black\"/><text x=\"" << num(sx(x)) << "\" y=\"" << num(top + ph + 18)
        << "\" text-anchor=\"middle\">" << num(x) << "</text>\n";
  }
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(style.height - 15)
      << "\" text-anchor=\"middle\">N</text>\n";
  const std::string ylabel = infty ? "√(πN) ⟨P_N⟩" : "N ⟨P_N⟩";
  svg << "<text x=\"18\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << num(top + ph / 2) << ")\">" << ylabel << "</text>\n";

  double legend_y = top + 10;
  auto legend = [&](const std::string& color, const std::string& label, bool line) {
    if (line) {
      svg << "<line x1=\"" << num(left + pw + 12) << "\" y1=\"" << num(legend_y) << "\" x2=\"" << num(left + pw + 32)
          << "\" y2=\"" << num(legend_y) << "\" stroke=\"" << color << "\" stroke-dasharray=\"5,3\"/>\n";
    } else {
      svg << "<circle cx=\"" << num(left + pw + 22) << "\" cy=\"" << num(legend_y) << "\" r=\"3.5\" fill=\"" << color
          << "\"/>\n";
    }
    svg << "<text x=\"" << num(left + pw + 38) << "\" y=\"" << num(legend_y + 4) << "\">"
        << detail::xml_escape(label) << "</text>\n";
    legend_y += 18;
  };

  if (!curve.empty()) {
    svg << "<polyline class=\"prediction\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : curve) svg << num(sx(x)) << ',' << num(sy(y)) << ' ';
    svg << "\"/>\n";
    legend("#1f77b4", "g(δ√N)√(π/N)", true);
  }

  std::size_t ci = 0;
  std::map<std::string, std::string> series_color;
  for (const auto& key : order) {
    const std::string color = palette[ci++ % std::size(palette)];
    const std::string series = key.substr(0, key.rfind(" ("));
    if (!series_color.contains(series)) series_color[series] = color;
    svg << "<g fill=\"" << color << "\" stroke=\"" << color << "\">\n";
    for (const auto& p : groups[key]) {
      svg << "<line x1=\"" << num(sx(p.x)) << "\" y1=\"" << num(sy(p.y - p.err)) << "\" x2=\"" << num(sx(p.x))
          << "\" y2=\"" << num(sy(p.y + p.err)) << "\"/><circle cx=\"" << num(sx(p.x)) << "\" cy=\"" << num(sy(p.y))
          << "\" r=\"3\"/>\n";
    }
    svg << "</g>\n";
    legend(color, key, false);
  }

  if (style.prediction && !infty) {
    for (const auto& [s, v] : levels) {
      if (!level_ok[s]) continue;
      const std::string color = series_color.contains(s) ? series_color[s] : "black";
      svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(sy(v)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
          << num(sy(v)) << "\" class=\"prediction\" stroke=\"" << color << "\" stroke-dasharray=\"5,3\"/>\n";
      legend(color, "g = " + num(v) + " (" + s + ")", true);
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void emit_plot(const ParsedTable& table, const std::filesystem::path& out, const PlotStyle& style = {}) {
  write_text(out, render_svg(table, style));
}

inline void emit_plot(const std::filesystem::path& csv, const std::filesystem::path& out,
                      const PlotStyle& style = {}) {
  emit_plot(read_table(csv), out, style);
}

}  // namespace fixlab
