#pragma once

// Declarative experiment plans, the runner, and the result-table format.
//
// A plan is a list of series; each series is an N grid, a delta rule and a
// set of estimators. run_plan() executes the grid point by point (each point
// uses the full worker pool), writes one CSV row per (series, N, estimator)
// and a JSON manifest next to the CSV.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fixlab/bd_solver.hpp"
#include "fixlab/errors.hpp"
#include "fixlab/lattice_sim.hpp"
#include "fixlab/limit_eval.hpp"
#include "fixlab/rng.hpp"

namespace fixlab {

inline constexpr std::string_view kVersion = "1.0.0";
inline constexpr std::string_view kTableSchema = "fixlab-table v1";
inline constexpr std::uint64_t kDefaultSeed = 20240601;
inline constexpr std::uint64_t kDefaultReplicates = 100'000;
inline constexpr std::uint64_t kPaperScaleReplicates = 1'000'000;

enum class PlanKind { fig_line, fig_infty, fig_cycle, sweep, single };

inline std::string to_string(PlanKind kind) {
  switch (kind) {
    case PlanKind::fig_line: return "fig-line";
    case PlanKind::fig_infty: return "fig-infty";
    case PlanKind::fig_cycle: return "fig-cycle";
    case PlanKind::sweep: return "sweep";
    case PlanKind::single: return "single";
  }
  return "?";
}

inline PlanKind parse_plan_kind(std::string_view text) {
  for (auto k : {PlanKind::fig_line, PlanKind::fig_infty, PlanKind::fig_cycle, PlanKind::sweep,
                 PlanKind::single}) {
    if (text == to_string(k)) return k;
  }
  throw DomainError("unknown plan kind '" + std::string(text) +
                    "' (expected fig-line, fig-infty, fig-cycle, sweep or single)");
}

enum class Estimator { exact, mc, conditioned, automatic, sim_line, sim_circle };

inline std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::exact: return "exact";
    case Estimator::mc: return "mc";
    case Estimator::conditioned: return "conditioned";
    case Estimator::automatic: return "auto";
    case Estimator::sim_line: return "sim-line";
    case Estimator::sim_circle: return "sim-circle";
  }
  return "?";
}

// "sim" resolves against the plan topology.
inline Estimator parse_estimator(std::string_view text, TopologyKind topology = TopologyKind::line) {
  if (text == "sim") return topology == TopologyKind::line ? Estimator::sim_line : Estimator::sim_circle;
  for (auto e : {Estimator::exact, Estimator::mc, Estimator::conditioned, Estimator::automatic,
                 Estimator::sim_line, Estimator::sim_circle}) {
    if (text == to_string(e)) return e;
  }
  throw DomainError("unknown estimator '" + std::string(text) +
                    "' (expected exact, mc, conditioned, auto, sim, sim-line or sim-circle)");
}

inline std::optional<TopologyKind> estimator_topology(Estimator e) {
  if (e == Estimator::sim_line) return TopologyKind::line;
  if (e == Estimator::sim_circle) return TopologyKind::circle;
  return std::nullopt;
}

struct DeltaRule {
  enum class Kind { fixed, scaled };
  Kind kind = Kind::fixed;
  double value = 0.0;  // delta, or c with delta = c / sqrt(N)

  static DeltaRule fixed(double delta) { return {Kind::fixed, delta}; }
  static DeltaRule scaled(double c) { return {Kind::scaled, c}; }

  double delta_for(std::size_t n) const {
    return kind == Kind::fixed ? value : value / std::sqrt(static_cast<double>(n));
  }
  std::string kind_name() const { return kind == Kind::fixed ? "fixed" : "scaled"; }
  bool operator==(const DeltaRule&) const = default;
};

struct Series {
  std::string label;
  DeltaRule delta_rule;
  std::vector<std::size_t> n_grid;
  std::vector<Estimator> estimators;
};

struct ExperimentPlan {
  std::string experiment_id;
  PlanKind kind = PlanKind::sweep;
  TopologyKind topology = TopologyKind::line;
  std::vector<Series> series;
  std::uint64_t replicates = kDefaultReplicates;
  std::uint64_t seed = kDefaultSeed;
  std::filesystem::path output_path;
  unsigned jobs = 0;  // 0 = all hardware threads
  std::size_t enumeration_cap = kDefaultEnumerationCap;
};

// FIXLAB_SEED if set and parseable, else the built-in default.
inline std::uint64_t default_seed() {
  if (const char* env = std::getenv("FIXLAB_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 0);
    if (end != env && *end == '\0') return v;
    throw DomainError("FIXLAB_SEED is not an integer: '" + std::string(env) + "'");
  }
  return kDefaultSeed;
}

inline std::vector<std::size_t> grid(std::size_t first, std::size_t last, std::size_t step) {
  std::vector<std::size_t> out;
  for (std::size_t n = first; n <= last; n += step) out.push_back(n);
  return out;
}

// "10:250:10" (first:last:step) or "4,6,8".
inline std::vector<std::size_t> parse_grid(std::string_view text) {
  auto number = [&](std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
      throw DomainError("bad grid entry '" + std::string(s) + "' in '" + std::string(text) + "'");
    return v;
  };
  std::vector<std::size_t> out;
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    if (b == std::string_view::npos) throw DomainError("range grid needs first:last:step, got '" + std::string(text) + "'");
    const std::size_t first = number(text.substr(0, a));
    const std::size_t last = number(text.substr(a + 1, b - a - 1));
    const std::size_t step = number(text.substr(b + 1));
    if (step == 0 || last < first) throw DomainError("empty or invalid range grid '" + std::string(text) + "'");
    return grid(first, last, step);
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(number(piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Built-in figure plans. `paper_scale` selects 10^6 replicates per point.
inline ExperimentPlan builtin_plan(PlanKind kind, bool paper_scale = false) {
  ExperimentPlan plan;
  plan.kind = kind;
  plan.experiment_id = to_string(kind);
  plan.replicates = paper_scale ? kPaperScaleReplicates : kDefaultReplicates;
  plan.seed = default_seed();
  plan.output_path = to_string(kind) + ".csv";
  switch (kind) {
    case PlanKind::fig_line:
      plan.series = {{"c=2", DeltaRule::scaled(2.0), grid(10, 250, 10), {Estimator::mc}},
                     {"c=3", DeltaRule::scaled(3.0), grid(10, 150, 10), {Estimator::mc}}};
      break;
    case PlanKind::fig_infty:
      plan.series = {{"delta=0.2", DeltaRule::fixed(0.2),
                      {25, 50, 100, 200, 400, 800, 1600, 3200, 6400}, {Estimator::mc}}};
      break;
    case PlanKind::fig_cycle:
      plan.series = {{"line", DeltaRule::scaled(2.0), grid(10, 100, 10), {Estimator::mc, Estimator::sim_line}},
                     {"circle", DeltaRule::scaled(2.0), grid(10, 100, 10), {Estimator::sim_circle}}};
      break;
    case PlanKind::single:
      plan.series = {{"single", DeltaRule::fixed(0.3), {4}, {Estimator::conditioned}}};
      break;
    case PlanKind::sweep:
      plan.series = {{"sweep", DeltaRule::fixed(0.3), grid(2, 10, 2), {Estimator::automatic}}};
      break;
  }
  return plan;
}

inline void validate_plan(const ExperimentPlan& plan) {
  using detail::require;
  require(!plan.experiment_id.empty(), "plan needs an id");
  require(!plan.series.empty(), "plan needs at least one series");
  require(plan.replicates >= 2, "replicates must be at least 2");
  require(!plan.output_path.empty(), "plan needs an output path");
  bool has_line = false, has_circle = false;
  for (const auto& s : plan.series) {
    require(!s.n_grid.empty(), "series '" + s.label + "' has an empty N grid");
    require(!s.estimators.empty(), "series '" + s.label + "' has no estimators");
    require(s.delta_rule.value >= 0.0, "series '" + s.label + "': delta rule value must be >= 0");
    for (std::size_t n : s.n_grid) {
      require(n >= 2, "series '" + s.label + "': N must be >= 2");
      const double d = s.delta_rule.delta_for(n);
      require(d < 1.0, "series '" + s.label + "': delta = " + std::to_string(d) + " at N = " +
                           std::to_string(n) + " is outside [0, 1)");
    }
    for (Estimator e : s.estimators) {
      const auto topo = estimator_topology(e).value_or(TopologyKind::line);
      (topo == TopologyKind::line ? has_line : has_circle) = true;
    }
    switch (plan.kind) {
      case PlanKind::fig_line:
        require(s.delta_rule.kind == DeltaRule::Kind::scaled &&
                    (s.delta_rule.value == 2.0 || s.delta_rule.value == 3.0),
                "fig-line series must use scaled(c) with c in {2, 3}");
        break;
      case PlanKind::fig_infty:
        require(s.delta_rule == DeltaRule::fixed(0.2), "fig-infty series must use fixed(0.2)");
        break;
      case PlanKind::fig_cycle:
        require(s.delta_rule == DeltaRule::scaled(2.0), "fig-cycle series must use scaled(2)");
        break;
      default:
        break;
    }
  }
  if (plan.kind == PlanKind::fig_cycle)
    require(has_line && has_circle, "fig-cycle must run both the line and the circle");
}

// INI plan file:
//
//   [plan]
//   id = fig-line          ; kind defaults to id when it names a kind
//   kind = fig-line
//   replicates = 100000
//   seed = 7
//   output = results/fig-line.csv
//   jobs = 0
//   topology = line
//   enumeration_cap = 10
//
//   [series:c=2]           ; optional; a figure kind falls back to its built-in series
//   delta_rule = scaled
//   value = 2
//   n_grid = 10:250:10
//   estimators = mc
inline ExperimentPlan load_plan(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw IoError("cannot read plan file " + path.string() + ": " + e.message());
  }
  const auto section = tree.get_child_optional("plan");
  if (!section) throw DomainError("plan file " + path.string() + " has no [plan] section");
  try {
    const std::string id = section->get<std::string>("id", "");
    const PlanKind kind = parse_plan_kind(section->get<std::string>("kind", id));
    ExperimentPlan plan = builtin_plan(kind);
    plan.experiment_id = id.empty() ? to_string(kind) : id;
    plan.topology = parse_topology(section->get<std::string>("topology", "line"));
    plan.replicates = section->get<std::uint64_t>("replicates", plan.replicates);
    plan.seed = section->get<std::uint64_t>("seed", plan.seed);
    plan.output_path = section->get<std::string>("output", plan.experiment_id + ".csv");
    plan.jobs = section->get<unsigned>("jobs", 0);
    plan.enumeration_cap = section->get<std::size_t>("enumeration_cap", kDefaultEnumerationCap);

    std::vector<Series> series;
    for (const auto& [name, child] : tree) {
      if (!name.starts_with("series")) continue;
      Series s;
      s.label = name.size() > 7 ? name.substr(7) : name;
      const std::string rule = child.get<std::string>("delta_rule");
      const double value = child.get<double>("value");
      if (rule == "fixed") s.delta_rule = DeltaRule::fixed(value);
      else if (rule == "scaled") s.delta_rule = DeltaRule::scaled(value);
      else throw DomainError("delta_rule must be fixed or scaled, got '" + rule + "'");
      s.n_grid = parse_grid(child.get<std::string>("n_grid"));
      std::stringstream list(child.get<std::string>("estimators", "auto"));
      for (std::string item; std::getline(list, item, ',');) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b != std::string::npos) s.estimators.push_back(parse_estimator(item.substr(b, e - b + 1), plan.topology));
      }
      series.push_back(std::move(s));
    }
    if (!series.empty()) plan.series = std::move(series);
    else if (kind == PlanKind::sweep || kind == PlanKind::single)
      throw DomainError("a " + to_string(kind) + " plan needs at least one [series:...] section");
    validate_plan(plan);
    return plan;
  } catch (const pt::ptree_error& e) {
    throw DomainError("invalid plan file " + path.string() + ": " + e.what());
  }
}

inline nlohmann::json to_json(const ExperimentPlan& plan) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : plan.series) {
    nlohmann::json est = nlohmann::json::array();
    for (Estimator e : s.estimators) est.push_back(to_string(e));
    series.push_back({{"label", s.label},
                      {"delta_rule", {{"kind", s.delta_rule.kind_name()}, {"value", s.delta_rule.value}}},
                      {"n_grid", s.n_grid},
                      {"estimators", est}});
  }
  return {{"experiment_id", plan.experiment_id},
          {"kind", to_string(plan.kind)},
          {"topology", to_string(plan.topology)},
          {"replicates", plan.replicates},
          {"seed", plan.seed},
          {"output_path", plan.output_path.generic_string()},
          {"jobs", plan.jobs},
          {"enumeration_cap", plan.enumeration_cap},
          {"series", series}};
}

// One grid point. Estimators that cannot run (enumeration cap, odd n for the
// conditioned average, ...) throw; run_plan turns that into an error row.
inline FixationEstimate run_estimator(Estimator e, std::size_t n, double delta, std::uint64_t replicates,
                                      std::uint64_t seed, unsigned jobs, std::size_t cap,
                                      Estimator* resolved = nullptr) {
  if (e == Estimator::automatic) e = n <= cap ? Estimator::exact : Estimator::mc;
  if (resolved) *resolved = e;
  switch (e) {
    case Estimator::exact: return annealed_exact(n, delta, cap);
    case Estimator::conditioned: return conditioned_average(n, delta, cap);
    case Estimator::mc: return annealed_mc(n, delta, replicates, seed, jobs);
    case Estimator::sim_line:
    case Estimator::sim_circle: {
      const Topology topo(*estimator_topology(e), n);
      return estimate_fixation(topo, n, delta, replicates, seed, jobs);
    }
    case Estimator::automatic: break;
  }
  throw std::logic_error("unreachable estimator");
}

struct ResultRow {
  std::string series;
  std::size_t n = 0;
  double delta = 0.0;
  std::string mode;
  std::string topology;
  FixationEstimate estimate;
  double g_limit = 0.0;  // g(delta sqrt N)
  std::string error;     // empty on success
};

struct ResultTable {
  PlanKind kind = PlanKind::sweep;
  std::string experiment_id;
  std::vector<ResultRow> rows;
};

inline const std::vector<std::string>& table_columns() {
  static const std::vector<std::string> cols = {
      "series",     "n",           "delta",           "c",           "mode",         "topology",
      "mean",       "std_error",   "replicates",      "seed",        "n_mean",       "n_std_error",
      "scaled_mean", "scaled_std_error", "g_limit",   "prediction",  "prediction_scaled",
      "prediction_ratio", "error"};
  return cols;
}

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline std::string sanitize_field(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ch == ',' ? ';' : ' ';
  }
  return s;
}

}  // namespace detail

inline std::string table_preamble(const ResultTable& t) {
  return "# " + std::string(kTableSchema) + " kind=" + to_string(t.kind) + " id=" +
         detail::sanitize_field(t.experiment_id);
}

// The CSV body: preamble line, header, one line per row. Byte-identical for
// identical plans and seeds.
inline std::string format_table(const ResultTable& t) {
  std::string out = table_preamble(t) + "\n";
  const auto& cols = table_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (const auto& r : t.rows) {
    const double nd = static_cast<double>(r.n);
    const double c = r.delta * std::sqrt(nd);
    std::vector<std::string> f{detail::sanitize_field(r.series), std::to_string(r.n), format_real(r.delta),
                               format_real(c), r.mode, r.topology};
    if (r.error.empty()) {
      const auto& e = r.estimate;
      const double prediction = r.g_limit / nd;
      const double root = sqrt_pi * std::sqrt(nd);
      f.insert(f.end(), {format_real(e.mean), format_real(e.std_error), std::to_string(e.replicates),
                         e.seed ? std::to_string(*e.seed) : "", format_real(nd * e.mean),
                         format_real(nd * e.std_error), format_real(root * e.mean),
                         format_real(root * e.std_error), format_real(r.g_limit), format_real(prediction),
                         format_real(r.g_limit * sqrt_pi / std::sqrt(nd)), format_real(e.mean / prediction), ""});
    } else {
      f.insert(f.end(), 12, "");
      f.push_back(detail::sanitize_field(r.error));
    }
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
    out += "\n";
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::filesystem::path manifest_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".manifest.json");
  return p;
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Per-point seed: independent of the estimator, so estimators at the same
// point share landscapes (annealed_mc and the line simulator see the same
// environments).
inline std::uint64_t point_seed(std::uint64_t plan_seed, std::size_t series_index, std::size_t n) {
  return mix_seed(mix_seed(plan_seed, series_index), n);
}

// Computes every row. `log` receives one progress line per grid point.
inline ResultTable execute_plan(const ExperimentPlan& plan, std::ostream* log = nullptr) {
  validate_plan(plan);
  const unsigned jobs = plan.jobs == 0 ? default_jobs() : plan.jobs;
  ResultTable table{plan.kind, plan.experiment_id, {}};
  for (std::size_t si = 0; si < plan.series.size(); ++si) {
    const Series& s = plan.series[si];
    for (std::size_t n : s.n_grid) {
      const double delta = s.delta_rule.delta_for(n);
      const double limit = g(delta * std::sqrt(static_cast<double>(n))).value;
      for (Estimator e : s.estimators) {
        ResultRow row;
        row.series = s.label;
        row.n = n;
        row.delta = delta;
        row.topology = to_string(estimator_topology(e).value_or(TopologyKind::line));
        row.g_limit = limit;
        Estimator used = e;
        const auto start = std::chrono::steady_clock::now();
        try {
          row.estimate = run_estimator(e, n, delta, plan.replicates, point_seed(plan.seed, si, n), jobs,
                                       plan.enumeration_cap, &used);
        } catch (const std::exception& ex) {
          row.error = ex.what();
        }
        row.mode = to_string(used);
        if (log) {
          const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          *log << s.label << " N=" << n << ' ' << row.mode << ' '
               << (row.error.empty() ? "ok" : "FAILED: " + row.error) << " (" << secs << " s)\n";
        }
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

inline nlohmann::json make_manifest(const ExperimentPlan& plan, const ResultTable& table, double wall_seconds) {
  std::size_t failed = 0;
  for (const auto& r : table.rows) failed += r.error.empty() ? 0 : 1;
  nlohmann::json m{{"tool", "fixlab"},
                   {"version", std::string(kVersion)},
                   {"table_schema", std::string(kTableSchema)},
                   {"plan", to_json(plan)},
                   {"seed", plan.seed},
                   {"replicates_per_point", plan.replicates},
                   {"paper_scale", plan.replicates >= kPaperScaleReplicates},
                   {"rows", table.rows.size()},
                   {"failed_points", failed},
                   {"wall_time_seconds", wall_seconds},
                   {"timestamp", utc_timestamp()}};
  if (plan.kind == PlanKind::fig_infty) {
    m["rendered_scale"] = "scaled_mean = sqrt(pi N) * mean against prediction_scaled = g(delta sqrt N) sqrt(pi / N)";
  } else {
    m["rendered_scale"] = "n_mean = N * mean against g_limit = g(delta sqrt N)";
  }
  return m;
}

// Runs the plan, writes the CSV and its manifest, returns the table.
inline ResultTable run_plan(const ExperimentPlan& plan, std::ostream* log = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  ResultTable table = execute_plan(plan, log);
  write_text(plan.output_path, format_table(table));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text(manifest_path(plan.output_path), make_manifest(plan, table, secs).dump(2) + "\n");
  return table;
}

}  // namespace fixlab
