// fixlab command-line front end.
//
// Exit codes: 0 success, 2 invalid input, 3 infeasible (enumeration or step
// cap), 4 I/O failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fixlab/fixlab.hpp"

namespace {

using namespace fixlab;

enum ExitCode { kOk = 0, kDomain = 2, kInfeasible = 3, kIo = 4 };

struct Common {
  std::size_t n = 0;
  std::optional<double> delta;
  std::optional<double> c;
  std::uint64_t replicates = kDefaultReplicates;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  unsigned jobs = 0;
  std::size_t cap = kDefaultEnumerationCap;
  std::string topology = "line";

  double resolved_delta() const {
    if (c) return *c / std::sqrt(static_cast<double>(n));
    return *delta;
  }
  unsigned workers() const { return jobs == 0 ? default_jobs() : jobs; }
};

void add_model_options(CLI::App* cmd, Common& o) {
  cmd->add_option("--n", o.n, "number of sites N")->required()->check(CLI::PositiveNumber);
  auto* d = cmd->add_option("--delta", o.delta, "fitness spread delta in [0, 1)");
  auto* c = cmd->add_option("--c", o.c, "scaled spread, delta = c / sqrt(N)");
  d->excludes(c);
  c->excludes(d);
  cmd->add_option("--out", o.out, "output file (default stdout)");
  cmd->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
}

void add_mc_options(CLI::App* cmd, Common& o) {
  cmd->add_option("--replicates", o.replicates, "Monte Carlo replicates")->check(CLI::Range(2ULL, ~0ULL));
  cmd->add_option("--seed", o.seed, "64-bit seed (default: FIXLAB_SEED or built-in)");
  cmd->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
}

void emit(const Common& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  write_text(o.out, text);
}

std::string estimate_output(const Common& o, const FixationEstimate& e, const std::string& mode,
                            const std::optional<std::string>& topology = std::nullopt) {
  const std::string seed = e.seed ? std::to_string(*e.seed) : "";
  if (o.format == "json") {
    nlohmann::json j{{"n", e.n_sites},       {"delta", e.delta},
                     {"mode", mode},          {"mean", e.mean},
                     {"std_error", e.std_error}, {"replicates", e.replicates},
                     {"seed", e.seed ? nlohmann::json(*e.seed) : nlohmann::json(nullptr)}};
    if (topology) j["topology"] = *topology;
    return j.dump(2) + "\n";
  }
  std::string out = "n,delta,mode,mean,std_error,replicates,seed";
  if (topology) out += ",topology";
  out += "\n" + std::to_string(e.n_sites) + "," + format_real(e.delta) + "," + mode + "," + format_real(e.mean) +
         "," + format_real(e.std_error) + "," + std::to_string(e.replicates) + "," + seed;
  if (topology) out += "," + *topology;
  return out + "\n";
}

void require_delta(const Common& o) {
  if (!o.delta && !o.c) throw DomainError("one of --delta or --c is required");
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  std::vector<double> out;
  const int k0 = static_cast<int>(std::round(std::log10(lo) * per_decade));
  const int k1 = static_cast<int>(std::round(std::log10(hi) * per_decade));
  for (int k = k0; k <= k1; ++k) out.push_back(std::pow(10.0, static_cast<double>(k) / per_decade));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fixation probabilities of a neutral mutant in a random fitness landscape"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common o;
  o.seed = 0;
  bool seed_given = false;

  auto* exact = app.add_subcommand("exact", "exact annealed probability by enumeration");
  add_model_options(exact, o);
  exact->add_option("--cap", o.cap, "largest N to enumerate");

  auto* mc = app.add_subcommand("mc", "annealed probability by Monte Carlo over environments");
  add_model_options(mc, o);
  add_mc_options(mc, o);

  auto* cond = app.add_subcommand("conditioned", "exact average over environments with sum B = sum B'");
  add_model_options(cond, o);
  cond->add_option("--cap", o.cap, "largest N to enumerate");

  auto* sim = app.add_subcommand("simulate", "site-level dynamics on a line or circle");
  add_model_options(sim, o);
  add_mc_options(sim, o);
  sim->add_option("--topology", o.topology, "line or circle")->check(CLI::IsMember({"line", "circle"}));
  std::string sampler = "boundary";
  sim->add_option("--sampler", sampler, "boundary or uniform-edge")
      ->check(CLI::IsMember({"boundary", "uniform-edge"}));

  QuadratureSpec quad;
  std::string scheme = "tanh-sinh";
  auto add_quad = [&](CLI::App* cmd) {
    cmd->add_option("--nodes", quad.node_count, "quadrature nodes")->check(CLI::Range(3, 1 << 20));
    cmd->add_option("--truncation", quad.truncation, "truncation in standard deviations")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--scheme", scheme, "tanh-sinh or gauss-hermite")
        ->check(CLI::IsMember({"tanh-sinh", "gauss-hermite"}));
    cmd->add_option("--out", o.out, "output file (default stdout)");
    cmd->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  };

  auto* limit = app.add_subcommand("limit-g", "the scaling limit g(c) by quadrature");
  std::vector<double> cs;
  bool table = false;
  limit->add_option("--c", cs, "values of c (repeatable)");
  limit->add_flag("--table", table, "g on a log-spaced grid c = 0.01 .. 100");
  add_quad(limit);

  auto* ymom = app.add_subcommand("y-moments", "first and second moments of Y_M");
  std::vector<double> ms;
  ymom->add_option("--M", ms, "values of M (repeatable)")->required();
  add_quad(ymom);

  auto* plan_cmd = app.add_subcommand("plan", "figure reproduction plans");
  plan_cmd->require_subcommand(1);
  auto* plan_run = plan_cmd->add_subcommand("run", "run a plan (built-in kind or INI file)");
  std::string plan_source;
  bool paper_scale = false;
  bool quiet = false;
  std::optional<std::uint64_t> plan_replicates;
  plan_run->add_option("plan", plan_source, "fig-line, fig-infty, fig-cycle, sweep, single, or a plan file")
      ->required();
  plan_run->add_flag("--paper-scale", paper_scale, "10^6 replicates per point");
  plan_run->add_option("--replicates", plan_replicates, "replicates per point")->check(CLI::Range(2ULL, ~0ULL));
  plan_run->add_option("--seed", o.seed, "64-bit seed");
  plan_run->add_option("--out", o.out, "output CSV path");
  plan_run->add_option("--jobs", o.jobs, "worker threads (0 = all cores)");
  plan_run->add_flag("--quiet", quiet, "no progress output");

  auto* plan_plot = plan_cmd->add_subcommand("plot", "render a result table as SVG");
  std::string table_path;
  PlotStyle style;
  bool no_prediction = false;
  plan_plot->add_option("table", table_path, "result CSV")->required();
  plan_plot->add_option("--out", o.out, "output SVG path")->required();
  plan_plot->add_option("--title", style.title, "plot title");
  plan_plot->add_flag("--no-prediction", no_prediction, "omit the limit prediction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kDomain;
  }

  for (auto* cmd : {mc, sim, plan_run}) {
    if (cmd->parsed() && cmd->count("--seed") > 0) seed_given = true;
  }

  try {
    if (!seed_given) o.seed = default_seed();
    if (exact->parsed()) {
      require_delta(o);
      emit(o, estimate_output(o, annealed_exact(o.n, o.resolved_delta(), o.cap), "exact"));
    } else if (mc->parsed()) {
      require_delta(o);
      emit(o, estimate_output(o, annealed_mc(o.n, o.resolved_delta(), o.replicates, o.seed, o.workers()), "mc"));
    } else if (cond->parsed()) {
      require_delta(o);
      emit(o, estimate_output(o, conditioned_average(o.n, o.resolved_delta(), o.cap), "conditioned"));
    } else if (sim->parsed()) {
      require_delta(o);
      const TopologyKind kind = parse_topology(o.topology);
      DynamicsOptions opts;
      opts.sampler = sampler == "boundary" ? Sampler::boundary_events : Sampler::uniform_edge;
      const auto e = estimate_fixation(Topology(kind, o.n), o.n, o.resolved_delta(), o.replicates, o.seed,
                                       o.workers(), opts);
      emit(o, estimate_output(o, e, "sim-" + o.topology, o.topology));
    } else if (limit->parsed() || ymom->parsed()) {
      quad.scheme = parse_scheme(scheme);
      std::ostringstream out;
      nlohmann::json rows = nlohmann::json::array();
      if (limit->parsed()) {
        if (table) {
          const auto grid = log_grid(0.01, 100.0, 4);
          cs.insert(cs.end(), grid.begin(), grid.end());
        }
        if (cs.empty()) throw DomainError("limit-g needs --c or --table");
        out << "c,g,abs_err\n";
        for (double c : cs) {
          const LimitValue v = g(c, quad);
          out << format_real(c) << ',' << format_real(v.value) << ',' << format_real(v.estimated_abs_error) << '\n';
          rows.push_back({{"c", c}, {"g", v.value}, {"abs_err", v.estimated_abs_error}});
        }
      } else {
        out << "M,first,first_abs_err,second,second_abs_err,second_ratio\n";
        for (double m : ms) {
          const LimitValue a = y_first_moment(m, quad);
          const LimitValue b = y_second_moment(m, quad);
          const double ratio = b.value / y_second_moment_asymptote(m);
          out << format_real(m) << ',' << format_real(a.value) << ',' << format_real(a.estimated_abs_error) << ','
              << format_real(b.value) << ',' << format_real(b.estimated_abs_error) << ',' << format_real(ratio)
              << '\n';
          rows.push_back({{"M", m},
                          {"first", a.value},
                          {"first_abs_err", a.estimated_abs_error},
                          {"second", b.value},
                          {"second_abs_err", b.estimated_abs_error},
                          {"second_ratio", ratio}});
        }
      }
      emit(o, o.format == "json" ? rows.dump(2) + "\n" : out.str());
    } else if (plan_run->parsed()) {
      ExperimentPlan plan;
      const bool is_file = std::filesystem::exists(plan_source);
      if (is_file) {
        plan = load_plan(plan_source);
        if (paper_scale) plan.replicates = kPaperScaleReplicates;
      } else {
        plan = builtin_plan(parse_plan_kind(plan_source), paper_scale);
      }
      if (plan_replicates) plan.replicates = *plan_replicates;
      if (seed_given) plan.seed = o.seed;
      if (!o.out.empty()) plan.output_path = o.out;
      if (plan_run->count("--jobs") > 0) plan.jobs = o.jobs;
      const ResultTable t = run_plan(plan, quiet ? nullptr : &std::cerr);
      std::size_t failed = 0;
      for (const auto& r : t.rows) failed += r.error.empty() ? 0 : 1;
      std::cerr << "wrote " << plan.output_path.string() << " (" << t.rows.size() << " rows, " << failed
                << " failed) and " << manifest_path(plan.output_path).string() << '\n';
    } else if (plan_plot->parsed()) {
      style.prediction = !no_prediction;
      emit_plot(std::filesystem::path(table_path), std::filesystem::path(o.out), style);
      std::cerr << "wrote " << o.out << '\n';
    }
  } catch (const InfeasibleError& e) {
    std::cerr << "fixlab: infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const IoError& e) {
    std::cerr << "fixlab: I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const SchemaError& e) {
    std::cerr << "fixlab: schema error: " << e.what() << '\n';
    return kDomain;
  } catch (const DomainError& e) {
    std::cerr << "fixlab: invalid input: " << e.what() << '\n';
    return kDomain;
  }
  return kOk;
}
