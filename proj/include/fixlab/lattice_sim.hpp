#pragma once

// Site-level dynamics on the line and the circle.
//
// Discrete time: each step draws one directed nearest-neighbour edge (j, k)
// uniformly. If j and k differ, k adopts j's type with probability beta_k
// (j mutant) or 1 - beta_k (j normal). Only the jump chain matters for the
// absorption outcome, so the continuous-time version with rate-1 clocks on
// every directed edge gives the same fixation probability.
//
// Two samplers produce that jump chain:
//   uniform_edge     - the literal rule above, wasted draws included;
//   boundary_events  - tracks the mutant interval/arc and draws the next
//                      configuration change directly, choosing among the (at
//                      most four) discordant directed edges in proportion to
//                      their success probabilities.
// Sites are 0-based here; site 0 is the "site 1" of the model description.

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fixlab/environment.hpp"
#include "fixlab/errors.hpp"
#include "fixlab/estimate.hpp"
#include "fixlab/rng.hpp"

namespace fixlab {

inline constexpr std::uint64_t kDefaultLatticeStepCap = 10'000'000'000ULL;

enum class TopologyKind { line, circle };

inline std::string to_string(TopologyKind kind) {
  return kind == TopologyKind::line ? "line" : "circle";
}

inline TopologyKind parse_topology(std::string_view text) {
  if (text == "line") return TopologyKind::line;
  if (text == "circle") return TopologyKind::circle;
  throw DomainError("unknown topology '" + std::string(text) + "' (expected line or circle)");
}

struct DirectedEdge {
  std::size_t source;
  std::size_t target;
};

class Topology {
 public:
  Topology(TopologyKind kind, std::size_t n_sites) : kind_(kind), n_(n_sites) {
    detail::require(n_ >= 2, "topology needs at least 2 sites");
    detail::require(kind_ == TopologyKind::line || n_ >= 3, "a circle needs at least 3 sites");
  }

  TopologyKind kind() const noexcept { return kind_; }
  std::size_t n_sites() const noexcept { return n_; }

  std::size_t edge_count() const noexcept {
    return kind_ == TopologyKind::line ? 2 * (n_ - 1) : 2 * n_;
  }

  // Edge 2i is (i, i+1) and edge 2i+1 is (i+1, i), indices mod n on the circle.
  DirectedEdge edge(std::size_t index) const noexcept {
    const std::size_t i = index / 2;
    const std::size_t j = (i + 1) % n_;
    return index % 2 == 0 ? DirectedEdge{i, j} : DirectedEdge{j, i};
  }

  std::size_t right(std::size_t site) const noexcept { return (site + 1) % n_; }
  std::size_t left(std::size_t site) const noexcept { return (site + n_ - 1) % n_; }

 private:
  TopologyKind kind_;
  std::size_t n_;
};

class Configuration {
 public:
  Configuration(std::size_t n_sites, std::span<const std::size_t> mutants)
      : states_(n_sites, 0) {
    for (std::size_t s : mutants) {
      detail::require(s < n_sites, "initial mutant site out of range");
      detail::require(states_[s] == 0, "initial mutant sites must be distinct");
      states_[s] = 1;
      ++count_;
    }
  }

  std::size_t n_sites() const noexcept { return states_.size(); }
  std::size_t mutant_count() const noexcept { return count_; }
  bool mutant(std::size_t site) const noexcept { return states_[site] != 0; }
  bool absorbed() const noexcept { return count_ == 0 || count_ == states_.size(); }

  void set(std::size_t site, bool is_mutant) noexcept {
    const bool was = mutant(site);
    if (was == is_mutant) return;
    states_[site] = is_mutant ? 1 : 0;
    if (is_mutant) ++count_;
    else --count_;
  }

  // Mutants exactly {0, ..., k-1} for some k.
  bool is_prefix_interval() const noexcept {
    for (std::size_t s = 0; s < states_.size(); ++s)
      if (mutant(s) != (s < count_)) return false;
    return true;
  }

  // Mutants form one contiguous run on the line (or are empty/full).
  bool is_interval() const noexcept { return runs(false) <= 1; }

  // Mutants form one contiguous circular run (or are empty/full).
  bool is_arc() const noexcept { return absorbed() || runs(true) == 1; }

 private:
  std::size_t runs(bool circular) const noexcept {
    std::size_t starts = 0;
    const std::size_t n = states_.size();
    for (std::size_t s = 0; s < n; ++s) {
      const bool prev = s == 0 ? (circular ? mutant(n - 1) : false) : mutant(s - 1);
      if (mutant(s) && !prev) ++starts;
    }
    if (circular && count_ == n) return 1;
    return starts;
  }

  std::vector<std::uint8_t> states_;
  std::size_t count_ = 0;
};

enum class Sampler { uniform_edge, boundary_events };

struct DynamicsOptions {
  Sampler sampler = Sampler::boundary_events;
  std::uint64_t step_cap = kDefaultLatticeStepCap;
  // Check the interval/arc invariant and the "concordant edges never change
  // anything" property after every step. O(N) per step.
  bool check_invariants = false;
};

struct DynamicsRun {
  bool fixation = false;
  std::uint64_t steps = 0;    // edge draws (uniform_edge) or state changes (boundary_events)
  std::uint64_t changes = 0;  // configuration changes
};

namespace detail {

inline std::vector<double> site_betas(const FitnessLandscape& l) {
  std::vector<double> beta(l.n_sites());
  for (std::size_t k = 0; k < beta.size(); ++k) {
    const double mu = l.mutant_fitness(k);
    const double nu = l.normal_fitness(k);
    beta[k] = mu / (mu + nu);
  }
  return beta;
}

inline void check_shape(const Configuration& c, const Topology& topo, bool prefix) {
  const bool ok = topo.kind() == TopologyKind::circle ? c.is_arc()
                  : prefix                            ? c.is_prefix_interval()
                                                      : c.is_interval();
  if (!ok) {
    throw std::logic_error("mutant set lost its " +
                           std::string(topo.kind() == TopologyKind::circle ? "arc" : "interval") +
                           " structure");
  }
}

[[noreturn]] inline void step_cap_exceeded(std::uint64_t cap) {
  throw InfeasibleError("step cap exceeded: dynamics not absorbed after " + std::to_string(cap) +
                        " steps");
}

inline DynamicsRun run_uniform_edges(std::span<const double> beta, const Topology& topo,
                                     Configuration config, Stream& rng,
                                     const DynamicsOptions& opt, bool prefix) {
  DynamicsRun run;
  const std::uint64_t edges = topo.edge_count();
  while (!config.absorbed()) {
    if (run.steps == opt.step_cap) step_cap_exceeded(opt.step_cap);
    ++run.steps;
    const auto e = topo.edge(static_cast<std::size_t>(rng() % edges));
    const bool src = config.mutant(e.source);
    if (src == config.mutant(e.target)) {
      continue;  // concordant edge: nothing can change
    }
    const double success = src ? beta[e.target] : 1.0 - beta[e.target];
    if (rng.uniform() < success) {
      config.set(e.target, src);
      ++run.changes;
      if (opt.check_invariants) check_shape(config, topo, prefix);
    }
  }
  run.fixation = config.mutant_count() == config.n_sites();
  return run;
}

// Mutant run = sites first, first+1, ..., first+length-1 (mod n on the circle).
inline DynamicsRun run_boundary_events(std::span<const double> beta, const Topology& topo,
                                       Configuration config, Stream& rng,
                                       const DynamicsOptions& opt, bool prefix) {
  const std::size_t n = topo.n_sites();
  const bool circle = topo.kind() == TopologyKind::circle;
  if (!(circle ? config.is_arc() : config.is_interval())) {
    throw DomainError(
        "boundary-event sampler needs an interval (line) or arc (circle) of initial mutants; "
        "use the uniform-edge sampler");
  }
  std::size_t first = 0;
  std::size_t length = config.mutant_count();
  if (length > 0 && length < n) {
    // Start of the run: a mutant whose left neighbour is normal (or site 0 on the line).
    for (std::size_t s = 0; s < n; ++s) {
      const bool left_normal = circle ? !config.mutant(topo.left(s)) : (s == 0 || !config.mutant(s - 1));
      if (config.mutant(s) && left_normal) {
        first = s;
        break;
      }
    }
  }

  DynamicsRun run;
  std::array<double, 4> weight{};
  while (length > 0 && length < n) {
    if (run.steps == opt.step_cap) step_cap_exceeded(opt.step_cap);
    ++run.steps;
    const std::size_t last = (first + length - 1) % n;
    const bool has_right = circle || last + 1 < n;
    const bool has_left = circle || first > 0;
    const std::size_t out_right = topo.right(last);
    const std::size_t out_left = topo.left(first);
    // 0: last invades out_right   1: out_right invades last
    // 2: first invades out_left   3: out_left invades first
    weight[0] = has_right ? beta[out_right] : 0.0;
    weight[1] = has_right ? 1.0 - beta[last] : 0.0;
    weight[2] = has_left ? beta[out_left] : 0.0;
    weight[3] = has_left ? 1.0 - beta[first] : 0.0;
    const double total = weight[0] + weight[1] + weight[2] + weight[3];
    double u = rng.uniform() * total;
    int event = 0;
    while (event < 3 && u >= weight[event]) {
      u -= weight[event];
      ++event;
    }
    while (weight[event] == 0.0) --event;  // guard against u landing on a zero-weight tail
    switch (event) {
      case 0: config.set(out_right, true); ++length; break;
      case 1: config.set(last, false); --length; break;
      case 2: config.set(out_left, true); first = out_left; ++length; break;
      default: config.set(first, false); first = topo.right(first); --length; break;
    }
    ++run.changes;
    if (opt.check_invariants) check_shape(config, topo, prefix);
  }
  run.fixation = length == n;
  return run;
}

}  // namespace detail

inline DynamicsRun run_dynamics_detailed(const FitnessLandscape& landscape, const Topology& topology,
                                         std::span<const std::size_t> initial_mutants, Stream& rng,
                                         const DynamicsOptions& options = {}) {
  detail::require(landscape.n_sites() == topology.n_sites(),
                  "landscape and topology disagree on the number of sites");
  Configuration config(topology.n_sites(), initial_mutants);
  detail::require(config.mutant_count() > 0 && config.mutant_count() < topology.n_sites(),
                  "initial mutant set must be nonempty and proper");
  const bool prefix = topology.kind() == TopologyKind::line && config.is_prefix_interval();
  const auto beta = detail::site_betas(landscape);
  return options.sampler == Sampler::uniform_edge
             ? detail::run_uniform_edges(beta, topology, std::move(config), rng, options, prefix)
             : detail::run_boundary_events(beta, topology, std::move(config), rng, options, prefix);
}

// true = all-mutant absorption.
inline bool run_dynamics(const FitnessLandscape& landscape, const Topology& topology,
                         std::span<const std::size_t> initial_mutants, Stream& rng,
                         const DynamicsOptions& options = {}) {
  return run_dynamics_detailed(landscape, topology, initial_mutants, rng, options).fixation;
}

// Annealed fixation frequency from a single mutant at `start_site`: replicate
// r takes landscape r from Stream(seed, landscape, r), the same environment
// annealed_mc uses, and runs the dynamics on Stream(seed, dynamics, r).
inline FixationEstimate estimate_fixation(const Topology& topology, std::size_t n, double delta,
                                          std::uint64_t replicates, std::uint64_t seed,
                                          unsigned jobs = default_jobs(),
                                          const DynamicsOptions& options = {},
                                          std::size_t start_site = 0) {
  detail::require(topology.n_sites() == n, "topology size must equal n");
  detail::require(replicates >= 2, "Monte Carlo needs at least 2 replicates");
  detail::require(start_site < n, "start site out of range");
  detail::validate_sampling(n, delta);
  const RunningStats stats = run_replicates(replicates, jobs, [&] {
    return [&, landscape = FitnessLandscape{}](std::uint64_t r) mutable {
      Stream env(seed, StreamDomain::landscape, r);
      sample_landscape_into(landscape, n, delta, env);
      Stream dyn(seed, StreamDomain::dynamics, r);
      const std::size_t start[] = {start_site};
      try {
        return run_dynamics(landscape, topology, start, dyn, options) ? 1.0 : 0.0;
      } catch (const InfeasibleError& e) {
        throw InfeasibleError(std::string(e.what()) + " (replicate " + std::to_string(r) + ")");
      }
    };
  });
  return FixationEstimate{stats.mean, stats.std_error(), replicates, seed, n, delta};
}

}  // namespace fixlab
