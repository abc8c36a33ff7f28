#pragma once

// Fixation probability of the right-most-mutant birth-death chain.
//
// Started from state 1 and absorbed at 0 and N, the chain reaches N first with
// probability
//
//     1 / sum_{k=0}^{N-1} exp(S_k),   S_0 = 0,  S_k = sum_{j<=k} log(q_j / p_j).
//
// Two evaluations are provided. fixation_probability_exact() multiplies the
// ratios q_j/p_j directly and keeps the running product and the sum in a
// shared power-of-two scale; fixation_probability_log() works from the log
// ladder S_k with a max-shifted log-sum-exp. Neither overflows for |S_k| far
// beyond the double exponent range.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fixlab/environment.hpp"
#include "fixlab/errors.hpp"
#include "fixlab/estimate.hpp"
#include "fixlab/rng.hpp"

namespace fixlab {

inline constexpr std::uint64_t kDefaultChainStepCap = 1'000'000'000ULL;

namespace detail {

// sum_k exp(S_k) fed with the successive ratios exp(S_k - S_{k-1}).
// Invariant: true sum = sum_ * 2^scale_, true term = term_ * 2^(scale_ - deep_),
// and sum_ >= 1 after every step.
class LadderSum {
 public:
  void step(double ratio) noexcept {
    term_ *= ratio;
    if (term_ == 0.0) return;  // every later term is zero as well
    if (deep_ == 0) {
      if (term_ > kHigh) {
        term_ *= kLow;
        sum_ *= kLow;
        scale_ += kStepExp;
      } else if (term_ < kLow) {
        term_ *= kHigh;
        deep_ = kStepExp;
      }
    } else if (term_ > kHigh) {
      term_ *= kLow;
      deep_ -= kStepExp;
    } else if (term_ < kLow) {
      term_ *= kHigh;
      deep_ += kStepExp;
    }
    sum_ += deep_ == 0 ? term_ : std::ldexp(term_, static_cast<int>(-deep_));
  }

  // 1 / (true sum).
  double reciprocal() const noexcept { return std::ldexp(1.0 / sum_, static_cast<int>(-scale_)); }

 private:
  static constexpr int kStepExp = 256;
  static constexpr double kHigh = 0x1p256;
  static constexpr double kLow = 0x1p-256;

  double term_ = 1.0;
  double sum_ = 1.0;
  long scale_ = 0;
  long deep_ = 0;
};

inline int site_code(Sign mutant, Sign normal) noexcept {
  return (mutant > 0 ? 2 : 0) + (normal > 0 ? 1 : 0);
}

}  // namespace detail

inline double fixation_probability_exact(const HopProfile& profile) {
  detail::require(profile.n_sites >= 2, "fixation probability needs N >= 2");
  detail::LadderSum sum;
  for (std::size_t k = 0; k + 1 < profile.n_sites; ++k) sum.step(profile.fall[k] / profile.hop[k]);
  return sum.reciprocal();
}

// Same quantity straight from the signs: q_k/p_k = (1 - beta_k) / beta_{k+1}
// takes at most 16 values, looked up from a table. No allocation.
inline double fixation_probability_exact(const FitnessLandscape& l) {
  const std::size_t n = l.n_sites();
  detail::require(n >= 2, "fixation probability needs N >= 2");
  const double d = l.delta();
  std::array<double, 4> beta{}, stay{};
  for (int code = 0; code < 4; ++code) {
    const double mu = code & 2 ? 1.0 + d : 1.0 - d;
    const double nu = code & 1 ? 1.0 + d : 1.0 - d;
    beta[code] = mu / (mu + nu);
    stay[code] = nu / (mu + nu);
  }
  std::array<double, 16> ratio{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) ratio[4 * a + b] = stay[a] / beta[b];

  const auto mutant = l.mutant_signs();
  const auto normal = l.normal_signs();
  detail::LadderSum sum;
  int prev = detail::site_code(mutant[0], normal[0]);
  for (std::size_t k = 1; k < n; ++k) {
    const int cur = detail::site_code(mutant[k], normal[k]);
    sum.step(ratio[4 * prev + cur]);
    prev = cur;
  }
  return sum.reciprocal();
}

// Partial sums S_0..S_{N-1} of X_k = log(q_k/p_k), and, when the profile
// carries beta, the pure-walk ladder with increments log((1-beta_{k+1})/beta_{k+1}).
struct LogWeightLadder {
  std::vector<double> partial_sums;
  std::vector<double> walk_sums;  // empty for synthetic profiles
};

inline LogWeightLadder log_weight_ladder(const HopProfile& profile) {
  detail::require(profile.n_sites >= 2, "ladder needs N >= 2");
  const std::size_t n = profile.n_sites;
  LogWeightLadder out;
  out.partial_sums.assign(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    out.partial_sums[k] =
        out.partial_sums[k - 1] + (std::log(profile.fall[k - 1]) - std::log(profile.hop[k - 1]));
  }
  if (profile.beta.size() == n) {
    out.walk_sums.assign(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
      const double b = profile.beta[k];
      out.walk_sums[k] = out.walk_sums[k - 1] + (std::log1p(-b) - std::log(b));
    }
  }
  return out;
}

inline double fixation_probability_log(const LogWeightLadder& ladder) {
  detail::require(!ladder.partial_sums.empty(), "empty ladder");
  const double top = std::ranges::max(ladder.partial_sums);
  double acc = 0.0;
  for (double s : ladder.partial_sums) acc += std::exp(s - top);
  return std::exp(-top - std::log(acc));
}

// Largest |walk_sums[k] - partial_sums[k]| the realized betas allow:
// the difference telescopes to log(1-beta_1) - log(1-beta_{k+1}).
inline double ladder_deviation_bound(const HopProfile& profile) {
  detail::require(!profile.beta.empty(), "deviation bound needs site betas");
  const auto [lo, hi] = std::ranges::minmax(profile.beta);
  return std::log1p(-lo) - std::log1p(-hi);
}

inline double ladder_deviation(const LogWeightLadder& ladder) {
  double worst = 0.0;
  for (std::size_t k = 0; k < ladder.walk_sums.size(); ++k)
    worst = std::max(worst, std::abs(ladder.walk_sums[k] - ladder.partial_sums[k]));
  return worst;
}

// log((1 + delta) / (1 - delta)), the lattice step of the pure walk.
inline double walk_step(double delta) { return std::log1p(delta) - std::log1p(-delta); }

namespace detail {

// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

template <class Range>
FixationEstimate exact_average(Range&& landscapes, std::size_t n, double delta) {
  CompensatedSum acc;
  for (const auto& [landscape, weight] : landscapes)
    acc.add(weight.to_double() * fixation_probability_exact(landscape));
  FixationEstimate out;
  out.mean = acc.value();
  out.n_sites = n;
  out.delta = delta;
  return out;
}

}  // namespace detail

// Exact annealed fixation probability over all 4^n environments.
inline FixationEstimate annealed_exact(std::size_t n, double delta,
                                       std::size_t cap = kDefaultEnumerationCap) {
  detail::require(n >= 2, "annealed probability needs n >= 2");
  return detail::exact_average(enumerate_landscapes(n, delta, cap), n, delta);
}

// Exact average over environments with sum(B) == sum(B'); equals 1/n.
inline FixationEstimate conditioned_average(std::size_t n, double delta,
                                            std::size_t cap = kDefaultEnumerationCap) {
  detail::require(n >= 2, "conditioned average needs n >= 2");
  return detail::exact_average(enumerate_conditioned(n, delta, cap), n, delta);
}

// Rao-Blackwellized Monte Carlo: replicate r draws landscape r from
// Stream(seed, landscape, r) and contributes its exact fixation probability.
inline FixationEstimate annealed_mc(std::size_t n, double delta, std::uint64_t replicates,
                                   std::uint64_t seed, unsigned jobs = default_jobs()) {
  detail::validate_sampling(n, delta);
  detail::require(replicates >= 2, "Monte Carlo needs at least 2 replicates");
  const RunningStats stats = run_replicates(replicates, jobs, [&] {
    return [n, delta, seed, landscape = FitnessLandscape{}](std::uint64_t r) mutable {
      Stream rng(seed, StreamDomain::landscape, r);
      sample_landscape_into(landscape, n, delta, rng);
      return fixation_probability_exact(landscape);
    };
  });
  return FixationEstimate{stats.mean, stats.std_error(), replicates, seed, n, delta};
}

struct ChainRun {
  bool fixation = false;
  std::uint64_t steps = 0;
};

inline ChainRun chain_run(const HopProfile& profile, Stream& rng,
                          std::uint64_t step_cap = kDefaultChainStepCap) {
  detail::require(profile.n_sites >= 2, "chain needs N >= 2");
  const std::size_t n = profile.n_sites;
  std::size_t state = 1;
  std::uint64_t steps = 0;
  while (state != 0 && state != n) {
    if (steps == step_cap) {
      throw InfeasibleError("step cap exceeded: chain not absorbed after " +
                            std::to_string(step_cap) + " steps");
    }
    ++steps;
    if (rng.uniform() < profile.hop[state - 1]) ++state;
    else --state;
  }
  return {state == n, steps};
}

// true = the chain started at 1 hit N before 0.
inline bool chain_simulate(const HopProfile& profile, Stream& rng,
                           std::uint64_t step_cap = kDefaultChainStepCap) {
  return chain_run(profile, rng, step_cap).fixation;
}

// Fixation frequency of the chain on one fixed profile; replicate r uses
// Stream(seed, chain, r).
inline FixationEstimate estimate_chain_fixation(const HopProfile& profile,
                                                std::uint64_t replicates, std::uint64_t seed,
                                                unsigned jobs = default_jobs(),
                                                std::uint64_t step_cap = kDefaultChainStepCap) {
  detail::require(replicates >= 2, "Monte Carlo needs at least 2 replicates");
  const RunningStats stats = run_replicates(replicates, jobs, [&] {
    return [&profile, seed, step_cap](std::uint64_t r) {
      Stream rng(seed, StreamDomain::chain, r);
      return chain_simulate(profile, rng, step_cap) ? 1.0 : 0.0;
    };
  });
  return FixationEstimate{stats.mean, stats.std_error(), replicates, seed, profile.n_sites, 0.0};
}

}  // namespace fixlab
