// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any gated criterion fails; AC11 is reported but not gated.

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fixlab/fixlab.hpp"

using namespace fixlab;

namespace {

// Tolerances.
constexpr double kExactTol = 1e-12;
constexpr double kSigmas = 4.0;
constexpr std::uint64_t kReplicates = 100'000;
constexpr std::uint64_t kLargeReplicates = 1'000'000;
constexpr double kIdentityTol = 1e-10;
constexpr double kG2 = 1.516, kG2Tol = 0.001;
constexpr double kG3 = 1.97, kG3Tol = 0.01;
constexpr double kHeadlineLo = 1.46, kHeadlineHi = 1.58, kHeadlineVsLimit = 0.02;
constexpr double kAsymLo = 0.98, kAsymHi = 1.02;
constexpr double kRatioLo = 0.95, kRatioHi = 1.05;
constexpr double kMomentTol = 0.01;
constexpr double kGateTol = 1e-10;
constexpr double kCircleSigmas = 2.0;

constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;  // measured values
  std::vector<std::string> failures;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures.push_back(what);
    }
  }

  std::string text() const {
    std::string out = detail.str();
    for (std::size_t i = 0; i < failures.size(); ++i) out += (i == 0 ? " | failed: " : "; ") + failures[i];
    return out;
  }
};

double binomial_se(double p, double reps) { return std::sqrt(p * (1 - p) / reps); }

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

// Tridiagonal solve of h_k = q_k h_{k-1} + p_k h_{k+1}, h_0 = 0, h_N = 1.
long double thomas(const HopProfile& p) {
  const std::size_t m = p.n_sites - 1;
  std::vector<long double> diag(m, 1.0L), rhs(m, 0.0L);
  rhs[m - 1] = p.hop[m - 1];
  for (std::size_t i = 1; i < m; ++i) {
    const long double w = -static_cast<long double>(p.fall[i]) / diag[i - 1];
    diag[i] -= w * -static_cast<long double>(p.hop[i - 1]);
    rhs[i] -= w * rhs[i - 1];
  }
  long double h = rhs[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) h = (rhs[i] + p.hop[i] * h) / diag[i];
  return h;
}

double lattice_frequency(const FitnessLandscape& l, std::uint64_t reps, std::uint64_t seed) {
  const Topology topo(TopologyKind::line, l.n_sites());
  const RunningStats s = run_replicates(reps, default_jobs(), [&] {
    return [&](std::uint64_t r) {
      Stream rng(seed, StreamDomain::dynamics, r);
      const std::size_t start[] = {0};
      return run_dynamics(l, topo, start, rng) ? 1.0 : 0.0;
    };
  });
  return s.mean;
}

Outcome ac1() {
  Outcome o;
  double worst_exact = 0.0, worst_chain = 0.0, worst_lattice = 0.0;
  for (std::size_t n = 2; n <= 50; ++n) {
    Stream env(kSeed, StreamDomain::test, n);
    const auto l = sample_landscape(n, 0.0, env);
    const double target = 1.0 / static_cast<double>(n);
    const double exact = fixation_probability_exact(l);
    worst_exact = std::max(worst_exact, std::abs(exact - target));
    o.check(std::abs(exact - target) < kExactTol, "exact N=" + std::to_string(n));

    const double se = binomial_se(target, kReplicates);
    const auto chain = estimate_chain_fixation(hop_profile(l), kReplicates, kSeed + n);
    const double zc = std::abs(chain.mean - target) / se;
    worst_chain = std::max(worst_chain, zc);
    o.check(zc < kSigmas, "chain N=" + std::to_string(n) + " z=" + fmt(zc, 3));

    const auto lat = estimate_fixation(Topology(TopologyKind::line, n), n, 0.0, kReplicates, kSeed + n);
    const double zl = std::abs(lat.mean - target) / se;
    worst_lattice = std::max(worst_lattice, zl);
    o.check(zl < kSigmas, "lattice N=" + std::to_string(n) + " z=" + fmt(zl, 3));
  }
  o.detail << "N=2..50: max |exact-1/N|=" << fmt(worst_exact, 3)
           << ", max chain z=" << fmt(worst_chain, 3) << ", max lattice z=" << fmt(worst_lattice, 3);
  return o;
}

Outcome ac2() {
  Outcome o;
  double worst = 0.0;
  for (std::size_t n : {2U, 4U, 6U, 8U})
    for (double d : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double v = static_cast<double>(n) * conditioned_average(n, d).mean;
      worst = std::max(worst, std::abs(v - 1.0));
      o.check(std::abs(v - 1.0) < kIdentityTol, "N=" + std::to_string(n) + " delta=" + fmt(d));
    }
  o.detail << "max |N*avg - 1| = " << fmt(worst, 3);
  return o;
}

Outcome ac3() {
  Outcome o;
  const double g2 = g(2.0).value, g3 = g(3.0).value;
  o.check(std::abs(g2 - kG2) <= kG2Tol, "g(2)");
  o.check(std::abs(g3 - kG3) <= kG3Tol, "g(3)");
  o.detail << "g(2)=" << fmt(g2, 10) << " g(3)=" << fmt(g3, 10);
  return o;
}

Outcome ac4() {
  Outcome o;
  const std::size_t n = 250;
  const auto e = annealed_mc(n, 2.0 / std::sqrt(250.0), kLargeReplicates, kSeed);
  const double nm = 250.0 * e.mean;
  const double g2 = g(2.0).value;
  o.check(nm >= kHeadlineLo && nm <= kHeadlineHi, "N*mean outside band");
  o.check(std::abs(nm - g2) < kHeadlineVsLimit, "|N*mean - g(2)| too large");
  o.detail << "N*mean=" << fmt(nm) << " +- " << fmt(250.0 * e.std_error, 3)
           << " (10^6 envs), g(2)=" << fmt(g2);
  return o;
}

Outcome ac5() {
  Outcome o;
  const double c = 0.05;
  const double r = (g(c).value - 1.0) / (c * c / 6.0);
  o.check(r >= kAsymLo && r <= kAsymHi, "ratio");
  o.detail << "(g(0.05)-1)/(c^2/6)=" << fmt(r);
  return o;
}

Outcome ac6() {
  Outcome o;
  const double c = 50.0;
  const double r = g(c).value * std::sqrt(std::numbers::pi) / c;
  o.check(r >= kAsymLo && r <= kAsymHi, "ratio");
  o.detail << "g(50) sqrt(pi)/50=" << fmt(r);
  return o;
}

Outcome ac7() {
  Outcome o;
  for (std::size_t n : {400U, 1600U, 6400U}) {
    const auto e = annealed_mc(n, 0.2, kLargeReplicates, kSeed + n);
    const double pred = better_prediction(n, 0.2).refined;
    const double r = e.mean / pred;
    o.check(r >= kRatioLo && r <= kRatioHi, "N=" + std::to_string(n));
    o.detail << (o.detail.tellp() > 0 ? ", " : "") << "N=" << n << ": mean/(g/N)=" << fmt(r) << " +- "
             << fmt(e.std_error / pred, 2);
  }
  return o;
}

Outcome ac8() {
  Outcome o;
  double worst_solve = 0.0, worst_chain = 0.0, worst_lattice = 0.0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    Stream env(kSeed, StreamDomain::landscape, 1000 + r);
    const std::size_t n = 2 + env() % 7;
    const auto l = sample_landscape(n, 0.1 + 0.8 * env.uniform(), env);
    const auto prof = hop_profile(l);
    const double exact = fixation_probability_exact(l);
    const double solve = static_cast<double>(thomas(prof));
    worst_solve = std::max(worst_solve, std::abs(exact - solve));
    o.check(std::abs(exact - solve) < kExactTol, "solve " + encode_landscape(l));

    const double se = binomial_se(exact, kReplicates);
    const double zc = std::abs(estimate_chain_fixation(prof, kReplicates, kSeed + r).mean - exact) / se;
    const double zl = std::abs(lattice_frequency(l, kReplicates, kSeed + r) - exact) / se;
    worst_chain = std::max(worst_chain, zc);
    worst_lattice = std::max(worst_lattice, zl);
    o.check(zc < kSigmas, "chain " + encode_landscape(l));
    o.check(zl < kSigmas, "lattice " + encode_landscape(l));
  }
  o.detail << "20 envs: max |formula-solve|=" << fmt(worst_solve, 3)
           << ", max chain z=" << fmt(worst_chain, 3) << ", max lattice z=" << fmt(worst_lattice, 3);
  return o;
}

Outcome ac9() {
  Outcome o;
  const double y1 = y_first_moment(1e4).value;
  const double y2 = y_second_moment(1e6).value / (4.0 * std::sqrt(2.0 / std::numbers::pi) * 1e3);
  o.check(std::abs(y1 - 1.0) <= kMomentTol, "first moment");
  o.check(std::abs(y2 - 1.0) <= kMomentTol, "second moment ratio");
  o.detail << "E Y(1e4)=" << fmt(y1, 8) << ", E Y^2(1e6)/asymptote=" << fmt(y2, 8);
  return o;
}

Outcome ac10() {
  Outcome o;
  double prev = 1.0;
  for (int i = 1; i <= 200; ++i) {
    const double v = g(0.05 * i).value;
    o.check(v > prev, "g not increasing at c=" + fmt(0.05 * i));
    prev = v;
  }

  Stream rng(kSeed, StreamDomain::test, 10);
  for (int i = 0; i < 100000; ++i) {
    const double x = -20.0 + 40.0 * rng.uniform();
    const double h = convexity_h(x);
    if ((x > 0) != (h > 0) || (x != 0 && h == 0)) {
      o.check(false, "sign(h) at x=" + fmt(x, 17));
      break;
    }
  }

  double worst_gate = 0.0;
  auto gate = [&](const LimitValue& v) { worst_gate = std::max(worst_gate, v.estimated_abs_error / std::abs(v.value)); };
  for (double c : {0.01, 0.05, 0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0}) gate(g(c));
  for (double t : {1e-4, 0.02, 1.0, 100.0}) gate(m2(t));
  for (double M : {1.0, 1e2, 1e4, 1e6}) {
    gate(y_first_moment(M));
    gate(y_second_moment(M));
  }
  o.check(worst_gate < kGateTol, "convergence gate " + fmt(worst_gate, 3));

  bool identical = true;
  auto same = [&](const auto& a, const auto& b) { identical = identical && a.mean == b.mean && a.std_error == b.std_error; };
  const auto mc1 = annealed_mc(200, 0.15, 20000, 9, 1);
  const auto sim1 = estimate_fixation(Topology(TopologyKind::circle, 30), 30, 0.3, 20000, 9, 1);
  const auto bm1 = brownian_mc_g(2.0, 10000, 100, 9, 1);
  for (unsigned jobs : {4U, 16U}) {
    same(mc1, annealed_mc(200, 0.15, 20000, 9, jobs));
    same(sim1, estimate_fixation(Topology(TopologyKind::circle, 30), 30, 0.3, 20000, 9, jobs));
    same(bm1, brownian_mc_g(2.0, 10000, 100, 9, jobs));
  }
  o.check(identical, "results differ across worker counts");
  o.detail << "g increasing on 0.05..10, sign(h) on 1e5 samples, gate max rel "
           << fmt(worst_gate, 3) << ", 1/4/16 workers bit-identical";
  return o;
}

Outcome ac11() {
  Outcome o;
  for (std::size_t n : {20U, 60U, 100U}) {
    const double d = 2.0 / std::sqrt(static_cast<double>(n));
    const double nn = static_cast<double>(n);
    const auto line = estimate_fixation(Topology(TopologyKind::line, n), n, d, kReplicates, kSeed + n);
    const auto circle = estimate_fixation(Topology(TopologyKind::circle, n), n, d, kReplicates, kSeed + n);
    const double lm = nn * line.mean, cm = nn * circle.mean;
    const double ls = nn * line.std_error, cs = nn * circle.std_error;
    const double combined = std::hypot(ls, cs);
    o.check(cm <= lm + kCircleSigmas * combined, "circle above line at N=" + std::to_string(n));
    o.check(lm - 1.0 > kSigmas * ls, "line not above 1 at N=" + std::to_string(n));
    o.check(cm - 1.0 > kSigmas * cs, "circle not above 1 at N=" + std::to_string(n));
    o.detail << (o.detail.tellp() > 0 ? ", " : "") << "N=" << n << ": line " << fmt(lm, 4) << "+-" << fmt(ls, 2)
             << " circle " << fmt(cm, 4) << "+-" << fmt(cs, 2);
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> run;
    bool gated;
  };
  const std::vector<Criterion> criteria = {
      {"AC1", "neutral baseline", ac1, true},
      {"AC2", "conditioned identity", ac2, true},
      {"AC3", "limit constants", ac3, true},
      {"AC4", "headline simulation N=250", ac4, true},
      {"AC5", "small-c asymptotic", ac5, true},
      {"AC6", "large-c asymptotic", ac6, true},
      {"AC7", "fixed delta=0.2 regime", ac7, true},
      {"AC8", "reduction equivalence", ac8, true},
      {"AC9", "Y moments", ac9, true},
      {"AC10", "property suite", ac10, true},
      {"AC11", "circle vs line (recorded, not gated)", ac11, false},
  };
  int gated_failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    if (!o.pass && c.gated) ++gated_failures;
    std::printf("%-4s %s  %s: %s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.text().c_str());
    std::fflush(stdout);
  }
  std::printf("%s (%d gated failure%s)\n", gated_failures == 0 ? "ACCEPTED" : "REJECTED", gated_failures,
              gated_failures == 1 ? "" : "s");
  return gated_failures == 0 ? 0 : 1;
}
