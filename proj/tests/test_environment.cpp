#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <string>

#include "fixlab/environment.hpp"

using namespace fixlab;

namespace {

FitnessLandscape make(double delta, std::vector<Sign> normal, std::vector<Sign> mutant) {
  return FitnessLandscape(delta, std::move(normal), std::move(mutant));
}

}  // namespace

TEST(Landscape, RejectsBadInput) {
  EXPECT_THROW(make(1.0, {1}, {1}), DomainError);
  EXPECT_THROW(make(-0.1, {1}, {1}), DomainError);
  EXPECT_THROW(make(0.1, {}, {}), DomainError);
  EXPECT_THROW(make(0.1, {1, 1}, {1}), DomainError);
  EXPECT_THROW(make(0.1, {1, 0}, {1, 1}), DomainError);
}

TEST(Landscape, Fitness) {
  const auto l = make(0.25, {1, -1}, {-1, 1});
  EXPECT_DOUBLE_EQ(l.normal_fitness(0), 1.25);
  EXPECT_DOUBLE_EQ(l.normal_fitness(1), 0.75);
  EXPECT_DOUBLE_EQ(l.mutant_fitness(0), 0.75);
  EXPECT_DOUBLE_EQ(l.mutant_fitness(1), 1.25);
}

TEST(Sample, ValidatesArguments) {
  Stream rng(1, StreamDomain::test, 0);
  EXPECT_THROW(sample_landscape(1, 0.1, rng), DomainError);
  EXPECT_THROW(sample_landscape(3, 1.0, rng), DomainError);
  EXPECT_THROW(sample_landscape(3, -0.5, rng), DomainError);
}

TEST(Sample, ZeroDeltaGivesHalfHops) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Stream rng(seed, StreamDomain::landscape, 0);
    const auto p = hop_profile(sample_landscape(3, 0.0, rng));
    for (double b : p.beta) EXPECT_EQ(b, 0.5);
    for (double h : p.hop) EXPECT_EQ(h, 0.5);
  }
}

TEST(Sample, DeterministicPerAddress) {
  Stream a(77, StreamDomain::landscape, 5);
  Stream b(77, StreamDomain::landscape, 5);
  EXPECT_EQ(sample_landscape(2, 0.5, a), sample_landscape(2, 0.5, b));
}

TEST(Sample, SignsAreFair) {
  const int draws = 100000;
  std::vector<double> normal_sum(4, 0.0), mutant_sum(4, 0.0);
  FitnessLandscape l;
  for (int r = 0; r < draws; ++r) {
    Stream rng(2024, StreamDomain::landscape, static_cast<std::uint64_t>(r));
    sample_landscape_into(l, 4, 0.3, rng);
    for (std::size_t k = 0; k < 4; ++k) {
      normal_sum[k] += l.normal_signs()[k];
      mutant_sum[k] += l.mutant_signs()[k];
    }
  }
  const double tol = 3.0 / std::sqrt(static_cast<double>(draws));
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_LT(std::abs(normal_sum[k] / draws), tol) << "normal site " << k;
    EXPECT_LT(std::abs(mutant_sum[k] / draws), tol) << "mutant site " << k;
  }
}

TEST(Sample, SignsAreIndependentAcrossSites) {
  const int draws = 100000;
  double corr = 0.0;
  FitnessLandscape l;
  for (int r = 0; r < draws; ++r) {
    Stream rng(5, StreamDomain::landscape, static_cast<std::uint64_t>(r));
    sample_landscape_into(l, 3, 0.3, rng);
    corr += l.normal_signs()[0] * l.mutant_signs()[0] + l.normal_signs()[1] * l.normal_signs()[2];
  }
  EXPECT_LT(std::abs(corr / draws), 4.0 * std::sqrt(2.0 / draws));
}

TEST(Enumerate, SingleSite) {
  int count = 0;
  Rational total{0, 1};
  for (const auto& [l, w] : enumerate_landscapes(1, 0.2)) {
    EXPECT_EQ(w, (Rational{1, 4}));
    total = total + w;
    ++count;
  }
  EXPECT_EQ(count, 4);
  EXPECT_EQ(total, (Rational{1, 1}));
}

TEST(Enumerate, TwoSitesWeightsSumToOne) {
  Rational total{0, 1};
  int count = 0;
  for (const auto& item : enumerate_landscapes(2, 0.2)) {
    total = total + item.weight;
    ++count;
  }
  EXPECT_EQ(count, 16);
  EXPECT_EQ(total, (Rational{1, 1}));
}

TEST(Enumerate, CompleteWithoutDuplicates) {
  for (std::size_t n : {1U, 2U, 3U, 5U}) {
    std::set<std::string> seen;
    std::size_t count = 0;
    for (const auto& item : enumerate_landscapes(n, 0.3)) {
      seen.insert(encode_landscape(item.landscape));
      ++count;
    }
    EXPECT_EQ(count, std::size_t{1} << (2 * n));
    EXPECT_EQ(seen.size(), count);
  }
}

TEST(Enumerate, MeanBetaMatchesFourTermSum) {
  const double d = 0.2;
  double oracle = 0.0;
  for (int a : {-1, 1})
    for (int b : {-1, 1}) oracle += 0.25 * (1 + d * a) / (2 + d * a + d * b);
  double mean = 0.0;
  for (const auto& [l, w] : enumerate_landscapes(3, d)) mean += w.to_double() * hop_profile(l).beta[0];
  EXPECT_NEAR(mean, oracle, 1e-15);
}

TEST(Enumerate, CapExceeded) {
  try {
    (void)enumerate_landscapes(11, 0.1);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NE(std::string(e.what()).find("enumeration infeasible"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("Monte Carlo"), std::string::npos);
  }
  EXPECT_NO_THROW((void)enumerate_landscapes(11, 0.1, 11));
}

TEST(Conditioned, TwoSites) {
  int count = 0;
  Rational total{0, 1};
  for (const auto& [l, w] : enumerate_conditioned(2, 0.4)) {
    EXPECT_EQ(w, (Rational{1, 6}));
    EXPECT_EQ(l.normal_signs()[0] + l.normal_signs()[1], l.mutant_signs()[0] + l.mutant_signs()[1]);
    total = total + w;
    ++count;
  }
  EXPECT_EQ(count, 6);
  EXPECT_EQ(total, (Rational{1, 1}));
}

TEST(Conditioned, OddSizeRejected) {
  try {
    (void)enumerate_conditioned(3, 0.1);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("even"), std::string::npos);
  }
}

TEST(Conditioned, EqualsFilteredFullEnumeration) {
  for (std::size_t n : {2U, 4U, 6U}) {
    std::set<std::string> filtered, conditioned;
    for (const auto& item : enumerate_landscapes(n, 0.3)) {
      int a = 0, b = 0;
      for (Sign s : item.landscape.normal_signs()) a += s;
      for (Sign s : item.landscape.mutant_signs()) b += s;
      if (a == b) filtered.insert(encode_landscape(item.landscape));
    }
    for (const auto& item : enumerate_conditioned(n, 0.3)) conditioned.insert(encode_landscape(item.landscape));
    EXPECT_EQ(filtered, conditioned) << "n = " << n;
    EXPECT_EQ(conditioned.size(), detail::central_binomial(n));
  }
}

TEST(HopProfile, ZeroDeltaEverywhereHalf) {
  for (const auto& item : enumerate_landscapes(4, 0.0)) {
    const auto p = hop_profile(item.landscape);
    for (double b : p.beta) ASSERT_EQ(b, 0.5);
    for (double h : p.hop) ASSERT_EQ(h, 0.5);
  }
}

TEST(HopProfile, HandEvaluatedExample) {
  const auto p = hop_profile(make(0.5, {-1, -1}, {1, 1}));
  EXPECT_DOUBLE_EQ(p.beta[0], 0.75);
  EXPECT_DOUBLE_EQ(p.beta[1], 0.75);
  ASSERT_EQ(p.hop.size(), 1U);
  EXPECT_DOUBLE_EQ(p.hop[0], 0.75);
  EXPECT_DOUBLE_EQ(p.fall[0], 0.25);
}

TEST(HopProfile, MatchesDefinition) {
  for (const auto& item : enumerate_landscapes(3, 0.35)) {
    const auto& l = item.landscape;
    const auto p = hop_profile(l);
    for (std::size_t k = 0; k < 3; ++k) {
      const double m = 1 + 0.35 * l.mutant_signs()[k];
      const double nm = 1 + 0.35 * l.normal_signs()[k];
      EXPECT_NEAR(p.beta[k], m / (m + nm), 1e-16);
    }
    for (std::size_t k = 0; k < 2; ++k) {
      const double expected = p.beta[k + 1] / (p.beta[k + 1] + 1 - p.beta[k]);
      EXPECT_NEAR(p.hop[k], expected, 1e-15);
      EXPECT_GT(p.hop[k], 0.0);
      EXPECT_LT(p.hop[k], 1.0);
      EXPECT_NEAR(p.hop[k] + p.fall[k], 1.0, 1e-15);
    }
  }
}

// Swapping the roles exchanges beta and 1 - beta. The swapped beta is computed
// from the same two fitness values, so it equals the original "stay"
// probability bit for bit; the sum with the original beta is 1 up to one
// rounding.
TEST(HopProfile, RoleSwapSymmetry) {
  for (const auto& item : enumerate_landscapes(3, 0.7)) {
    const auto p = hop_profile(item.landscape);
    const auto q = hop_profile(item.landscape.swapped());
    for (std::size_t k = 0; k < 3; ++k) {
      const double m = item.landscape.mutant_fitness(k);
      const double nm = item.landscape.normal_fitness(k);
      EXPECT_EQ(q.beta[k], nm / (nm + m));
      EXPECT_NEAR(q.beta[k], 1.0 - p.beta[k], 1e-15);
    }
  }
}

TEST(HopProfile, SyntheticChain) {
  const auto p = HopProfile::from_hops({1.0, 0.25});
  EXPECT_EQ(p.n_sites, 3U);
  EXPECT_TRUE(p.beta.empty());
  EXPECT_EQ(p.fall[0], 0.0);
  EXPECT_EQ(p.fall[1], 0.75);
  EXPECT_THROW(HopProfile::from_hops({1.5}), DomainError);
  EXPECT_THROW(HopProfile::from_hops({}), DomainError);
}

TEST(Encoding, RoundTrip) {
  Stream rng(3, StreamDomain::test, 0);
  for (double d : {0.0, 0.1, 0.2, 2.0 / std::sqrt(250.0), 0.999}) {
    for (std::size_t n : {1U, 3U, 17U}) {
      const auto l = n == 1 ? make(d, {1}, {-1}) : sample_landscape(n, d, rng);
      const auto text = encode_landscape(l);
      EXPECT_EQ(parse_landscape(text), l) << text;
      EXPECT_EQ(encode_landscape(parse_landscape(text)), text);
    }
  }
  EXPECT_EQ(encode_landscape(make(0.2, {1, -1, 1}, {-1, -1, 1})), "N=3 delta=0.2 B=+-+ B'=--+");
}

TEST(Encoding, RejectsMalformed) {
  for (const char* bad : {"", "N=3", "N=2 delta=0.1 B=++ B'=+", "N=2 delta=x B=++ B'=++",
                          "N=2 delta=0.1 B=+* B'=++", "N=2 delta=0.1 B=++ B'=++ extra",
                          "N=2 delta=1.5 B=++ B'=++"}) {
    EXPECT_THROW(parse_landscape(bad), DomainError) << bad;
  }
}

TEST(Codes, RoundTrip) {
  for (std::uint64_t code = 0; code < 64; ++code) {
    EXPECT_EQ(landscape_code(landscape_from_code(3, 0.1, code)), code);
  }
}
