#pragma once

// Random fitness landscapes on N sites and the hop probabilities they induce.
//
// Naming: at site k the mutant fitness is 1 + delta * mutant_sign[k] and the
// normal fitness is 1 + delta * normal_sign[k]. A reproduction attempt into
// site k installs the mutant type with probability
//
//     beta[k] = mutant fitness / (mutant fitness + normal fitness),
//
// i.e. the mutant fitness is the numerator. The two sign families are IID and
// symmetric, so every annealed quantity is unchanged if the roles are swapped.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <numeric>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fixlab/errors.hpp"
#include "fixlab/rng.hpp"

namespace fixlab {

inline constexpr std::size_t kDefaultEnumerationCap = 10;

using Sign = std::int8_t;

// Exact nonnegative rational, used for enumeration weights.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  constexpr Rational reduced() const {
    const auto d = std::gcd(num, den);
    return d == 0 ? Rational{0, 1} : Rational{num / d, den / d};
  }
  friend constexpr Rational operator+(Rational a, Rational b) {
    const auto l = std::lcm(a.den, b.den);
    return Rational{a.num * (l / a.den) + b.num * (l / b.den), l}.reduced();
  }
  friend constexpr bool operator==(Rational a, Rational b) {
    const auto x = a.reduced();
    const auto y = b.reduced();
    return x.num == y.num && x.den == y.den;
  }
  constexpr double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
};

class FitnessLandscape {
 public:
  FitnessLandscape() = default;

  FitnessLandscape(double delta, std::vector<Sign> normal_signs, std::vector<Sign> mutant_signs)
      : delta_(delta), normal_(std::move(normal_signs)), mutant_(std::move(mutant_signs)) {
    detail::require(delta_ >= 0.0 && delta_ < 1.0, "delta must lie in [0, 1)");
    detail::require(!normal_.empty(), "landscape needs at least one site");
    detail::require(normal_.size() == mutant_.size(),
                    "normal and mutant sign arrays must have the same length");
    auto is_sign = [](Sign s) { return s == 1 || s == -1; };
    detail::require(std::ranges::all_of(normal_, is_sign) && std::ranges::all_of(mutant_, is_sign),
                    "signs must be +1 or -1");
  }

  std::size_t n_sites() const noexcept { return normal_.size(); }
  double delta() const noexcept { return delta_; }
  std::span<const Sign> normal_signs() const noexcept { return normal_; }
  std::span<const Sign> mutant_signs() const noexcept { return mutant_; }

  double normal_fitness(std::size_t k) const noexcept { return 1.0 + delta_ * normal_[k]; }
  double mutant_fitness(std::size_t k) const noexcept { return 1.0 + delta_ * mutant_[k]; }

  // Same environment with the mutant and normal roles exchanged.
  FitnessLandscape swapped() const { return FitnessLandscape(delta_, mutant_, normal_); }

  friend bool operator==(const FitnessLandscape&, const FitnessLandscape&) = default;

 private:
  friend void sample_landscape_into(FitnessLandscape&, std::size_t, double, Stream&);

  double delta_ = 0.0;
  std::vector<Sign> normal_;
  std::vector<Sign> mutant_;
};

namespace detail {

inline void validate_sampling(std::size_t n, double delta) {
  require(n >= 2, "landscape needs n >= 2 sites");
  require(delta >= 0.0 && delta < 1.0, "delta must lie in [0, 1)");
}

}  // namespace detail

// Reuses the storage of `out`; the hot loop of the Monte Carlo estimators.
// Normal signs are drawn first, then mutant signs, one bit each.
inline void sample_landscape_into(FitnessLandscape& out, std::size_t n, double delta, Stream& rng) {
  detail::validate_sampling(n, delta);
  out.delta_ = delta;
  out.normal_.resize(n);
  out.mutant_.resize(n);
  std::uint64_t bits = 0;
  int left = 0;
  auto next = [&]() -> Sign {
    if (left == 0) {
      bits = rng();
      left = 64;
    }
    const Sign s = (bits & 1U) ? Sign{1} : Sign{-1};
    bits >>= 1;
    --left;
    return s;
  };
  for (auto& s : out.normal_) s = next();
  for (auto& s : out.mutant_) s = next();
}

inline FitnessLandscape sample_landscape(std::size_t n, double delta, Stream& rng) {
  FitnessLandscape out;
  sample_landscape_into(out, n, delta, rng);
  return out;
}

// Landscape for enumeration code `code` in [0, 4^n): bit k is normal sign k,
// bit n + k is mutant sign k (1 = plus).
inline FitnessLandscape landscape_from_code(std::size_t n, double delta, std::uint64_t code) {
  std::vector<Sign> normal(n), mutant(n);
  for (std::size_t k = 0; k < n; ++k) {
    normal[k] = ((code >> k) & 1U) ? 1 : -1;
    mutant[k] = ((code >> (n + k)) & 1U) ? 1 : -1;
  }
  return FitnessLandscape(delta, std::move(normal), std::move(mutant));
}

inline std::uint64_t landscape_code(const FitnessLandscape& l) {
  const std::size_t n = l.n_sites();
  std::uint64_t code = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (l.normal_signs()[k] > 0) code |= std::uint64_t{1} << k;
    if (l.mutant_signs()[k] > 0) code |= std::uint64_t{1} << (n + k);
  }
  return code;
}

struct WeightedLandscape {
  FitnessLandscape landscape;
  Rational weight;
};

namespace detail {

inline void check_enumerable(std::size_t n, double delta, std::size_t cap) {
  require(n >= 1, "enumeration needs n >= 1");
  require(delta >= 0.0 && delta < 1.0, "delta must lie in [0, 1)");
  if (n > cap || n > 31) {
    throw InfeasibleError("enumeration infeasible: n = " + std::to_string(n) +
                          " exceeds the enumeration cap of " + std::to_string(cap) +
                          " sites (4^n environments); use the Monte Carlo estimator");
  }
}

constexpr std::uint64_t central_binomial(std::size_t n) {
  // C(2n, n), exact for the n allowed by the enumeration cap.
  std::uint64_t c = 1;
  for (std::size_t i = 1; i <= n; ++i) c = c * (n + i) / i;
  return c;
}

inline bool balanced_code(std::size_t n, std::uint64_t code) {
  const std::uint64_t low_mask = (std::uint64_t{1} << n) - 1;
  return std::popcount(code & low_mask) == std::popcount(code >> n);
}

}  // namespace detail

// All 4^n sign assignments, each with weight 4^-n. Lazy; nothing is stored.
inline auto enumerate_landscapes(std::size_t n, double delta,
                                 std::size_t cap = kDefaultEnumerationCap) {
  detail::check_enumerable(n, delta, cap);
  const std::uint64_t total = std::uint64_t{1} << (2 * n);
  return std::views::iota(std::uint64_t{0}, total) |
         std::views::transform([n, delta, total](std::uint64_t code) {
           return WeightedLandscape{landscape_from_code(n, delta, code), Rational{1, total}};
         });
}

// Sign assignments with sum(normal_signs) == sum(mutant_signs), uniformly
// weighted. There are C(2n, n) of them.
inline auto enumerate_conditioned(std::size_t n, double delta,
                                  std::size_t cap = kDefaultEnumerationCap) {
  detail::require(n % 2 == 0,
                  "conditioned enumeration needs an even number of sites (N = 2k)");
  detail::check_enumerable(n, delta, cap);
  const std::uint64_t total = std::uint64_t{1} << (2 * n);
  const std::uint64_t count = detail::central_binomial(n);
  return std::views::iota(std::uint64_t{0}, total) |
         std::views::filter([n](std::uint64_t code) { return detail::balanced_code(n, code); }) |
         std::views::transform([n, delta, count](std::uint64_t code) {
           return WeightedLandscape{landscape_from_code(n, delta, code), Rational{1, count}};
         });
}

// Per-site install probabilities and the induced birth-death chain of the
// right-most mutant. Index conventions are 0-based: beta[k] is site k + 1,
// hop[k] and fall[k] belong to interior state k + 1 (k = 0..N-2).
struct HopProfile {
  std::size_t n_sites = 0;
  std::vector<double> beta;  // empty for synthetic chains
  std::vector<double> hop;   // p_k, step right
  std::vector<double> fall;  // q_k = 1 - p_k, step left

  // Chain given directly by its right-step probabilities (p in [0,1]).
  static HopProfile from_hops(std::vector<double> hops) {
    detail::require(!hops.empty(), "a chain needs at least one interior state");
    HopProfile out;
    out.n_sites = hops.size() + 1;
    out.fall.reserve(hops.size());
    for (double p : hops) {
      detail::require(p >= 0.0 && p <= 1.0, "hop probabilities must lie in [0, 1]");
      out.fall.push_back(1.0 - p);
    }
    out.hop = std::move(hops);
    return out;
  }
};

inline HopProfile hop_profile(const FitnessLandscape& l) {
  const std::size_t n = l.n_sites();
  detail::require(n >= 2, "hop profile needs n >= 2 sites");
  HopProfile out;
  out.n_sites = n;
  out.beta.resize(n);
  std::vector<double> stay(n);  // 1 - beta, computed from the normal fitness directly
  for (std::size_t k = 0; k < n; ++k) {
    const double mu = l.mutant_fitness(k);
    const double nu = l.normal_fitness(k);
    out.beta[k] = mu / (mu + nu);
    stay[k] = nu / (mu + nu);
  }
  out.hop.resize(n - 1);
  out.fall.resize(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double up = out.beta[k + 1];
    const double down = stay[k];
    out.hop[k] = up / (up + down);
    out.fall[k] = down / (up + down);
  }
  return out;
}

// Canonical text form: "N=3 delta=0.2 B=+-+ B'=--+" (B = normal, B' = mutant).
inline std::string encode_landscape(const FitnessLandscape& l) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, l.delta());
  std::string out = "N=" + std::to_string(l.n_sites()) + " delta=" + std::string(buf, res.ptr);
  auto signs = [](std::span<const Sign> s) {
    std::string t;
    t.reserve(s.size());
    for (Sign v : s) t.push_back(v > 0 ? '+' : '-');
    return t;
  };
  out += " B=" + signs(l.normal_signs());
  out += " B'=" + signs(l.mutant_signs());
  return out;
}

inline FitnessLandscape parse_landscape(std::string_view text) {
  auto fail = [&](const std::string& why) -> DomainError {
    return DomainError("bad landscape encoding '" + std::string(text) + "': " + why);
  };
  auto take_field = [&](std::string_view& rest, std::string_view key) {
    while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    if (!rest.starts_with(key)) throw fail("expected '" + std::string(key) + "'");
    rest.remove_prefix(key.size());
    const auto end = rest.find(' ');
    const auto value = rest.substr(0, end);
    rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    return value;
  };
  auto parse_signs = [&](std::string_view s) {
    std::vector<Sign> out;
    for (char c : s) {
      if (c == '+') out.push_back(1);
      else if (c == '-') out.push_back(-1);
      else throw fail("sign characters must be '+' or '-'");
    }
    return out;
  };

  std::string_view rest = text;
  const auto n_text = take_field(rest, "N=");
  const auto delta_text = take_field(rest, "delta=");
  const auto normal_text = take_field(rest, "B=");
  const auto mutant_text = take_field(rest, "B'=");
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (!rest.empty()) throw fail("trailing characters");

  std::size_t n = 0;
  if (auto r = std::from_chars(n_text.data(), n_text.data() + n_text.size(), n);
      r.ec != std::errc{} || r.ptr != n_text.data() + n_text.size()) {
    throw fail("N is not an integer");
  }
  double delta = 0.0;
  if (auto r = std::from_chars(delta_text.data(), delta_text.data() + delta_text.size(), delta);
      r.ec != std::errc{} || r.ptr != delta_text.data() + delta_text.size()) {
    throw fail("delta is not a number");
  }
  auto normal = parse_signs(normal_text);
  auto mutant = parse_signs(mutant_text);
  if (normal.size() != n || mutant.size() != n) throw fail("sign strings must have N characters");
  return FitnessLandscape(delta, std::move(normal), std::move(mutant));
}

}  // namespace fixlab
