// Copyright 2026 The gaplab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file dynamics.hpp
 * @brief Base dynamics (periodic shifts, torus rotations, affine torus maps,
 *        primitive substitution subshifts, Bernoulli shifts) and the sampled
 *        potentials V(n) = f(T^n w).
 *
 * Randomness: phase ensembles draw from std::mt19937_64 seeded with the user
 * seed and map 64-bit outputs to [0,1) as (x >> 11) * 2^-53. Bernoulli site
 * values are a counter-based hash, SplitMix64(seed, n), so V(n) is random
 * access and independent of evaluation order. Both are bit-reproducible.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "gaplab/error.hpp"
#include "gaplab/int_matrix.hpp"

namespace gaplab {

// ---------------------------------------------------------------------------
// Substitutions

/// A substitution on a finite alphabet of single-character symbols.
class Substitution {
 public:
  Substitution(std::string alphabet, std::map<char, std::string> rules)
      : alphabet_(std::move(alphabet)), rules_(std::move(rules)) {
    if (alphabet_.empty()) throw ConfigError("substitution: empty alphabet");
    std::set<char> seen;
    for (char a : alphabet_) {
      if (!seen.insert(a).second) throw ConfigError(std::string("substitution: duplicate symbol '") + a + "'");
      auto it = rules_.find(a);
      if (it == rules_.end()) throw ConfigError(std::string("substitution: no rule for symbol '") + a + "'");
      if (it->second.empty())
        throw ConfigError(std::string("substitution: symbol '") + a + "' maps to the empty word");
      for (char s : it->second)
        if (alphabet_.find(s) == std::string::npos)
          throw ConfigError(std::string("substitution: rule for '") + a + "' uses unknown symbol '" + s + "'");
    }
    for (const auto& [a, w] : rules_)
      if (alphabet_.find(a) == std::string::npos)
        throw ConfigError(std::string("substitution: rule given for unknown symbol '") + a + "'");
    if (!primitive())
      throw ConfigError("substitution: substitution matrix is not primitive");
  }

  const std::string& alphabet() const noexcept { return alphabet_; }
  const std::map<char, std::string>& rules() const noexcept { return rules_; }
  const std::string& image(char a) const { return rules_.at(a); }
  std::size_t symbol_index(char a) const { return alphabet_.find(a); }

  /// S applied to a word by concatenation.
  std::string apply(std::string_view word) const {
    std::string out;
    for (char c : word) out += rules_.at(c);
    return out;
  }

  /// M(i, j) = number of occurrences of symbol i in S(symbol j).
  IntMatrix matrix() const {
    const std::size_t n = alphabet_.size();
    IntMatrix m(n, n);
    for (std::size_t j = 0; j < n; ++j)
      for (char c : rules_.at(alphabet_[j])) ++m(symbol_index(c), j);
    return m;
  }

  /// Some power k <= 2 |A|^2 of M is entrywise positive.
  bool primitive() const {
    const std::size_t n = alphabet_.size();
    // Work on the 0/1 pattern so powers cannot overflow.
    IntMatrix pattern = matrix();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) pattern(i, j) = pattern(i, j) > 0;
    IntMatrix power = pattern;
    for (std::size_t k = 1; k <= 2 * n * n; ++k) {
      if (power.all_positive()) return true;
      power = power * pattern;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) power(i, j) = power(i, j) > 0;
    }
    return false;
  }

  /// Seed symbol a and power p such that S^p(a) begins with a. The
  /// first-letter map is iterated from each symbol in alphabet order; the
  /// first symbol lying on a cycle is returned with that cycle's length.
  std::pair<char, unsigned> seed() const {
    for (char start : alphabet_) {
      char a = start;
      for (unsigned p = 1; p <= alphabet_.size(); ++p) {
        a = rules_.at(a).front();
        if (a == start) return {start, p};
      }
    }
    throw ConfigError("substitution: no fixed-point seed symbol");
  }

  friend bool operator==(const Substitution&, const Substitution&) = default;

 private:
  std::string alphabet_;
  std::map<char, std::string> rules_;
};

/// Prefix of the one-sided fixed point of S^p grown from the seed symbol.
inline std::string fixed_point_prefix(const Substitution& subst, std::size_t length) {
  if (length < 1) throw ConfigError("fixed_point_prefix: length must be >= 1");
  const auto [a, p] = subst.seed();
  std::string word(1, a);
  while (word.size() < length) {
    std::string next = word;
    for (unsigned k = 0; k < p; ++k) {
      std::string applied;
      for (char c : next) {
        applied += subst.image(c);
        if (applied.size() >= length) break;
      }
      next = std::move(applied);
    }
    if (next.size() <= word.size()) throw ConfigError("fixed_point_prefix: substitution does not grow the seed word");
    word = std::move(next);
  }
  word.resize(length);
  return word;
}

namespace substitutions {

inline Substitution fibonacci() { return Substitution("01", {{'0', "01"}, {'1', "0"}}); }
inline Substitution thue_morse() { return Substitution("01", {{'0', "01"}, {'1', "10"}}); }
inline Substitution period_doubling() { return Substitution("01", {{'0', "01"}, {'1', "00"}}); }

}  // namespace substitutions

// ---------------------------------------------------------------------------
// Systems

struct PeriodicSystem {
  std::vector<double> values;  // one period, p = values.size()
};

struct RotationSystem {
  std::vector<double> alpha;  // rotation vector in [0,1)^d
};

struct AffineSystem {
  IntMatrix matrix;         // A in GL(d, Z)
  std::vector<double> shift;  // b in [0,1)^d
};

struct SubstitutionSystem {
  Substitution substitution;
};

struct BernoulliSystem {
  std::vector<double> values;
  std::vector<double> weights;
  std::uint64_t seed = 1;
};

using SystemDescriptor = std::variant<PeriodicSystem, RotationSystem, AffineSystem, SubstitutionSystem, BernoulliSystem>;

inline std::string system_kind(const SystemDescriptor& s) {
  static const char* names[] = {"periodic", "rotation", "affine", "substitution", "bernoulli"};
  return names[s.index()];
}

namespace detail {

inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

/// Convergent p/q of x with q <= max_den matching x to within tol, if any.
inline std::optional<std::pair<std::int64_t, std::int64_t>> rational_relation(double x, std::int64_t max_den,
                                                                              double tol) {
  std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(r);
    if (std::abs(a) > 1e15) break;
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t p2 = ai * p1 + p0, q2 = ai * q1 + q0;
    if (q2 > max_den) break;
    if (std::abs(x - static_cast<double>(p2) / static_cast<double>(q2)) <= tol) return std::make_pair(p2, q2);
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    const double frac = r - a;
    if (frac == 0.0) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

}  // namespace detail

/// Validates a descriptor; throws ConfigError on hard violations and returns
/// human-readable warnings (e.g. resonant rotation vectors).
inline std::vector<std::string> validate_system(const SystemDescriptor& system) {
  std::vector<std::string> warnings;
  auto unit_coords = [](const std::vector<double>& v, const char* what) {
    if (v.empty()) throw ConfigError(std::string(what) + ": empty vector");
    for (double x : v)
      if (!(x >= 0.0 && x < 1.0)) throw ConfigError(std::string(what) + ": coordinates must lie in [0,1)");
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PeriodicSystem>) {
          if (s.values.empty()) throw ConfigError("periodic: period must be >= 1");
          for (double v : s.values)
            if (!std::isfinite(v)) throw ConfigError("periodic: non-finite value");
        } else if constexpr (std::is_same_v<T, RotationSystem>) {
          unit_coords(s.alpha, "rotation.alpha");
          for (std::size_t j = 0; j < s.alpha.size(); ++j) {
            if (auto rel = detail::rational_relation(s.alpha[j], 1000000, 1e-13))
              warnings.push_back("rotation.alpha[" + std::to_string(j) + "] is rational to within 1e-13: " +
                                 std::to_string(rel->first) + "/" + std::to_string(rel->second));
          }
          // Small integer relations k1 a1 + ... + kd ad in Z for d > 1.
          const std::size_t d = s.alpha.size();
          if (d > 1 && d <= 3) {
            const int cap = 20;
            std::vector<int> k(d, -cap);
            while (true) {
              bool nonzero = false;
              double sum = 0.0;
              int count_nz = 0;
              for (std::size_t j = 0; j < d; ++j) {
                sum += k[j] * s.alpha[j];
                nonzero |= k[j] != 0;
                count_nz += k[j] != 0;
              }
              if (nonzero && count_nz > 1 && std::abs(sum - std::round(sum)) < 1e-12) {
                warnings.push_back("rotation.alpha has a small integer relation with 1");
                break;
              }
              std::size_t j = 0;
              while (j < d && ++k[j] > cap) k[j++] = -cap;
              if (j == d) break;
            }
          }
        } else if constexpr (std::is_same_v<T, AffineSystem>) {
          const auto& a = s.matrix;
          if (!a.square() || a.rows() == 0) throw ConfigError("affine.matrix must be square and non-empty");
          if (s.shift.size() != a.rows()) throw ConfigError("affine.shift dimension does not match matrix");
          unit_coords(s.shift, "affine.shift");
          const auto det = a.determinant();
          if (det != 1 && det != -1) throw ConfigError("affine.matrix must have determinant +-1");
        } else if constexpr (std::is_same_v<T, SubstitutionSystem>) {
          (void)s.substitution.seed();
        } else if constexpr (std::is_same_v<T, BernoulliSystem>) {
          if (s.values.empty() || s.values.size() != s.weights.size())
            throw ConfigError("bernoulli: values and weights must be non-empty and of equal length");
          double total = 0.0;
          for (double w : s.weights) {
            if (!(w > 0.0)) throw ConfigError("bernoulli.weights must be positive");
            total += w;
          }
          if (std::abs(total - 1.0) > 1e-12) throw ConfigError("bernoulli.weights must sum to 1");
          for (double v : s.values)
            if (!std::isfinite(v)) throw ConfigError("bernoulli: non-finite value");
        }
      },
      system);
  return warnings;
}

// ---------------------------------------------------------------------------
// Sampling functions

/// f(w) = coupling * sum_j coefficients[j] * cos(2 pi w_j)
struct CosineSum {
  std::vector<double> coefficients;
  double coupling = 1.0;
};

struct LetterValues {
  std::map<char, double> values;
};

/// The system's own values (periodic values, Bernoulli alphabet).
struct Direct {};

using SamplingFunction = std::variant<CosineSum, LetterValues, Direct>;

// ---------------------------------------------------------------------------
// Phases

struct TorusPoint {
  std::vector<double> coords;
};

/// Shift into a periodic sequence, or window offset into a fixed-point prefix.
struct ShiftIndex {
  std::size_t value = 0;
};

struct SeedPhase {
  std::uint64_t value = 0;
};

using Phase = std::variant<TorusPoint, ShiftIndex, SeedPhase>;

// ---------------------------------------------------------------------------
// Affine maps

/// T^n w with T w = A w + b (mod 1), by repeated application. Negative n
/// applies the inverse map.
inline std::vector<double> iterate_affine(const IntMatrix& a, const std::vector<double>& b, std::vector<double> omega,
                                          long n) {
  const std::size_t d = a.rows();
  if (!a.square() || b.size() != d || omega.size() != d) throw ConfigError("iterate_affine: dimension mismatch");
  IntMatrix m = a;
  std::vector<double> shift = b;
  if (n < 0) {
    // T^{-1} w = A^{-1} w - A^{-1} b, with A^{-1} = det(A) adj(A).
    const std::int64_t det = a.determinant();
    if (det != 1 && det != -1) throw ConfigError("iterate_affine: matrix is not unimodular");
    IntMatrix inv(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        IntMatrix minor(d - 1, d - 1);
        for (std::size_t r = 0, mr = 0; r < d; ++r) {
          if (r == j) continue;
          for (std::size_t c = 0, mc = 0; c < d; ++c) {
            if (c == i) continue;
            minor(mr, mc++) = a(r, c);
          }
          ++mr;
        }
        const std::int64_t cof = ((i + j) % 2 ? -1 : 1) * (d > 1 ? minor.determinant() : 1);
        inv(i, j) = det * cof;
      }
    m = inv;
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += static_cast<double>(inv(i, j)) * b[j];
      shift[i] = detail::wrap_unit(-s);
    }
    n = -n;
  }
  std::vector<double> next(d);
  for (long step = 0; step < n; ++step) {
    for (std::size_t i = 0; i < d; ++i) {
      double s = shift[i];
      for (std::size_t j = 0; j < d; ++j) {
        // Reduce each term before summing to keep magnitudes O(|A|).
        s += detail::wrap_unit(static_cast<double>(m(i, j)) * omega[j]);
      }
      next[i] = detail::wrap_unit(s);
    }
    omega.swap(next);
  }
  return omega;
}

// ---------------------------------------------------------------------------
// Potentials

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline constexpr double unit_double(std::uint64_t x) noexcept {
  return static_cast<double>(x >> 11) * 0x1p-53;
}

/// Index of the Bernoulli symbol at site n for the given seed.
inline std::size_t bernoulli_symbol(const BernoulliSystem& s, std::uint64_t seed, long n) {
  const double u = unit_double(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(n))));
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < s.weights.size(); ++k) {
    acc += s.weights[k];
    if (u < acc) return k;
  }
  return s.weights.size() - 1;
}

[[noreturn]] inline void mismatch(const std::string& what) {
  throw ConfigError("sampling function/system mismatch: " + what);
}

}  // namespace detail

/// Offsets into a substitution fixed point are drawn from [0, kSubstitutionOffsetSpan).
inline constexpr std::size_t kSubstitutionOffsetSpan = 1000000;

/// V(n) = f(T^n w) for n = first, ..., first + count - 1.
inline std::vector<double> sample_potential(const SystemDescriptor& system, const SamplingFunction& f,
                                            const Phase& phase, long first, std::size_t count) {
  std::vector<double> out(count);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PeriodicSystem>) {
          if (!std::holds_alternative<Direct>(f)) detail::mismatch("periodic systems take direct values");
          const auto* shift = std::get_if<ShiftIndex>(&phase);
          if (!shift) detail::mismatch("periodic systems take a shift index phase");
          const long p = static_cast<long>(s.values.size());
          for (std::size_t i = 0; i < count; ++i) {
            long k = (static_cast<long>(shift->value) + first + static_cast<long>(i)) % p;
            if (k < 0) k += p;
            out[i] = s.values[static_cast<std::size_t>(k)];
          }
        } else if constexpr (std::is_same_v<T, RotationSystem> || std::is_same_v<T, AffineSystem>) {
          const auto* cs = std::get_if<CosineSum>(&f);
          if (!cs) detail::mismatch("torus systems take a cosine-sum sampling function");
          const auto* pt = std::get_if<TorusPoint>(&phase);
          if (!pt) detail::mismatch("torus systems take a torus point phase");
          std::size_t d;
          if constexpr (std::is_same_v<T, RotationSystem>) d = s.alpha.size();
          else d = s.matrix.rows();
          if (pt->coords.size() != d || cs->coefficients.size() != d)
            detail::mismatch("torus dimension differs between system, phase and cosine coefficients");
          auto eval = [&](const std::vector<double>& w) {
            double v = 0.0;
            for (std::size_t j = 0; j < d; ++j) v += cs->coefficients[j] * std::cos(2.0 * std::numbers::pi * w[j]);
            return cs->coupling * v;
          };
          if constexpr (std::is_same_v<T, RotationSystem>) {
            for (std::size_t i = 0; i < count; ++i) {
              const long n = first + static_cast<long>(i);
              std::vector<double> w(d);
              // n * alpha reduced exactly in long double before adding the phase.
              for (std::size_t j = 0; j < d; ++j) {
                const long double na = static_cast<long double>(n) * s.alpha[j];
                w[j] = detail::wrap_unit(pt->coords[j] + static_cast<double>(na - std::floor(na)));
              }
              out[i] = eval(w);
            }
          } else {
            std::vector<double> w = iterate_affine(s.matrix, s.shift, pt->coords, first);
            for (std::size_t i = 0; i < count; ++i) {
              out[i] = eval(w);
              w = iterate_affine(s.matrix, s.shift, std::move(w), 1);
            }
          }
        } else if constexpr (std::is_same_v<T, SubstitutionSystem>) {
          const auto* lv = std::get_if<LetterValues>(&f);
          if (!lv) detail::mismatch("substitution systems take letter values");
          const auto* shift = std::get_if<ShiftIndex>(&phase);
          if (!shift) detail::mismatch("substitution systems take a window offset phase");
          for (char a : s.substitution.alphabet())
            if (!lv->values.count(a)) throw ConfigError(std::string("letter values: no value for symbol '") + a + "'");
          const long start = static_cast<long>(shift->value) + first;
          if (start < 0) throw ConfigError("substitution window starts before the fixed point");
          const std::string word =
              fixed_point_prefix(s.substitution, static_cast<std::size_t>(start) + std::max<std::size_t>(count, 1));
          for (std::size_t i = 0; i < count; ++i) out[i] = lv->values.at(word[static_cast<std::size_t>(start) + i]);
        } else if constexpr (std::is_same_v<T, BernoulliSystem>) {
          if (!std::holds_alternative<Direct>(f)) detail::mismatch("bernoulli systems take direct values");
          const auto* seed = std::get_if<SeedPhase>(&phase);
          if (!seed) detail::mismatch("bernoulli systems take a seed phase");
          for (std::size_t i = 0; i < count; ++i)
            out[i] = s.values[detail::bernoulli_symbol(s, seed->value, first + static_cast<long>(i))];
        }
      },
      system);
  return out;
}

/// Deterministic phases standing in for averages over the invariant measure.
inline std::vector<Phase> phase_ensemble(const SystemDescriptor& system, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("phase_ensemble: count must be >= 1");
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return detail::unit_double(rng()); };
  std::vector<Phase> phases;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PeriodicSystem>) {
          const std::size_t p = std::min(count, s.values.size());
          for (std::size_t k = 0; k < p; ++k) phases.emplace_back(ShiftIndex{k});
        } else if constexpr (std::is_same_v<T, RotationSystem> || std::is_same_v<T, AffineSystem>) {
          std::size_t d;
          if constexpr (std::is_same_v<T, RotationSystem>) d = s.alpha.size();
          else d = s.matrix.rows();
          for (std::size_t k = 0; k < count; ++k) {
            TorusPoint pt{std::vector<double>(d)};
            for (auto& x : pt.coords) x = uniform();
            phases.emplace_back(std::move(pt));
          }
        } else if constexpr (std::is_same_v<T, SubstitutionSystem>) {
          for (std::size_t k = 0; k < count; ++k)
            phases.emplace_back(ShiftIndex{static_cast<std::size_t>(rng() % kSubstitutionOffsetSpan)});
        } else if constexpr (std::is_same_v<T, BernoulliSystem>) {
          for (std::size_t k = 0; k < count; ++k)
            phases.emplace_back(SeedPhase{detail::splitmix64(s.seed ^ detail::splitmix64(seed + k))});
        }
      },
      system);
  return phases;
}

/// Single-point convenience phase: the origin, shift 0, or the system seed.
inline Phase default_phase(const SystemDescriptor& system) {
  return std::visit(
      [](const auto& s) -> Phase {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, RotationSystem>) return TorusPoint{std::vector<double>(s.alpha.size(), 0.0)};
        else if constexpr (std::is_same_v<T, AffineSystem>) return TorusPoint{std::vector<double>(s.matrix.rows(), 0.0)};
        else if constexpr (std::is_same_v<T, BernoulliSystem>) return SeedPhase{s.seed};
        else return ShiftIndex{0};
      },
      system);
}

}  // namespace gaplab
