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
 * @file label_groups.hpp
 * @brief Predicted gap-label groups per class of base dynamics, candidate
 *        label enumeration and matching of measured labels.
 *
 * Every group is turned into one of two concrete forms before enumeration:
 *
 *  - a rational lattice (1/D) Z, used when all generators are rational
 *    (periodic systems, integer Perron eigenvalues, rational weights);
 *  - a real lattice u Z + b_1 Z + ... + b_s Z with u = 1/g a unit dividing 1,
 *    enumerated as m u + sum n_j b_j with |n_j| <= cap.
 *
 * Irrational Perron modules and weight rings are brought to the second form by
 * an LLL integer-relation reduction of their (finite, truncated) generator
 * set; see reduce_real_module.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gaplab/dynamics.hpp"
#include "gaplab/error.hpp"
#include "gaplab/int_matrix.hpp"

namespace gaplab {

/// A group element near a measured label.
struct LabelMatch {
  std::vector<std::int64_t> representation;
  double value = 0.0;
  double residual = 0.0;
};

// ---------------------------------------------------------------------------
// Integer kernel of I - A^T

namespace detail {

/// Row-style Hermite normal form of the rows of `basis` (echelon, positive
/// pivots, entries above pivots reduced into [0, pivot)).
inline std::vector<std::vector<std::int64_t>> hermite_rows(std::vector<std::vector<std::int64_t>> rows) {
  if (rows.empty()) return rows;
  const std::size_t d = rows.front().size();
  std::size_t r = 0;
  for (std::size_t c = 0; c < d && r < rows.size(); ++c) {
    // Euclid on column c over rows r..end.
    while (true) {
      std::size_t piv = rows.size();
      for (std::size_t i = r; i < rows.size(); ++i)
        if (rows[i][c] != 0 && (piv == rows.size() || std::abs(rows[i][c]) < std::abs(rows[piv][c]))) piv = i;
      if (piv == rows.size()) break;
      std::swap(rows[r], rows[piv]);
      bool others = false;
      for (std::size_t i = r + 1; i < rows.size(); ++i) {
        if (rows[i][c] == 0) continue;
        const std::int64_t q = rows[i][c] / rows[r][c];
        for (std::size_t k = 0; k < d; ++k) rows[i][k] = checked_sub(rows[i][k], checked_mul(q, rows[r][k]));
        others |= rows[i][c] != 0;
      }
      if (!others) break;
    }
    if (rows[r][c] == 0) continue;
    if (rows[r][c] < 0)
      for (auto& x : rows[r]) x = -x;
    for (std::size_t i = 0; i < r; ++i) {
      std::int64_t q = rows[i][c] / rows[r][c];
      if (rows[i][c] - q * rows[r][c] < 0) --q;
      for (std::size_t k = 0; k < d; ++k) rows[i][k] = checked_sub(rows[i][k], checked_mul(q, rows[r][k]));
    }
    ++r;
  }
  rows.resize(r);
  return rows;
}

}  // namespace detail

/// Z-basis of Z^d ∩ ker(I - A^T), by unimodular column reduction of I - A^T.
/// The basis is returned in row Hermite normal form.
inline std::vector<std::vector<std::int64_t>> integer_kernel(const IntMatrix& a) {
  if (!a.square()) throw ConfigError("integer_kernel: matrix must be square");
  const std::size_t d = a.rows();
  IntMatrix b = IntMatrix::identity(d) - a.transpose();
  IntMatrix u = IntMatrix::identity(d);
  auto col_op = [&](std::size_t dst, std::size_t src, std::int64_t q) {  // col dst -= q col src
    for (std::size_t r = 0; r < d; ++r) {
      b(r, dst) = detail::checked_sub(b(r, dst), detail::checked_mul(q, b(r, src)));
      u(r, dst) = detail::checked_sub(u(r, dst), detail::checked_mul(q, u(r, src)));
    }
  };
  auto col_swap = [&](std::size_t x, std::size_t y) {
    for (std::size_t r = 0; r < d; ++r) {
      std::swap(b(r, x), b(r, y));
      std::swap(u(r, x), u(r, y));
    }
  };
  std::size_t pivot_col = 0;
  for (std::size_t row = 0; row < d && pivot_col < d; ++row) {
    while (true) {
      std::size_t best = d;
      for (std::size_t c = pivot_col; c < d; ++c)
        if (b(row, c) != 0 && (best == d || std::abs(b(row, c)) < std::abs(b(row, best)))) best = c;
      if (best == d) break;
      col_swap(pivot_col, best);
      bool others = false;
      for (std::size_t c = pivot_col + 1; c < d; ++c) {
        if (b(row, c) == 0) continue;
        col_op(c, pivot_col, b(row, c) / b(row, pivot_col));
        others |= b(row, c) != 0;
      }
      if (!others) {
        ++pivot_col;
        break;
      }
    }
  }
  std::vector<std::vector<std::int64_t>> basis;
  for (std::size_t c = pivot_col; c < d; ++c) {
    std::vector<std::int64_t> k(d);
    for (std::size_t r = 0; r < d; ++r) k[r] = u(r, c);
    basis.push_back(std::move(k));
  }
  return detail::hermite_rows(std::move(basis));
}

/// True if some eigenvalue of A is a root of unity: det(A^k - I) = 0 for a k
/// with phi(k) <= d.
inline bool has_root_of_unity_eigenvalue(const IntMatrix& a) {
  const std::size_t d = a.rows();
  auto phi = [](unsigned k) {
    unsigned result = k;
    for (unsigned p = 2, n = k; p <= n; ++p) {
      if (n % p) continue;
      while (n % p == 0) n /= p;
      result -= result / p;
    }
    return result;
  };
  IntMatrix power = IntMatrix::identity(d);
  // phi(k) >= sqrt(k/2), so phi(k) <= d forces k <= 2 d^2.
  for (unsigned k = 1; k <= 2 * d * d; ++k) {
    try {
      power = power * a;
    } catch (const RangeError&) {
      return false;  // entries only blow up when no eigenvalue has modulus 1 with finite order
    }
    if (phi(k) > d) continue;
    if ((power - IntMatrix::identity(d)).determinant() == 0) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Derived substitutions and Perron data

/// The induced substitution S_m on the legal words of length m.
struct DerivedSubstitution {
  std::size_t m = 1;
  /// Legal length-m words, ordered lexicographically by alphabet order.
  std::vector<std::string> words;
  /// rules[j] = S_m(words[j]) as a sequence of length-m words.
  std::vector<std::vector<std::string>> rules;
  /// matrix(i, j) = occurrences of words[i] in S_m(words[j]).
  IntMatrix matrix;

  std::size_t index_of(const std::string& w) const {
    auto it = std::find(words.begin(), words.end(), w);
    if (it == words.end()) throw ConfigError("derived substitution: '" + w + "' is not a legal word");
    return static_cast<std::size_t>(it - words.begin());
  }
};

namespace detail {

inline bool alphabet_less(const Substitution& s, const std::string& x, const std::string& y) {
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(),
                                      [&](char a, char b) { return s.symbol_index(a) < s.symbol_index(b); });
}

inline std::set<std::string> subwords(const std::string& text, std::size_t m) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + m <= text.size(); ++i) out.insert(text.substr(i, m));
  return out;
}

inline constexpr std::size_t kMaxWordPrefix = std::size_t{1} << 24;

}  // namespace detail

/// Legal words of length m, collected from fixed-point prefixes until two
/// successive doublings leave the set unchanged.
inline std::vector<std::string> legal_words(const Substitution& subst, std::size_t m) {
  if (m < 1) throw ConfigError("legal_words: m must be >= 1");
  std::size_t length = std::max<std::size_t>(256, 16 * m);
  std::set<std::string> prev = detail::subwords(fixed_point_prefix(subst, length), m);
  int stable = 0;
  while (stable < 2) {
    length *= 2;
    if (length > detail::kMaxWordPrefix)
      throw NumericalError("legal_words: word set did not stabilize within the prefix cap");
    auto next = detail::subwords(fixed_point_prefix(subst, length), m);
    stable = next == prev ? stable + 1 : 0;
    prev = std::move(next);
  }
  std::vector<std::string> words(prev.begin(), prev.end());
  std::sort(words.begin(), words.end(),
            [&](const std::string& x, const std::string& y) { return detail::alphabet_less(subst, x, y); });
  return words;
}

/// The m-th derived substitution: for w = w_1...w_m with S(w) = s_1 s_2 ...,
/// S_m(w) lists the |S(w_1)| windows (s_i ... s_{i+m-1}).
inline DerivedSubstitution derive_substitution(const Substitution& subst, std::size_t m) {
  DerivedSubstitution d;
  d.m = m;
  d.words = legal_words(subst, m);
  const std::size_t n = d.words.size();
  d.matrix = IntMatrix(n, n);
  d.rules.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::string& w = d.words[j];
    const std::string image = subst.apply(w);
    const std::size_t windows = subst.image(w.front()).size();
    for (std::size_t i = 0; i < windows; ++i) {
      std::string window = image.substr(i, m);
      d.matrix(d.index_of(window), j) += 1;
      d.rules[j].push_back(std::move(window));
    }
  }
  return d;
}

struct PerronData {
  double theta = 0.0;
  std::vector<double> vector;  // positive, sums to 1

  /// max_i |(M v)_i - theta v_i|
  double residual(const IntMatrix& m) const {
    double r = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      long double s = 0.0L;
      for (std::size_t j = 0; j < m.cols(); ++j) s += static_cast<long double>(m(i, j)) * vector[j];
      r = std::max(r, static_cast<double>(std::abs(s - static_cast<long double>(theta) * vector[i])));
    }
    return r;
  }
};

/// Leading eigenvalue and normalized positive eigenvector of a primitive
/// nonnegative integer matrix by power iteration on M + I (same eigenvector,
/// better separated leading eigenvalue), carried in long double.
inline PerronData perron(const IntMatrix& m, double residual_tol = 1e-13, int max_iterations = 200000) {
  if (!m.square() || m.rows() == 0) throw ConfigError("perron: matrix must be square and non-empty");
  if (!m.nonnegative()) throw ConfigError("perron: matrix must be nonnegative");
  const std::size_t n = m.rows();
  std::vector<long double> v(n, 1.0L / n), w(n);
  long double theta = 0.0L;
  for (int it = 0; it < max_iterations; ++it) {
    long double total = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      long double s = v[i];
      for (std::size_t j = 0; j < n; ++j) s += static_cast<long double>(m(i, j)) * v[j];
      w[i] = s;
      total += s;
    }
    // sum(v) == 1, so sum((M + I) v) = theta + 1 at convergence.
    theta = total - 1.0L;
    for (auto& x : w) x /= total;
    v.swap(w);
    if (it % 8 == 7 || it > 2000) {
      long double res = 0.0L, th = 0.0L;
      std::vector<long double> mv(n, 0.0L);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) mv[i] += static_cast<long double>(m(i, j)) * v[j];
      for (auto x : mv) th += x;
      for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(mv[i] - th * v[i]));
      if (res <= residual_tol * 1e-2L) {
        theta = th;
        PerronData out;
        out.theta = static_cast<double>(theta);
        out.vector.assign(v.begin(), v.end());
        for (double x : out.vector)
          if (!(x > 0.0)) throw NumericalError("perron: eigenvector has non-positive entries (matrix not primitive?)");
        if (out.residual(m) > residual_tol) continue;
        return out;
      }
    }
  }
  throw NumericalError("perron: power iteration did not converge");
}

/// Minimal p with |S^p(a)| >= m - 1 for every symbol a.
inline unsigned factorization_power(const Substitution& subst, std::size_t m) {
  std::map<char, std::string> images;
  for (char a : subst.alphabet()) images[a] = std::string(1, a);
  for (unsigned p = 1; p < 64; ++p) {
    bool ok = true;
    for (auto& [a, w] : images) {
      w = subst.apply(w);
      ok &= w.size() + 1 >= m;
    }
    if (ok) return p;
  }
  throw NumericalError("factorization_power: substitution does not grow");
}

/// P_{2,m}: |W_2| x |W_m| matrix with a 1 where the row word is the length-2
/// prefix of the column word.
inline IntMatrix prefix_collapse_matrix(const DerivedSubstitution& d2, const DerivedSubstitution& dm) {
  IntMatrix p(d2.words.size(), dm.words.size());
  for (std::size_t j = 0; j < dm.words.size(); ++j) p(d2.index_of(dm.words[j].substr(0, 2)), j) = 1;
  return p;
}

/// M_{p,m,2}: |W_m| x |W_2| matrix whose column for ab counts the length-m
/// windows of S^p(ab) starting at positions 1..|S^p(a)|. Computed directly
/// from S^p, not from powers of M_m.
inline IntMatrix collapsed_power_matrix(const Substitution& subst, const DerivedSubstitution& dm,
                                        const DerivedSubstitution& d2, unsigned p) {
  IntMatrix out(dm.words.size(), d2.words.size());
  for (std::size_t j = 0; j < d2.words.size(); ++j) {
    std::string head(1, d2.words[j][0]), word = d2.words[j];
    for (unsigned k = 0; k < p; ++k) {
      head = subst.apply(head);
      word = subst.apply(word);
    }
    if (word.size() < head.size() + dm.m - 1)
      throw ConfigError("collapsed_power_matrix: power p too small for window length m");
    for (std::size_t i = 0; i < head.size(); ++i) out(dm.index_of(word.substr(i, dm.m)), j) += 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Label groups

struct FractionGroup {
  std::int64_t period = 1;
};

struct FrequencyModule {
  std::vector<double> alpha;
};

struct AffineLabels {
  std::vector<double> shift;
  std::vector<std::vector<std::int64_t>> kernel_basis;

  /// <k_j, b> for each kernel basis vector.
  std::vector<double> frequencies() const {
    std::vector<double> f;
    for (const auto& k : kernel_basis) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < k.size(); ++i) s += static_cast<long double>(k[i]) * shift[i];
      f.push_back(static_cast<double>(s));
    }
    return f;
  }
};

struct PerronModule {
  double theta = 0.0;
  std::vector<double> generators;  // entries of v_theta, v_theta^(2) and 1
  unsigned max_power = 8;
  PerronData letters;  // (theta, v_theta)
  PerronData pairs;    // (theta_2, v_theta^(2))
  std::vector<std::string> pair_words;
};

struct WeightRing {
  std::vector<double> weights;
  unsigned max_degree = 8;
};

struct LabelGroup {
  std::variant<FractionGroup, FrequencyModule, AffineLabels, PerronModule, WeightRing> kind;
  std::vector<std::string> notes;

  std::string tag() const {
    static const char* names[] = {"FractionGroup", "FrequencyModule", "AffineLabels", "PerronModule", "WeightRing"};
    return names[kind.index()];
  }
};

inline std::string describe(const LabelGroup& g) {
  std::ostringstream os;
  os.precision(17);
  auto list = [&](const std::vector<double>& xs) {
    os << '[';
    for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? ", " : "") << xs[i];
    os << ']';
  };
  os << g.tag() << '(';
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FractionGroup>) {
          os << "p=" << k.period;
        } else if constexpr (std::is_same_v<T, FrequencyModule>) {
          os << "alpha=";
          list(k.alpha);
        } else if constexpr (std::is_same_v<T, AffineLabels>) {
          os << "b=";
          list(k.shift);
          os << ", kernel_basis=[";
          for (std::size_t i = 0; i < k.kernel_basis.size(); ++i) {
            os << (i ? ", " : "") << '(';
            for (std::size_t j = 0; j < k.kernel_basis[i].size(); ++j) os << (j ? "," : "") << k.kernel_basis[i][j];
            os << ')';
          }
          os << ']';
        } else if constexpr (std::is_same_v<T, PerronModule>) {
          os << "theta=" << k.theta << ", generators=";
          list(k.generators);
          os << ", max_power=" << k.max_power;
        } else if constexpr (std::is_same_v<T, WeightRing>) {
          os << "weights=";
          list(k.weights);
          os << ", max_degree=" << k.max_degree;
        }
      },
      g.kind);
  os << ')';
  return os.str();
}

struct LabelCaps {
  std::int64_t coefficient = 40;  // |n_j| bound on non-unit basis coefficients
  unsigned power = 8;             // theta^-n / monomial degree truncation
};

/// Z[theta^-1]-module generated by the entries of v_theta, v_theta^(2) and 1.
inline LabelGroup substitution_label_group(const Substitution& subst, unsigned max_power = 8) {
  PerronModule pm;
  pm.max_power = max_power;
  pm.letters = perron(subst.matrix());
  const auto d2 = derive_substitution(subst, 2);
  pm.pairs = perron(d2.matrix);
  pm.pair_words = d2.words;
  pm.theta = pm.letters.theta;
  if (std::abs(pm.letters.theta - pm.pairs.theta) > 1e-10)
    throw NumericalError("substitution_label_group: leading eigenvalues of M and M_2 disagree");
  pm.generators = pm.letters.vector;
  pm.generators.insert(pm.generators.end(), pm.pairs.vector.begin(), pm.pairs.vector.end());
  pm.generators.push_back(1.0);
  return LabelGroup{pm, {}};
}

inline LabelGroup group_for_system(const SystemDescriptor& system, LabelCaps caps = {}) {
  return std::visit(
      [&](const auto& s) -> LabelGroup {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PeriodicSystem>) {
          return LabelGroup{FractionGroup{static_cast<std::int64_t>(s.values.size())}, {}};
        } else if constexpr (std::is_same_v<T, RotationSystem>) {
          return LabelGroup{FrequencyModule{s.alpha}, {}};
        } else if constexpr (std::is_same_v<T, AffineSystem>) {
          LabelGroup g{AffineLabels{s.shift, integer_kernel(s.matrix)}, {}};
          if (has_root_of_unity_eigenvalue(s.matrix))
            g.notes.push_back(
                "matrix has a root-of-unity eigenvalue; Lebesgue measure is sampled and the group reported is the "
                "one for Lebesgue measure, whose ergodicity is not guaranteed");
          return g;
        } else if constexpr (std::is_same_v<T, SubstitutionSystem>) {
          return substitution_label_group(s.substitution, caps.power);
        } else {
          return LabelGroup{WeightRing{s.weights, caps.power}, {}};
        }
      },
      system);
}

// ---------------------------------------------------------------------------
// Concrete lattices

namespace detail {

struct Rational {
  std::int64_t num = 0, den = 1;
};

inline std::optional<Rational> to_rational(double x, std::int64_t max_den = 1000000, double tol = 1e-10) {
  if (auto r = rational_relation(x, max_den, tol)) return Rational{r->first, r->second};
  return std::nullopt;
}

inline std::int64_t checked_lcm(std::int64_t a, std::int64_t b) {
  return checked_mul(a / std::gcd(a, b), b);
}

inline std::int64_t ipow(std::int64_t base, unsigned e) {
  std::int64_t r = 1;
  while (e--) r = checked_mul(r, base);
  return r;
}

}  // namespace detail

/// (1/denominator) Z with a per-group representation scheme.
struct RationalLattice {
  enum class Scheme {
    kFraction,      // (k): value k / period
    kThetaPowers,   // (k, n): value k / (unit_den * theta^n), n minimal
    kReduced,       // (p, q): reduced fraction
  };
  std::int64_t denominator = 1;
  Scheme scheme = Scheme::kReduced;
  std::int64_t unit_den = 1;
  std::int64_t theta = 1;
  unsigned max_power = 0;
};

/// unit Z + sum_j basis_j Z, unit = 1/unit_inverse.
struct RealLattice {
  std::int64_t unit_inverse = 1;
  std::vector<double> basis;
};

using ConcreteLattice = std::variant<RationalLattice, RealLattice>;

namespace detail {

/// Least-squares update of the free basis values from every generator's
/// integer coordinates, with basis[fixed] held.
inline void refit_basis(const std::vector<double>& g, const std::vector<std::vector<std::int64_t>>& coords,
                        std::size_t fixed, std::vector<long double>& basis) {
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < basis.size(); ++j)
    if (j != fixed) free.push_back(j);
  const std::size_t k = free.size();
  if (k == 0) return;
  std::vector<std::vector<long double>> a(k, std::vector<long double>(k + 1, 0.0L));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const long double rhs = g[i] - static_cast<long double>(coords[i][fixed]) * basis[fixed];
    for (std::size_t r = 0; r < k; ++r) {
      const auto cr = static_cast<long double>(coords[i][free[r]]);
      for (std::size_t c = 0; c < k; ++c) a[r][c] += cr * static_cast<long double>(coords[i][free[c]]);
      a[r][k] += cr * rhs;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (a[p][c] == 0.0L) return;  // keep the direct values
    std::swap(a[c], a[p]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == c) continue;
      const long double f = a[r][c] / a[c][c];
      for (std::size_t x = c; x <= k; ++x) a[r][x] -= f * a[c][x];
    }
  }
  for (std::size_t r = 0; r < k; ++r) basis[free[r]] = a[r][k] / a[r][r];
}

/// LLL (delta = 0.99) on rows [e_i | W g_i]. Returns the Z-module generated
/// by `generators` (which must include 1) as unit Z + sum b_j Z.
inline RealLattice reduce_real_module(std::vector<double> generators) {
  // Drop duplicates and zeros.
  std::sort(generators.begin(), generators.end());
  std::vector<double> g;
  for (double x : generators) {
    if (std::abs(x) < 1e-15) continue;
    if (g.empty() || std::abs(x - g.back()) > 1e-12 * std::max(1.0, std::abs(x))) g.push_back(x);
  }
  auto one = std::find_if(g.begin(), g.end(), [](double x) { return std::abs(x - 1.0) < 1e-12; });
  if (one == g.end()) throw ConfigError("reduce_real_module: generators must contain 1");
  std::rotate(g.begin(), one, one + 1);
  g.front() = 1.0;

  const std::size_t n = g.size();
  const std::size_t dim = n + 1;
  const long double weight = 0x1p30L;
  std::vector<std::vector<long double>> b(n, std::vector<long double>(dim, 0.0L));
  std::vector<std::vector<std::int64_t>> u(n, std::vector<std::int64_t>(n, 0)), uinv = u;
  for (std::size_t i = 0; i < n; ++i) {
    b[i][i] = 1.0L;
    b[i][n] = weight * g[i];
    u[i][i] = uinv[i][i] = 1;
  }
  std::vector<std::vector<long double>> mu(n, std::vector<long double>(n, 0.0L)), bstar = b;
  std::vector<long double> bnorm(n, 0.0L);
  auto dot = [&](const std::vector<long double>& x, const std::vector<long double>& y) {
    long double s = 0.0L;
    for (std::size_t k = 0; k < dim; ++k) s += x[k] * y[k];
    return s;
  };
  auto gram_schmidt_from = [&](std::size_t start) {
    for (std::size_t i = start; i < n; ++i) {
      bstar[i] = b[i];
      for (std::size_t j = 0; j < i; ++j) {
        mu[i][j] = bnorm[j] > 0.0L ? dot(b[i], bstar[j]) / bnorm[j] : 0.0L;
        for (std::size_t k = 0; k < dim; ++k) bstar[i][k] -= mu[i][j] * bstar[j][k];
      }
      bnorm[i] = dot(bstar[i], bstar[i]);
    }
  };
  gram_schmidt_from(0);
  std::size_t k = 1;
  std::size_t guard = 0;
  while (k < n) {
    if (++guard > 1000000) throw NumericalError("reduce_real_module: LLL did not terminate");
    for (std::size_t jj = k; jj-- > 0;) {
      const long double q = std::round(mu[k][jj]);
      if (q == 0.0L) continue;
      const auto qi = static_cast<std::int64_t>(q);
      for (std::size_t c = 0; c < dim; ++c) b[k][c] -= q * b[jj][c];
      for (std::size_t c = 0; c < n; ++c) {
        u[k][c] = checked_sub(u[k][c], checked_mul(qi, u[jj][c]));
        uinv[c][jj] = checked_add(uinv[c][jj], checked_mul(qi, uinv[c][k]));
      }
      for (std::size_t l = 0; l < jj; ++l) mu[k][l] -= q * mu[jj][l];
      mu[k][jj] -= q;
    }
    if (bnorm[k] >= (0.99L - mu[k][k - 1] * mu[k][k - 1]) * bnorm[k - 1]) {
      ++k;
    } else {
      std::swap(b[k], b[k - 1]);
      std::swap(u[k], u[k - 1]);
      for (std::size_t c = 0; c < n; ++c) std::swap(uinv[c][k], uinv[c][k - 1]);
      gram_schmidt_from(k - 1);
      k = std::max<std::size_t>(k - 1, 1);
    }
  }

  // Rows whose value sum_j u_ij g_j vanishes are relations; the rest span.
  std::vector<long double> values(n);
  std::vector<std::size_t> span_rows;
  for (std::size_t i = 0; i < n; ++i) {
    long double s = 0.0L, scale = 0.0L;
    for (std::size_t j = 0; j < n; ++j) {
      s += static_cast<long double>(u[i][j]) * g[j];
      scale += std::abs(static_cast<long double>(u[i][j]));
    }
    values[i] = s;
    if (std::abs(s) > 1e-10L * std::max(1.0L, scale)) span_rows.push_back(i);
  }
  // coords[i][s]: generator i in terms of the spanning rows; coords[0] is 1.
  std::vector<std::vector<std::int64_t>> coords(n);
  std::vector<long double> basis;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r : span_rows) coords[i].push_back(uinv[i][r]);
  for (std::size_t r : span_rows) basis.push_back(values[r]);
  auto& coord = coords[0];
  // Unimodular changes until 1 = c * basis[pivot]: keeping sum c_i basis_i
  // fixed, c_j -= q c_i pairs with basis_i += q basis_j.
  while (true) {
    std::size_t piv = coord.size();
    for (std::size_t i = 0; i < coord.size(); ++i)
      if (coord[i] != 0 && (piv == coord.size() || std::abs(coord[i]) < std::abs(coord[piv]))) piv = i;
    if (piv == coord.size()) throw NumericalError("reduce_real_module: 1 not in the reduced span");
    bool others = false;
    for (std::size_t j = 0; j < coord.size(); ++j) {
      if (j == piv || coord[j] == 0) continue;
      const std::int64_t q = coord[j] / coord[piv];
      for (auto& c : coords) c[j] = checked_sub(c[j], checked_mul(q, c[piv]));
      basis[piv] += static_cast<long double>(q) * basis[j];
      others |= coord[j] != 0;
    }
    if (!others) {
      RealLattice lat;
      lat.unit_inverse = std::abs(coord[piv]);
      const long double unit = 1.0L / lat.unit_inverse;
      basis[piv] = coord[piv] > 0 ? unit : -unit;
      refit_basis(g, coords, piv, basis);
      for (std::size_t j = 0; j < basis.size(); ++j) {
        if (j == piv) continue;
        // Reduce modulo the unit into [0, unit).
        long double x = basis[j];
        x -= std::floor(x / unit) * unit;
        lat.basis.push_back(static_cast<double>(x));
      }
      std::sort(lat.basis.begin(), lat.basis.end());
      return lat;
    }
  }
}

}  // namespace detail

/// Concrete lattice for a group, truncated at its max_power or max_degree.
inline ConcreteLattice concretize(const LabelGroup& group) {
  using detail::Rational;
  return std::visit(
      [&](const auto& k) -> ConcreteLattice {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FractionGroup>) {
          if (k.period < 1) throw ConfigError("FractionGroup: period must be >= 1");
          RationalLattice r;
          r.denominator = k.period;
          r.scheme = RationalLattice::Scheme::kFraction;
          return r;
        } else if constexpr (std::is_same_v<T, FrequencyModule>) {
          return RealLattice{1, k.alpha};
        } else if constexpr (std::is_same_v<T, AffineLabels>) {
          return RealLattice{1, k.frequencies()};
        } else if constexpr (std::is_same_v<T, PerronModule>) {
          const double rounded = std::round(k.theta);
          if (std::abs(k.theta - rounded) < 1e-9 && rounded >= 2.0) {
            // Integer theta: exact rational generators, unit 1/L stripped of theta factors.
            const auto theta = static_cast<std::int64_t>(rounded);
            std::int64_t num_gcd = 0, den_lcm = 1;
            std::vector<Rational> rs;
            for (double x : k.generators) {
              auto r = detail::to_rational(x);
              if (!r) throw NumericalError("PerronModule: generator is not rational for integer theta");
              rs.push_back(*r);
              den_lcm = detail::checked_lcm(den_lcm, r->den);
            }
            for (const auto& r : rs) num_gcd = std::gcd(num_gcd, detail::checked_mul(r.num, den_lcm / r.den));
            std::int64_t unit_num = num_gcd / std::gcd(num_gcd, den_lcm);
            std::int64_t unit_den = den_lcm / std::gcd(num_gcd, den_lcm);
            while (unit_den % theta == 0) unit_den /= theta;
            while (unit_num % theta == 0) unit_num /= theta;
            if (unit_num != 1) throw NumericalError("PerronModule: generator unit does not divide 1");
            RationalLattice r;
            r.scheme = RationalLattice::Scheme::kThetaPowers;
            r.unit_den = unit_den;
            r.theta = theta;
            r.max_power = k.max_power;
            r.denominator = detail::checked_mul(unit_den, detail::ipow(theta, k.max_power));
            return r;
          }
          std::vector<double> gens;
          for (double x : k.generators) {
            double scale = 1.0;
            for (unsigned p = 0; p <= k.max_power; ++p) {
              gens.push_back(x * scale);
              scale /= k.theta;
            }
          }
          return detail::reduce_real_module(gens);
        } else {
          // Monomials of total degree <= max_degree.
          std::vector<double> monomials{1.0};
          std::vector<std::vector<double>> by_degree{{1.0}};
          for (unsigned deg = 1; deg <= k.max_degree; ++deg) {
            std::set<double> next;
            for (double prev : by_degree.back())
              for (double w : k.weights) next.insert(prev * w);
            by_degree.emplace_back(next.begin(), next.end());
            monomials.insert(monomials.end(), next.begin(), next.end());
          }
          std::vector<Rational> rs;
          bool rational = true;
          for (double w : k.weights) {
            auto r = detail::to_rational(w, 100000, 1e-14);
            if (!r) {
              rational = false;
              break;
            }
            rs.push_back(*r);
          }
          if (rational) {
            // Z-span of monomials in rational weights is (1/D) Z with D the
            // lcm of monomial denominators after cancelling numerators.
            std::int64_t den_lcm = 1;
            std::vector<Rational> layer{{1, 1}}, all{{1, 1}};
            for (unsigned deg = 1; deg <= k.max_degree; ++deg) {
              std::vector<Rational> next;
              for (const auto& p : layer)
                for (const auto& w : rs) {
                  Rational m{detail::checked_mul(p.num, w.num), detail::checked_mul(p.den, w.den)};
                  const auto gg = std::gcd(m.num, m.den);
                  next.push_back({m.num / gg, m.den / gg});
                }
              std::sort(next.begin(), next.end(),
                        [](const Rational& a, const Rational& b) { return a.num * b.den < b.num * a.den; });
              next.erase(std::unique(next.begin(), next.end(),
                                     [](const Rational& a, const Rational& b) {
                                       return a.num == b.num && a.den == b.den;
                                     }),
                         next.end());
              all.insert(all.end(), next.begin(), next.end());
              layer = std::move(next);
            }
            for (const auto& r : all) den_lcm = detail::checked_lcm(den_lcm, r.den);
            std::int64_t num_gcd = 0;
            for (const auto& r : all) num_gcd = std::gcd(num_gcd, detail::checked_mul(r.num, den_lcm / r.den));
            RationalLattice lat;
            lat.scheme = RationalLattice::Scheme::kReduced;
            lat.denominator = den_lcm / std::gcd(num_gcd, den_lcm);
            return lat;
          }
          return detail::reduce_real_module(monomials);
        }
      },
      group.kind);
}

/// One enumerated group element.
struct LabelElement {
  double value = 0.0;
  std::vector<std::int64_t> representation;
};

namespace detail {

inline constexpr std::size_t kMaxLabelElements = 1000000;

inline std::int64_t max_norm(const std::vector<std::int64_t>& r) {
  std::int64_t m = 0;
  for (auto x : r) m = std::max(m, x < 0 ? -x : x);
  return m;
}

inline std::int64_t l1_norm(const std::vector<std::int64_t>& r) {
  std::int64_t s = 0;
  for (auto x : r) s += x < 0 ? -x : x;
  return s;
}

inline bool preferred(const LabelElement& a, const LabelElement& b) {
  const auto na = max_norm(a.representation), nb = max_norm(b.representation);
  if (na != nb) return na < nb;
  const auto la = l1_norm(a.representation), lb = l1_norm(b.representation);
  if (la != lb) return la < lb;
  return a.representation < b.representation;
}

inline std::vector<std::int64_t> rational_representation(const RationalLattice& lat, std::int64_t k) {
  switch (lat.scheme) {
    case RationalLattice::Scheme::kFraction:
      return {k};
    case RationalLattice::Scheme::kThetaPowers: {
      // k / (unit_den * theta^max) in lowest theta power.
      std::int64_t num = k;
      unsigned n = lat.max_power;
      while (n > 0 && num % lat.theta == 0) {
        num /= lat.theta;
        --n;
      }
      return {num, static_cast<std::int64_t>(n)};
    }
    case RationalLattice::Scheme::kReduced:
    default: {
      const auto g = std::gcd(k, lat.denominator);
      return {g ? k / g : 0, g ? lat.denominator / g : 1};
    }
  }
}

}  // namespace detail

/// Value of a representation under a concrete lattice.
inline double representation_value(const ConcreteLattice& lat, const std::vector<std::int64_t>& rep) {
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, RationalLattice>) {
          switch (l.scheme) {
            case RationalLattice::Scheme::kFraction:
              return static_cast<double>(rep.at(0)) / static_cast<double>(l.denominator);
            case RationalLattice::Scheme::kThetaPowers:
              return static_cast<double>(rep.at(0)) /
                     (static_cast<double>(l.unit_den) *
                      std::pow(static_cast<double>(l.theta), static_cast<double>(rep.at(1))));
            default:
              return static_cast<double>(rep.at(0)) / static_cast<double>(rep.at(1));
          }
        } else {
          long double v = static_cast<long double>(rep.at(0)) / l.unit_inverse;
          for (std::size_t j = 0; j < l.basis.size(); ++j)
            v += static_cast<long double>(rep.at(j + 1)) * l.basis[j];
          return static_cast<double>(v);
        }
      },
      lat);
}

/// All group elements in [0,1] within the caps, deduplicated at 1e-12
/// (keeping the smallest-norm representation), sorted by value.
inline std::vector<LabelElement> enumerate_label_elements(const LabelGroup& group, const LabelCaps& caps = {}) {
  if (caps.coefficient < 0) throw ConfigError("enumerate_labels: coefficient cap must be >= 0");
  const ConcreteLattice lat = concretize(group);
  std::vector<LabelElement> out;
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, RationalLattice>) {
          if (static_cast<std::uint64_t>(l.denominator) + 1 > detail::kMaxLabelElements)
            throw ResourceError("enumerate_labels: more than 1e6 labels in [0,1]");
          for (std::int64_t k = 0; k <= l.denominator; ++k) {
            LabelElement e;
            e.representation = detail::rational_representation(l, k);
            e.value = static_cast<double>(k) / static_cast<double>(l.denominator);
            out.push_back(std::move(e));
          }
        } else {
          const std::size_t s = l.basis.size();
          // Each coefficient combination contributes about unit_inverse values in [0,1].
          double combos = static_cast<double>(l.unit_inverse);
          for (std::size_t j = 0; j < s; ++j) combos *= static_cast<double>(2 * caps.coefficient + 1);
          if (combos > static_cast<double>(detail::kMaxLabelElements))
            throw ResourceError("enumerate_labels: more than 1e6 candidate labels");
          std::vector<std::int64_t> n(s, -caps.coefficient);
          while (true) {
            long double partial = 0.0L;
            for (std::size_t j = 0; j < s; ++j) partial += static_cast<long double>(n[j]) * l.basis[j];
            const auto m_lo = static_cast<std::int64_t>(std::ceil((-partial - 1e-12L) * l.unit_inverse));
            const auto m_hi = static_cast<std::int64_t>(std::floor((1.0L - partial + 1e-12L) * l.unit_inverse));
            for (std::int64_t m = m_lo; m <= m_hi; ++m) {
              const long double v = static_cast<long double>(m) / l.unit_inverse + partial;
              if (v < -1e-12L || v > 1.0L + 1e-12L) continue;
              LabelElement e;
              e.value = static_cast<double>(std::clamp(v, 0.0L, 1.0L));
              e.representation.reserve(s + 1);
              e.representation.push_back(m);
              e.representation.insert(e.representation.end(), n.begin(), n.end());
              out.push_back(std::move(e));
              if (out.size() > detail::kMaxLabelElements)
                throw ResourceError("enumerate_labels: more than 1e6 labels in [0,1]");
            }
            std::size_t j = 0;
            while (j < s && ++n[j] > caps.coefficient) n[j++] = -caps.coefficient;
            if (j == s) break;
          }
        }
      },
      lat);
  std::sort(out.begin(), out.end(), [](const LabelElement& a, const LabelElement& b) {
    if (a.value != b.value) return a.value < b.value;
    return detail::preferred(a, b);
  });
  // Cluster values within 1e-12 and keep the preferred representative.
  std::vector<LabelElement> dedup;
  for (auto& e : out) {
    if (!dedup.empty() && e.value - dedup.back().value <= 1e-12) {
      if (detail::preferred(e, dedup.back())) {
        e.value = dedup.back().value;
        dedup.back() = std::move(e);
      }
      continue;
    }
    dedup.push_back(std::move(e));
  }
  return dedup;
}

inline std::vector<double> enumerate_labels(const LabelGroup& group, const LabelCaps& caps = {}) {
  std::vector<double> values;
  for (const auto& e : enumerate_label_elements(group, caps)) values.push_back(e.value);
  return values;
}

/// Enumerated labels of one group, searchable by value.
class LabelSet {
 public:
  LabelSet(const LabelGroup& group, const LabelCaps& caps = {})
      : lattice_(concretize(group)), elements_(enumerate_label_elements(group, caps)) {}

  const std::vector<LabelElement>& elements() const noexcept { return elements_; }
  const ConcreteLattice& lattice() const noexcept { return lattice_; }

  /// Closest element, if within tol. Equidistant candidates (to 1e-12) are
  /// resolved by smallest coefficient max-norm, then lexicographically.
  std::optional<LabelMatch> match(double value, double tol) const {
    if (!(value >= 0.0 && value <= 1.0)) throw ConfigError("match_label: value must lie in [0,1]");
    if (!(tol >= 0.0)) throw ConfigError("match_label: tolerance must be >= 0");
    const double reach = tol + 1e-12;
    auto it = std::lower_bound(elements_.begin(), elements_.end(), value - reach,
                               [](const LabelElement& e, double v) { return e.value < v; });
    const LabelElement* best = nullptr;
    double best_dist = 0.0;
    for (; it != elements_.end() && it->value <= value + reach; ++it) {
      const double dist = std::abs(it->value - value);
      if (!best || dist < best_dist - 1e-12 ||
          (std::abs(dist - best_dist) <= 1e-12 && detail::preferred(*it, *best))) {
        best = &*it;
        best_dist = dist;
      }
    }
    if (!best || best_dist > tol) return std::nullopt;
    return LabelMatch{best->representation, best->value, best_dist};
  }

 private:
  ConcreteLattice lattice_;
  std::vector<LabelElement> elements_;
};

inline std::optional<LabelMatch> match_label(double value, const LabelGroup& group, double tol,
                                             const LabelCaps& caps = {}) {
  return LabelSet(group, caps).match(value, tol);
}

}  // namespace gaplab
