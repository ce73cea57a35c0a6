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
 * @file operator_core.hpp
 * @brief Dirichlet truncations of the discrete Schrödinger operator
 *        (Hu)(n) = u(n-1) + u(n+1) + V(n) u(n), oscillation counting and a
 *        bisection eigensolver built on it.
 *
 * All solution recursions carry the pair (u(n-1), u(n)) as doubles together
 * with a binary exponent. Rescaling is done by exact powers of two, so the
 * sign and exact-zero pattern of a renormalized run is identical to that of
 * the same recursion evaluated with an unbounded exponent range. This is what
 * lets the streaming counter, the batched counter and the stored
 * DirichletSolution agree as integers.
 *
 * Build with floating-point contraction disabled (-ffp-contract=off); the
 * scalar and batched kernels must round identically.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gaplab/error.hpp"

namespace gaplab {

/// The N x N Dirichlet restriction of H: potential on the diagonal, unit
/// off-diagonals (implicit, never stored).
class Truncation {
 public:
  explicit Truncation(std::vector<double> diagonal) : diag_(std::move(diagonal)) {
    if (diag_.empty()) throw ConfigError("truncation: empty potential window");
    for (std::size_t i = 0; i < diag_.size(); ++i) {
      if (!std::isfinite(diag_[i]))
        throw ConfigError("truncation: non-finite potential value at index " + std::to_string(i));
    }
    auto [lo, hi] = std::minmax_element(diag_.begin(), diag_.end());
    min_ = *lo;
    max_ = *hi;
  }

  std::span<const double> diagonal() const noexcept { return diag_; }
  std::size_t size() const noexcept { return diag_.size(); }
  double min_potential() const noexcept { return min_; }
  double max_potential() const noexcept { return max_; }

  /// Gershgorin enclosure of the spectrum.
  double lower_bound() const noexcept { return min_ - 2.0; }
  double upper_bound() const noexcept { return max_ + 2.0; }

 private:
  std::vector<double> diag_;
  double min_ = 0.0;
  double max_ = 0.0;
};

inline Truncation build_truncation(std::span<const double> potential_window) {
  return Truncation(std::vector<double>(potential_window.begin(), potential_window.end()));
}

namespace detail {

inline constexpr int kRescaleBits = 256;
inline constexpr double kRescaleHigh = 0x1p256;
inline constexpr double kRescaleLow = 0x1p-256;
// Keeps |E - V(n)| small enough that one recursion step cannot overflow a
// rescaled pair.
inline constexpr double kMaxEnergyScale = 0x1p500;

inline void check_energy(const Truncation& t, double energy) {
  if (!std::isfinite(energy))
    throw ConfigError("energy must be finite");
  double scale = std::abs(energy) + std::max(std::abs(t.min_potential()), std::abs(t.max_potential()));
  if (!(scale < kMaxEnergyScale))
    throw RangeError("energy/potential magnitude too large for the scaled recursion");
}

/// Multiplier applied to a pair whose larger magnitude is m: 2^-256 above
/// 2^256, 2^256 below 2^-256, otherwise 1.
inline double rescale_factor(double m) noexcept {
  return m > kRescaleHigh ? kRescaleLow : (m < kRescaleLow ? kRescaleHigh : 1.0);
}

inline int rescale_exponent(double factor) noexcept {
  return factor == kRescaleLow ? kRescaleBits : (factor == kRescaleHigh ? -kRescaleBits : 0);
}

/// One step u(n+1) = (E - V(n)) u(n) - u(n-1) followed by power-of-two
/// renormalization. Returns the exponent added to the running scale.
inline int dirichlet_step(double energy, double v, double& prev, double& cur) noexcept {
  const double a = energy - v;
  const double t = a * cur;
  const double next = t - prev;
  prev = cur;
  cur = next;
  const double f = rescale_factor(std::max(std::abs(prev), std::abs(cur)));
  prev *= f;
  cur *= f;
  return rescale_exponent(f);
}

inline constexpr std::size_t kBatchWidth = 32;
inline constexpr std::size_t kRescaleStride = 16;
// Energies with |E| + max|V| below this bound can grow by at most 2^40 per
// step, so a pair rescaled into [2^-256, 2^256] stays normal for
// kRescaleStride steps.
inline constexpr double kStridedEnergyScale = 0x1p39;

inline bool strided_safe(const Truncation& t, double energy) noexcept {
  return std::abs(energy) + std::max(std::abs(t.min_potential()), std::abs(t.max_potential())) < kStridedEnergyScale;
}

/// Scalar F_N(E) with per-step renormalization.
inline std::size_t count_above_scalar(std::span<const double> diag, double energy) noexcept {
  double prev = 0.0, cur = 1.0;
  std::size_t flips = 0;
  const std::size_t n = diag.size();
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const bool was_negative = cur < 0.0;
    dirichlet_step(energy, diag[j], prev, cur);
    flips += was_negative != (cur < 0.0);
  }
  const double a = energy - diag[n - 1];
  const double t = a * cur;
  const double next = t - prev;
  // u(N+1) == 0 exactly: E is a Dirichlet eigenvalue, drop the last pair.
  if (next != 0.0) flips += (cur < 0.0) != (next < 0.0);
  return flips;
}

/// F_N(E) for up to kBatchWidth energies at once, all satisfying
/// strided_safe. Lanes are independent recursions written branch-free so the
/// compiler vectorizes them; the pair is rescaled every kRescaleStride steps.
/// Power-of-two rescaling commutes exactly with the recursion, so signs and
/// exact zeros match count_above_scalar bit for bit.
inline void count_above_batch(std::span<const double> diag, const double* energies, std::size_t lanes,
                              std::size_t* out) noexcept {
  std::array<double, kBatchWidth> e, prev, cur;
  std::array<std::int64_t, kBatchWidth> flips;
  for (std::size_t l = 0; l < kBatchWidth; ++l) {
    e[l] = energies[l < lanes ? l : 0];
    prev[l] = 0.0;
    cur[l] = 1.0;
    flips[l] = 0;
  }
  const std::size_t n = diag.size();
  for (std::size_t j0 = 0; j0 + 1 < n; j0 += kRescaleStride) {
    const std::size_t j1 = std::min(n - 1, j0 + kRescaleStride);
    for (std::size_t j = j0; j < j1; ++j) {
      const double v = diag[j];
      for (std::size_t l = 0; l < kBatchWidth; ++l) {
        const double a = e[l] - v;
        const double t = a * cur[l];
        const double next = t - prev[l];
        flips[l] += (cur[l] < 0.0) != (next < 0.0);
        prev[l] = cur[l];
        cur[l] = next;
      }
    }
    for (std::size_t l = 0; l < kBatchWidth; ++l) {
      const double f = rescale_factor(std::max(std::abs(prev[l]), std::abs(cur[l])));
      prev[l] *= f;
      cur[l] *= f;
    }
  }
  const double v = diag[n - 1];
  for (std::size_t l = 0; l < lanes; ++l) {
    const double a = e[l] - v;
    const double t = a * cur[l];
    const double next = t - prev[l];
    if (next != 0.0) flips[l] += (cur[l] < 0.0) != (next < 0.0);
    out[l] = static_cast<std::size_t>(flips[l]);
  }
}

}  // namespace detail

/// Solution of u(n-1) + u(n+1) + V(n)u(n) = E u(n) with u(0)=0, u(1)=1,
/// stored for n = 0..N+1 as sign / natural-log magnitude / exact-zero flag.
/// Exact zeros carry log-magnitude -inf.
class DirichletSolution {
 public:
  DirichletSolution() = default;

  double energy() const noexcept { return energy_; }
  /// Number of stored entries (N + 2).
  std::size_t size() const noexcept { return signs_.size(); }
  std::span<const std::int8_t> signs() const noexcept { return signs_; }
  std::span<const double> logmags() const noexcept { return logmags_; }
  const std::vector<bool>& zero_flags() const noexcept { return zeros_; }

  /// sgn with the convention sgn(0) = +1.
  int sign(std::size_t n) const { return signs_.at(n); }
  bool is_zero(std::size_t n) const { return zeros_.at(n); }
  double logmag(std::size_t n) const { return logmags_.at(n); }

  /// u(n) as a double; RangeError if it does not fit.
  double value(std::size_t n) const {
    if (zeros_.at(n)) return 0.0;
    const double v = std::exp(logmags_[n]);
    if (!std::isfinite(v)) throw RangeError("u(" + std::to_string(n) + ") overflows a double");
    return signs_[n] * v;
  }

 private:
  friend DirichletSolution dirichlet_solution(const Truncation&, double);

  double energy_ = 0.0;
  std::vector<std::int8_t> signs_;
  std::vector<double> logmags_;
  std::vector<bool> zeros_;
};

inline DirichletSolution dirichlet_solution(const Truncation& trunc, double energy) {
  detail::check_energy(trunc, energy);
  const auto diag = trunc.diagonal();
  const std::size_t n = diag.size();
  DirichletSolution sol;
  sol.energy_ = energy;
  sol.signs_.resize(n + 2);
  sol.logmags_.resize(n + 2);
  sol.zeros_.resize(n + 2);

  constexpr double kLn2 = 0.69314718055994530942;
  auto record = [&](std::size_t idx, double x, long exponent) {
    sol.zeros_[idx] = (x == 0.0);
    sol.signs_[idx] = x < 0.0 ? -1 : 1;
    sol.logmags_[idx] = x == 0.0 ? -std::numeric_limits<double>::infinity()
                                 : std::log(std::abs(x)) + static_cast<double>(exponent) * kLn2;
  };

  double prev = 0.0, cur = 1.0;
  long exponent = 0;
  record(0, prev, exponent);
  record(1, cur, exponent);
  for (std::size_t j = 0; j < n; ++j) {
    exponent += detail::dirichlet_step(energy, diag[j], prev, cur);
    record(j + 2, cur, exponent);
  }
  return sol;
}

/// F_N(E): sign flips of u over j = 1..N (j = 1..N-1 if u(N+1) == 0).
inline std::size_t sign_flip_count(const DirichletSolution& sol, std::size_t n) {
  if (sol.size() < n + 2)
    throw ConfigError("sign_flip_count: solution not computed through index N+1");
  const std::size_t last = sol.is_zero(n + 1) ? n - 1 : n;
  std::size_t flips = 0;
  for (std::size_t j = 1; j <= last; ++j) flips += sol.sign(j) != sol.sign(j + 1);
  return flips;
}

/// Number of eigenvalues of the truncation strictly greater than E.
inline std::size_t count_eigenvalues_above(const Truncation& trunc, double energy) {
  detail::check_energy(trunc, energy);
  return detail::count_above_scalar(trunc.diagonal(), energy);
}

/// Batched form of count_eigenvalues_above over an arbitrary energy list.
inline std::vector<std::size_t> count_eigenvalues_above(const Truncation& trunc, std::span<const double> energies) {
  for (double e : energies) detail::check_energy(trunc, e);
  std::vector<std::size_t> out(energies.size());
  std::array<double, detail::kBatchWidth> lane_energy;
  std::array<std::size_t, detail::kBatchWidth> lane_index, lane_count;
  std::size_t lanes = 0;
  auto flush = [&] {
    if (lanes == 0) return;
    detail::count_above_batch(trunc.diagonal(), lane_energy.data(), lanes, lane_count.data());
    for (std::size_t l = 0; l < lanes; ++l) out[lane_index[l]] = lane_count[l];
    lanes = 0;
  };
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (!detail::strided_safe(trunc, energies[i])) {
      out[i] = detail::count_above_scalar(trunc.diagonal(), energies[i]);
      continue;
    }
    lane_energy[lanes] = energies[i];
    lane_index[lanes] = i;
    if (++lanes == detail::kBatchWidth) flush();
  }
  flush();
  return out;
}

struct EigenOptions {
  double abs_tol = 1e-10;
  int max_rounds = 200;
};

/// All eigenvalues, ascending, by bisection on count_eigenvalues_above.
///
/// Every bracket is halved once per round and all midpoints of a round are
/// counted together. A bracket stops when its width is <= abs_tol or it can no
/// longer be split in floating point; a bracket still holding k > 1
/// eigenvalues at that point reports its midpoint k times (eigenvalues closer
/// than abs_tol are not resolved).
inline std::vector<double> eigenvalues(const Truncation& trunc, EigenOptions opts = {}) {
  if (!(opts.abs_tol > 0.0)) throw ConfigError("eigenvalues: abs_tol must be positive");
  struct Bracket {
    double lo, hi;
    std::size_t above_lo, above_hi;
  };
  const std::size_t n = trunc.size();
  const double pad = 0.5 + 1e-6 * std::max(std::abs(trunc.lower_bound()), std::abs(trunc.upper_bound()));
  const double lo = trunc.lower_bound() - pad;
  const double hi = trunc.upper_bound() + pad;
  const auto ends = count_eigenvalues_above(trunc, std::vector<double>{lo, hi});
  if (ends[0] != n || ends[1] != 0)
    throw NumericalError("eigenvalues: Gershgorin bracket does not enclose the spectrum");

  std::vector<double> result;
  result.reserve(n);
  std::vector<Bracket> active{{lo, hi, ends[0], ends[1]}}, next;
  std::vector<double> mids;
  std::vector<std::size_t> counts;
  // (value, multiplicity); brackets never overlap, so sorting by value
  // restores ascending order at the end.
  std::vector<std::pair<double, std::size_t>> done;
  for (int round = 0; !active.empty(); ++round) {
    if (round >= opts.max_rounds) throw NumericalError("eigenvalues: bisection iteration cap reached");
    mids.clear();
    next.clear();
    for (const auto& b : active) mids.push_back(0.5 * (b.lo + b.hi));
    counts = count_eigenvalues_above(trunc, mids);
    for (std::size_t i = 0; i < active.size(); ++i) {
      const auto& b = active[i];
      const double m = mids[i];
      const std::size_t c = counts[i];
      auto push = [&](double l, double h, std::size_t al, std::size_t ah) {
        const std::size_t k = al - ah;
        if (k == 0) return;
        const double mid = 0.5 * (l + h);
        if (h - l <= opts.abs_tol || mid <= l || mid >= h) {
          done.emplace_back(mid, k);
        } else {
          next.push_back({l, h, al, ah});
        }
      };
      push(b.lo, m, b.above_lo, c);
      push(m, b.hi, c, b.above_hi);
    }
    active.swap(next);
  }
  std::sort(done.begin(), done.end());
  for (const auto& [value, mult] : done) result.insert(result.end(), mult, value);
  if (result.size() != n) throw NumericalError("eigenvalues: lost eigenvalues during bisection");
  return result;
}

inline std::vector<double> eigenvalues(const Truncation& trunc, double abs_tol) {
  return eigenvalues(trunc, EigenOptions{abs_tol, 200});
}

/// u_E(n+1) = det(E - H_n) for the leading n x n block, reconstructed
/// exactly from the scaled recursion.
inline double char_poly_value(const Truncation& trunc, double energy, std::size_t n) {
  if (n < 1 || n > trunc.size()) throw ConfigError("char_poly_value: n out of range 1..N");
  detail::check_energy(trunc, energy);
  const auto diag = trunc.diagonal();
  double prev = 0.0, cur = 1.0;
  long exponent = 0;
  for (std::size_t j = 0; j < n; ++j) exponent += detail::dirichlet_step(energy, diag[j], prev, cur);
  if (cur == 0.0) return 0.0;
  int mant_exp = 0;
  std::frexp(cur, &mant_exp);
  if (exponent + mant_exp > std::numeric_limits<double>::max_exponent)
    throw RangeError("char_poly_value: determinant overflows a double at n = " + std::to_string(n));
  return std::ldexp(cur, static_cast<int>(exponent));
}

/// Row-major 2x2 matrix.
struct TransferMatrix {
  std::array<double, 4> entries{1.0, 0.0, 0.0, 1.0};

  double operator()(int r, int c) const noexcept { return entries[2 * r + c]; }
  double determinant() const noexcept { return entries[0] * entries[3] - entries[1] * entries[2]; }
  double max_abs() const noexcept {
    double m = 0.0;
    for (double x : entries) m = std::max(m, std::abs(x));
    return m;
  }
};

/// A_E^n stored as normalized entries (max-abs entry 1) times exp(log_norm).
struct TransferProduct {
  TransferMatrix matrix;
  double log_norm = 0.0;

  /// det(A_E^n) = 1 expressed on the normalized part:
  /// |det(matrix) - exp(-2 log_norm)| <= tol.
  bool unimodular(double tol = 1e-12) const noexcept {
    return std::abs(matrix.determinant() - std::exp(-2.0 * log_norm)) <= tol;
  }
};

/// Left-multiplies one-step cocycle matrices [[E - v, -1], [1, 0]] into a
/// running product, renormalizing after every step.
class TransferAccumulator {
 public:
  explicit TransferAccumulator(double energy) : energy_(energy) {}

  void step(double v) {
    auto& m = product_.matrix.entries;
    const double a = energy_ - v;
    const std::array<double, 4> r{a * m[0] - m[2], a * m[1] - m[3], m[0], m[1]};
    double scale = 0.0;
    for (double x : r) scale = std::max(scale, std::abs(x));
    for (int i = 0; i < 4; ++i) m[i] = r[i] / scale;
    product_.log_norm += std::log(scale);
    ++steps_;
  }

  const TransferProduct& product() const noexcept { return product_; }
  double log_norm() const noexcept { return product_.log_norm; }
  std::size_t steps() const noexcept { return steps_; }

 private:
  double energy_;
  TransferProduct product_;
  std::size_t steps_ = 0;
};

/// A_E(T^{n-1} w) ... A_E(w) over the first n entries of the window.
inline TransferProduct transfer_product(std::span<const double> potential_window, double energy, std::size_t n) {
  if (potential_window.size() < n) throw ConfigError("transfer_product: window shorter than n");
  if (!std::isfinite(energy)) throw ConfigError("energy must be finite");
  TransferAccumulator acc(energy);
  for (std::size_t j = 0; j < n; ++j) acc.step(potential_window[j]);
  return acc.product();
}

}  // namespace gaplab
