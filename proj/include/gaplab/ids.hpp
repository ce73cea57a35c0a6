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
 * @file ids.hpp
 * @brief Empirical density of states, integrated density of states profiles,
 *        gap detection and gap certification.
 *
 * Truncations are always H restricted to sites 1..N, i.e. the diagonal is
 * V(1), ..., V(N) for the chosen phase.
 */
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gaplab/dynamics.hpp"
#include "gaplab/label_groups.hpp"
#include "gaplab/operator_core.hpp"
#include "gaplab/parallel.hpp"

namespace gaplab {

/// Pooled, sorted eigenvalues of H_{w,N} over a phase ensemble.
struct EmpiricalDOS {
  std::vector<double> eigenvalues;
  std::size_t size = 0;    // N
  std::size_t phases = 0;  // ensemble size actually used

  std::size_t total() const noexcept { return size * phases; }
  double min() const { return eigenvalues.front(); }
  double max() const { return eigenvalues.back(); }
};

struct IDSProfile {
  std::vector<double> energies;
  std::vector<double> values;
  /// Integer numerators behind values: values[i] = counts[i] / denominator.
  std::vector<std::uint64_t> counts;
  std::uint64_t denominator = 1;
};

struct Gap {
  double left = 0.0;
  double right = 0.0;
  double label = 0.0;
  /// label == label_count / label_total exactly.
  std::uint64_t label_count = 0;
  std::uint64_t label_total = 1;
  bool certified = false;
  std::optional<LabelMatch> match;

  double width() const noexcept { return right - left; }
  double midpoint() const noexcept { return 0.5 * (left + right); }
};

inline Truncation truncation_for(const SystemDescriptor& system, const SamplingFunction& f, const Phase& phase,
                                 std::size_t n) {
  return Truncation(sample_potential(system, f, phase, 1, n));
}

inline EmpiricalDOS empirical_dos(const SystemDescriptor& system, const SamplingFunction& f, std::size_t n,
                                  std::size_t phases, std::uint64_t seed, EigenOptions opts = {}) {
  if (n < 1) throw ConfigError("empirical_dos: N must be >= 1");
  const auto ensemble = phase_ensemble(system, phases, seed);
  std::vector<std::vector<double>> per_phase(ensemble.size());
  parallel_for(ensemble.size(), [&](std::size_t k) {
    per_phase[k] = eigenvalues(truncation_for(system, f, ensemble[k], n), opts);
  });
  EmpiricalDOS dos;
  dos.size = n;
  dos.phases = ensemble.size();
  dos.eigenvalues.reserve(n * ensemble.size());
  for (auto& ev : per_phase) dos.eigenvalues.insert(dos.eigenvalues.end(), ev.begin(), ev.end());
  std::sort(dos.eigenvalues.begin(), dos.eigenvalues.end());
  return dos;
}

/// Number of eigenvalues of H_{w,N} that are <= E, via N - F_N(E).
inline std::size_t ids_count(const SystemDescriptor& system, const SamplingFunction& f, const Phase& phase,
                             std::size_t n, double energy) {
  const auto trunc = truncation_for(system, f, phase, n);
  return n - count_eigenvalues_above(trunc, energy);
}

/// k_N(E) = 1 - F_N(E) / N for one phase.
inline double ids_at(const SystemDescriptor& system, const SamplingFunction& f, const Phase& phase, std::size_t n,
                     double energy) {
  if (n < 1) throw ConfigError("ids_at: N must be >= 1");
  return static_cast<double>(ids_count(system, f, phase, n, energy)) / static_cast<double>(n);
}

inline IDSProfile ids_profile(const SystemDescriptor& system, const SamplingFunction& f,
                              const std::vector<double>& grid, std::size_t n, std::size_t phases,
                              std::uint64_t seed) {
  if (n < 1) throw ConfigError("ids_profile: N must be >= 1");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("ids_profile: grid must be strictly increasing");
  const auto ensemble = phase_ensemble(system, phases, seed);
  std::vector<std::vector<std::size_t>> above(ensemble.size());
  parallel_for(ensemble.size(), [&](std::size_t k) {
    above[k] = count_eigenvalues_above(truncation_for(system, f, ensemble[k], n), grid);
  });
  IDSProfile profile;
  profile.energies = grid;
  profile.denominator = static_cast<std::uint64_t>(n) * ensemble.size();
  profile.counts.assign(grid.size(), 0);
  for (const auto& a : above)
    for (std::size_t i = 0; i < grid.size(); ++i) profile.counts[i] += n - a[i];
  profile.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    profile.values[i] = static_cast<double>(profile.counts[i]) / static_cast<double>(profile.denominator);
  return profile;
}

/// Evenly spaced grid with `points` energies on [lo, hi].
inline std::vector<double> energy_grid(double lo, double hi, std::size_t points) {
  if (!(lo < hi)) throw ConfigError("energy grid: min must be < max");
  if (points < 2) throw ConfigError("energy grid: need at least 2 points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  g.back() = hi;
  return g;
}

/// 20 * (spectral range) / N.
inline double default_min_width(const EmpiricalDOS& dos) {
  return 20.0 * (dos.max() - dos.min()) / static_cast<double>(dos.size);
}

/// Open intervals between consecutive pooled eigenvalues wider than
/// min_width. The label of a gap is the fraction of pooled eigenvalues at or
/// below its left edge. The two unbounded outer gaps are never reported.
inline std::vector<Gap> detect_gaps(const EmpiricalDOS& dos, double min_width) {
  if (!(min_width > 0.0)) throw ConfigError("detect_gaps: min_width must be positive");
  std::vector<Gap> gaps;
  const auto& ev = dos.eigenvalues;
  for (std::size_t i = 0; i + 1 < ev.size(); ++i) {
    if (ev[i + 1] - ev[i] > min_width) {
      Gap g;
      g.left = ev[i];
      g.right = ev[i + 1];
      g.label_count = i + 1;
      g.label_total = ev.size();
      g.label = static_cast<double>(g.label_count) / static_cast<double>(g.label_total);
      gaps.push_back(g);
    }
  }
  return gaps;
}

struct CertifyOptions {
  std::size_t steps = 1000;
  double growth_threshold = 0.02;  // nats per step
  std::size_t window = 50;
  std::uint64_t seed = 1;
};

/// Heuristic uniform-hyperbolicity check at energy E: for every sampled phase
/// the transfer-matrix log-norm over `steps` sites must reach
/// growth_threshold * steps and increase across every window. Not a proof.
inline bool certify_gap(const SystemDescriptor& system, const SamplingFunction& f, double energy,
                        std::size_t phases, CertifyOptions opts = {}) {
  if (opts.steps < 100) throw ConfigError("certify_gap: steps must be >= 100");
  if (opts.window < 1) throw ConfigError("certify_gap: window must be >= 1");
  const auto ensemble = phase_ensemble(system, phases, opts.seed);
  std::vector<char> ok(ensemble.size(), 0);
  parallel_for(ensemble.size(), [&](std::size_t k) {
    const auto v = sample_potential(system, f, ensemble[k], 0, opts.steps);
    TransferAccumulator acc(energy);
    double last = 0.0;
    bool monotone = true;
    for (std::size_t j = 0; j < opts.steps; ++j) {
      acc.step(v[j]);
      if ((j + 1) % opts.window == 0) {
        monotone &= acc.log_norm() > last;
        last = acc.log_norm();
      }
    }
    ok[k] = monotone && acc.log_norm() >= opts.growth_threshold * static_cast<double>(opts.steps);
  });
  return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

}  // namespace gaplab
