#pragma once

// Update-versus-rebuild timing harness.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "gridfactors/connectivity.hpp"
#include "gridfactors/multi_mod.hpp"
#include "gridfactors/oracle.hpp"
#include "gridfactors/scenario.hpp"

namespace gridfactors {

struct BenchConfig {
  int buses = 500;
  int mods = 3;
  int reps = 20;
  std::uint64_t seed = 1;
  double avg_degree = 3.0;
};

struct BenchResult {
  double update_median_s = 0.0;
  double rebuild_median_s = 0.0;
  double speedup = 0.0;
  double max_rel_diff = 0.0;  // relative Frobenius difference of the inverses
  bool equal = false;         // max_rel_diff <= tolerance
};

inline constexpr double kBenchEqualityTolerance = 1e-8;

/// Picks `count` in-service non-bridge branches and halves their susceptance.
inline ModificationSet random_modifications(const Grid& grid, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<int> bridges = bridge_branches(grid);
  std::vector<int> pool;
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    const int id = grid.branches()[e].id;
    if (grid.effective_susceptance(e) > 0.0 &&
        std::find(bridges.begin(), bridges.end(), id) == bridges.end())
      pool.push_back(id);
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  if (static_cast<int>(pool.size()) < count) throw std::invalid_argument("grid too small for bench");
  ModificationSet mods;
  for (int k = 0; k < count; ++k) {
    const int id = pool[static_cast<std::size_t>(k)];
    mods.entries.push_back({id, -0.5 * grid.branch(id).susceptance});
  }
  return mods;
}

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <class F>
double time_once(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Median wall-clock of the Woodbury update against assembling and
/// inverting the modified grid from scratch. The two inverses are compared
/// before any timing is reported.
inline BenchResult run_update_benchmark(const BenchConfig& cfg) {
  if (cfg.buses < 2 || cfg.mods < 0 || cfg.reps < 1)
    throw std::invalid_argument("bench parameters must be positive");
  const Grid grid = oracle::random_grid(cfg.seed, cfg.buses, cfg.avg_degree);
  const GroundedSystem sys = build_grounded_system(grid);
  const ModificationSet mods = random_modifications(grid, cfg.mods, cfg.seed + 1);
  const Grid modified = apply_deltas(grid, mods.entries);

  BenchResult r;
  const MatrixXd updated = woodbury_update(sys, mods);
  const MatrixXd rebuilt = build_grounded_system(modified).inverse();
  r.max_rel_diff = relative_frobenius(updated, rebuilt);
  r.equal = r.max_rel_diff <= kBenchEqualityTolerance;
  if (!r.equal) return r;

  std::vector<double> update_t;
  std::vector<double> rebuild_t;
  volatile double sink = 0.0;
  for (int k = 0; k < cfg.reps; ++k) {
    update_t.push_back(detail::time_once([&] { sink = woodbury_update(sys, mods)(0, 0); }));
    rebuild_t.push_back(
        detail::time_once([&] { sink = build_grounded_system(modified).inverse()(0, 0); }));
  }
  r.update_median_s = detail::median(update_t);
  r.rebuild_median_s = detail::median(rebuild_t);
  r.speedup = r.rebuild_median_s / std::max(r.update_median_s, 1e-12);
  return r;
}

}  // namespace gridfactors
