#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "gridfactors/islanding.hpp"
#include "gridfactors/scenario.hpp"
#include "gridfactors/single_mod.hpp"

namespace gridfactors {

struct OutageReport {
  int branch = 0;
  bool islands = false;
  double criterion = 0.0;
  double max_abs_flow = 0.0;  // post-outage, per-unit
  int max_branch = 0;         // branch carrying it
};

/// Worker count: hardware concurrency, capped by GRIDFACTORS_THREADS.
inline unsigned worker_count(std::size_t jobs) {
  unsigned n = std::max(1U, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GRIDFACTORS_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, jobs)));
}

/// Single-outage screening of every in-service line and PST in `state`.
/// Results are in branch order whatever the schedule.
inline std::vector<OutageReport> n1_sweep(const NetworkState& state, unsigned threads = 0) {
  const GroundedSystem sys = state_system(state);
  const Grid& grid = state.grid;
  const VectorXd p = grid.injections();
  std::vector<std::size_t> candidates;
  for (std::size_t e = 0; e < grid.num_branches(); ++e)
    if (grid.effective_susceptance(e) > 0.0) candidates.push_back(e);
  std::vector<OutageReport> out(candidates.size());

  auto work = [&](std::size_t k) {
    const std::size_t pos = candidates[k];
    OutageReport& r = out[k];
    r.branch = grid.branches()[pos].id;
    const IslandingVerdict v = outage_islands(sys, r.branch);
    r.criterion = v.criterion;
    r.islands = v.islands;
    if (r.islands) return;
    VectorXd column;
    try {
      column = lodf_column(sys, r.branch);
    } catch (const IslandingError&) {
      r.islands = true;
      return;
    }
    VectorXd post = state.flows + column * state.flows(static_cast<Index>(pos));
    post(static_cast<Index>(pos)) = 0.0;
    closed_switch_flows(grid, p, post);
    const std::size_t m = max_loaded(post);
    r.max_abs_flow = std::abs(post(static_cast<Index>(m)));
    r.max_branch = grid.branches()[m].id;
  };

  const unsigned n = threads ? threads : worker_count(candidates.size());
  if (n <= 1) {
    for (std::size_t k = 0; k < candidates.size(); ++k) work(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < candidates.size(); k = next++) work(k);
    });
  for (auto& th : pool) th.join();
  return out;
}

/// Islanding outages first, then by post-outage max loading (descending),
/// ties by branch id.
inline void sort_by_severity(std::vector<OutageReport>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const OutageReport& a, const OutageReport& b) {
    if (a.islands != b.islands) return a.islands;
    if (a.max_abs_flow != b.max_abs_flow) return a.max_abs_flow > b.max_abs_flow;
    return a.branch < b.branch;
  });
}

}  // namespace gridfactors
