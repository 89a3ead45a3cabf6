#pragma once

// Brute-force reference implementations. Everything here rebuilds the
// modified grid from scratch and inverts densely; it shares no assembly or
// update code with the library so it can serve as an independent check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "gridfactors/errors.hpp"
#include "gridfactors/grid.hpp"

namespace gridfactors::oracle {

struct Solution {
  std::vector<int> bus_ids;  // grounded row order (grid order, slack skipped)
  MatrixXd inverse;          // dense inverse of the grounded Laplacian
  VectorXd angles;           // grounded coordinates
  VectorXd flows;            // per branch, grid order
};

namespace detail {

inline double conducting_b(const Branch& br) {
  if (!br.in_service) return 0.0;
  if (br.kind == BranchKind::switch_)
    throw std::invalid_argument("oracle needs closed switches converted or contracted first");
  return br.susceptance;
}

inline std::size_t count_components(const Grid& grid) {
  std::map<int, std::vector<int>> adj;
  for (const Bus& b : grid.buses()) adj[b.id];
  for (const Branch& br : grid.branches()) {
    if (!br.in_service || (br.kind != BranchKind::switch_ && br.susceptance <= 0.0)) continue;
    adj[br.from_bus].push_back(br.to_bus);
    adj[br.to_bus].push_back(br.from_bus);
  }
  std::set<int> seen;
  std::size_t count = 0;
  for (const auto& [start, _] : adj) {
    if (seen.contains(start)) continue;
    ++count;
    std::queue<int> q;
    q.push(start);
    seen.insert(start);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int w : adj[v])
        if (seen.insert(w).second) q.push(w);
    }
  }
  return count;
}

}  // namespace detail

inline bool connected(const Grid& grid) { return detail::count_components(grid) == 1; }

/// Assemble, invert and solve the grid as given. `p` is in grid bus order;
/// an empty `p` means the grid's own injections. Shift angles on PSTs enter
/// the branch equation f = b (theta_i - theta_j + shift).
inline Solution rebuild_and_solve(const Grid& grid, VectorXd p = {}) {
  if (p.size() == 0) p = grid.injections();
  if (!connected(grid))
    throw IslandingError("oracle: modified grid is disconnected",
                         static_cast<double>(detail::count_components(grid)));
  Solution out;
  std::map<int, Index> row;
  for (const Bus& b : grid.buses()) {
    if (b.is_slack) continue;
    row[b.id] = static_cast<Index>(out.bus_ids.size());
    out.bus_ids.push_back(b.id);
  }
  const auto n = static_cast<Index>(out.bus_ids.size());
  auto row_of = [&](int id) -> Index {
    auto it = row.find(id);
    return it == row.end() ? Index{-1} : it->second;
  };

  MatrixXd lap = MatrixXd::Zero(n, n);
  VectorXd rhs = VectorXd::Zero(n);
  for (std::size_t i = 0; i < grid.num_buses(); ++i) {
    const Index r = row_of(grid.buses()[i].id);
    if (r >= 0) rhs(r) = p(static_cast<Index>(i));
  }
  for (const Branch& br : grid.branches()) {
    const double b = detail::conducting_b(br);
    if (b == 0.0) continue;
    const Index i = row_of(br.from_bus);
    const Index j = row_of(br.to_bus);
    if (i >= 0) lap(i, i) += b;
    if (j >= 0) lap(j, j) += b;
    if (i >= 0 && j >= 0) {
      lap(i, j) -= b;
      lap(j, i) -= b;
    }
    // Shifted branch equation moves b*shift to the injections.
    if (br.shift_angle != 0.0) {
      if (i >= 0) rhs(i) -= b * br.shift_angle;
      if (j >= 0) rhs(j) += b * br.shift_angle;
    }
  }
  Eigen::FullPivLU<MatrixXd> lu(lap);
  out.inverse = lu.inverse();
  out.angles = lu.solve(rhs);
  out.flows = VectorXd::Zero(static_cast<Index>(grid.num_branches()));
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    const Branch& br = grid.branches()[e];
    const double b = detail::conducting_b(br);
    if (b == 0.0) continue;
    const Index i = row_of(br.from_bus);
    const Index j = row_of(br.to_bus);
    const double ti = i >= 0 ? out.angles(i) : 0.0;
    const double tj = j >= 0 ? out.angles(j) : 0.0;
    out.flows(static_cast<Index>(e)) = b * (ti - tj + br.shift_angle);
  }
  return out;
}

/// Grid with susceptance b_e + db_e on the listed branches. A branch that
/// ends at zero is taken out of service.
inline Grid with_deltas(const Grid& grid, const std::vector<std::pair<int, double>>& deltas) {
  std::vector<Branch> branches = grid.branches();
  for (const auto& [id, db] : deltas) {
    for (Branch& br : branches) {
      if (br.id != id) continue;
      const double before = br.in_service ? br.susceptance : 0.0;
      const double after = before + db;
      if (after < -1e-12) throw std::invalid_argument("oracle: negative susceptance");
      if (std::abs(after) <= 1e-12 * std::max(1.0, std::abs(before))) {
        br.in_service = false;
      } else {
        br.susceptance = after;
        br.in_service = true;
      }
    }
  }
  return Grid(grid.buses(), std::move(branches), grid.base_mva());
}

/// Independent rewrite of a bus split: new bus appended last, listed
/// branches re-terminated, `injection_to_new` moved from the parent.
inline Grid with_split(const Grid& grid, int parent, int new_id,
                       const std::vector<int>& branches_to_new, double injection_to_new) {
  std::vector<Bus> buses;
  for (Bus b : grid.buses()) {
    if (b.id == parent) b.injection -= injection_to_new;
    buses.push_back(b);
  }
  buses.push_back(Bus{new_id, injection_to_new, false});
  std::vector<Branch> branches = grid.branches();
  for (Branch& br : branches) {
    if (std::find(branches_to_new.begin(), branches_to_new.end(), br.id) == branches_to_new.end())
      continue;
    if (br.from_bus == parent) br.from_bus = new_id;
    else if (br.to_bus == parent) br.to_bus = new_id;
    else throw std::invalid_argument("oracle: branch not incident to split bus");
  }
  return Grid(std::move(buses), std::move(branches), grid.base_mva());
}

/// Switches replaced by ordinary lines: closed ones with susceptance `big_b`,
/// open ones out of service.
inline Grid with_large_b_switches(const Grid& grid, const std::map<int, bool>& closed,
                                  double big_b) {
  std::vector<Branch> branches = grid.branches();
  for (Branch& br : branches) {
    auto it = closed.find(br.id);
    if (it == closed.end()) continue;
    br.kind = BranchKind::line;
    br.susceptance = big_b;
    br.in_service = it->second;
  }
  return Grid(grid.buses(), std::move(branches), grid.base_mva());
}

/// Grid with the endpoints of each listed switch contracted into one bus.
/// `representative` maps every original bus id to the bus it was merged into.
struct Contracted {
  Grid grid;
  std::map<int, int> representative;
};

inline Contracted contract(const Grid& grid, const std::vector<int>& closed_switches) {
  std::map<int, int> rep;
  for (const Bus& b : grid.buses()) rep[b.id] = b.id;
  auto find = [&](int x) {
    while (rep[x] != x) x = rep[x];
    return x;
  };
  const int slack = grid.slack().id;
  for (int sid : closed_switches) {
    const Branch& br = grid.branch(sid);
    int a = find(br.from_bus);
    int b = find(br.to_bus);
    if (a == b) throw std::invalid_argument("oracle: redundant switch closing");
    if (b == slack) std::swap(a, b);
    rep[b] = a;  // keep the slack as representative when involved
  }
  std::map<int, double> injection;
  for (const Bus& b : grid.buses()) injection[find(b.id)] += b.injection;
  std::vector<Bus> buses;
  for (const Bus& b : grid.buses())
    if (find(b.id) == b.id) buses.push_back(Bus{b.id, injection[b.id], b.is_slack});
  std::vector<Branch> branches;
  for (Branch br : grid.branches()) {
    if (std::find(closed_switches.begin(), closed_switches.end(), br.id) != closed_switches.end())
      continue;
    br.from_bus = find(br.from_bus);
    br.to_bus = find(br.to_bus);
    if (br.from_bus == br.to_bus) continue;  // collapsed onto one bus: carries nothing
    if (br.kind == BranchKind::switch_) {
      br.kind = BranchKind::line;  // remaining switches are open in the oracle
      br.in_service = false;
      br.susceptance = 1.0;
    }
    branches.push_back(br);
  }
  Contracted out{Grid(std::move(buses), std::move(branches), grid.base_mva()), {}};
  for (const Bus& b : grid.buses()) out.representative[b.id] = find(b.id);
  return out;
}

/// Inverse of a contracted grid lifted back to the original grounded
/// coordinates: merged buses share rows; buses merged into the slack get 0.
inline MatrixXd lift_contracted(const Grid& original, const Contracted& c, const Solution& sol) {
  std::map<int, Index> small_row;
  for (std::size_t i = 0; i < sol.bus_ids.size(); ++i)
    small_row[sol.bus_ids[i]] = static_cast<Index>(i);
  std::vector<Index> src;
  for (const Bus& b : original.buses()) {
    if (b.is_slack) continue;
    auto it = small_row.find(c.representative.at(b.id));
    src.push_back(it == small_row.end() ? -1 : it->second);
  }
  const auto n = static_cast<Index>(src.size());
  MatrixXd out = MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (src[static_cast<std::size_t>(i)] >= 0 && src[static_cast<std::size_t>(j)] >= 0)
        out(i, j) = sol.inverse(src[static_cast<std::size_t>(i)], src[static_cast<std::size_t>(j)]);
  return out;
}

// ---------------------------------------------------------------------------
// Random test grids.
// ---------------------------------------------------------------------------

struct RandomGridOptions {
  int open_lines = 0;       // extra out-of-service lines (for closing tests)
  int switches = 0;         // extra open switches between non-adjacent buses
  int psts = 0;             // in-service lines turned into PSTs
};

/// Connected random grid: a random spanning tree on buses 1..n plus extra
/// edges up to the requested average degree. Susceptances are uniform in
/// [0.5, 2]; injections are random and balanced; bus 1 is the slack.
inline Grid random_grid(std::uint64_t seed, int n_buses, double avg_degree,
                        RandomGridOptions opts = {}) {
  if (n_buses < 2) throw std::invalid_argument("random_grid needs at least 2 buses");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> susceptance(0.5, 2.0);
  std::normal_distribution<double> injection(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);

  std::vector<Bus> buses;
  double sum = 0.0;
  for (int i = 1; i <= n_buses; ++i) {
    buses.push_back(Bus{i, injection(rng), i == 1});
    sum += buses.back().injection;
  }
  const double mean = sum / n_buses;
  for (Bus& b : buses) b.injection -= mean;

  std::set<std::pair<int, int>> used;
  std::vector<Branch> branches;
  auto add = [&](int a, int b, BranchKind kind, bool in_service) {
    if (coin(rng)) std::swap(a, b);
    used.insert({std::min(a, b), std::max(a, b)});
    branches.push_back(Branch{static_cast<int>(branches.size()) + 1, a, b, susceptance(rng), kind,
                              0.0, in_service});
  };
  for (int i = 2; i <= n_buses; ++i) {
    std::uniform_int_distribution<int> parent(1, i - 1);
    add(i, parent(rng), BranchKind::line, true);
  }
  std::uniform_int_distribution<int> pick(1, n_buses);
  auto add_random = [&](int count, BranchKind kind, bool in_service) {
    int attempts = 0;
    while (count > 0 && attempts < 100 * n_buses * n_buses) {
      ++attempts;
      const int a = pick(rng);
      const int b = pick(rng);
      if (a == b || used.contains({std::min(a, b), std::max(a, b)})) continue;
      add(a, b, kind, in_service);
      --count;
    }
  };
  const auto target = static_cast<int>(std::lround(n_buses * avg_degree / 2.0));
  add_random(std::max(0, target - (n_buses - 1)), BranchKind::line, true);
  add_random(opts.open_lines, BranchKind::line, false);
  add_random(opts.switches, BranchKind::switch_, false);

  std::uniform_real_distribution<double> shift(-0.2, 0.2);
  for (int k = 0; k < opts.psts && k < static_cast<int>(branches.size()); ++k) {
    std::uniform_int_distribution<std::size_t> which(0, branches.size() - 1);
    Branch& br = branches[which(rng)];
    if (br.kind != BranchKind::line || !br.in_service) continue;
    br.kind = BranchKind::pst;
    br.shift_angle = shift(rng);
  }
  return Grid(std::move(buses), std::move(branches));
}

/// Balanced random injection vector in bus order.
inline VectorXd random_injections(std::uint64_t seed, std::size_t n_buses) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  VectorXd p(static_cast<Index>(n_buses));
  for (Index i = 0; i < p.size(); ++i) p(i) = dist(rng);
  p.array() -= p.mean();
  return p;
}

}  // namespace gridfactors::oracle
