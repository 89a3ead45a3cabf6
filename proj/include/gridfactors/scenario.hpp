#pragma once

// What-if pipeline behind the command-line tool: splits, then susceptance
// changes, then switch states, each as an update of the previous inverse.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridfactors/bus_topology.hpp"
#include "gridfactors/case_io.hpp"
#include "gridfactors/islanding.hpp"
#include "gridfactors/multi_mod.hpp"
#include "gridfactors/pst.hpp"

namespace gridfactors {

/// A grid together with an inverse that accounts for its closed switches.
struct NetworkState {
  Grid grid;
  MatrixXd inverse;
  VectorXd flows;  // per branch, switches included (from KCL)
};

/// Flows for `grid` given an inverse that already merges its closed
/// switches. PST shifts enter through the effective injections.
inline VectorXd state_flows(const Grid& grid, const MatrixXd& inverse, const VectorXd& p) {
  const BusIndex index(grid);
  const VectorXd p_hat = effective_injections(grid, p, shift_vector(grid));
  VectorXd reduced(index.size());
  for (std::size_t i = 0; i < grid.num_buses(); ++i) {
    const Index r = index.row(grid.buses()[i].id);
    if (r >= 0) reduced(r) = p_hat(static_cast<Index>(i));
  }
  const VectorXd theta = inverse * reduced;
  VectorXd flows = VectorXd::Zero(static_cast<Index>(grid.num_branches()));
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    const double b = grid.effective_susceptance(e);
    if (b == 0.0) continue;
    const Branch& br = grid.branches()[e];
    flows(static_cast<Index>(e)) =
        b * (nu_dot(theta, terminals_of(index, br)) + br.shift_angle);
  }
  closed_switch_flows(grid, p, flows);
  return flows;
}

inline std::vector<int> closed_switch_ids(const Grid& grid) {
  std::vector<int> ids;
  for (const Branch& br : grid.branches())
    if (br.is_switch() && br.in_service) ids.push_back(br.id);
  return ids;
}

/// Inverse of `sys`'s grid with its closed switches merged.
inline MatrixXd merged_state_inverse(const GroundedSystem& sys) {
  const std::vector<int> closed = closed_switch_ids(sys.grid());
  if (closed.empty()) return sys.inverse();
  const SwitchBank bank(sys, closed);
  return bank.merged_inverse(std::vector<bool>(closed.size(), true));
}

/// Reference solve of a grid as given (closed switches merged).
inline NetworkState evaluate(const Grid& grid) {
  const GroundedSystem sys = build_grounded_system(grid);
  MatrixXd inv = merged_state_inverse(sys);
  VectorXd flows = state_flows(grid, inv, grid.injections());
  return {grid, std::move(inv), std::move(flows)};
}

/// System view of a state for the factor routines (LODF, islanding checks).
inline GroundedSystem state_system(const NetworkState& s) {
  return GroundedSystem::with_updated_inverse(s.grid, s.inverse);
}

/// Grid with each listed branch's susceptance changed by delta_b. A branch
/// that reaches zero goes out of service and keeps its old value.
inline Grid apply_deltas(const Grid& grid, const std::vector<BranchDelta>& deltas) {
  std::vector<Branch> branches = grid.branches();
  for (const BranchDelta& d : deltas) {
    Branch& br = branches[grid.branch_position(d.branch)];
    if (br.is_switch()) throw GridError("branch " + std::to_string(d.branch) + " is a switch");
    const double before = br.in_service ? br.susceptance : 0.0;
    const double after = before + d.delta_b;
    if (after <= 1e-12 * std::max(1.0, before)) {
      br.in_service = false;
    } else {
      br.susceptance = after;
      br.in_service = true;
    }
  }
  return Grid(grid.buses(), std::move(branches), grid.base_mva());
}

inline Grid with_switch_states(const Grid& grid, const std::vector<std::pair<int, bool>>& states) {
  std::vector<Branch> branches = grid.branches();
  for (const auto& [id, closed] : states) {
    Branch& br = branches[grid.branch_position(id)];
    if (!br.is_switch()) throw GridError("branch " + std::to_string(id) + " is not a switch");
    br.in_service = closed;
  }
  return Grid(grid.buses(), std::move(branches), grid.base_mva());
}

enum class SplitRoute { coupler, idle_bus };

struct StepCriterion {
  std::string step;
  double value = 0.0;
};

struct WhatIf {
  NetworkState state;
  std::vector<StepCriterion> criteria;
};

namespace detail {

struct PreSwitch {
  Grid grid;          // after splits and deltas, all bank switches open
  MatrixXd inverse;   // of the reference (switch-free) Laplacian
  std::vector<StepCriterion> criteria;
};

inline PreSwitch splits_and_deltas(const Grid& base, const ModificationDoc& doc, SplitRoute route) {
  // Every switch starts open; the original closed switches are re-applied
  // together with the requested states in the bank step.
  std::vector<std::pair<int, bool>> all_open;
  for (const Branch& br : base.branches())
    if (br.is_switch()) all_open.emplace_back(br.id, false);
  const Grid reference = with_switch_states(base, all_open);
  GroundedSystem sys = build_grounded_system(reference);
  PreSwitch out{reference, sys.inverse(), {}};
  for (std::size_t k = 0; k < doc.splits.size(); ++k) {
    const bool given = k < doc.split_injection_given.size() && doc.split_injection_given[k];
    if (!given && reference.has_bus(doc.splits[k].parent) &&
        reference.bus(doc.splits[k].parent).injection != 0.0)
      throw GridError("split of bus " + std::to_string(doc.splits[k].parent) +
                      " needs an explicit injection_to_new: the bus has a nonzero injection");
  }

  if (!doc.splits.empty()) {
    const TriConfig tri = pad_inverse(sys, doc.splits);
    const IslandingVerdict v = doc.splits.size() == 1 ? split_islands(tri) : multi_split_islands(tri);
    out.criteria.push_back({"split", v.criterion});
    if (route == SplitRoute::idle_bus) {
      GroundedSystem cur = sys;
      for (const SplitSpec& spec : doc.splits) {
        SplitResult r = split_via_idle_bus(cur, spec);
        cur = GroundedSystem::with_updated_inverse(std::move(r.open_grid), std::move(r.open_inverse));
      }
      out.grid = cur.grid();
      out.inverse = cur.inverse();
    } else {
      out.inverse = tri.couplers.size() == 1 ? split_inverse(tri) : multi_split_inverse(tri);
      out.grid = tri.open_grid;
    }
  }

  std::vector<BranchDelta> deltas = doc.deltas;
  for (int id : doc.outages) {
    const Branch& br = out.grid.branch(id);
    const double b = out.grid.effective_susceptance(out.grid.branch_position(id));
    if (b == 0.0) throw GridError("branch " + std::to_string(br.id) + " is not in service");
    deltas.push_back({id, -b});
  }
  if (!deltas.empty()) {
    const GroundedSystem cur = GroundedSystem::with_updated_inverse(out.grid, out.inverse);
    const ModificationSet mods{deltas};
    const IslandingVerdict v = multi_outage_islands(cur, mods);
    out.criteria.push_back({"branch changes", v.criterion});
    out.inverse = woodbury_update(cur, mods);
    out.grid = apply_deltas(out.grid, deltas);
  }
  return out;
}

}  // namespace detail

/// Switch states requested by the document, on top of the grid's own closed
/// switches.
inline std::vector<std::pair<int, bool>> requested_switch_states(const Grid& base,
                                                                 const ModificationDoc& doc) {
  std::map<int, bool> states;
  for (const Branch& br : base.branches())
    if (br.is_switch()) states[br.id] = br.in_service;
  for (const auto& [id, closed] : doc.switches) {
    if (!base.has_branch(id) || !base.branch(id).is_switch())
      throw GridError("branch " + std::to_string(id) + " is not a switch");
    states[id] = closed;
  }
  return {states.begin(), states.end()};
}

inline WhatIf run_whatif(const Grid& base, const ModificationDoc& doc,
                         SplitRoute route = SplitRoute::coupler) {
  detail::PreSwitch pre = detail::splits_and_deltas(base, doc, route);
  const auto states = requested_switch_states(base, doc);
  WhatIf out;
  out.criteria = std::move(pre.criteria);
  std::vector<int> closed;
  for (const auto& [id, c] : states)
    if (c) closed.push_back(id);
  MatrixXd inv = pre.inverse;
  if (!closed.empty()) {
    const GroundedSystem sys = GroundedSystem::with_updated_inverse(pre.grid, pre.inverse);
    const SwitchBank bank(sys, closed);
    inv = bank.merged_inverse(std::vector<bool>(closed.size(), true));
  }
  Grid grid = with_switch_states(pre.grid, states);
  VectorXd flows = state_flows(grid, inv, grid.injections());
  out.state = {std::move(grid), std::move(inv), std::move(flows)};
  return out;
}

/// One row per setting of the document's switches (2^M rows, setting k has
/// switch i closed iff bit i of k is set). Other switches keep the grid's
/// own state.
struct EnumeratedSetting {
  std::vector<bool> closed;
  std::optional<NetworkState> state;  // empty when the setting is degenerate
  std::string error;
};

inline std::vector<EnumeratedSetting> enumerate_switches(const Grid& base, const ModificationDoc& doc,
                                                         SplitRoute route = SplitRoute::coupler) {
  detail::PreSwitch pre = detail::splits_and_deltas(base, doc, route);
  std::vector<int> bank_ids;
  for (const auto& [id, _] : doc.switches) bank_ids.push_back(id);
  std::vector<int> fixed_closed;
  for (const Branch& br : base.branches())
    if (br.is_switch() && br.in_service &&
        std::find(bank_ids.begin(), bank_ids.end(), br.id) == bank_ids.end())
      fixed_closed.push_back(br.id);
  std::vector<int> all_ids = bank_ids;
  all_ids.insert(all_ids.end(), fixed_closed.begin(), fixed_closed.end());

  const GroundedSystem sys = GroundedSystem::with_updated_inverse(pre.grid, pre.inverse);
  const SwitchBank bank(sys, all_ids);
  std::vector<EnumeratedSetting> rows;
  const std::size_t m = bank_ids.size();
  for (std::size_t k = 0; k < (std::size_t{1} << m); ++k) {
    EnumeratedSetting row;
    std::vector<bool> closed(all_ids.size(), true);
    std::vector<std::pair<int, bool>> states;
    for (std::size_t i = 0; i < m; ++i) {
      closed[i] = ((k >> i) & 1U) != 0;
      row.closed.push_back(closed[i]);
      states.emplace_back(bank_ids[i], closed[i]);
    }
    for (int id : fixed_closed) states.emplace_back(id, true);
    try {
      MatrixXd inv = bank.merged_inverse(closed);
      Grid grid = with_switch_states(pre.grid, states);
      VectorXd flows = state_flows(grid, inv, grid.injections());
      row.state = NetworkState{std::move(grid), std::move(inv), std::move(flows)};
    } catch (const DegenerateSwitchError& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Index of the branch with the largest |flow|; ties go to the lower position.
inline std::size_t max_loaded(const VectorXd& flows) {
  std::size_t best = 0;
  for (Index e = 1; e < flows.size(); ++e)
    if (std::abs(flows(e)) > std::abs(flows(static_cast<Index>(best))) + 1e-12)
      best = static_cast<std::size_t>(e);
  return best;
}

}  // namespace gridfactors
