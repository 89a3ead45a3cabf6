#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridfactors/factors.hpp"
#include "gridfactors/grounded_system.hpp"
#include "gridfactors/linalg.hpp"

namespace gridfactors {

// ---------------------------------------------------------------------------
// Bus merges: closing an ideal switch (b_s -> infinity).
// ---------------------------------------------------------------------------

namespace detail {

inline double merge_tolerance(const MatrixXd& inverse) {
  const double scale = inverse.rows() > 0 ? inverse.diagonal().cwiseAbs().maxCoeff() : 1.0;
  return 1e-12 * std::max(scale, 1e-300);
}

}  // namespace detail

/// B_m^-1 = B_r^-1 [1 - (nu^T B_r^-1 nu)^-1 nu nu^T B_r^-1] for closing switch
/// `switch_id`. Satisfies B_m^-1 nu = 0.
inline MatrixXd merge_inverse(const GroundedSystem& sys, int switch_id) {
  const Terminals t = sys.terminals_by_id(switch_id);
  const VectorXd col = nu_apply(sys.inverse(), t);
  const double quad = nu_dot(col, t);
  if (quad <= detail::merge_tolerance(sys.inverse()))
    throw DegenerateSwitchError("switch " + std::to_string(switch_id) +
                                " joins buses that are already at equal angle");
  MatrixXd out = sys.inverse();
  out.noalias() -= (1.0 / quad) * col * col.transpose();
  return symmetrized(out);
}

/// PTDF rows of every branch except the closed switch, from the reference
/// PTDF: PTDF_m = PTDF_r - (PTDF_r nu)(nu^T B_r^-1) / (nu^T B_r^-1 nu).
inline FactorMatrix merged_ptdf(const GroundedSystem& sys, const FactorMatrix& ptdf_ref,
                                int switch_id) {
  const std::size_t spos = sys.grid().branch_position(switch_id);
  const Terminals t = sys.terminals(spos);
  const VectorXd col = nu_apply(sys.inverse(), t);
  const double quad = nu_dot(col, t);
  if (quad <= detail::merge_tolerance(sys.inverse()))
    throw DegenerateSwitchError("switch " + std::to_string(switch_id) +
                                " joins buses that are already at equal angle");
  const MatrixXd full =
      ptdf_ref.values - (1.0 / quad) * nu_apply(ptdf_ref.values, t) * col.transpose();

  FactorMatrix out;
  out.kind = FactorKind::ptdf;
  out.col_kind = LabelKind::bus;
  out.col_labels = ptdf_ref.col_labels;
  out.values.resize(full.rows() - 1, full.cols());
  Index r = 0;
  for (Index e = 0; e < full.rows(); ++e) {
    if (static_cast<std::size_t>(e) == spos) continue;
    out.values.row(r++) = full.row(e);
    out.row_labels.push_back(ptdf_ref.row_labels[static_cast<std::size_t>(e)]);
  }
  return out;
}

inline FactorMatrix merged_ptdf(const GroundedSystem& sys, int switch_id) {
  return merged_ptdf(sys, ptdf_matrix(sys), switch_id);
}

/// Flow through closed switch s from KCL at its from bus:
/// f_s = p_from - E_{from,:} PTDF_m p, summing over branches other than s.
inline double switch_flow(const GroundedSystem& sys, int switch_id, const VectorXd& p,
                          const FactorMatrix& merged) {
  const Grid& grid = sys.grid();
  const Branch& sw = grid.branch(switch_id);
  const VectorXd f = merged.apply(sys.reduce(p));
  double out = p(static_cast<Index>(grid.bus_position(sw.from_bus)));
  for (std::size_t r = 0; r < merged.row_labels.size(); ++r) {
    const Branch& br = grid.branch(merged.row_labels[r]);
    if (br.from_bus == sw.from_bus) out -= f(static_cast<Index>(r));
    if (br.to_bus == sw.from_bus) out += f(static_cast<Index>(r));
  }
  return out;
}

/// Fills in flows on closed switches by peeling the closed-switch forest leaf
/// by leaf with KCL. `flows` must already hold every non-switch flow.
inline void closed_switch_flows(const Grid& grid, const VectorXd& p, VectorXd& flows) {
  const auto nb = grid.num_buses();
  VectorXd residual = p;
  std::vector<std::vector<std::size_t>> incident(nb);
  std::vector<bool> pending(grid.num_branches(), false);
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    const Branch& br = grid.branches()[e];
    const auto i = grid.bus_position(br.from_bus);
    const auto j = grid.bus_position(br.to_bus);
    if (br.is_switch() && br.in_service) {
      pending[e] = true;
      incident[i].push_back(e);
      incident[j].push_back(e);
      continue;
    }
    if (br.is_switch()) flows(static_cast<Index>(e)) = 0.0;
    residual(static_cast<Index>(i)) -= flows(static_cast<Index>(e));
    residual(static_cast<Index>(j)) += flows(static_cast<Index>(e));
  }
  auto open_count = [&](std::size_t v) {
    return std::count_if(incident[v].begin(), incident[v].end(),
                         [&](std::size_t e) { return pending[e]; });
  };
  bool progress = true;
  while (progress) {
    progress = false;
    for (std::size_t v = 0; v < nb; ++v) {
      if (open_count(v) != 1) continue;
      const std::size_t e = *std::find_if(incident[v].begin(), incident[v].end(),
                                          [&](std::size_t k) { return pending[k]; });
      const Branch& br = grid.branches()[e];
      const bool from_side = grid.bus_position(br.from_bus) == v;
      const double f = from_side ? residual(static_cast<Index>(v)) : -residual(static_cast<Index>(v));
      flows(static_cast<Index>(e)) = f;
      pending[e] = false;
      const auto other = grid.bus_position(from_side ? br.to_bus : br.from_bus);
      residual(static_cast<Index>(v)) = 0.0;
      residual(static_cast<Index>(other)) += from_side ? f : -f;
      progress = true;
    }
  }
  for (std::size_t e = 0; e < grid.num_branches(); ++e)
    if (pending[e])
      throw DegenerateSwitchError("closed switches form a loop; flow on switch " +
                                  std::to_string(grid.branches()[e].id) + " is indeterminate");
}

// ---------------------------------------------------------------------------
// Bus splits: opening a busbar coupler between a parent bus and a new bus.
// ---------------------------------------------------------------------------

enum class BusSide { parent, new_bus };

/// One busbar split. Incident branches not listed in `assignments` stay on
/// the parent. `injection_to_new` is moved from the parent to the new bus.
struct SplitSpec {
  int parent = 0;
  std::optional<int> new_bus;  // default: max bus id + 1
  std::map<int, BusSide> assignments;
  double injection_to_new = 0.0;
};

/// Open-configuration grid for a sequence of splits. New buses are appended
/// in spec order, so grounded rows of existing buses keep their positions.
/// Returns the grid and the id given to each new bus.
inline std::pair<Grid, std::vector<int>> apply_splits(const Grid& grid,
                                                      std::span<const SplitSpec> specs) {
  std::vector<Bus> buses = grid.buses();
  std::vector<Branch> branches = grid.branches();
  std::vector<int> new_ids;
  int next_id = grid.max_bus_id();
  auto bus_at = [&](int id) -> Bus& {
    for (Bus& b : buses)
      if (b.id == id) return b;
    throw GridError("split parent bus " + std::to_string(id) + " does not exist");
  };
  for (const SplitSpec& spec : specs) {
    Bus& parent = bus_at(spec.parent);
    const int new_id = spec.new_bus.value_or(next_id + 1);
    for (const Bus& b : buses)
      if (b.id == new_id) throw GridError("new bus id " + std::to_string(new_id) + " is taken");
    next_id = std::max(next_id, new_id);
    parent.injection -= spec.injection_to_new;
    for (const auto& [branch_id, side] : spec.assignments) {
      auto it = std::find_if(branches.begin(), branches.end(),
                             [&](const Branch& br) { return br.id == branch_id; });
      if (it == branches.end() || (it->from_bus != spec.parent && it->to_bus != spec.parent))
        throw GridError("split of bus " + std::to_string(spec.parent) + " assigns branch " +
                        std::to_string(branch_id) + ", which is not incident to it");
      if (side != BusSide::new_bus) continue;
      if (it->from_bus == spec.parent) it->from_bus = new_id;
      else it->to_bus = new_id;
    }
    buses.push_back(Bus{new_id, spec.injection_to_new, false});
    new_ids.push_back(new_id);
  }
  return {Grid(std::move(buses), std::move(branches), grid.base_mva()), std::move(new_ids)};
}

struct Coupler {
  int parent = 0;
  int new_bus = 0;
  Terminals terminals;  // in the open index, from parent to new bus
};

/// The three configurations of a split: merged reference (inverse), closed
/// but not merged (padded inverse), and open (grounded Laplacian).
struct TriConfig {
  Grid open_grid;
  BusIndex open_index;
  std::vector<Coupler> couplers;
  MatrixXd merged_inverse;
  MatrixXd closed_inverse;
  MatrixXd open_laplacian;
  VectorXd open_susceptance;

  Index merged_size() const { return merged_inverse.rows(); }
  Index open_size() const { return open_index.size(); }
};

/// Builds B_c^-1 from B_m^-1 by copying each parent bus's row and column into
/// the new bus's position, and assembles B_o for the open grid.
inline TriConfig pad_inverse(const GroundedSystem& merged, std::span<const SplitSpec> specs) {
  auto [open_grid, new_ids] = apply_splits(merged.grid(), specs);
  TriConfig tri;
  tri.open_index = BusIndex(open_grid);
  tri.merged_inverse = merged.inverse();

  // source[r]: merged row that open row r copies, or -1 for the slack.
  const Index n = merged.size();
  const Index no = tri.open_index.size();
  std::vector<Index> source(static_cast<std::size_t>(no), -1);
  for (Index r = 0; r < n; ++r) source[static_cast<std::size_t>(r)] = r;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const Index parent_row = tri.open_index.row(specs[k].parent);
    const Index new_row = tri.open_index.row(new_ids[k]);
    source[static_cast<std::size_t>(new_row)] =
        parent_row < 0 ? -1 : source[static_cast<std::size_t>(parent_row)];
    tri.couplers.push_back({specs[k].parent, new_ids[k], {parent_row, new_row}});
  }
  tri.closed_inverse = MatrixXd::Zero(no, no);
  for (Index i = 0; i < no; ++i) {
    const Index si = source[static_cast<std::size_t>(i)];
    if (si < 0) continue;
    for (Index j = 0; j < no; ++j) {
      const Index sj = source[static_cast<std::size_t>(j)];
      if (sj >= 0) tri.closed_inverse(i, j) = tri.merged_inverse(si, sj);
    }
  }
  tri.open_susceptance = reference_susceptances(open_grid);
  tri.open_laplacian = assemble_grounded_laplacian(open_grid, tri.open_index, tri.open_susceptance);
  tri.open_grid = std::move(open_grid);
  return tri;
}

inline TriConfig pad_inverse(const GroundedSystem& merged, const SplitSpec& spec) {
  return pad_inverse(merged, std::span<const SplitSpec>(&spec, 1));
}

/// Pieces of the single-coupler limit formulas.
struct CouplerTerms {
  VectorXd nu;            // nu_s in the open index
  VectorXd lifted;        // (1 - B_c^-1 B_o) nu_s
  double bracket = 0.0;   // nu_s^T (B_o - B_o B_c^-1 B_o) nu_s
  double norm_sq = 0.0;   // nu_s^T nu_s
  double tolerance = 0.0;
};

inline CouplerTerms coupler_terms(const TriConfig& tri, std::size_t coupler = 0) {
  CouplerTerms c;
  const Terminals t = tri.couplers.at(coupler).terminals;
  c.nu = nu_vector(t, tri.open_size());
  const VectorXd w = nu_apply(tri.open_laplacian, t);  // B_o nu
  c.lifted = c.nu - tri.closed_inverse * w;
  c.bracket = nu_dot(w, t) - w.dot(tri.closed_inverse * w);
  c.norm_sq = c.nu.squaredNorm();
  const double scale = tri.open_laplacian.rows() > 0
                           ? tri.open_laplacian.cwiseAbs().rowwise().sum().maxCoeff()
                           : 1.0;
  c.tolerance = 1e-10 * scale * c.norm_sq;
  return c;
}

namespace detail {

inline const CouplerTerms& require_connected(const CouplerTerms& c, const Coupler& coupler) {
  if (!(c.bracket > c.tolerance))
    throw IslandingError("opening the coupler at bus " + std::to_string(coupler.parent) +
                             " islands the grid",
                         c.bracket);
  return c;
}

inline void require_single(const TriConfig& tri) {
  if (tri.couplers.size() != 1)
    throw std::invalid_argument("single-coupler formula called with " +
                                std::to_string(tri.couplers.size()) + " couplers");
}

}  // namespace detail

/// Inverse grounded Laplacian after opening the coupler, in the b_s -> inf
/// limit. Uses the two b_s-free identities
///   b_s nu^T B_c^-1        = nu^T (1 - B_o B_c^-1) / (nu^T nu)
///   b_s - b_s^2 nu^T B_c^-1 nu = nu^T (B_o - B_o B_c^-1 B_o) nu / (nu^T nu)^2
/// inside the finite-b_s rank-one outage formula.
inline MatrixXd split_inverse(const TriConfig& tri) {
  detail::require_single(tri);
  const CouplerTerms c = detail::require_connected(coupler_terms(tri), tri.couplers[0]);
  const VectorXd scaled_row = c.lifted / c.norm_sq;
  const double scalar = c.bracket / (c.norm_sq * c.norm_sq);
  MatrixXd out = tri.closed_inverse;
  out.noalias() += (1.0 / scalar) * scaled_row * scaled_row.transpose();
  return symmetrized(out);
}

/// Bus split distribution factors together with the open-grid PTDF.
struct BusSplitFactors {
  VectorXd bsdf;          // per branch of the open grid
  VectorXd coupler_row;   // nu_s^T (1 - B_o B_c^-1)
  FactorMatrix ptdf_open;
};

inline FactorMatrix closed_ptdf(const TriConfig& tri) {
  FactorMatrix out;
  out.kind = FactorKind::ptdf;
  out.col_kind = LabelKind::bus;
  out.col_labels = tri.open_index.ids();
  const auto ne = static_cast<Index>(tri.open_grid.num_branches());
  out.values.resize(ne, tri.open_size());
  for (Index a = 0; a < ne; ++a) {
    const auto pos = static_cast<std::size_t>(a);
    const Terminals t = terminals_of(tri.open_index, tri.open_grid.branches()[pos]);
    out.values.row(a) = tri.open_susceptance(a) * nu_apply(tri.closed_inverse, t).transpose();
    out.row_labels.push_back(tri.open_grid.branches()[pos].id);
  }
  return out;
}

/// PTDF_o = PTDF_c + bsdf * nu_s^T (1 - B_o B_c^-1), with
/// bsdf = B_o E^T (1 - B_c^-1 B_o) nu_s / [nu_s^T (B_o - B_o B_c^-1 B_o) nu_s].
inline BusSplitFactors bsdf_vector(const TriConfig& tri) {
  detail::require_single(tri);
  const CouplerTerms c = detail::require_connected(coupler_terms(tri), tri.couplers[0]);
  BusSplitFactors out;
  const auto ne = static_cast<Index>(tri.open_grid.num_branches());
  out.bsdf.resize(ne);
  for (Index a = 0; a < ne; ++a) {
    const Terminals t =
        terminals_of(tri.open_index, tri.open_grid.branches()[static_cast<std::size_t>(a)]);
    out.bsdf(a) = tri.open_susceptance(a) * nu_dot(c.lifted, t) / c.bracket;
  }
  out.coupler_row = c.lifted;
  out.ptdf_open = closed_ptdf(tri);
  out.ptdf_open.values.noalias() += out.bsdf * c.lifted.transpose();
  return out;
}

/// LODF column for outaging branch `branch_id` in the open grid, without
/// forming B_o^-1: nu_e^T B_o^-1 nu_e and B_o^-1 nu_e are expanded around
/// B_c^-1 with the coupler correction.
inline VectorXd lodf_after_split(const TriConfig& tri, int branch_id) {
  detail::require_single(tri);
  const CouplerTerms c = detail::require_connected(coupler_terms(tri), tri.couplers[0]);
  const Grid& g = tri.open_grid;
  const std::size_t pos = g.branch_position(branch_id);
  const double b = tri.open_susceptance(static_cast<Index>(pos));
  if (!(b > 0.0))
    throw std::invalid_argument("branch " + std::to_string(branch_id) + " is not in service");
  const Terminals te = terminals_of(tri.open_index, g.branches()[pos]);
  const double lifted_e = nu_dot(c.lifted, te);
  const VectorXd open_col = nu_apply(tri.closed_inverse, te) + (lifted_e / c.bracket) * c.lifted;
  const double quad = nu_quadratic(tri.closed_inverse, te) + lifted_e * lifted_e / c.bracket;
  const double denom = 1.0 - b * quad;
  if (std::abs(denom) <= 1e-8 * std::max(1.0, b * quad))
    throw IslandingError("outage of branch " + std::to_string(branch_id) +
                             " islands the split grid",
                         denom);
  const auto ne = static_cast<Index>(g.num_branches());
  VectorXd out(ne);
  for (Index a = 0; a < ne; ++a) {
    const auto apos = static_cast<std::size_t>(a);
    const double b_after = apos == pos ? 0.0 : tri.open_susceptance(a);
    out(a) = b_after * nu_dot(open_col, terminals_of(tri.open_index, g.branches()[apos])) / denom;
  }
  out(static_cast<Index>(pos)) -= 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Alternative split route: rewire branches onto an idle bus.
// ---------------------------------------------------------------------------

struct BranchMove {
  int branch = 0;
  int old_bus = 0;
  int new_bus = 0;
};

/// Merged grid plus idle buses (no branches, zero injection). An idle bus
/// makes B_c singular, so each one is tied to ground by an auxiliary
/// susceptance `grounding`; the split update removes it again.
struct IdleBusSystem {
  Grid grid;
  BusIndex index;
  MatrixXd inverse;  // diag(B_m^-1, 1/grounding, ...)
  std::vector<int> idle_buses;
  double grounding = 1.0;
};

inline IdleBusSystem add_idle_buses(const GroundedSystem& merged, std::span<const int> idle_ids) {
  std::vector<Bus> buses = merged.grid().buses();
  for (int id : idle_ids) buses.push_back(Bus{id, 0.0, false});
  IdleBusSystem out{Grid(std::move(buses), merged.grid().branches(), merged.grid().base_mva()),
                    {}, {}, {idle_ids.begin(), idle_ids.end()}, 1.0};
  out.index = BusIndex(out.grid);
  const Index n = merged.size();
  const Index m = static_cast<Index>(idle_ids.size());
  if (n > 0) out.grounding = merged.laplacian().diagonal().mean();
  out.inverse = MatrixXd::Zero(n + m, n + m);
  out.inverse.topLeftCorner(n, n) = merged.inverse();
  for (Index k = 0; k < m; ++k) out.inverse(n + k, n + k) = 1.0 / out.grounding;
  return out;
}

/// Rewired grid: each move replaces `old_bus` by `new_bus` at one end of the
/// branch.
inline Grid rewire(const Grid& grid, std::span<const BranchMove> moves) {
  std::vector<Branch> branches = grid.branches();
  for (const BranchMove& mv : moves) {
    Branch& br = branches[grid.branch_position(mv.branch)];
    if (br.from_bus == mv.old_bus) br.from_bus = mv.new_bus;
    else if (br.to_bus == mv.old_bus) br.to_bus = mv.new_bus;
    else
      throw GridError("branch " + std::to_string(mv.branch) + " is not incident to bus " +
                      std::to_string(mv.old_bus));
  }
  return Grid(grid.buses(), std::move(branches), grid.base_mva());
}

/// B_o^-1 = (B_c + dB)^-1 by Woodbury, where moving branches with total
/// susceptance c from bus `old` to bus `new` is the rank-2 change
/// dB = (w_new w_new^T - w_old w_old^T) / c,  w_x = a - c u_x,
/// a = sum_k b_k u_{far end of k}. Each idle bus additionally drops its
/// auxiliary grounding (rank 1).
inline MatrixXd idle_bus_split(const IdleBusSystem& sys, std::span<const BranchMove> moves) {
  if (moves.empty()) return sys.inverse;
  const Grid& g = sys.grid;
  const Index n = sys.index.size();

  struct Group {
    int old_bus;
    int new_bus;
    VectorXd far = VectorXd::Zero(0);
    double c = 0.0;
  };
  std::vector<Group> groups;
  for (const BranchMove& mv : moves) {
    const std::size_t pos = g.branch_position(mv.branch);
    const Branch& br = g.branches()[pos];
    int far_bus = 0;
    if (br.from_bus == mv.old_bus) far_bus = br.to_bus;
    else if (br.to_bus == mv.old_bus) far_bus = br.from_bus;
    else
      throw GridError("branch " + std::to_string(mv.branch) + " is not incident to bus " +
                      std::to_string(mv.old_bus));
    if (far_bus == mv.new_bus)
      throw GridError("moving branch " + std::to_string(mv.branch) + " would create a self loop");
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& gr) {
      return gr.old_bus == mv.old_bus && gr.new_bus == mv.new_bus;
    });
    if (it == groups.end()) {
      groups.push_back({mv.old_bus, mv.new_bus, VectorXd::Zero(n), 0.0});
      it = std::prev(groups.end());
    }
    const double b = g.effective_susceptance(pos);
    const Index far_row = sys.index.row(far_bus);
    if (far_row >= 0) it->far(far_row) += b;
    it->c += b;
  }

  std::vector<VectorXd> columns;
  std::vector<double> weights;
  for (const Group& gr : groups) {
    if (gr.c == 0.0) continue;
    for (const auto& [bus, sign] : {std::pair{gr.new_bus, 1.0}, std::pair{gr.old_bus, -1.0}}) {
      VectorXd w = gr.far;
      const Index row = sys.index.row(bus);
      if (row >= 0) w(row) -= gr.c;
      columns.push_back(std::move(w));
      weights.push_back(sign / gr.c);
    }
  }
  for (int idle : sys.idle_buses) {
    columns.push_back(VectorXd::Unit(n, sys.index.row(idle)));
    weights.push_back(-sys.grounding);
  }

  const auto m = static_cast<Index>(columns.size());
  MatrixXd u(n, m);
  for (Index k = 0; k < m; ++k) u.col(k) = columns[static_cast<std::size_t>(k)];
  const MatrixXd inv_u = sys.inverse * u;
  MatrixXd capacitance = u.transpose() * inv_u;
  const VectorXd w = Eigen::Map<const VectorXd>(weights.data(), m);
  const double scale = woodbury_scale(capacitance, w);
  for (Index k = 0; k < m; ++k) capacitance(k, k) += 1.0 / weights[static_cast<std::size_t>(k)];
  const PivotedInner inner = factor_inner(capacitance, scale);
  if (inner.singular(kInnerPivotTolerance))
    throw IslandingError("rewiring onto the idle bus islands the grid", inner.pivot_ratio);
  MatrixXd out = sys.inverse;
  out.noalias() -= inv_u * inner.lu.solve(inv_u.transpose());
  return symmetrized(out);
}

/// Result of a split, whichever route produced it.
struct SplitResult {
  Grid open_grid;
  MatrixXd open_inverse;
};

/// Split through the coupler (three-configuration) route.
inline SplitResult split_via_coupler(const GroundedSystem& merged, const SplitSpec& spec) {
  TriConfig tri = pad_inverse(merged, spec);
  MatrixXd inv = split_inverse(tri);
  return {std::move(tri.open_grid), std::move(inv)};
}

/// Split through the idle-bus route. The open grid is identical (bus order
/// included) to the coupler route's.
inline SplitResult split_via_idle_bus(const GroundedSystem& merged, const SplitSpec& spec) {
  const auto [open_grid, new_ids] = apply_splits(merged.grid(), std::span<const SplitSpec>(&spec, 1));
  const int idle = new_ids.front();
  IdleBusSystem sys = add_idle_buses(merged, std::span<const int>(&idle, 1));
  std::vector<BranchMove> moves;
  for (const auto& [branch_id, side] : spec.assignments)
    if (side == BusSide::new_bus) moves.push_back({branch_id, spec.parent, idle});
  // The idle bus keeps its grounding only while nothing moves onto it.
  if (moves.empty())
    throw IslandingError("split of bus " + std::to_string(spec.parent) +
                             " leaves the new bus without branches",
                         0.0);
  MatrixXd inv = idle_bus_split(sys, moves);
  return {open_grid, std::move(inv)};
}

}  // namespace gridfactors
