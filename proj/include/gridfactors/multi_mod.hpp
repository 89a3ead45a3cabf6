#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridfactors/bus_topology.hpp"
#include "gridfactors/connectivity.hpp"
#include "gridfactors/factors.hpp"
#include "gridfactors/grounded_system.hpp"
#include "gridfactors/linalg.hpp"
#include "gridfactors/single_mod.hpp"

namespace gridfactors {

/// Simultaneous finite susceptance changes on distinct branches.
struct ModificationSet {
  std::vector<BranchDelta> entries;

  std::string describe() const {
    std::string s = "{";
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(entries[i].branch) + ":" + std::to_string(entries[i].delta_b);
    }
    return s + "}";
  }
};

/// U = (nu_1 ... nu_M), B^-1 U and K = U^T B^-1 U for a list of branches.
struct LowRankBasis {
  std::vector<Terminals> terminals;
  MatrixXd inv_u;
  MatrixXd k;
};

inline LowRankBasis low_rank_basis(const GroundedSystem& sys, std::span<const int> branch_ids) {
  LowRankBasis out;
  const auto m = static_cast<Index>(branch_ids.size());
  out.inv_u.resize(sys.size(), m);
  for (Index j = 0; j < m; ++j) {
    out.terminals.push_back(sys.terminals_by_id(branch_ids[static_cast<std::size_t>(j)]));
    out.inv_u.col(j) = nu_apply(sys.inverse(), out.terminals.back());
  }
  out.k.resize(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      out.k(i, j) = nu_dot(out.inv_u.col(j), out.terminals[static_cast<std::size_t>(i)]);
  out.k = symmetrized(out.k);
  return out;
}

namespace detail {

inline std::vector<BranchDelta> nonzero_entries(const GroundedSystem& sys,
                                                const ModificationSet& mods) {
  std::set<int> seen;
  std::vector<BranchDelta> out;
  for (const BranchDelta& d : mods.entries) {
    if (!seen.insert(d.branch).second)
      throw std::invalid_argument("branch " + std::to_string(d.branch) +
                                  " appears twice in a modification set");
    const double b = sys.susceptance(sys.grid().branch_position(d.branch));
    if (b + d.delta_b < 0.0)
      throw std::invalid_argument("branch " + std::to_string(d.branch) +
                                  ": susceptance would become negative");
    if (d.delta_b != 0.0) out.push_back(d);
  }
  return out;
}

}  // namespace detail

/// Woodbury update B_m^-1 = B_r^-1 - B_r^-1 U (A^-1 + U^T B_r^-1 U)^-1 U^T B_r^-1,
/// A = diag(delta_b). Only an M x M system is factored.
inline MatrixXd woodbury_update(const GroundedSystem& sys, const ModificationSet& mods) {
  const auto entries = detail::nonzero_entries(sys, mods);
  if (entries.empty()) return sys.inverse();
  std::vector<int> ids;
  for (const auto& d : entries) ids.push_back(d.branch);
  const LowRankBasis basis = low_rank_basis(sys, ids);
  MatrixXd inner = basis.k;
  VectorXd db(static_cast<Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    db(static_cast<Index>(i)) = entries[i].delta_b;
    inner(static_cast<Index>(i), static_cast<Index>(i)) += 1.0 / entries[i].delta_b;
  }
  const PivotedInner lu = factor_inner(inner, woodbury_scale(basis.k, db));
  if (lu.singular(kInnerPivotTolerance))
    throw IslandingError("modification set " + mods.describe() + " islands the grid",
                         lu.pivot_ratio);
  MatrixXd out = sys.inverse();
  out.noalias() -= basis.inv_u * lu.lu.solve(basis.inv_u.transpose());
  return symmetrized(out);
}

inline VectorXd updated_susceptances(const GroundedSystem& sys, const ModificationSet& mods) {
  VectorXd b = sys.susceptances();
  for (const auto& d : mods.entries)
    b(static_cast<Index>(sys.grid().branch_position(d.branch))) += d.delta_b;
  return b;
}

/// PTDF_{a,i} = (b_a + db_a) nu_a^T B_m^-1 u_i for every branch.
inline FactorMatrix multi_ptdf(const GroundedSystem& sys, const ModificationSet& mods) {
  const MatrixXd inv_m = woodbury_update(sys, mods);
  const VectorXd b = updated_susceptances(sys, mods);
  FactorMatrix out;
  out.kind = FactorKind::ptdf;
  out.col_kind = LabelKind::bus;
  out.col_labels = sys.index().ids();
  const auto ne = static_cast<Index>(sys.grid().num_branches());
  out.values.resize(ne, sys.size());
  for (Index a = 0; a < ne; ++a) {
    const auto pos = static_cast<std::size_t>(a);
    out.values.row(a) = b(a) * nu_apply(inv_m, sys.terminals(pos)).transpose();
    out.row_labels.push_back(sys.grid().branches()[pos].id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Multiple ideal switches.
// ---------------------------------------------------------------------------

/// xi = b q / (1 + b q) for a finite switch susceptance b, q = nu^T B_r^-1 nu.
inline double xi_finite(double b, double quad) { return b * quad / (1.0 + b * quad); }

/// Switches evaluated against one all-open reference. K and K_d are built
/// once and shared read-only by every switch setting.
class SwitchBank {
 public:
  SwitchBank(const GroundedSystem& all_open, std::vector<int> switch_ids)
      : sys_(&all_open), ids_(std::move(switch_ids)) {
    std::set<int> seen;
    for (int id : ids_) {
      if (!seen.insert(id).second)
        throw std::invalid_argument("switch " + std::to_string(id) + " listed twice");
      if (all_open.susceptance(all_open.grid().branch_position(id)) != 0.0)
        throw std::invalid_argument("switch " + std::to_string(id) +
                                    " is not open in the reference grid");
    }
    basis_ = low_rank_basis(all_open, ids_);
    k_diag_ = basis_.k.diagonal();
  }

  const std::vector<int>& ids() const noexcept { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }
  const MatrixXd& k() const noexcept { return basis_.k; }
  const VectorXd& k_diag() const noexcept { return k_diag_; }
  const GroundedSystem& reference() const noexcept { return *sys_; }

  /// Xi diagonal: 0 for open, 1 for closed.
  VectorXd xi(const std::vector<bool>& closed) const {
    check_states(closed);
    const double tol = detail::merge_tolerance(sys_->inverse());
    VectorXd out(static_cast<Index>(ids_.size()));
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!(k_diag_(static_cast<Index>(i)) > tol))
        throw DegenerateSwitchError("switch " + std::to_string(ids_[i]) +
                                    " has zero effective resistance in the reference grid");
      out(static_cast<Index>(i)) = closed[i] ? 1.0 : 0.0;
    }
    return out;
  }

  /// B_m^-1 = B_r^-1 - B_r^-1 U Xi (K_d + (K - K_d) Xi)^-1 U^T B_r^-1.
  MatrixXd merged_inverse(const std::vector<bool>& closed) const {
    const VectorXd x = xi(closed);
    if ((x.array() == 0.0).all()) return sys_->inverse();
    const MatrixXd off = basis_.k - MatrixXd(k_diag_.asDiagonal());
    const MatrixXd bracket = MatrixXd(k_diag_.asDiagonal()) + off * x.asDiagonal();
    const PivotedInner lu = factor_inner(bracket, k_diag_.cwiseAbs().maxCoeff());
    if (lu.singular(kInnerPivotTolerance)) throw degenerate(closed);
    const MatrixXd right = lu.lu.solve(basis_.inv_u.transpose());
    MatrixXd out = sys_->inverse();
    out.noalias() -= basis_.inv_u * x.asDiagonal() * right;
    return symmetrized(out);
  }

  /// PTDF rows b_a nu_a^T B_m^-1 for every branch not in the bank.
  FactorMatrix merged_ptdf(const std::vector<bool>& closed) const {
    const MatrixXd inv_m = merged_inverse(closed);
    const Grid& grid = sys_->grid();
    FactorMatrix out;
    out.kind = FactorKind::ptdf;
    out.col_kind = LabelKind::bus;
    out.col_labels = sys_->index().ids();
    std::vector<Index> rows;
    for (std::size_t e = 0; e < grid.num_branches(); ++e)
      if (std::find(ids_.begin(), ids_.end(), grid.branches()[e].id) == ids_.end())
        rows.push_back(static_cast<Index>(e));
    out.values.resize(static_cast<Index>(rows.size()), sys_->size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto pos = static_cast<std::size_t>(rows[r]);
      out.values.row(static_cast<Index>(r)) =
          sys_->susceptance(pos) * nu_apply(inv_m, sys_->terminals(pos)).transpose();
      out.row_labels.push_back(grid.branches()[pos].id);
    }
    return out;
  }

 private:
  void check_states(const std::vector<bool>& closed) const {
    if (closed.size() != ids_.size())
      throw DimensionError("switch state vector has " + std::to_string(closed.size()) +
                           " entries for " + std::to_string(ids_.size()) + " switches");
  }

  DegenerateSwitchError degenerate(const std::vector<bool>& closed) const {
    // Redundant closing: a closed switch whose endpoints are already joined by
    // other closed switches in the bank.
    const Grid& grid = sys_->grid();
    detail::DisjointSets sets(grid.num_buses());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!closed[i]) continue;
      const Branch& br = grid.branch(ids_[i]);
      if (!sets.unite(grid.bus_position(br.from_bus), grid.bus_position(br.to_bus)))
        return DegenerateSwitchError("redundant closing: switch " + std::to_string(ids_[i]) +
                                     " joins buses already merged by other closed switches");
    }
    return DegenerateSwitchError("switch setting yields a degenerate configuration");
  }

  const GroundedSystem* sys_;
  std::vector<int> ids_;
  LowRankBasis basis_;
  VectorXd k_diag_;
};

inline VectorXd xi_from_states(const SwitchBank& bank, const std::vector<bool>& closed) {
  return bank.xi(closed);
}

inline MatrixXd multi_merge_inverse(const SwitchBank& bank, const std::vector<bool>& closed) {
  return bank.merged_inverse(closed);
}

// ---------------------------------------------------------------------------
// Multiple simultaneous bus splits.
// ---------------------------------------------------------------------------

/// Inner matrix U^T (B_o - B_o B_c^-1 B_o) U and the lifted basis
/// (1 - B_c^-1 B_o) U for all couplers of a TriConfig.
struct SplitBasis {
  MatrixXd lifted;
  MatrixXd inner;
  double scale = 0.0;  // largest |nu_s^T B_o nu_t|, before the cancellation
};

inline SplitBasis split_basis(const TriConfig& tri) {
  const auto m = static_cast<Index>(tri.couplers.size());
  const Index n = tri.open_size();
  MatrixXd u(n, m);
  MatrixXd w(n, m);
  for (Index j = 0; j < m; ++j) {
    const Terminals t = tri.couplers[static_cast<std::size_t>(j)].terminals;
    u.col(j) = nu_vector(t, n);
    w.col(j) = nu_apply(tri.open_laplacian, t);
  }
  const MatrixXd cw = tri.closed_inverse * w;
  SplitBasis out;
  out.lifted = u - cw;
  const MatrixXd direct = u.transpose() * w;
  out.inner = symmetrized(direct - w.transpose() * cw);
  out.scale = m > 0 ? direct.cwiseAbs().maxCoeff() : 0.0;
  return out;
}

/// B_o^-1 = B_c^-1 + (1 - B_c^-1 B_o) U [U^T (B_o - B_o B_c^-1 B_o) U]^-1
///          U^T (1 - B_o B_c^-1).
inline MatrixXd multi_split_inverse(const TriConfig& tri) {
  if (tri.couplers.empty()) return tri.closed_inverse;
  const SplitBasis basis = split_basis(tri);
  const PivotedInner lu = factor_inner(basis.inner, basis.scale);
  if (lu.singular(kInnerPivotTolerance))
    throw IslandingError("opening " + std::to_string(tri.couplers.size()) +
                             " couplers together islands the grid",
                         lu.pivot_ratio);
  MatrixXd out = tri.closed_inverse;
  out.noalias() += basis.lifted * lu.lu.solve(basis.lifted.transpose());
  return symmetrized(out);
}

}  // namespace gridfactors
