#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gridfactors/bus_topology.hpp"
#include "gridfactors/connectivity.hpp"
#include "gridfactors/grounded_system.hpp"
#include "gridfactors/linalg.hpp"
#include "gridfactors/multi_mod.hpp"

namespace gridfactors {

struct IslandingVerdict {
  double criterion = 0.0;
  bool islands = false;
};

/// Outage of branch e islands iff 1 - b_e nu_e^T B^-1 nu_e = 0 (matrix
/// determinant lemma).
inline IslandingVerdict outage_islands(const GroundedSystem& sys, int branch_id) {
  const std::size_t pos = sys.grid().branch_position(branch_id);
  const double b = sys.susceptance(pos);
  const double quad = nu_quadratic(sys.inverse(), sys.terminals(pos));
  const double criterion = 1.0 - b * quad;
  return {criterion, std::abs(criterion) <= 1e-8 * std::max(1.0, b * quad)};
}

/// Opening a coupler islands iff nu_s^T (B_o - B_o B_c^-1 B_o) nu_s = 0.
inline IslandingVerdict split_islands(const TriConfig& tri, std::size_t coupler = 0) {
  const CouplerTerms c = coupler_terms(tri, coupler);
  return {c.bracket, !(c.bracket > c.tolerance)};
}

/// Several simultaneous outages/changes: the inner Woodbury matrix is
/// singular. The criterion is the pivot ratio of A^-1 + U^T B^-1 U; this test
/// is numerically sensitive for large sets.
inline IslandingVerdict multi_outage_islands(const GroundedSystem& sys,
                                             const ModificationSet& mods) {
  const auto entries = detail::nonzero_entries(sys, mods);
  if (entries.empty()) return {1.0, false};
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
  return {lu.pivot_ratio, lu.singular(kInnerPivotTolerance)};
}

/// Multi-coupler split criterion: pivot ratio of the inner split matrix.
inline IslandingVerdict multi_split_islands(const TriConfig& tri) {
  if (tri.couplers.empty()) return {1.0, false};
  const SplitBasis basis = split_basis(tri);
  const PivotedInner lu = factor_inner(basis.inner, basis.scale);
  return {lu.pivot_ratio, lu.singular(kInnerPivotTolerance)};
}

}  // namespace gridfactors
