#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridfactors/factors.hpp"
#include "gridfactors/grounded_system.hpp"
#include "gridfactors/linalg.hpp"

namespace gridfactors {

/// Susceptance change b_e -> b_e + delta_b on one branch. delta_b = -b_e is
/// an outage; b_e = 0 with delta_b > 0 closes an open line.
struct BranchDelta {
  int branch = 0;
  double delta_b = 0.0;
};

namespace detail {

// |1 + db nu^T B^-1 nu| below this means the update islands the grid.
inline double rank_one_tolerance(double delta_b, double quad) {
  return 1e-8 * std::max(1.0, std::abs(delta_b) * quad);
}

struct RankOnePieces {
  std::size_t pos = 0;
  Terminals terminals;
  double b = 0.0;        // reference susceptance
  double delta_b = 0.0;
  VectorXd column;       // B^-1 nu
  double quad = 0.0;     // nu^T B^-1 nu
  double denominator = 1.0;
};

inline RankOnePieces rank_one_pieces(const GroundedSystem& sys, const BranchDelta& d) {
  RankOnePieces r;
  r.pos = sys.grid().branch_position(d.branch);
  r.terminals = sys.terminals(r.pos);
  r.b = sys.susceptance(r.pos);
  r.delta_b = d.delta_b;
  if (r.b + r.delta_b < 0.0)
    throw std::invalid_argument("branch " + std::to_string(d.branch) +
                                ": susceptance would become negative");
  r.column = nu_apply(sys.inverse(), r.terminals);
  r.quad = nu_dot(r.column, r.terminals);
  r.denominator = 1.0 + r.delta_b * r.quad;
  if (std::abs(r.denominator) <= rank_one_tolerance(r.delta_b, r.quad))
    throw IslandingError("modifying branch " + std::to_string(d.branch) + " islands the grid",
                         r.denominator);
  return r;
}

}  // namespace detail

/// Sherman-Morrison update of the grounded inverse for one branch change.
inline MatrixXd updated_inverse(const GroundedSystem& sys, const BranchDelta& d) {
  if (d.delta_b == 0.0) return sys.inverse();
  const auto r = detail::rank_one_pieces(sys, d);
  MatrixXd out = sys.inverse();
  out.noalias() -= (r.delta_b / r.denominator) * r.column * r.column.transpose();
  return symmetrized(out);
}

inline VectorXd updated_susceptances(const GroundedSystem& sys, const BranchDelta& d) {
  VectorXd b = sys.susceptances();
  b(static_cast<Index>(sys.grid().branch_position(d.branch))) += d.delta_b;
  return b;
}

/// PTDF of the modified grid. Rows other than the modified branch use the
/// rank-one product PTDF_r - g (PTDF_r nu)(nu^T B^-1); the modified row is
/// evaluated directly as (b + db) nu^T B_m^-1.
inline FactorMatrix ptdf_after_mod(const GroundedSystem& sys, const FactorMatrix& ptdf_ref,
                                   const BranchDelta& d) {
  if (d.delta_b == 0.0) return ptdf_ref;
  const auto r = detail::rank_one_pieces(sys, d);
  FactorMatrix out = ptdf_ref;
  const VectorXd ptdf_nu = nu_apply(ptdf_ref.values, r.terminals);
  out.values.noalias() -= (r.delta_b / r.denominator) * ptdf_nu * r.column.transpose();

  const MatrixXd inv_m = updated_inverse(sys, d);
  out.values.row(static_cast<Index>(r.pos)) =
      (r.b + r.delta_b) * nu_apply(inv_m, r.terminals).transpose();
  return out;
}

inline FactorMatrix ptdf_after_mod(const GroundedSystem& sys, const BranchDelta& d) {
  return ptdf_after_mod(sys, ptdf_matrix(sys), d);
}

/// Column of line outage distribution factors for branch `branch_id`:
/// f_after = f_before + lodf * f_before[e]. The self entry is exactly -1.
inline VectorXd lodf_column(const GroundedSystem& sys, int branch_id) {
  const std::size_t pos = sys.grid().branch_position(branch_id);
  const double b = sys.susceptance(pos);
  if (!(b > 0.0))
    throw std::invalid_argument("branch " + std::to_string(branch_id) + " is not in service");
  const auto r = detail::rank_one_pieces(sys, {branch_id, -b});
  const auto ne = static_cast<Index>(sys.grid().num_branches());
  VectorXd out(ne);
  for (Index a = 0; a < ne; ++a) {
    const auto apos = static_cast<std::size_t>(a);
    const double b_after = apos == pos ? 0.0 : sys.susceptance(apos);
    out(a) = b_after * nu_dot(r.column, sys.terminals(apos)) / r.denominator;
  }
  out(static_cast<Index>(pos)) -= 1.0;
  return out;
}

/// LODF columns for several outages, labelled by branch id.
inline FactorMatrix lodf_matrix(const GroundedSystem& sys, const std::vector<int>& outages) {
  FactorMatrix out;
  out.kind = FactorKind::lodf_columns;
  out.col_kind = LabelKind::branch;
  out.values.resize(static_cast<Index>(sys.grid().num_branches()),
                    static_cast<Index>(outages.size()));
  for (const Branch& br : sys.grid().branches()) out.row_labels.push_back(br.id);
  for (std::size_t c = 0; c < outages.size(); ++c) {
    out.values.col(static_cast<Index>(c)) = lodf_column(sys, outages[c]);
    out.col_labels.push_back(outages[c]);
  }
  return out;
}

/// Angle difference across branch e after its outage, from the reference
/// PTDF row and the pre-outage flow on e.
inline double post_outage_angle_diff(const GroundedSystem& sys, int branch_id,
                                     const VectorXd& flows_ref) {
  const std::size_t pos = sys.grid().branch_position(branch_id);
  const double b = sys.susceptance(pos);
  const auto r = detail::rank_one_pieces(sys, {branch_id, -b});
  // PTDF_{e,i} - PTDF_{e,j} with PTDF_{e,:} = b nu_e^T B^-1.
  const double ptdf_diff = b * r.quad;
  const double delta_b = -b;
  return flows_ref(static_cast<Index>(pos)) / (b + delta_b * ptdf_diff);
}

/// Line closing distribution factors for an open branch closed with
/// susceptance `new_b`: f_after = f_before + lcdf * (nu_e^T theta_before).
inline VectorXd lcdf_column(const GroundedSystem& sys, int branch_id, double new_b) {
  const std::size_t pos = sys.grid().branch_position(branch_id);
  if (sys.susceptance(pos) != 0.0)
    throw std::invalid_argument("branch " + std::to_string(branch_id) +
                                " is not open; closing needs b_e = 0");
  if (!(new_b > 0.0)) throw std::invalid_argument("closing susceptance must be positive");
  const auto r = detail::rank_one_pieces(sys, {branch_id, new_b});
  const auto ne = static_cast<Index>(sys.grid().num_branches());
  VectorXd out(ne);
  for (Index a = 0; a < ne; ++a) {
    const auto apos = static_cast<std::size_t>(a);
    const double b_after = apos == pos ? new_b : sys.susceptance(apos);
    out(a) = -new_b * b_after * nu_dot(r.column, sys.terminals(apos)) / r.denominator;
  }
  out(static_cast<Index>(pos)) += new_b;
  return out;
}

}  // namespace gridfactors
