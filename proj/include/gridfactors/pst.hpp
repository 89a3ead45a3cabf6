#pragma once

#include <string>

#include "gridfactors/factors.hpp"
#include "gridfactors/grounded_system.hpp"

namespace gridfactors {

/// Phase-shift angle per branch (radians), zero except on PSTs.
using ShiftVector = VectorXd;

inline ShiftVector shift_vector(const Grid& grid) {
  ShiftVector s = ShiftVector::Zero(static_cast<Index>(grid.num_branches()));
  for (std::size_t e = 0; e < grid.num_branches(); ++e)
    s(static_cast<Index>(e)) = grid.branches()[e].shift_angle;
  return s;
}

inline void check_shifts(const Grid& grid, const ShiftVector& shifts) {
  if (shifts.size() != static_cast<Index>(grid.num_branches()))
    throw DimensionError("shift vector size mismatch");
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    const Branch& br = grid.branches()[e];
    if (shifts(static_cast<Index>(e)) != 0.0 && br.kind != BranchKind::pst)
      throw GridError("phase shift given for branch " + std::to_string(br.id) +
                      ", which is not a pst");
  }
}

/// p_hat = p - sum_pst b theta_shift nu (full bus order).
inline VectorXd effective_injections(const Grid& grid, const VectorXd& p,
                                     const ShiftVector& shifts) {
  check_shifts(grid, shifts);
  if (p.size() != static_cast<Index>(grid.num_buses()))
    throw DimensionError("injection vector size mismatch");
  VectorXd out = p;
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    const double s = shifts(static_cast<Index>(e));
    if (s == 0.0) continue;
    const double bs = grid.effective_susceptance(e) * s;
    const Branch& br = grid.branches()[e];
    out(static_cast<Index>(grid.bus_position(br.from_bus))) -= bs;
    out(static_cast<Index>(grid.bus_position(br.to_bus))) += bs;
  }
  return out;
}

/// Flows from effective injections: PTDF p_hat, plus the b theta_shift
/// correction on each PST's own row.
inline VectorXd flows_from_effective_injections(const GroundedSystem& sys,
                                                const FactorMatrix& ptdf, const VectorXd& p,
                                                const ShiftVector& shifts) {
  const VectorXd p_hat = effective_injections(sys.grid(), p, shifts);
  VectorXd f = ptdf.apply(sys.reduce(p_hat));
  f.array() += sys.susceptances().array() * shifts.array();
  return f;
}

/// Phase shifter distribution factors, branch x branch:
/// PSDF_{l,e} = b_e [l == e] - b_e (PTDF_{l,from(e)} - PTDF_{l,to(e)}).
inline FactorMatrix psdf_matrix(const GroundedSystem& sys, const FactorMatrix& ptdf) {
  const Grid& grid = sys.grid();
  const auto ne = static_cast<Index>(grid.num_branches());
  FactorMatrix out;
  out.kind = FactorKind::psdf;
  out.col_kind = LabelKind::branch;
  out.values = MatrixXd::Zero(ne, ne);
  for (Index e = 0; e < ne; ++e) {
    const auto pos = static_cast<std::size_t>(e);
    const double b = sys.susceptance(pos);
    out.values.col(e) = -b * nu_apply(ptdf.values, sys.terminals(pos));
    out.values(e, e) += b;
  }
  for (const Branch& br : grid.branches()) {
    out.row_labels.push_back(br.id);
    out.col_labels.push_back(br.id);
  }
  return out;
}

inline FactorMatrix psdf_matrix(const GroundedSystem& sys) {
  return psdf_matrix(sys, ptdf_matrix(sys));
}

}  // namespace gridfactors
