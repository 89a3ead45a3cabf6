#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "gridfactors/grid.hpp"
#include "gridfactors/grounded_system.hpp"

namespace gridfactors {

/// Angles in grounded coordinates (slack fixed at 0) and flows per branch.
struct FlowState {
  VectorXd angles;
  VectorXd flows;
};

enum class FactorKind { ptdf, psdf, lodf_columns };
enum class LabelKind { bus, branch };

/// Dense sensitivity matrix with branch-id rows and bus- or branch-id columns.
/// PTDFs omit the slack column; see `with_slack_column`.
struct FactorMatrix {
  MatrixXd values;
  std::vector<int> row_labels;
  std::vector<int> col_labels;
  FactorKind kind = FactorKind::ptdf;
  LabelKind col_kind = LabelKind::bus;

  VectorXd apply(const VectorXd& x) const {
    if (x.size() != values.cols()) throw DimensionError("factor matrix column count mismatch");
    return values * x;
  }

  std::ptrdiff_t row_of(int branch_id) const {
    for (std::size_t i = 0; i < row_labels.size(); ++i)
      if (row_labels[i] == branch_id) return static_cast<std::ptrdiff_t>(i);
    return -1;
  }
};

/// PTDF with an explicit zero column for the slack, columns in grid bus order.
inline FactorMatrix with_slack_column(const FactorMatrix& ptdf, const GroundedSystem& sys) {
  const Grid& grid = sys.grid();
  FactorMatrix out;
  out.kind = ptdf.kind;
  out.col_kind = LabelKind::bus;
  out.row_labels = ptdf.row_labels;
  out.values = MatrixXd::Zero(ptdf.values.rows(), static_cast<Index>(grid.num_buses()));
  Index r = 0;
  for (std::size_t i = 0; i < grid.num_buses(); ++i) {
    out.col_labels.push_back(grid.buses()[i].id);
    if (grid.buses()[i].is_slack) continue;
    out.values.col(static_cast<Index>(i)) = ptdf.values.col(r++);
  }
  return out;
}

/// theta = B^-1 p for a full bus-order injection vector p.
inline VectorXd solve_angles(const GroundedSystem& sys, const VectorXd& p) {
  const VectorXd reduced = sys.reduce(p);
  return sys.solve(reduced);
}

/// f = diag(b) E^T theta, plus b * shift on phase-shifting branches when a
/// shift vector (one entry per branch) is given.
inline FlowState compute_flows(const GroundedSystem& sys, const VectorXd& angles,
                               const std::optional<VectorXd>& shifts = std::nullopt) {
  if (angles.size() != sys.size()) throw DimensionError("angle vector size mismatch");
  const auto ne = static_cast<Index>(sys.grid().num_branches());
  if (shifts && shifts->size() != ne) throw DimensionError("shift vector size mismatch");
  FlowState out{angles, VectorXd::Zero(ne)};
  for (Index e = 0; e < ne; ++e) {
    const double b = sys.susceptance(static_cast<std::size_t>(e));
    if (b == 0.0) continue;
    double diff = nu_dot(angles, sys.terminals(static_cast<std::size_t>(e)));
    if (shifts) diff += (*shifts)(e);
    out.flows(e) = b * diff;
  }
  return out;
}

inline FlowState solve_flows(const GroundedSystem& sys, const VectorXd& p) {
  return compute_flows(sys, solve_angles(sys, p));
}

/// Net flow leaving each bus minus its injection (bus order). Zero when KCL
/// holds.
inline VectorXd kcl_residual(const Grid& grid, const VectorXd& flows, const VectorXd& p) {
  VectorXd r = -p;
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    const Branch& br = grid.branches()[e];
    r(static_cast<Index>(grid.bus_position(br.from_bus))) += flows(static_cast<Index>(e));
    r(static_cast<Index>(grid.bus_position(br.to_bus))) -= flows(static_cast<Index>(e));
  }
  return r;
}

/// PTDF = diag(b) E^T B^-1 over non-slack buses, by column solves against the
/// stored factorization.
inline FactorMatrix ptdf_matrix(const GroundedSystem& sys) {
  const Grid& grid = sys.grid();
  const IncidenceMatrix inc = build_incidence(grid);
  // B X = E_r  =>  X^T = E_r^T B^-1 since B is symmetric.
  const MatrixXd x = sys.solve(inc.reduced);
  FactorMatrix out;
  out.kind = FactorKind::ptdf;
  out.col_kind = LabelKind::bus;
  out.values = sys.susceptances().asDiagonal() * x.transpose();
  for (const Branch& br : grid.branches()) out.row_labels.push_back(br.id);
  out.col_labels = sys.index().ids();
  return out;
}

}  // namespace gridfactors
