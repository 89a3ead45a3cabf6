#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "gridfactors/connectivity.hpp"
#include "gridfactors/errors.hpp"
#include "gridfactors/grid.hpp"

namespace gridfactors {

/// Branch terminals in grounded coordinates; -1 marks the slack bus, whose
/// row was removed.
struct Terminals {
  Index from = -1;
  Index to = -1;
};

/// Bijection between non-slack bus ids and grounded matrix rows. Rows follow
/// grid bus order with the slack skipped.
class BusIndex {
 public:
  BusIndex() = default;

  explicit BusIndex(const Grid& grid) : slack_id_(grid.slack().id) {
    for (const Bus& b : grid.buses()) {
      if (b.is_slack) continue;
      row_.emplace(b.id, static_cast<Index>(ids_.size()));
      ids_.push_back(b.id);
    }
  }

  Index size() const noexcept { return static_cast<Index>(ids_.size()); }
  const std::vector<int>& ids() const noexcept { return ids_; }
  int slack_id() const noexcept { return slack_id_; }

  /// Row of a bus, or -1 for the slack.
  Index row(int bus_id) const {
    if (bus_id == slack_id_) return -1;
    auto it = row_.find(bus_id);
    if (it == row_.end()) throw GridError("bus " + std::to_string(bus_id) + " not in index");
    return it->second;
  }

  int id(Index row) const { return ids_[static_cast<std::size_t>(row)]; }

 private:
  std::vector<int> ids_;
  std::unordered_map<int, Index> row_;
  int slack_id_ = 0;
};

inline Terminals terminals_of(const BusIndex& index, const Branch& br) {
  return {index.row(br.from_bus), index.row(br.to_bus)};
}

/// Dense nu vector: +1 at from, -1 at to, slack entries dropped.
inline VectorXd nu_vector(Terminals t, Index n) {
  VectorXd v = VectorXd::Zero(n);
  if (t.from >= 0) v(t.from) += 1.0;
  if (t.to >= 0) v(t.to) -= 1.0;
  return v;
}

/// M * nu without materializing nu.
template <typename Derived>
VectorXd nu_apply(const Eigen::MatrixBase<Derived>& m, Terminals t) {
  VectorXd out = VectorXd::Zero(m.rows());
  if (t.from >= 0) out += m.col(t.from);
  if (t.to >= 0) out -= m.col(t.to);
  return out;
}

/// nu^T v.
template <typename Derived>
double nu_dot(const Eigen::MatrixBase<Derived>& v, Terminals t) {
  double s = 0.0;
  if (t.from >= 0) s += v(t.from);
  if (t.to >= 0) s -= v(t.to);
  return s;
}

/// nu^T M nu.
template <typename Derived>
double nu_quadratic(const Eigen::MatrixBase<Derived>& m, Terminals t) {
  double s = 0.0;
  if (t.from >= 0) s += m(t.from, t.from);
  if (t.to >= 0) s += m(t.to, t.to);
  if (t.from >= 0 && t.to >= 0) s -= m(t.from, t.to) + m(t.to, t.from);
  return s;
}

/// Effective susceptance of every branch (switches open, outages zero).
inline VectorXd reference_susceptances(const Grid& grid) {
  VectorXd b(static_cast<Index>(grid.num_branches()));
  for (std::size_t e = 0; e < grid.num_branches(); ++e)
    b(static_cast<Index>(e)) = grid.effective_susceptance(e);
  return b;
}

/// B = E diag(b) E^T restricted to non-slack rows and columns.
inline MatrixXd assemble_grounded_laplacian(const Grid& grid, const BusIndex& index,
                                            const VectorXd& susceptance) {
  const Index n = index.size();
  MatrixXd lap = MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    const double b = susceptance(static_cast<Index>(e));
    if (b == 0.0) continue;
    const Terminals t = terminals_of(index, grid.branches()[e]);
    if (t.from >= 0) lap(t.from, t.from) += b;
    if (t.to >= 0) lap(t.to, t.to) += b;
    if (t.from >= 0 && t.to >= 0) {
      lap(t.from, t.to) -= b;
      lap(t.to, t.from) -= b;
    }
  }
  return lap;
}

/// Grounded Laplacian and its inverse for one fixed topology.
///
/// Built either by factorization (`build_grounded_system`) or from an inverse
/// obtained through a low-rank update (`with_updated_inverse`). In the second
/// case no factorization is kept and solves multiply by the inverse. Ideal
/// closed switches only ever appear inside the inverse; `laplacian()` holds
/// the finite part.
class GroundedSystem {
 public:
  GroundedSystem(Grid grid, BusIndex index, VectorXd susceptance, MatrixXd laplacian,
                 MatrixXd inverse, std::optional<Eigen::LLT<MatrixXd>> factor)
      : grid_(std::move(grid)),
        index_(std::move(index)),
        susceptance_(std::move(susceptance)),
        laplacian_(std::move(laplacian)),
        inverse_(std::move(inverse)),
        factor_(std::move(factor)) {}

  /// System for `grid` whose inverse was computed elsewhere. `susceptance`
  /// defaults to the grid's reference susceptances.
  static GroundedSystem with_updated_inverse(Grid grid, MatrixXd inverse,
                                             std::optional<VectorXd> susceptance = {}) {
    BusIndex index(grid);
    VectorXd b = susceptance ? std::move(*susceptance) : reference_susceptances(grid);
    if (inverse.rows() != index.size() || inverse.cols() != index.size())
      throw DimensionError("updated inverse does not match grid size");
    MatrixXd lap = assemble_grounded_laplacian(grid, index, b);
    return GroundedSystem(std::move(grid), std::move(index), std::move(b), std::move(lap),
                          std::move(inverse), std::nullopt);
  }

  const Grid& grid() const noexcept { return grid_; }
  const BusIndex& index() const noexcept { return index_; }
  Index size() const noexcept { return index_.size(); }
  int slack() const noexcept { return index_.slack_id(); }

  const MatrixXd& laplacian() const noexcept { return laplacian_; }
  const MatrixXd& inverse() const noexcept { return inverse_; }
  const VectorXd& susceptances() const noexcept { return susceptance_; }
  double susceptance(std::size_t branch_pos) const {
    return susceptance_(static_cast<Index>(branch_pos));
  }
  bool has_factorization() const noexcept { return factor_.has_value(); }

  Terminals terminals(std::size_t branch_pos) const {
    return terminals_of(index_, grid_.branches()[branch_pos]);
  }
  Terminals terminals_by_id(int branch_id) const {
    return terminals(grid_.branch_position(branch_id));
  }

  /// Solve B x = rhs (columns) via the factorization, or the inverse.
  MatrixXd solve(const MatrixXd& rhs) const {
    if (factor_) return factor_->solve(rhs);
    return inverse_ * rhs;
  }

  /// Full bus-order vector -> grounded coordinates (slack entry dropped).
  VectorXd reduce(const VectorXd& full) const {
    if (full.size() != static_cast<Index>(grid_.num_buses()))
      throw DimensionError("injection vector has " + std::to_string(full.size()) +
                           " entries, grid has " + std::to_string(grid_.num_buses()) + " buses");
    VectorXd out(size());
    Index r = 0;
    for (std::size_t i = 0; i < grid_.num_buses(); ++i)
      if (!grid_.buses()[i].is_slack) out(r++) = full(static_cast<Index>(i));
    return out;
  }

  /// Grounded angles -> full bus order with the slack at 0.
  VectorXd expand(const VectorXd& grounded) const {
    if (grounded.size() != size()) throw DimensionError("angle vector size mismatch");
    VectorXd out(static_cast<Index>(grid_.num_buses()));
    Index r = 0;
    for (std::size_t i = 0; i < grid_.num_buses(); ++i)
      out(static_cast<Index>(i)) = grid_.buses()[i].is_slack ? 0.0 : grounded(r++);
    return out;
  }

 private:
  Grid grid_;
  BusIndex index_;
  VectorXd susceptance_;
  MatrixXd laplacian_;
  MatrixXd inverse_;
  std::optional<Eigen::LLT<MatrixXd>> factor_;
};

inline DisconnectedError disconnected_error(const Grid& grid, EdgeSet edges) {
  auto parts = traversal_connectivity(grid, edges);
  return DisconnectedError("grid is disconnected into " + std::to_string(parts.size()) +
                               " components; grounded Laplacian is singular",
                           std::move(parts));
}

inline GroundedSystem build_grounded_system(const Grid& grid) {
  if (!is_connected(grid, EdgeSet::reference)) throw disconnected_error(grid, EdgeSet::reference);
  BusIndex index(grid);
  VectorXd b = reference_susceptances(grid);
  MatrixXd lap = assemble_grounded_laplacian(grid, index, b);
  Eigen::LLT<MatrixXd> llt(lap);
  if (llt.info() != Eigen::Success) throw disconnected_error(grid, EdgeSet::reference);
  MatrixXd inv = llt.solve(MatrixXd::Identity(lap.rows(), lap.cols()));
  inv = 0.5 * (inv + inv.transpose()).eval();
  return GroundedSystem(grid, std::move(index), std::move(b), std::move(lap), std::move(inv),
                        std::move(llt));
}

/// True when every LDL^T pivot of a grounded Laplacian is positive relative
/// to its largest diagonal entry.
inline bool laplacian_pivots_positive(const MatrixXd& lap) {
  if (lap.rows() == 0) return true;
  Eigen::LDLT<MatrixXd> ldlt(lap);
  const double scale = lap.diagonal().cwiseAbs().maxCoeff();
  if (scale <= 0.0) return false;
  return (ldlt.vectorD().array() > 1e-12 * scale).all();
}

/// Moore-Penrose pseudo-inverse of the full (ungrounded) Laplacian,
/// (L + J/N)^-1 - J/N. Cross-check only.
inline MatrixXd pseudo_inverse_check(const Grid& grid) {
  if (!is_connected(grid, EdgeSet::reference)) throw disconnected_error(grid, EdgeSet::reference);
  const auto n = static_cast<Index>(grid.num_buses());
  MatrixXd lap = MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < grid.num_branches(); ++e) {
    const double b = grid.effective_susceptance(e);
    if (b == 0.0) continue;
    const Branch& br = grid.branches()[e];
    const auto i = static_cast<Index>(grid.bus_position(br.from_bus));
    const auto j = static_cast<Index>(grid.bus_position(br.to_bus));
    lap(i, i) += b;
    lap(j, j) += b;
    lap(i, j) -= b;
    lap(j, i) -= b;
  }
  const MatrixXd jn = MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::PartialPivLU<MatrixXd> lu(lap + jn);
  return lu.inverse() - jn;
}

/// The full (ungrounded) Laplacian E diag(b) E^T, used by the pseudo-inverse
/// cross-checks.
inline MatrixXd full_laplacian(const Grid& grid) {
  const IncidenceMatrix inc = build_incidence(grid);
  return inc.full * reference_susceptances(grid).asDiagonal() * inc.full.transpose();
}

}  // namespace gridfactors
