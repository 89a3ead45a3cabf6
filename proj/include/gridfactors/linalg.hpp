#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/LU>

namespace gridfactors {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Partial-pivot LU of a small inner (capacitance) matrix together with the
/// ratio of its smallest to largest pivot magnitude.
struct PivotedInner {
  Eigen::PartialPivLU<MatrixXd> lu;
  double pivot_ratio = 1.0;

  bool singular(double rel_tol) const { return !(pivot_ratio >= rel_tol); }
};

/// `scale` is the magnitude of the terms that were summed into `m`. When they
/// cancel, every pivot is roundoff and the plain min/max ratio says nothing,
/// so pivots are measured against the larger of the two.
inline PivotedInner factor_inner(const MatrixXd& m, double scale = 0.0) {
  PivotedInner out;
  if (m.rows() == 0) return out;
  out.lu.compute(m);
  const VectorXd pivots = out.lu.matrixLU().diagonal().cwiseAbs();
  const double largest = std::max(pivots.maxCoeff(), scale);
  out.pivot_ratio = largest > 0.0 ? pivots.minCoeff() / largest : 0.0;
  return out;
}

/// Singularity threshold on pivot ratios for inner Woodbury systems.
inline constexpr double kInnerPivotTolerance = 1e-10;

/// Scale of K + diag(1 / delta_b): the largest of its two summands' entries.
inline double woodbury_scale(const MatrixXd& k, const VectorXd& delta_b) {
  double s = k.rows() > 0 ? k.cwiseAbs().maxCoeff() : 0.0;
  for (Index i = 0; i < delta_b.size(); ++i) s = std::max(s, 1.0 / std::abs(delta_b(i)));
  return s;
}

inline double relative_frobenius(const MatrixXd& a, const MatrixXd& b) {
  const double denom = std::max(b.norm(), 1e-300);
  return (a - b).norm() / denom;
}

inline MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace gridfactors
