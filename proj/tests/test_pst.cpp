#include "test_support.hpp"

using namespace gridfactors;
using namespace gridfactors::testing;

namespace {

Grid triangle_with_pst(double shift) {
  return Grid({{1, 1.0, false}, {2, 0.0, false}, {3, -1.0, true}},
              {{1, 1, 2, 1.0, BranchKind::pst, shift, true}, {2, 2, 3, 1.0}, {3, 1, 3, 1.0}});
}

}  // namespace

TEST(Pst, ZeroShiftsKeepInjections) {
  const Grid g = unit_triangle();
  const VectorXd p = g.injections();
  EXPECT_TRUE((effective_injections(g, p, shift_vector(g)).array() == p.array()).all());
}

TEST(Pst, SinglePstEffectiveInjection) {
  const Grid g({{1, 0.0, true}, {2, 0.0, false}}, {{1, 1, 2, 2.0, BranchKind::pst, 0.1, true}});
  const VectorXd p_hat = effective_injections(g, VectorXd::Zero(2), shift_vector(g));
  EXPECT_NEAR(p_hat(0), -0.2, 1e-15);
  EXPECT_NEAR(p_hat(1), 0.2, 1e-15);
  EXPECT_NEAR(p_hat.sum(), 0.0, 1e-15);
}

TEST(Pst, ShiftOnNonPstRejected) {
  const Grid g = unit_triangle();
  ShiftVector s = ShiftVector::Zero(3);
  s(1) = 0.1;
  EXPECT_THROW(effective_injections(g, g.injections(), s), GridError);
}

TEST(Pst, TriangleFlowsMatchShiftedBranchEquation) {
  const Grid g = triangle_with_pst(0.1);
  const GroundedSystem sys = build_grounded_system(g);
  const FactorMatrix ptdf = ptdf_matrix(sys);
  const VectorXd f = flows_from_effective_injections(sys, ptdf, g.injections(), shift_vector(g));
  EXPECT_LT((f - oracle::rebuild_and_solve(g).flows).cwiseAbs().maxCoeff(), 1e-10);

  const VectorXd via_psdf =
      ptdf.apply(sys.reduce(g.injections())) + psdf_matrix(sys, ptdf).values * shift_vector(g);
  EXPECT_LT((via_psdf - f).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pst, NoPstsPsdfContributesNothing) {
  const Grid g = case6ww();
  const GroundedSystem sys = build_grounded_system(g);
  const VectorXd shifts = shift_vector(g);
  EXPECT_EQ((psdf_matrix(sys).values * shifts).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Pst, RadialPstCannotDriveItsOwnFlow) {
  const Grid g({{1, 0.3, true}, {2, -0.3, false}}, {{1, 1, 2, 2.0, BranchKind::pst, 0.2, true}});
  const GroundedSystem sys = build_grounded_system(g);
  const FactorMatrix ptdf = ptdf_matrix(sys);
  const FactorMatrix psdf = psdf_matrix(sys, ptdf);
  EXPECT_NEAR(psdf.values(0, 0), 0.0, 1e-15);
  const VectorXd a = flows_from_effective_injections(sys, ptdf, g.injections(), shift_vector(g));
  const VectorXd b = ptdf.apply(sys.reduce(g.injections())) + psdf.values * shift_vector(g);
  EXPECT_NEAR(a(0), b(0), 1e-15);
  EXPECT_NEAR(a(0), 0.3, 1e-15);
}

TEST(Pst, RouteEquivalenceRandom) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Grid g = oracle::random_grid(seed, 12, 3.0, {.psts = 1 + static_cast<int>(seed % 3)});
    const GroundedSystem sys = build_grounded_system(g);
    const FactorMatrix ptdf = ptdf_matrix(sys);
    const ShiftVector s = shift_vector(g);
    const VectorXd a = flows_from_effective_injections(sys, ptdf, g.injections(), s);
    const VectorXd b = ptdf.apply(sys.reduce(g.injections())) + psdf_matrix(sys, ptdf).values * s;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a - oracle::rebuild_and_solve(g).flows).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Pst, RouteEquivalenceAfterModification) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Grid g = oracle::random_grid(seed, 12, 3.0, {.psts = 2});
    const GroundedSystem sys = build_grounded_system(g);
    const BranchDelta d{g.branches().back().id, 0.7};
    const Grid modified = oracle::with_deltas(g, {{d.branch, d.delta_b}});
    const GroundedSystem msys =
        GroundedSystem::with_updated_inverse(modified, updated_inverse(sys, d));
    const FactorMatrix ptdf = ptdf_after_mod(sys, d);
    const ShiftVector s = shift_vector(modified);
    const VectorXd a = flows_from_effective_injections(msys, ptdf, modified.injections(), s);
    const VectorXd b = ptdf.apply(msys.reduce(modified.injections())) + psdf_matrix(msys, ptdf).values * s;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((a - oracle::rebuild_and_solve(modified).flows).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Pst, PstAtSlackTerminal) {
  const Grid g({{1, 0.5, true}, {2, -0.2, false}, {3, -0.3, false}},
               {{1, 1, 2, 1.0, BranchKind::pst, -0.15, true}, {2, 2, 3, 1.0}, {3, 3, 1, 2.0}});
  const GroundedSystem sys = build_grounded_system(g);
  const FactorMatrix ptdf = ptdf_matrix(sys);
  const VectorXd f = flows_from_effective_injections(sys, ptdf, g.injections(), shift_vector(g));
  EXPECT_LT((f - oracle::rebuild_and_solve(g).flows).cwiseAbs().maxCoeff(), 1e-12);
}
