#include "test_support.hpp"

using namespace gridfactors;
using namespace gridfactors::testing;

TEST(SingleMod, ZeroDeltaIsExactIdentity) {
  const GroundedSystem sys = build_grounded_system(case6ww());
  const MatrixXd inv = updated_inverse(sys, {4, 0.0});
  EXPECT_TRUE((inv.array() == sys.inverse().array()).all());
  const FactorMatrix ptdf = ptdf_matrix(sys);
  EXPECT_TRUE((ptdf_after_mod(sys, ptdf, {4, 0.0}).values.array() == ptdf.values.array()).all());
}

TEST(SingleMod, TriangleOutageMatchesOracle) {
  const Grid g = unit_triangle();
  const GroundedSystem sys = build_grounded_system(g);
  const MatrixXd inv = updated_inverse(sys, {1, -1.0});
  const MatrixXd expected = oracle::rebuild_and_solve(oracle::with_deltas(g, {{1, -1.0}})).inverse;
  EXPECT_LT((inv - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SingleMod, TwoBusOutageIslands) {
  const GroundedSystem sys = build_grounded_system(two_bus());
  EXPECT_THROW(updated_inverse(sys, {1, -1.0}), IslandingError);
  EXPECT_THROW(lodf_column(sys, 1), IslandingError);
}

TEST(SingleMod, NegativeResultRejected) {
  const GroundedSystem sys = build_grounded_system(unit_triangle());
  EXPECT_THROW(updated_inverse(sys, {1, -2.0}), std::invalid_argument);
}

TEST(SingleMod, TrianglePtdfAfterIncrease) {
  const Grid g = unit_triangle();
  const GroundedSystem sys = build_grounded_system(g);
  const FactorMatrix m = ptdf_after_mod(sys, {1, 0.5});
  const MatrixXd expected = oracle_ptdf(oracle::with_deltas(g, {{1, 0.5}}));
  EXPECT_LT((m.values - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SingleMod, TrianglePtdfAfterOutage) {
  const Grid g = unit_triangle(3);
  const GroundedSystem sys = build_grounded_system(g);
  const FactorMatrix m = ptdf_after_mod(sys, {1, -1.0});
  EXPECT_EQ(m.values.row(0).cwiseAbs().maxCoeff(), 0.0);
  // Remaining path 1 -> 3 <- 2: injections at 1 use branch 3 only, at 2 use
  // branch 2 only.
  EXPECT_NEAR(m.values(2, 0), 1.0, 1e-12);
  EXPECT_NEAR(m.values(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(m.values(1, 1), 1.0, 1e-12);
  EXPECT_NEAR(m.values(2, 1), 0.0, 1e-12);
}

TEST(SingleMod, TriangleLodf) {
  const GroundedSystem sys = build_grounded_system(unit_triangle());
  const VectorXd col = lodf_column(sys, 1);
  EXPECT_EQ(col(0), -1.0);
  EXPECT_NEAR(col(2), 1.0, 1e-12);
  EXPECT_NEAR(col(1), -1.0, 1e-12);
}

TEST(SingleMod, Case6wwLodfMatchesOracle) {
  const Grid g = case6ww();
  const GroundedSystem sys = build_grounded_system(g);
  const VectorXd f = solve_flows(sys, g.injections()).flows;
  for (const Branch& br : g.branches()) {
    const VectorXd col = lodf_column(sys, br.id);
    EXPECT_EQ(col(static_cast<Index>(g.branch_position(br.id))), -1.0);
    const VectorXd post = f + col * f(static_cast<Index>(g.branch_position(br.id)));
    const VectorXd expected =
        oracle::rebuild_and_solve(oracle::with_deltas(g, {{br.id, -br.susceptance}})).flows;
    EXPECT_LT((post - expected).cwiseAbs().maxCoeff(), 1e-8) << "branch " << br.id;
  }
}

TEST(SingleMod, LodfMatrixColumns) {
  const GroundedSystem sys = build_grounded_system(case6ww());
  const FactorMatrix m = lodf_matrix(sys, {2, 9});
  EXPECT_EQ(m.values.cols(), 2);
  EXPECT_EQ(m.col_labels, (std::vector<int>{2, 9}));
  EXPECT_EQ(m.values(1, 0), -1.0);
  EXPECT_EQ(m.values(8, 1), -1.0);
}

TEST(SingleMod, PostOutageAngleDifference) {
  const Grid g = unit_triangle(3);
  const GroundedSystem sys = build_grounded_system(g);
  const VectorXd f = solve_flows(sys, g.injections()).flows;
  const double diff = post_outage_angle_diff(sys, 1, f);
  const auto post = oracle::rebuild_and_solve(oracle::with_deltas(g, {{1, -1.0}}));
  EXPECT_NEAR(diff, post.angles(0) - post.angles(1), 1e-10);
  EXPECT_EQ(post_outage_angle_diff(sys, 1, VectorXd::Zero(3)), 0.0);
}

TEST(SingleMod, ReclosingRestoresFlow) {
  const Grid g = oracle::random_grid(4, 10, 3.0);
  const GroundedSystem sys = build_grounded_system(g);
  const VectorXd f = solve_flows(sys, g.injections()).flows;
  const int id = g.branches().back().id;
  const double b = g.branch(id).susceptance;
  const double diff = post_outage_angle_diff(sys, id, f);
  // Outaged system, then close the line again with its old susceptance.
  const Grid outaged = oracle::with_deltas(g, {{id, -b}});
  const GroundedSystem out_sys = build_grounded_system(outaged);
  const VectorXd f_out = solve_flows(out_sys, g.injections()).flows;
  const VectorXd theta_out = solve_angles(out_sys, g.injections());
  const double across = nu_dot(theta_out, out_sys.terminals_by_id(id));
  EXPECT_NEAR(across, diff, 1e-10);
  const VectorXd reclosed = f_out + lcdf_column(out_sys, id, b) * across;
  EXPECT_LT((reclosed - f).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SingleMod, LcdfFourCycle) {
  // Path 1-2-3-4 with the closing edge 4-1 open.
  const Grid g({{1, 1.0, true}, {2, 0.5, false}, {3, -0.25, false}, {4, -1.25, false}},
               {{1, 1, 2, 1.0}, {2, 2, 3, 2.0}, {3, 3, 4, 0.5}, {4, 4, 1, 1.5, BranchKind::line, 0.0, false}});
  const GroundedSystem sys = build_grounded_system(g);
  const VectorXd theta = solve_angles(sys, g.injections());
  const VectorXd f = compute_flows(sys, theta).flows;
  const VectorXd col = lcdf_column(sys, 4, 1.5);
  const VectorXd post = f + col * nu_dot(theta, sys.terminals_by_id(4));
  const VectorXd expected = oracle::rebuild_and_solve(oracle::with_deltas(g, {{4, 1.5}})).flows;
  EXPECT_LT((post - expected).cwiseAbs().maxCoeff(), 1e-10);

  // Closing then outaging restores the original flows.
  const GroundedSystem closed = GroundedSystem::with_updated_inverse(
      oracle::with_deltas(g, {{4, 1.5}}), updated_inverse(sys, {4, 1.5}));
  const VectorXd back = post + lodf_column(closed, 4) * post(3);
  EXPECT_LT((back - f).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SingleMod, LcdfEqualAnglesLeavesFlows) {
  // Symmetric injections: buses 2 and 3 sit at the same angle.
  const Grid g({{1, 1.0, true}, {2, -0.5, false}, {3, -0.5, false}},
               {{1, 1, 2, 1.0}, {2, 1, 3, 1.0}, {3, 2, 3, 1.0, BranchKind::line, 0.0, false}});
  const GroundedSystem sys = build_grounded_system(g);
  const VectorXd theta = solve_angles(sys, g.injections());
  const double across = nu_dot(theta, sys.terminals_by_id(3));
  EXPECT_NEAR(across, 0.0, 1e-15);
  const VectorXd f = compute_flows(sys, theta).flows;
  EXPECT_LT((f + lcdf_column(sys, 3, 2.0) * across - f).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(lcdf_column(sys, 1, 1.0), std::invalid_argument);
}

TEST(SingleMod, RandomOracleEquivalence) {
  std::mt19937_64 rng(2024);
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const Grid g = oracle::random_grid(seed, 5 + static_cast<int>(seed % 26), 3.0, {.open_lines = 2});
    const GroundedSystem sys = build_grounded_system(g);
    const auto pos = std::uniform_int_distribution<std::size_t>(0, g.num_branches() - 1)(rng);
    const Branch& br = g.branches()[pos];
    const double b = g.effective_susceptance(pos);
    const double db = b > 0.0 ? std::uniform_real_distribution<double>(-0.9, 2.0)(rng) * b
                              : std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    const Grid modified = oracle::with_deltas(g, {{br.id, db}});
    const auto sol = oracle::rebuild_and_solve(modified);
    const MatrixXd inv = updated_inverse(sys, {br.id, db});
    EXPECT_LT(rel(inv, sol.inverse), 1e-8) << "seed " << seed;
    const FactorMatrix ptdf = ptdf_after_mod(sys, {br.id, db});
    EXPECT_LT((ptdf.apply(sys.reduce(g.injections())) - sol.flows).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SingleMod, LodfLinearityOverInjections) {
  const Grid g = oracle::random_grid(17, 20, 3.0);
  const GroundedSystem sys = build_grounded_system(g);
  const auto bridges = bridge_branches(g);
  int id = 0;
  for (const Branch& br : g.branches())
    if (std::find(bridges.begin(), bridges.end(), br.id) == bridges.end()) id = br.id;
  const VectorXd col = lodf_column(sys, id);
  const Grid outaged = oracle::with_deltas(g, {{id, -g.branch(id).susceptance}});
  for (std::uint64_t s = 0; s < 10; ++s) {
    const VectorXd p = oracle::random_injections(100 + s, g.num_buses());
    const VectorXd f = solve_flows(sys, p).flows;
    const VectorXd post = f + col * f(static_cast<Index>(g.branch_position(id)));
    EXPECT_LT((post - oracle::rebuild_and_solve(outaged, p).flows).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SingleMod, OutageClosingDuality) {
  const Grid g = oracle::random_grid(9, 15, 3.0);
  const GroundedSystem sys = build_grounded_system(g);
  const auto bridges = bridge_branches(g);
  for (const Branch& br : g.branches()) {
    if (std::find(bridges.begin(), bridges.end(), br.id) != bridges.end()) continue;
    const Grid outaged = oracle::with_deltas(g, {{br.id, -br.susceptance}});
    const GroundedSystem out_sys =
        GroundedSystem::with_updated_inverse(outaged, updated_inverse(sys, {br.id, -br.susceptance}));
    const MatrixXd restored = updated_inverse(out_sys, {br.id, br.susceptance});
    EXPECT_LT((restored - sys.inverse()).cwiseAbs().maxCoeff(), 1e-9);
  }
}
