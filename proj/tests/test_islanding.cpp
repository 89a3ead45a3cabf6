#include "test_support.hpp"

using namespace gridfactors;
using namespace gridfactors::testing;

TEST(Islanding, TwoBusCriterionIsZero) {
  const GroundedSystem sys = build_grounded_system(two_bus(2.5));
  const IslandingVerdict v = outage_islands(sys, 1);
  EXPECT_TRUE(v.islands);
  EXPECT_NEAR(v.criterion, 0.0, 1e-15);
}

TEST(Islanding, TriangleCriterionIsOneThird) {
  const GroundedSystem sys = build_grounded_system(unit_triangle());
  for (int id : {1, 2, 3}) {
    const IslandingVerdict v = outage_islands(sys, id);
    EXPECT_FALSE(v.islands);
    EXPECT_NEAR(v.criterion, 1.0 / 3.0, 1e-14);
  }
}

TEST(Islanding, RandomOutagesAgreeWithTraversal) {
  int bridges_seen = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const Grid g = oracle::random_grid(seed, 5 + static_cast<int>(seed % 40), 2.4);
    const GroundedSystem sys = build_grounded_system(g);
    const auto bridges = bridge_branches(g);
    for (const Branch& br : g.branches()) {
      const bool is_bridge = std::find(bridges.begin(), bridges.end(), br.id) != bridges.end();
      const bool traversal = !oracle::connected(oracle::with_deltas(g, {{br.id, -br.susceptance}}));
      EXPECT_EQ(is_bridge, traversal);
      EXPECT_EQ(outage_islands(sys, br.id).islands, traversal) << "seed " << seed << " branch " << br.id;
      bridges_seen += traversal;
    }
  }
  EXPECT_GT(bridges_seen, 100);
}

TEST(Islanding, CriterionIsDeterminantRatio) {
  // 1 - b nu^T B^-1 nu = det(B after outage) / det(B).
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Grid g = oracle::random_grid(seed, 8, 3.0);
    const GroundedSystem sys = build_grounded_system(g);
    const double det = sys.laplacian().determinant();
    for (const Branch& br : g.branches()) {
      const Grid out = oracle::with_deltas(g, {{br.id, -br.susceptance}});
      const BusIndex idx(out);
      const MatrixXd lap = assemble_grounded_laplacian(out, idx, reference_susceptances(out));
      EXPECT_NEAR(outage_islands(sys, br.id).criterion, lap.determinant() / det, 1e-10);
    }
  }
}

TEST(Islanding, SplitsAgreeWithTraversal) {
  std::mt19937_64 rng(77);
  int islanding = 0;
  int kept = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const Grid g = oracle::random_grid(seed, 6 + static_cast<int>(seed % 15), 2.4);
    SplitSpec spec;
    if (!random_split(g, rng, spec)) continue;
    const TriConfig tri = pad_inverse(build_grounded_system(g), spec);
    const bool traversal = !oracle::connected(oracle_split_grid(g, spec));
    EXPECT_EQ(split_islands(tri).islands, traversal) << "seed " << seed;
    (traversal ? islanding : kept)++;
  }
  EXPECT_GT(islanding, 20);
  EXPECT_GT(kept, 20);
}

TEST(Islanding, BracketMatchesOpenGridResistance) {
  // The bracket over (nu^T nu)^2 equals 1 / (nu^T B_o^-1 nu), and also the
  // b_s -> inf limit of b_s det(B_o) / det(B_o + b_s nu nu^T).
  std::mt19937_64 rng(2);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Grid g = oracle::random_grid(seed, 9, 3.0);
    SplitSpec spec;
    if (!random_split(g, rng, spec)) continue;
    const Grid open = oracle_split_grid(g, spec);
    if (!oracle::connected(open)) continue;
    const TriConfig tri = pad_inverse(build_grounded_system(g), spec);
    const CouplerTerms c = coupler_terms(tri);
    const double limit = c.bracket / (c.norm_sq * c.norm_sq);
    const auto sol = oracle::rebuild_and_solve(open);
    const double resistance = nu_quadratic(sol.inverse, tri.couplers[0].terminals);
    EXPECT_NEAR(limit * resistance, 1.0, 1e-10);

    const double big = 1e6;
    std::vector<Branch> branches = open.branches();
    branches.push_back({1000, tri.couplers[0].parent, tri.couplers[0].new_bus, big});
    const Grid closed(open.buses(), branches);
    const BusIndex ci(closed);
    const BusIndex oi(open);
    const double det_c =
        assemble_grounded_laplacian(closed, ci, reference_susceptances(closed)).determinant();
    const double det_o =
        assemble_grounded_laplacian(open, oi, reference_susceptances(open)).determinant();
    EXPECT_NEAR(big * det_o / det_c / limit, 1.0, 1e-4);
    ++checked;
  }
  EXPECT_GT(checked, 5);
}

TEST(Islanding, DoubleOutagesAgreeWithTraversal) {
  int islanding = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const Grid g = oracle::random_grid(seed, 8, 2.6);
    const GroundedSystem sys = build_grounded_system(g);
    const auto& br = g.branches();
    for (std::size_t i = 0; i < br.size(); ++i)
      for (std::size_t j = i + 1; j < br.size(); ++j) {
        const ModificationSet mods{{{br[i].id, -br[i].susceptance}, {br[j].id, -br[j].susceptance}}};
        const bool traversal = !oracle::connected(oracle::with_deltas(
            g, {{br[i].id, -br[i].susceptance}, {br[j].id, -br[j].susceptance}}));
        EXPECT_EQ(multi_outage_islands(sys, mods).islands, traversal)
            << "seed " << seed << " pair " << br[i].id << "," << br[j].id;
        islanding += traversal;
      }
  }
  EXPECT_GT(islanding, 50);
}
