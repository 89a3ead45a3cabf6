#include "test_support.hpp"

using namespace gridfactors;
using namespace gridfactors::testing;

namespace {

// 4-cycle 1-2-3-4-1, slack 1.
Grid four_cycle() {
  return Grid({{1, 0.5, true}, {2, 0.3, false}, {3, -0.2, false}, {4, -0.6, false}},
              {{1, 1, 2, 1.0}, {2, 2, 3, 2.0}, {3, 3, 4, 1.5}, {4, 4, 1, 0.8}});
}

std::vector<std::pair<int, double>> as_pairs(const ModificationSet& m) {
  std::vector<std::pair<int, double>> out;
  for (const auto& d : m.entries) out.emplace_back(d.branch, d.delta_b);
  return out;
}

// Switches in a random grid, all open in the reference.
std::vector<int> switch_ids(const Grid& g) {
  std::vector<int> out;
  for (const Branch& br : g.branches())
    if (br.is_switch()) out.push_back(br.id);
  return out;
}

}  // namespace

TEST(Woodbury, EmptySetIsIdentity) {
  const GroundedSystem sys = build_grounded_system(case6ww());
  EXPECT_TRUE((woodbury_update(sys, {}).array() == sys.inverse().array()).all());
  EXPECT_TRUE((woodbury_update(sys, {{{3, 0.0}}}).array() == sys.inverse().array()).all());
}

TEST(Woodbury, SingleEntryMatchesShermanMorrison) {
  const GroundedSystem sys = build_grounded_system(case6ww());
  for (const Branch& br : sys.grid().branches()) {
    const BranchDelta d{br.id, 0.7 * br.susceptance};
    EXPECT_LT(rel(woodbury_update(sys, {{d}}), updated_inverse(sys, d)), 1e-12);
  }
}

TEST(Woodbury, DoubleOutageOnCycleIslands) {
  const GroundedSystem sys = build_grounded_system(four_cycle());
  const ModificationSet mods{{{1, -1.0}, {3, -1.5}}};
  const IslandingVerdict v = multi_outage_islands(sys, mods);
  EXPECT_TRUE(v.islands);
  EXPECT_THROW(woodbury_update(sys, mods), IslandingError);
  // Each outage alone keeps the cycle connected.
  EXPECT_FALSE(multi_outage_islands(sys, {{{1, -1.0}}}).islands);
  EXPECT_FALSE(multi_outage_islands(sys, {{{3, -1.5}}}).islands);
}

TEST(Woodbury, DuplicateBranchRejected) {
  const GroundedSystem sys = build_grounded_system(four_cycle());
  EXPECT_THROW(woodbury_update(sys, {{{1, 0.1}, {1, 0.2}}}), std::invalid_argument);
}

TEST(Woodbury, Case6wwRandomChangesMatchOracle) {
  const Grid g = case6ww();
  const GroundedSystem sys = build_grounded_system(g);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> scale(-0.5, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> ids;
    for (const Branch& br : g.branches()) ids.push_back(br.id);
    std::shuffle(ids.begin(), ids.end(), rng);
    ModificationSet mods;
    for (int k = 0; k < 3; ++k)
      mods.entries.push_back({ids[static_cast<std::size_t>(k)],
                              scale(rng) * g.branch(ids[static_cast<std::size_t>(k)]).susceptance});
    const auto sol = oracle::rebuild_and_solve(oracle::with_deltas(g, as_pairs(mods)));
    EXPECT_LT(rel(woodbury_update(sys, mods), sol.inverse), 1e-10);
    const FactorMatrix m = multi_ptdf(sys, mods);
    EXPECT_LT((m.apply(sys.reduce(g.injections())) - sol.flows).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Woodbury, OrderIndependentAndSequential) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Grid g = oracle::random_grid(seed, 15, 3.5);
    const GroundedSystem sys = build_grounded_system(g);
    const auto bridges = bridge_branches(g);
    ModificationSet mods;
    for (const Branch& br : g.branches()) {
      if (std::find(bridges.begin(), bridges.end(), br.id) != bridges.end()) continue;
      mods.entries.push_back({br.id, 0.3 * br.susceptance});
      if (mods.entries.size() == 4) break;
    }
    ModificationSet reversed{{mods.entries.rbegin(), mods.entries.rend()}};
    const MatrixXd a = woodbury_update(sys, mods);
    EXPECT_LT(rel(a, woodbury_update(sys, reversed)), 1e-12);

    Grid cur_grid = g;
    MatrixXd cur_inv = sys.inverse();
    for (const BranchDelta& d : mods.entries) {
      const GroundedSystem cur = GroundedSystem::with_updated_inverse(cur_grid, cur_inv);
      cur_inv = updated_inverse(cur, d);
      cur_grid = apply_deltas(cur_grid, {d});
    }
    EXPECT_LT(rel(a, cur_inv), 1e-10) << "seed " << seed;
  }
}

TEST(Woodbury, RandomOutageSetsVersusTraversal) {
  std::mt19937_64 rng(17);
  int islanding = 0;
  int connected = 0;
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    const Grid g = oracle::random_grid(seed, 10, 2.6);
    const GroundedSystem sys = build_grounded_system(g);
    std::vector<int> ids;
    for (const Branch& br : g.branches()) ids.push_back(br.id);
    std::shuffle(ids.begin(), ids.end(), rng);
    ModificationSet mods;
    std::vector<std::pair<int, double>> pairs;
    for (int k = 0; k < 3; ++k) {
      const Branch& br = g.branch(ids[static_cast<std::size_t>(k)]);
      mods.entries.push_back({br.id, -br.susceptance});
      pairs.emplace_back(br.id, -br.susceptance);
    }
    const bool splits = !oracle::connected(oracle::with_deltas(g, pairs));
    EXPECT_EQ(multi_outage_islands(sys, mods).islands, splits) << "seed " << seed;
    (splits ? islanding : connected)++;
  }
  EXPECT_GT(islanding, 10);
  EXPECT_GT(connected, 10);
}

TEST(SwitchBank, XiDiagonal) {
  const Grid g = oracle::random_grid(4, 12, 3.0, {.switches = 3});
  const GroundedSystem sys = build_grounded_system(g);
  const SwitchBank bank(sys, switch_ids(g));
  const VectorXd xi = bank.xi({true, false, true});
  EXPECT_EQ(xi(0), 1.0);
  EXPECT_EQ(xi(1), 0.0);
  EXPECT_EQ(xi(2), 1.0);
  EXPECT_THROW(bank.xi({true}), DimensionError);
  // Finite switch limit: b q / (1 + b q) tends to 1.
  EXPECT_NEAR(xi_finite(1e12, bank.k_diag()(0)), 1.0, 1e-10);
  EXPECT_EQ(xi_finite(0.0, bank.k_diag()(0)), 0.0);
}

TEST(SwitchBank, SingleClosedMatchesMerge) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Grid g = oracle::random_grid(seed, 12, 3.0, {.switches = 3});
    const GroundedSystem sys = build_grounded_system(g);
    const auto ids = switch_ids(g);
    const SwitchBank bank(sys, ids);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      std::vector<bool> closed(ids.size(), false);
      closed[i] = true;
      EXPECT_LT(rel(bank.merged_inverse(closed), merge_inverse(sys, ids[i])), 1e-10);
    }
    EXPECT_TRUE((bank.merged_inverse({false, false, false}).array() == sys.inverse().array()).all());
  }
}

TEST(SwitchBank, AllSettingsMatchLargeBOracle) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Grid g = oracle::random_grid(seed, 14, 3.0, {.switches = 3});
    const GroundedSystem sys = build_grounded_system(g);
    const auto ids = switch_ids(g);
    const SwitchBank bank(sys, ids);
    for (unsigned k = 0; k < 8; ++k) {
      std::vector<bool> closed(3);
      std::map<int, bool> states;
      for (std::size_t i = 0; i < 3; ++i) {
        closed[i] = ((k >> i) & 1U) != 0;
        states[ids[i]] = closed[i];
      }
      const auto sol = oracle::rebuild_and_solve(oracle::with_large_b_switches(g, states, 1e9));
      const FactorMatrix m = bank.merged_ptdf(closed);
      const VectorXd f = m.apply(sys.reduce(g.injections()));
      for (std::size_t r = 0; r < m.row_labels.size(); ++r) {
        const double expected = sol.flows(static_cast<Index>(g.branch_position(m.row_labels[r])));
        EXPECT_NEAR(f(static_cast<Index>(r)), expected, 1e-6 * std::max(1.0, std::abs(expected)))
            << "seed " << seed << " setting " << k;
      }
    }
  }
}

TEST(SwitchBank, MatchesContractionOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Grid g = oracle::random_grid(seed, 12, 3.0, {.switches = 2});
    const GroundedSystem sys = build_grounded_system(g);
    const auto ids = switch_ids(g);
    const SwitchBank bank(sys, ids);
    const auto c = oracle::contract(g, ids);
    if (!oracle::connected(c.grid)) continue;
    const MatrixXd lifted = oracle::lift_contracted(g, c, oracle::rebuild_and_solve(c.grid));
    EXPECT_LT(rel(bank.merged_inverse({true, true}), lifted), 1e-10) << "seed " << seed;
  }
}

TEST(SwitchBank, RedundantClosingRejected) {
  // Three switches joining buses 2, 3, 4 pairwise: closing all three forms a loop.
  const Grid g({{1, 0.5, true}, {2, 0.3, false}, {3, -0.2, false}, {4, -0.6, false}},
               {{1, 1, 2, 1.0}, {2, 2, 3, 2.0}, {3, 3, 4, 1.5}, {4, 4, 1, 0.8},
                {5, 2, 3, 0.0, BranchKind::switch_, 0.0, false},
                {6, 3, 4, 0.0, BranchKind::switch_, 0.0, false},
                {7, 2, 4, 0.0, BranchKind::switch_, 0.0, false}});
  const GroundedSystem sys = build_grounded_system(g);
  const SwitchBank bank(sys, {5, 6, 7});
  EXPECT_NO_THROW(bank.merged_inverse({true, true, false}));
  try {
    bank.merged_inverse({true, true, true});
    FAIL() << "expected DegenerateSwitchError";
  } catch (const DegenerateSwitchError& e) {
    EXPECT_NE(std::string(e.what()).find("redundant"), std::string::npos);
  }
}

TEST(SwitchBank, RejectsClosedReferenceSwitch) {
  const Grid g({{1, 0.0, true}, {2, 0.0, false}},
               {{1, 1, 2, 1.0}, {2, 1, 2, 0.0, BranchKind::switch_, 0.0, false}});
  const GroundedSystem sys = build_grounded_system(g);
  EXPECT_THROW(SwitchBank(sys, {2, 2}), std::invalid_argument);
  EXPECT_THROW(SwitchBank(sys, {1}), std::invalid_argument);
}

TEST(MultiSplit, TwoSplitsMatchOracle) {
  std::mt19937_64 rng(41);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 60 && checked < 25; ++seed) {
    const Grid g = oracle::random_grid(seed, 14, 3.5);
    SplitSpec a;
    SplitSpec b;
    if (!random_split(g, rng, a) || !random_split(g, rng, b) || a.parent == b.parent) continue;
    // The two splits may not move the same branch.
    bool clash = false;
    for (const auto& [id, side] : b.assignments)
      if (a.assignments.contains(id)) clash = true;
    if (clash) continue;
    a.new_bus = g.max_bus_id() + 1;
    b.new_bus = g.max_bus_id() + 2;
    Grid open = oracle_split_grid(g, a);
    open = oracle_split_grid(open, b);
    const std::vector<SplitSpec> specs{a, b};
    const TriConfig tri = pad_inverse(build_grounded_system(g), specs);
    const IslandingVerdict v = multi_split_islands(tri);
    EXPECT_EQ(v.islands, !oracle::connected(open)) << "seed " << seed;
    if (v.islands) {
      EXPECT_THROW(multi_split_inverse(tri), IslandingError);
      continue;
    }
    EXPECT_LT(rel(multi_split_inverse(tri), oracle::rebuild_and_solve(open).inverse), 1e-8)
        << "seed " << seed;
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(MultiSplit, SingleCouplerMatchesSplitInverse) {
  const GroundedSystem sys = build_grounded_system(case6ww());
  SplitSpec spec;
  spec.parent = 5;
  spec.assignments = {{3, BusSide::new_bus}, {8, BusSide::new_bus}};
  spec.injection_to_new = -0.7;
  const TriConfig tri = pad_inverse(sys, spec);
  EXPECT_LT(rel(multi_split_inverse(tri), split_inverse(tri)), 1e-12);
}

TEST(MultiSplit, CombinedIslandingOnly) {
  // Ladder: 1-2, 3-4 rungs joined by 1-3 and 2-4. Splitting bus 3 off branch
  // 1-3 and bus 4 off branch 2-4 cuts 3-4 loose together, not separately.
  const Grid g({{1, 0.5, true}, {2, 0.3, false}, {3, -0.2, false}, {4, -0.6, false}},
               {{1, 1, 2, 1.0}, {2, 3, 4, 1.0}, {3, 1, 3, 1.0}, {4, 2, 4, 1.0}, {5, 1, 4, 1.0}});
  const GroundedSystem sys = build_grounded_system(g);
  SplitSpec a;
  a.parent = 3;
  a.new_bus = 5;
  a.assignments = {{3, BusSide::new_bus}};
  SplitSpec b;
  b.parent = 4;
  b.new_bus = 6;
  b.assignments = {{4, BusSide::new_bus}, {5, BusSide::new_bus}};
  EXPECT_FALSE(split_islands(pad_inverse(sys, a)).islands);
  EXPECT_FALSE(split_islands(pad_inverse(sys, b)).islands);
  const std::vector<SplitSpec> both{a, b};
  const TriConfig tri = pad_inverse(sys, both);
  EXPECT_TRUE(multi_split_islands(tri).islands);
  EXPECT_THROW(multi_split_inverse(tri), IslandingError);
}
