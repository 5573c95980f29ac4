#include <random>

#include <gtest/gtest.h>

#include "mrnav/planner.hpp"
#include "oracles/oracles.hpp"

using namespace mrnav;

namespace {

PlanningGrid random_grid(int n, double density, std::uint64_t seed, double res = 0.2) {
  const GridGeometry g(Vec3::Zero(), res, {n, n, n});
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(density);
  std::vector<std::uint8_t> cells(g.cell_count());
  for (auto& c : cells) c = b(rng) ? 1 : 0;
  return {g, std::move(cells)};
}

PlanningGrid empty_grid(int n, double res = 0.2) {
  const GridGeometry g(Vec3::Zero(), res, {n, n, n});
  return {g, std::vector<std::uint8_t>(g.cell_count(), 0)};
}

GridIndex random_free(const PlanningGrid& pg, std::mt19937_64& rng) {
  const auto& d = pg.geometry().dims();
  for (;;) {
    const GridIndex c{static_cast<int>(rng() % d[0]), static_cast<int>(rng() % d[1]), static_cast<int>(rng() % d[2])};
    if (pg.free(c)) return c;
  }
}

// Every lattice cell visited when walking the path's straight runs.
std::vector<GridIndex> expand(const GridPlan& plan) {
  std::vector<GridIndex> out{plan.cells.front()};
  for (std::size_t s = 1; s < plan.cells.size(); ++s) {
    const GridIndex a = plan.cells[s - 1];
    const GridIndex b = plan.cells[s];
    const GridIndex d{(b.i > a.i) - (b.i < a.i), (b.j > a.j) - (b.j < a.j), (b.k > a.k) - (b.k < a.k)};
    GridIndex c = a;
    while (c != b) {
      c = c + d;
      out.push_back(c);
    }
  }
  return out;
}

}  // namespace

TEST(Planner, StartEqualsGoal) {
  const PlanningGrid pg = empty_grid(10);
  const Vec3 p = pg.geometry().center_of({3, 3, 3});
  for (auto plan : {plan_jps(pg, p, p), plan_astar(pg, p, p)}) {
    ASSERT_EQ(plan.waypoints.size(), 1u);
    EXPECT_DOUBLE_EQ(plan.cost, 0.0);
  }
}

TEST(Planner, AxisAlignedTenCells) {
  const PlanningGrid pg = empty_grid(20);
  const Vec3 a = pg.geometry().center_of({2, 5, 5});
  const Vec3 b = pg.geometry().center_of({12, 5, 5});
  const auto jps = plan_jps(pg, a, b);
  EXPECT_NEAR(jps.cost, 10 * 0.2, 1e-12);
  EXPECT_EQ(jps.cost, plan_astar(pg, a, b).cost);
  EXPECT_EQ(jps.waypoints.size(), 2u);
}

TEST(Planner, WallWithSingleGap) {
  const GridGeometry g(Vec3::Zero(), 0.2, {10, 6, 3});
  std::vector<std::uint8_t> cells(g.cell_count(), 0);
  for (int j = 0; j < 6; ++j) {
    for (int k = 0; k < 3; ++k) {
      if (!(j == 4 && k == 1)) cells[g.linear({5, j, k})] = 1;
    }
  }
  const PlanningGrid pg(g, cells);
  const GridPlan jps = search_jps(pg, {1, 1, 0}, {8, 1, 2});
  const GridPlan astar = search_astar(pg, {1, 1, 0}, {8, 1, 2});
  // Frozen from an independent networkx Dijkstra over the same lattice.
  EXPECT_NEAR(jps.moves.length(), 10.70674230225704, 1e-12);
  EXPECT_EQ(jps.moves, astar.moves);
  const auto visited = expand(jps);
  EXPECT_NE(std::find(visited.begin(), visited.end(), GridIndex{5, 4, 1}), visited.end());
  for (const auto& c : visited) EXPECT_TRUE(pg.free(c));
}

TEST(Planner, SealedRoomHasNoPath) {
  const GridGeometry g(Vec3::Zero(), 0.2, {9, 9, 9});
  std::vector<std::uint8_t> cells(g.cell_count(), 0);
  for (std::size_t n = 0; n < cells.size(); ++n) {
    const GridIndex c = g.unlinear(n);
    const int m = std::max({std::abs(c.i - 4), std::abs(c.j - 4), std::abs(c.k - 4)});
    if (m == 2) cells[n] = 1;
  }
  const PlanningGrid pg(g, cells);
  const Vec3 inside = g.center_of({4, 4, 4});
  const Vec3 outside = g.center_of({0, 0, 0});
  EXPECT_THROW(plan_astar(pg, inside, outside), NoPath);
  EXPECT_THROW(plan_jps(pg, inside, outside), NoPath);
  EXPECT_THROW(plan_jps(pg, g.center_of({4, 4, 2}), outside), StartOccupied);
}

TEST(Planner, AstarMatchesDijkstraOracle) {
  std::mt19937_64 rng(31);
  int solved = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const PlanningGrid pg = random_grid(30, 0.2, 100 + trial);
    const GridIndex s = random_free(pg, rng);
    const GridIndex t = random_free(pg, rng);
    const auto ref = oracle::dijkstra(pg.geometry(), pg.cells(), s, t);
    if (!ref) {
      EXPECT_THROW(search_astar(pg, s, t), NoPath);
      continue;
    }
    ++solved;
    EXPECT_NEAR(search_astar(pg, s, t).moves.length(), *ref, 1e-9) << "trial " << trial;
  }
  EXPECT_GT(solved, 6);
}

TEST(Planner, JpsMatchesAstarExactly) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 20 + static_cast<int>(rng() % 11);
    const double density = 0.3 * static_cast<double>(trial % 7) / 6.0;
    const PlanningGrid pg = random_grid(n, density, 200 + trial);
    const GridIndex s = random_free(pg, rng);
    const GridIndex t = random_free(pg, rng);
    GridPlan a;
    try {
      a = search_astar(pg, s, t);
    } catch (const NoPath&) {
      EXPECT_THROW(search_jps(pg, s, t), NoPath);
      continue;
    }
    const GridPlan j = search_jps(pg, s, t);
    EXPECT_EQ(j.moves.length(), a.moves.length()) << "trial " << trial;
    EXPECT_EQ(j.cells.front(), s);
    EXPECT_EQ(j.cells.back(), t);
    for (const auto& c : expand(j)) EXPECT_TRUE(pg.free(c));
    // Symmetry.
    EXPECT_NEAR(search_jps(pg, t, s).moves.length(), j.moves.length(), 1e-9);
  }
}

TEST(Planner, JpsPathStepsAreLegal) {
  const PlanningGrid pg = random_grid(25, 0.25, 77);
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const GridIndex s = random_free(pg, rng);
    const GridIndex t = random_free(pg, rng);
    try {
      const auto cells = expand(search_jps(pg, s, t));
      for (std::size_t k = 1; k < cells.size(); ++k) {
        EXPECT_TRUE(oracle::step_ok(pg.geometry(), pg.cells(), cells[k - 1], cells[k] - cells[k - 1]));
      }
    } catch (const NoPath&) {
    }
  }
}

TEST(Planner, Deterministic) {
  const PlanningGrid pg = random_grid(30, 0.15, 5);
  std::mt19937_64 rng(34);
  const GridIndex s = random_free(pg, rng);
  const GridIndex t = random_free(pg, rng);
  const auto a = plan_jps(pg, pg.geometry().center_of(s), pg.geometry().center_of(t));
  const auto b = plan_jps(pg, pg.geometry().center_of(s), pg.geometry().center_of(t));
  EXPECT_EQ(a.waypoints, b.waypoints);
}

TEST(Planner, NearestFreeMatchesBruteForce) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int trial = 0; trial < 60; ++trial) {
    const PlanningGrid pg = random_grid(15, 0.6, 300 + trial);
    const Vec3 p(u(rng), u(rng), u(rng));
    const double r = 0.1 + 0.1 * (trial % 5);
    const auto ref = oracle::nearest_free(pg.geometry(), pg.cells(), p, r);
    if (!ref) {
      EXPECT_THROW(nearest_free_pose(pg, p, r), NoFreeCell);
      continue;
    }
    EXPECT_EQ(nearest_free_pose(pg, p, r), *ref) << "trial " << trial;
  }
}

TEST(Planner, NearestFreeExamples) {
  const GridGeometry g(Vec3::Zero(), 0.2, {15, 15, 15});
  std::vector<std::uint8_t> cells(g.cell_count(), 0);
  cells[g.linear({7, 7, 7})] = 1;
  const PlanningGrid single(g, cells);
  const Vec3 free_p(0.31, 0.52, 0.77);
  EXPECT_EQ(nearest_free_pose(single, free_p, 1.0), free_p);
  EXPECT_EQ(nearest_free_pose(single, g.center_of({7, 7, 7}) + Vec3(0.03, -0.02, 0.01), 1.0), g.center_of({6, 7, 7}));

  for (std::size_t n = 0; n < cells.size(); ++n) {
    const GridIndex c = g.unlinear(n);
    if (std::max({std::abs(c.i - 7), std::abs(c.j - 7), std::abs(c.k - 7)}) <= 4) cells[n] = 1;
  }
  const PlanningGrid block(g, cells);
  EXPECT_THROW(nearest_free_pose(block, g.center_of({7, 7, 7}), 0.7), NoFreeCell);
  EXPECT_THROW(nearest_free_pose(block, g.center_of({7, 7, 7}), 0.0), std::invalid_argument);
}

TEST(Planner, ShortcutExamples) {
  const PlanningGrid pg = empty_grid(20);
  const auto& g = pg.geometry();
  PlannedPath two{{g.center_of({1, 1, 1}), g.center_of({5, 1, 1})}, 0.8};
  EXPECT_EQ(shortcut(two, pg).waypoints, two.waypoints);

  PlannedPath line{{g.center_of({1, 1, 1}), g.center_of({3, 1, 1}), g.center_of({5, 1, 1})}, 0.8};
  EXPECT_EQ(shortcut(line, pg).waypoints.size(), 2u);

  // L around a 3-cell thick block at i, j in [2, 4]; all k blocked.
  std::vector<std::uint8_t> cells(g.cell_count(), 0);
  for (int i = 2; i <= 4; ++i) {
    for (int j = 2; j <= 4; ++j) {
      for (int k = 0; k < 20; ++k) cells[g.linear({i, j, k})] = 1;
    }
  }
  const PlanningGrid blocked(g, cells);
  PlannedPath ell{{g.center_of({3, 0, 1}), g.center_of({6, 0, 1}), g.center_of({6, 3, 1}), g.center_of({6, 6, 1})},
                  0.0};
  ell.cost = polyline_length(ell.waypoints);
  const PlannedPath s = shortcut(ell, blocked);
  ASSERT_EQ(s.waypoints.size(), 3u);
  EXPECT_EQ(s.waypoints[1], g.center_of({6, 0, 1}));
  EXPECT_LE(s.cost, ell.cost + 1e-12);
  for (std::size_t k = 1; k < s.waypoints.size(); ++k) EXPECT_TRUE(segment_free(blocked, s.waypoints[k - 1], s.waypoints[k]));
}

TEST(Planner, ShortcutKeepsPathsCollisionFree) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 20; ++trial) {
    const PlanningGrid pg = random_grid(25, 0.2, 400 + trial);
    const Vec3 a = pg.geometry().center_of(random_free(pg, rng));
    const Vec3 b = pg.geometry().center_of(random_free(pg, rng));
    try {
      const PlannedPath p = plan_jps(pg, a, b);
      const PlannedPath s = shortcut(p, pg);
      EXPECT_LE(s.cost, p.cost + 1e-9);
      EXPECT_NEAR(s.cost, polyline_length(s.waypoints), 1e-9);
      for (std::size_t k = 1; k < s.waypoints.size(); ++k) {
        EXPECT_TRUE(segment_free(pg, s.waypoints[k - 1], s.waypoints[k]));
        // Every cell a fine march visits is free too.
        for (const auto& c : oracle::march_cells(pg.geometry(), s.waypoints[k - 1], s.waypoints[k], 0.002)) {
          EXPECT_TRUE(pg.free(c));
        }
      }
    } catch (const NoPath&) {
    }
  }
}

TEST(Planner, MoveCountsLength) {
  MoveCounts m;
  m.add(1, 3).add(2, 2).add(3, 1);
  EXPECT_DOUBLE_EQ(m.length(), 3.0 + 2.0 * std::sqrt(2.0) + std::sqrt(3.0));
  EXPECT_DOUBLE_EQ(step_cost(2), std::sqrt(2.0));
}
