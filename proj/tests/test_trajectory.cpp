#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "mrnav/trajectory.hpp"
#include "oracles/oracles.hpp"

using namespace mrnav;

namespace {

const std::vector<Vec3> kWaypoints{{0, 0, 1}, {1.5, 0.4, 1.2}, {2.2, 1.9, 0.8}, {4, 2, 1}};
const std::vector<double> kDurations{1.5, 1.0, 2.0};

}  // namespace

TEST(Trajectory, AllocateTimesExamples) {
  EXPECT_EQ(allocate_times({Vec3::Zero(), Vec3(1, 0, 0)}, 1.0), std::vector<double>{1.0});
  EXPECT_EQ(allocate_times({Vec3::Zero(), Vec3::Zero()}, 1.0), std::vector<double>{0.5});
  EXPECT_EQ(allocate_times({Vec3::Zero(), Vec3(1, 0, 0), Vec3(1, 2, 0)}, 1.0), (std::vector<double>{1.0, 2.0}));
}

TEST(Trajectory, MatchesFrozenQpSolution) {
  // Frozen from a dense KKT solve over raw polynomial coefficients.
  const auto traj = fit_min_snap(kWaypoints, kDurations);
  EXPECT_NEAR(traj.snap_cost(), 1380.6290643722434, 1e-6 * 1380.0);
  const TrajectorySample s = traj.sample(2.0);
  EXPECT_NEAR((s.position - Vec3(1.956036213594493, 1.1474287764413678, 1.0391175283057856)).norm(), 0.0, 1e-8);
  EXPECT_NEAR((s.velocity - Vec3(0.500890157270373, 1.6848647026502317, -0.5016621204010123)).norm(), 0.0, 1e-8);
}

TEST(Trajectory, SnapCostNearDiscretizedOracle) {
  const auto traj = fit_min_snap(kWaypoints, kDurations);
  const double ref = oracle::discretized_snap_cost(kWaypoints, kDurations, 1e-3);
  EXPECT_NEAR(traj.snap_cost(), ref, 0.01 * ref);
  // Piecewise-constant snap is a restricted class; it cannot beat the optimum.
  EXPECT_LE(traj.snap_cost(), ref * (1.0 + 1e-9));
}

TEST(Trajectory, SingleSegmentBoundaries) {
  const Vec3 a(0.3, -1.0, 2.0), b(1.7, 0.5, 1.0);
  const auto traj = fit_min_snap({a, b}, {2.5});
  EXPECT_NEAR((traj.sample(0.0).position - a).norm(), 0.0, 1e-9);
  EXPECT_NEAR((traj.sample(2.5).position - b).norm(), 0.0, 1e-9);
  for (double t : {0.0, 2.5}) {
    for (int o = 1; o <= 3; ++o) EXPECT_LT(traj.derivative(t, o).norm(), 1e-9);
  }
  // Clamped outside [0, T].
  EXPECT_NEAR((traj.sample(-1.0).position - a).norm(), 0.0, 1e-12);
  EXPECT_NEAR((traj.sample(9.0).position - b).norm(), 0.0, 1e-12);
}

TEST(Trajectory, StraightSegmentMidpointSpeed) {
  const auto traj = fit_min_snap({Vec3::Zero(), Vec3(1, 0, 0)}, {2.0});
  const double v = traj.sample(1.0).velocity.x();
  EXPECT_GE(v, 1.0 / 2.0);
  // Closed form peak of the rest-to-rest septic: 35/16 * L / T.
  EXPECT_NEAR(v, 35.0 / 32.0, 1e-9);
  for (double t = 0.0; t <= 2.0; t += 0.01) EXPECT_LT(std::abs(traj.sample(t).position.y()), 1e-12);
}

TEST(Trajectory, CoincidentEndpointsHover) {
  const Vec3 p(1, 2, 3);
  const auto traj = fit_min_snap({p, p}, {0.5});
  for (double t = 0.0; t <= 0.5; t += 0.05) {
    EXPECT_NEAR((traj.sample(t).position - p).norm(), 0.0, 1e-12);
    for (int o = 1; o <= 4; ++o) EXPECT_LT(traj.derivative(t, o).norm(), 1e-9);
  }
  EXPECT_NEAR(traj.snap_cost(), 0.0, 1e-12);
  const auto hold = hold_position(p, 3.0);
  EXPECT_DOUBLE_EQ(hold.total_duration(), 3.0);
  EXPECT_NEAR((hold.sample(1.2).position - p).norm(), 0.0, 1e-12);
}

TEST(Trajectory, RejectsBadInput) {
  EXPECT_THROW(fit_min_snap({Vec3::Zero(), Vec3::Ones()}, {0.0}), SingularSystem);
  EXPECT_THROW(fit_min_snap({Vec3::Zero(), Vec3::Ones()}, {1.0, 1.0}), std::invalid_argument);
}

TEST(Trajectory, RandomSetsInterpolateAndAreC3) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> count(2, 8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vec3> w(static_cast<std::size_t>(count(rng)));
    for (auto& p : w) p = Vec3(u(rng), u(rng), u(rng));
    const auto durations = allocate_times(w, 1.0);
    const auto traj = fit_min_snap(w, durations);
    const auto& knots = traj.knot_times();
    ASSERT_EQ(knots.size(), w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
      EXPECT_LT((traj.sample(knots[k]).position - w[k]).norm(), 1e-6);
      EXPECT_LT((traj.derivative(knots[k], 0, true) - w[k]).norm(), 1e-6);
    }
    for (int o = 1; o <= 3; ++o) {
      EXPECT_LT(traj.derivative(0.0, o).norm(), 1e-6);
      EXPECT_LT(traj.derivative(traj.total_duration(), o, true).norm(), 1e-6);
    }
    EXPECT_LT(oracle::fd_continuity_error(traj), 1e-4) << "trial " << trial;
    EXPECT_NEAR(traj.total_duration(), std::accumulate(durations.begin(), durations.end(), 0.0), 1e-12);
  }
}

TEST(Trajectory, VelocityMatchesCentralDifference) {
  const auto traj = fit_min_snap(kWaypoints, kDurations);
  const double h = 1e-5;
  for (double t = h; t < traj.total_duration() - h; t += 1e-3) {
    const Vec3 fd = (traj.sample(t + h).position - traj.sample(t - h).position) / (2 * h);
    EXPECT_LT((fd - traj.sample(t).velocity).norm(), 1e-5) << t;
  }
}

TEST(Trajectory, TranslationEquivariance) {
  const Vec3 shift(3.0, -7.0, 0.25);
  std::vector<Vec3> moved = kWaypoints;
  for (auto& p : moved) p += shift;
  const auto a = fit_min_snap(kWaypoints, kDurations);
  const auto b = fit_min_snap(moved, kDurations);
  for (double t = 0.0; t <= a.total_duration(); t += 0.01) {
    EXPECT_NEAR((b.sample(t).position - a.sample(t).position - shift).norm(), 0.0, 1e-9);
  }
}

TEST(Trajectory, PolylineIncludesEnd) {
  const auto traj = fit_min_snap(kWaypoints, kDurations);
  const auto line = traj.polyline(0.1);
  EXPECT_EQ(line.size(), 46u);
  EXPECT_NEAR((line.back() - kWaypoints.back()).norm(), 0.0, 1e-9);
}
