#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "mrnav/mission.hpp"

namespace mrnav {

std::string_view to_string(PolicyKind p) {
  return p == PolicyKind::AutonomousFrontier ? "AutonomousFrontier" : "TeleopRandomWalk";
}

std::optional<PolicyKind> policy_from_string(std::string_view s) {
  if (s == "AutonomousFrontier" || s == "frontier") return PolicyKind::AutonomousFrontier;
  if (s == "TeleopRandomWalk" || s == "teleop") return PolicyKind::TeleopRandomWalk;
  return std::nullopt;
}

std::optional<Vec3> FrontierPolicy::nearest_frontier(const Mission& mission, const PlanningGrid& plan,
                                                     const std::vector<GridIndex>& excluded) {
  const OccupancyGrid& grid = mission.grid();
  const GridGeometry& g = grid.geometry();
  const ExplorationConfig& ex = mission.config().exploration;
  const auto& dims = g.dims();

  const Vec3 here = mission.drone().state().position;
  Vec3 seed = here;
  if (!plan.is_free(seed)) {
    try {
      seed = nearest_free_pose(plan, here, mission.config().planning.repair_radius);
    } catch (const NoFreeCell&) {
      return std::nullopt;
    }
  }
  const GridIndex start = g.floor_index(seed);
  const int k_lo = std::max(0, g.floor_index(Vec3(0, 0, ex.altitude - ex.altitude_band)).k);
  const int k_hi = std::min(dims[2] - 1, g.floor_index(Vec3(0, 0, ex.altitude + ex.altitude_band)).k);

  const auto is_frontier = [&](const GridIndex& c) {
    if (c.k < k_lo || c.k > k_hi || grid.state(c) != CellState::Free) return false;
    static constexpr int kRing[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& d : kRing) {
      const GridIndex q{c.i + d[0], c.j + d[1], c.k};
      if (g.contains(q) && grid.state(q) == CellState::Unknown) return true;
    }
    return false;
  };
  const auto excluded_near = [&](const GridIndex& c) {
    return std::any_of(excluded.begin(), excluded.end(), [&](const GridIndex& e) {
      return std::abs(e.i - c.i) <= 1 && std::abs(e.j - c.j) <= 1 && std::abs(e.k - c.k) <= 1;
    });
  };

  std::vector<std::uint8_t> seen(g.cell_count(), 0);
  std::deque<GridIndex> queue{start};
  seen[g.linear(start)] = 1;
  static constexpr int kSteps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!queue.empty()) {
    const GridIndex c = queue.front();
    queue.pop_front();
    if (is_frontier(c) && !excluded_near(c) && (g.center_of(c) - here).norm() >= ex.min_goal_distance) {
      return g.center_of(c);
    }
    for (const auto& s : kSteps) {
      const GridIndex q{c.i + s[0], c.j + s[1], c.k + s[2]};
      if (!g.contains(q) || !plan.free(q) || seen[g.linear(q)]) continue;
      // Leave the band only while climbing back into it.
      if ((q.k < k_lo && q.k < c.k) || (q.k > k_hi && q.k > c.k)) continue;
      seen[g.linear(q)] = 1;
      queue.push_back(q);
    }
  }
  return std::nullopt;
}

void FrontierPolicy::decide(Mission& mission) {
  if (done_) return;
  const FlightMode mode = mission.drone().mode();
  if (mode == FlightMode::Tracking) return;
  if (mode == FlightMode::Velocity) mission.set_mode(FlightMode::Hover);
  if (goal_) {
    excluded_.push_back(*goal_);
    goal_.reset();
  }
  const GridGeometry& g = mission.grid().geometry();
  for (int attempt = 0; attempt < 8; ++attempt) {
    const auto snapshot = mission.planning_snapshot();
    const auto target = nearest_frontier(mission, *snapshot, excluded_);
    if (!target) {
      if (idle_since_ < 0.0) idle_since_ = mission.time();
      // Keep hovering a little: new scans may open fresh frontiers.
      if (mission.time() - idle_since_ > 5.0) done_ = true;
      return;
    }
    idle_since_ = -1.0;
    const GridIndex cell = g.floor_index(*target);
    const PlanOutcome out = mission.go_to(*target);
    if (out.trajectory && mission.drone().mode() == FlightMode::Tracking) {
      goal_ = cell;
      return;
    }
    excluded_.push_back(cell);
  }
}

bool TeleopPolicy::path_blocked(const Mission& mission, double yaw, double distance) const {
  const OccupancyGrid& grid = mission.grid();
  const GridGeometry& g = grid.geometry();
  const Scene& scene = mission.scenario().scene;
  const Vec3 here = mission.drone().state().position;
  const Vec3 fwd(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 side(-fwd.y(), fwd.x(), 0.0);
  const double step = 0.5 * g.resolution();
  const double half_width = 0.2;
  for (double s = step; s <= distance + 1e-9; s += step) {
    for (const double w : {-half_width, 0.0, half_width}) {
      const Vec3 p = here + s * fwd + w * side;
      Aabb inner = scene.bounds;
      inner.min += Vec3::Constant(0.2);
      inner.max -= Vec3::Constant(0.2);
      inner.min.z() = scene.bounds.min.z();
      inner.max.z() = scene.bounds.max.z();
      if (!inner.contains(p)) return true;
      const auto c = g.index_of(p);
      if (!c || grid.state(*c) == CellState::Occupied) return true;
    }
  }
  return false;
}

void TeleopPolicy::decide(Mission& mission) {
  const ExplorationConfig& ex = mission.config().exploration;
  if (mission.drone().mode() != FlightMode::Velocity) mission.set_mode(FlightMode::Velocity);
  const double t = mission.time();
  if (t >= next_change_) {
    std::uniform_real_distribution<double> speed(ex.teleop_min_speed, ex.teleop_max_speed);
    std::uniform_real_distribution<double> yaw_rate(-ex.teleop_max_yaw_rate, ex.teleop_max_yaw_rate);
    std::uniform_real_distribution<double> hold(1.0, 3.0);
    speed_ = speed(rng_);
    yaw_rate_ = yaw_rate(rng_);
    next_change_ = t + hold(rng_);
  }
  const DroneState& s = mission.drone().state();
  const double yaw = s.yaw();
  const double climb = 1.0 * (ex.altitude - s.position.z());
  if (path_blocked(mission, yaw, ex.teleop_probe_distance)) {
    if (!turning_) {
      turning_ = true;
      turn_sign_ = std::bernoulli_distribution(0.5)(rng_) ? 1 : -1;
    }
    mission.set_velocity(Vec3(0.0, 0.0, climb), turn_sign_ * ex.teleop_max_yaw_rate);
    return;
  }
  turning_ = false;
  const Vec3 v(speed_ * std::cos(yaw), speed_ * std::sin(yaw), climb);
  mission.set_velocity(v, yaw_rate_);
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, std::uint64_t seed) {
  if (kind == PolicyKind::AutonomousFrontier) return std::make_unique<FrontierPolicy>();
  return std::make_unique<TeleopPolicy>(seed);
}

MissionLog run_policy(const Scenario& scenario, PolicyKind kind, double budget, std::uint64_t seed) {
  if (!(budget > 0.0)) throw std::invalid_argument("run_policy: budget must be positive");
  nlohmann::json meta{{"policy", to_string(kind)}, {"seed", seed}, {"budget", budget}};
  Mission mission(scenario, std::string(to_string(kind)) + "-" + std::to_string(seed), std::move(meta), seed);
  const auto policy = make_policy(kind, seed);
  const auto steps = static_cast<std::uint64_t>(std::llround(budget / scenario.config.timing.dt));
  while (mission.steps() < steps) {
    policy->decide(mission);
    mission.tick();
  }
  mission.finish();
  return mission.log();
}

}  // namespace mrnav
