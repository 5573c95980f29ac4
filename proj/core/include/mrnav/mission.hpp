#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mrnav/geom.hpp"
#include "mrnav/mapping.hpp"
#include "mrnav/mission_log.hpp"
#include "mrnav/planner.hpp"
#include "mrnav/scenario.hpp"
#include "mrnav/sim.hpp"
#include "mrnav/trajectory.hpp"

namespace mrnav {

enum class TaskKind { SingleGoal, MultiWaypoint };

std::string_view to_string(TaskKind t);
std::optional<TaskKind> task_from_string(std::string_view s);

/// Operator drawing in the minimap frame (Wv).
class DrawnTrajectory {
 public:
  explicit DrawnTrajectory(TaskKind task = TaskKind::MultiWaypoint) : task_(task) {}
  static DrawnTrajectory single_goal(const Vec3& p_mini, double stamp = 0.0);

  TaskKind task() const noexcept { return task_; }
  const std::vector<Vec3>& samples() const noexcept { return samples_; }
  const std::vector<double>& stamps() const noexcept { return stamps_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  /// Appends without thresholding.
  void push(const Vec3& p_mini, double stamp);
  void clear();

 private:
  TaskKind task_;
  std::vector<Vec3> samples_;
  std::vector<double> stamps_;
};

/// Drawing thinning thresholds.
struct SampleThreshold {
  double min_interval = 0.1;  // s
  double min_spacing = 0.01;  // minimap units (one voxel / scale)
};

SampleThreshold sample_threshold(const MinimapTransform& m, double voxel, double min_interval = 0.1);

/// Accepts the first sample, then any sample at least `min_interval` after
/// the last accepted one or at least `min_spacing` away from it. An exact
/// repeat of the last sample is always rejected. Returns whether it was kept.
/// Throws TaskMismatch unless the drawing is MultiWaypoint.
bool record_sample(DrawnTrajectory& d, const Vec3& p_mini, double stamp, const SampleThreshold& th);

struct RepairEvent {
  long index = -1;  // target index, -1 for the start position
  Vec3 requested = Vec3::Zero();
  Vec3 repaired = Vec3::Zero();
};

struct LegError {
  std::size_t leg = 0;
  std::string code;
  std::string message;
};

/// Everything the planner needs, captured at publish time.
struct PlanRequest {
  std::uint64_t id = 0;
  TaskKind task = TaskKind::SingleGoal;
  std::vector<Vec3> targets;  // frame W, in flight order
  Vec3 start = Vec3::Zero();
  std::shared_ptr<const PlanningGrid> grid;
  /// Raw map copy, inflated by compute_plan when `grid` is unset.
  std::shared_ptr<const OccupancyGrid> map;
};

struct PlanOutcome {
  std::uint64_t id = 0;
  std::vector<Vec3> requested;     // sigma_d in W
  std::vector<Vec3> targets;       // after repair, one per successful leg
  std::vector<PlannedPath> legs;   // JPS result of each successful leg
  std::vector<Vec3> path;          // sigma_r waypoints fed to the smoother
  std::vector<std::size_t> target_knots;  // index into `path` of each target
  std::optional<PolynomialTrajectory> trajectory;
  std::vector<RepairEvent> repairs;
  std::vector<LegError> errors;
  int refinements = 0;
  bool stop_and_go = false;  // smoothing fell back to rest-to-rest segments
  bool approach = false;     // first segment leaves a blocked start cell
};

/// Pure planning step of a publish: repair, leg-wise JPS, shortcut,
/// minimum-snap fit with safety refinement. Thread-safe.
PlanOutcome compute_plan(const PlanRequest& request, const PlanningConfig& config);

/// Earliest sample time whose position is outside the free space of `grid`,
/// skipping samples before `from`.
std::optional<double> first_unsafe_time(const PolynomialTrajectory& traj, const PlanningGrid& grid, double dt,
                                        double from = 0.0);

/// Marks every cell overlapping a scene box occupied and every other cell
/// inside the arena free. Ground-truth map for tests and tools.
void rasterize_scene(OccupancyGrid& grid, const Scene& scene);

/// One simulated mission: drone, fused map, planner and log.
class Mission {
 public:
  /// `seed` drives the sensor noise stream.
  explicit Mission(Scenario scenario, std::string run_id = "run", nlohmann::json meta = nlohmann::json::object(),
                   std::uint64_t seed = 0);

  const Scenario& scenario() const noexcept { return scenario_; }
  const MissionConfig& config() const noexcept { return scenario_.config; }
  const OccupancyGrid& grid() const noexcept { return grid_; }
  const SimDrone& drone() const noexcept { return drone_; }
  const MissionLog& log() const noexcept { return log_; }
  double time() const noexcept { return static_cast<double>(steps_) * scenario_.config.timing.dt; }
  std::uint64_t steps() const noexcept { return steps_; }
  const std::optional<PlanOutcome>& active_plan() const noexcept { return active_; }
  std::size_t collisions() const noexcept { return collisions_; }

  /// Advances one time step: dynamics, collision guard, sensing, re-plan
  /// guard, logging.
  void tick();
  /// Logs the closing explored area if it changed since the last record.
  void finish();

  std::shared_ptr<const PlanningGrid> planning_snapshot() const;

  /// Transforms the drawing into W and captures the start and map. With
  /// `defer_inflation` the request carries a raw map copy instead of the
  /// inflated snapshot.
  PlanRequest prepare_publish(const DrawnTrajectory& drawn, bool defer_inflation = false);
  /// Starts tracking the outcome's trajectory (or hovers) and logs the result.
  void dispatch(const PlanOutcome& outcome);
  /// prepare_publish + compute_plan + dispatch. Throws NoTrajectory on an
  /// empty drawing.
  PlanOutcome publish(const DrawnTrajectory& drawn);
  /// Single goal in W; a planar goal gets the configured altitude.
  PlanOutcome go_to(const Vec3& goal_world);

  void set_mode(FlightMode mode);
  void set_velocity(const Vec3& velocity, double yaw_rate);
  void fuse_operator_cloud(const PointCloud& cloud_h, const RigidTransform& h_to_w);

  // Live drawing session driven by DrawSample commands.
  void begin_drawing(TaskKind task);
  bool add_draw_sample(const Vec3& p_mini);
  const DrawnTrajectory& drawing() const noexcept { return drawing_; }
  PlanRequest take_drawing(bool defer_inflation = false);

  /// Mesh / map export helpers for telemetry.
  std::vector<CellChange> take_map_changes() { return grid_.take_changes(); }

 private:
  void scan();
  void log_state();
  void log_area();
  void note_mode();
  void guard_plan();
  bool plan_blocked() const;

  Scenario scenario_;
  OccupancyGrid grid_;
  SimDrone drone_;
  MissionLog log_;
  std::uint64_t steps_ = 0;
  int sensor_every_ = 5;
  int area_every_ = 50;
  std::uint64_t next_plan_id_ = 1;
  std::optional<PlanOutcome> active_;
  FlightMode logged_mode_ = FlightMode::Idle;
  double last_area_ = -1.0;
  std::size_t collisions_ = 0;
  std::vector<GridIndex> guard_stencil_;
  DrawnTrajectory drawing_;
  SampleThreshold threshold_;
  std::mt19937_64 noise_rng_;
  mutable std::shared_ptr<const PlanningGrid> snapshot_;
  mutable std::uint64_t snapshot_version_ = 0;
};

enum class PolicyKind { AutonomousFrontier, TeleopRandomWalk };

std::string_view to_string(PolicyKind p);
std::optional<PolicyKind> policy_from_string(std::string_view s);

/// Scripted operator. decide() runs before every mission tick.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void decide(Mission& mission) = 0;
};

/// Flies to the nearest reachable frontier cell, one SingleGoal at a time.
class FrontierPolicy : public Policy {
 public:
  void decide(Mission& mission) override;

  /// Nearest reachable frontier cell center from the drone, if any.
  static std::optional<Vec3> nearest_frontier(const Mission& mission, const PlanningGrid& grid,
                                              const std::vector<GridIndex>& excluded);

 private:
  std::vector<GridIndex> excluded_;
  std::optional<GridIndex> goal_;
  double idle_since_ = -1.0;
  bool done_ = false;
};

/// Seeded first-person velocity commands with a wall-avoid reflex.
class TeleopPolicy : public Policy {
 public:
  explicit TeleopPolicy(std::uint64_t seed) : rng_(seed) {}
  void decide(Mission& mission) override;

 private:
  bool path_blocked(const Mission& mission, double yaw, double distance) const;

  std::mt19937_64 rng_;
  double next_change_ = 0.0;
  double speed_ = 0.0;
  double yaw_rate_ = 0.0;
  int turn_sign_ = 1;
  bool turning_ = false;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, std::uint64_t seed);

/// Runs a scripted mission for `budget` seconds. Throws std::invalid_argument
/// unless budget > 0.
MissionLog run_policy(const Scenario& scenario, PolicyKind policy, double budget, std::uint64_t seed);

}  // namespace mrnav
