#include "mrnav/mission.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mrnav {

namespace {

using nlohmann::json;

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const std::vector<Vec3>& pts) {
  json a = json::array();
  for (const Vec3& p : pts) a.push_back(to_json(p));
  return a;
}

void push_distinct(std::vector<Vec3>& pts, const Vec3& p) {
  if (pts.empty() || (pts.back() - p).norm() > 1e-9) pts.push_back(p);
}

double peak_speed(const PolynomialTrajectory& traj, double dt) {
  double vmax = 0.0;
  const double T = traj.total_duration();
  for (double t = 0.0; t < T; t += dt) vmax = std::max(vmax, traj.derivative(t, 1).norm());
  return std::max(vmax, traj.derivative(T, 1).norm());
}

// Each segment flown rest-to-rest: stays exactly on the straight segment.
PolynomialTrajectory stop_and_go(const std::vector<Vec3>& path, const std::vector<double>& durations) {
  std::vector<PolySegment> segs;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const PolynomialTrajectory one = fit_min_snap({path[i], path[i + 1]}, {durations[i]});
    segs.push_back(one.segments().front());
  }
  return PolynomialTrajectory(std::move(segs));
}

PolynomialTrajectory time_scaled(const std::vector<Vec3>& path, std::vector<double> durations, bool rest_to_rest,
                                 const PlanningConfig& cfg) {
  const auto fit = [&](const std::vector<double>& d) {
    return rest_to_rest ? stop_and_go(path, d) : fit_min_snap(path, d);
  };
  PolynomialTrajectory traj = fit(durations);
  const double vmax = peak_speed(traj, cfg.safety_sample_dt);
  if (vmax > cfg.speed_limit) {
    const double k = vmax / cfg.speed_limit * (1.0 + 1e-6);
    for (double& d : durations) d *= k;
    traj = fit(durations);
  }
  return traj;
}

}  // namespace

std::string_view to_string(TaskKind t) { return t == TaskKind::SingleGoal ? "SingleGoal" : "MultiWaypoint"; }

std::optional<TaskKind> task_from_string(std::string_view s) {
  if (s == "SingleGoal") return TaskKind::SingleGoal;
  if (s == "MultiWaypoint") return TaskKind::MultiWaypoint;
  return std::nullopt;
}

DrawnTrajectory DrawnTrajectory::single_goal(const Vec3& p_mini, double stamp) {
  DrawnTrajectory d(TaskKind::SingleGoal);
  d.push(p_mini, stamp);
  return d;
}

void DrawnTrajectory::push(const Vec3& p_mini, double stamp) {
  if (task_ == TaskKind::SingleGoal && !samples_.empty()) throw TaskMismatch("a single goal holds exactly one sample");
  samples_.push_back(p_mini);
  stamps_.push_back(stamp);
}

void DrawnTrajectory::clear() {
  samples_.clear();
  stamps_.clear();
}

SampleThreshold sample_threshold(const MinimapTransform& m, double voxel, double min_interval) {
  return {min_interval, voxel / m.scale()};
}

bool record_sample(DrawnTrajectory& d, const Vec3& p_mini, double stamp, const SampleThreshold& th) {
  if (d.task() != TaskKind::MultiWaypoint) throw TaskMismatch("record_sample needs a MultiWaypoint drawing");
  if (!p_mini.allFinite() || !std::isfinite(stamp)) throw std::invalid_argument("record_sample: non-finite input");
  if (d.empty()) {
    d.push(p_mini, stamp);
    return true;
  }
  const Vec3& last = d.samples().back();
  if (last == p_mini) return false;
  const bool waited = stamp - d.stamps().back() >= th.min_interval - 1e-12;
  const bool moved = (p_mini - last).norm() >= th.min_spacing - 1e-12;
  if (!waited && !moved) return false;
  d.push(p_mini, stamp);
  return true;
}

std::optional<double> first_unsafe_time(const PolynomialTrajectory& traj, const PlanningGrid& grid, double dt,
                                        double from) {
  const double T = traj.total_duration();
  const auto bad = [&](double t) { return !grid.is_free(traj.sample(t).position); };
  const long n = static_cast<long>(std::ceil(T / dt - 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double t = std::min(static_cast<double>(i) * dt, T);
    if (t < from) continue;
    if (bad(t)) return t;
  }
  return std::nullopt;
}

PlanOutcome compute_plan(const PlanRequest& req, const PlanningConfig& cfg) {
  std::shared_ptr<const PlanningGrid> snapshot = req.grid;
  if (!snapshot && req.map) snapshot = std::make_shared<const PlanningGrid>(inflate(*req.map, cfg.inflation_radius));
  if (!snapshot) throw std::invalid_argument("compute_plan: missing grid snapshot");
  const PlanningGrid& grid = *snapshot;
  PlanOutcome out;
  out.id = req.id;
  out.requested = req.targets;

  Vec3 current = req.start;
  if (!grid.is_free(current)) {
    try {
      const Vec3 fixed = nearest_free_pose(grid, current, cfg.repair_radius);
      out.repairs.push_back({-1, current, fixed});
      out.path.push_back(current);
      out.approach = true;
      current = fixed;
    } catch (const Error& e) {
      out.errors.push_back({0, "StartOccupied", e.what()});
      return out;
    }
  }
  push_distinct(out.path, current);

  for (std::size_t i = 0; i < req.targets.size(); ++i) {
    Vec3 target = req.targets[i];
    if (!grid.is_free(target)) {
      try {
        const Vec3 fixed = nearest_free_pose(grid, target, cfg.repair_radius);
        out.repairs.push_back({static_cast<long>(i), target, fixed});
        target = fixed;
      } catch (const Error& e) {
        out.errors.push_back({i, e.code(), e.what()});
        continue;
      }
    }
    if ((target - current).norm() <= 1e-9) continue;
    PlannedPath leg;
    try {
      leg = plan_jps(grid, current, target);
    } catch (const Error& e) {
      out.errors.push_back({i, e.code(), e.what()});
      continue;
    }
    PlannedPath exact;
    exact.waypoints.push_back(current);
    for (const Vec3& w : leg.waypoints) push_distinct(exact.waypoints, w);
    push_distinct(exact.waypoints, target);
    exact = shortcut(exact, grid);
    for (std::size_t k = 1; k < exact.waypoints.size(); ++k) push_distinct(out.path, exact.waypoints[k]);
    out.legs.push_back(std::move(leg));
    out.targets.push_back(target);
    out.target_knots.push_back(out.path.size() - 1);
    current = target;
  }
  if (out.path.size() < 2) return out;

  std::vector<Vec3> path = out.path;
  std::vector<std::size_t> knots = out.target_knots;
  std::vector<double> durations = allocate_times(path, cfg.nominal_speed);
  const auto skip_until = [&](const PolynomialTrajectory& t) { return out.approach ? t.knot_times()[1] : 0.0; };

  for (int round = 0;; ++round) {
    PolynomialTrajectory traj = time_scaled(path, durations, false, cfg);
    const auto bad = first_unsafe_time(traj, grid, cfg.safety_sample_dt, skip_until(traj));
    if (!bad) {
      out.path = path;
      out.target_knots = knots;
      out.trajectory = std::move(traj);
      out.refinements = round;
      return out;
    }
    if (round >= cfg.max_refinements) break;
    const auto& kt = traj.knot_times();
    std::size_t s = static_cast<std::size_t>(std::upper_bound(kt.begin(), kt.end(), *bad) - kt.begin());
    s = std::clamp<std::size_t>(s, 1, path.size() - 1) - 1;
    path.insert(path.begin() + static_cast<long>(s) + 1, 0.5 * (path[s] + path[s + 1]));
    const double half = std::max(0.5 * durations[s], kMinSegmentDuration);
    durations[s] = half;
    durations.insert(durations.begin() + static_cast<long>(s) + 1, half);
    for (std::size_t& k : knots) {
      if (k > s) ++k;
    }
  }

  out.stop_and_go = true;
  out.refinements = cfg.max_refinements;
  out.trajectory = time_scaled(out.path, allocate_times(out.path, cfg.nominal_speed), true, cfg);
  return out;
}

void rasterize_scene(OccupancyGrid& grid, const Scene& scene) {
  const GridGeometry& g = grid.geometry();
  const double res = g.resolution();
  const auto& dims = g.dims();
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const GridIndex c{i, j, k};
        const Vec3 lo = g.origin() + Vec3(i, j, k) * res;
        const Vec3 hi = lo + Vec3::Constant(res);
        if (!scene.bounds.contains(g.center_of(c))) continue;
        const bool hit = std::any_of(scene.boxes.begin(), scene.boxes.end(), [&](const Aabb& b) {
          return (lo.array() < b.max.array()).all() && (hi.array() > b.min.array()).all();
        });
        if (hit) {
          grid.apply_hit(c);
        } else {
          grid.apply_miss(c);
        }
      }
    }
  }
}

Mission::Mission(Scenario scenario, std::string run_id, json meta, std::uint64_t seed)
    : scenario_(std::move(scenario)),
      grid_(scenario_.grid_geometry(), scenario_.config.grid.log_odds),
      drone_(scenario_.start, scenario_.config.dynamics),
      drawing_(TaskKind::MultiWaypoint),
      noise_rng_(seed) {
  const MissionConfig& c = scenario_.config;
  c.sensor.validate();
  if (!(c.timing.dt > 0.0 && c.timing.dt <= 0.1)) throw ConfigError("timing.dt must lie in (0, 0.1]");
  if (!grid_.geometry().contains(scenario_.start.position)) throw ConfigError("start position lies outside the grid");
  sensor_every_ = std::max(1, static_cast<int>(std::lround(1.0 / (c.timing.sensor_rate * c.timing.dt))));
  area_every_ = std::max(1, static_cast<int>(std::lround(1.0 / (c.timing.metrics_rate * c.timing.dt))));
  threshold_ = sample_threshold(c.minimap, c.grid.resolution, c.draw_min_interval);

  const double res = c.grid.resolution;
  const int reach = static_cast<int>(std::floor(c.planning.inflation_radius / res + 1e-9));
  const double r2 = (c.planning.inflation_radius / res) * (c.planning.inflation_radius / res) + 1e-9;
  for (int dk = -reach; dk <= reach; ++dk) {
    for (int dj = -reach; dj <= reach; ++dj) {
      for (int di = -reach; di <= reach; ++di) {
        if (static_cast<double>(di * di + dj * dj + dk * dk) <= r2) guard_stencil_.push_back({di, dj, dk});
      }
    }
  }

  meta["scenario"] = scenario_.name;
  meta["dt"] = c.timing.dt;
  log_ = MissionLog(std::move(run_id), std::move(meta));

  drone_.hover();
  logged_mode_ = drone_.mode();
  scan();
  log_state();
  log_area();
}

void Mission::scan() {
  const MissionConfig& c = scenario_.config;
  const RigidTransform pose = drone_.state().pose();
  std::mt19937_64* rng = c.sensor.noise_sigma > 0.0 ? &noise_rng_ : nullptr;
  PointCloud body = sense(scenario_.scene, pose, c.sensor, rng);
  PointCloud world;
  world.frame = Frame::W;
  world.source = CloudSource::Robot;
  world.stamp = time();
  world.points.reserve(body.points.size());
  for (const Vec3& p : body.points) world.points.push_back(pose.apply(p));
  const Vec3 origin = pose.apply(c.sensor.mount.translation());
  insert_cloud(grid_, world, origin);
}

void Mission::log_state() {
  const DroneState& s = drone_.state();
  log_.add(time(), "state",
           {{"p", to_json(s.position)}, {"v", to_json(s.velocity)}, {"yaw", s.yaw()}, {"mode", to_string(drone_.mode())}});
}

void Mission::log_area() {
  last_area_ = explored_area(grid_);
  log_.add(time(), "area", {{"m2", last_area_}});
}

void Mission::note_mode() {
  if (drone_.mode() == logged_mode_) return;
  log_.add(time(), "mode", {{"from", to_string(logged_mode_)}, {"to", to_string(drone_.mode())}});
  logged_mode_ = drone_.mode();
  if (drone_.mode() != FlightMode::Tracking) active_.reset();
}

void Mission::tick() {
  const MissionConfig& c = scenario_.config;
  const Vec3 before = drone_.state().position;
  drone_.step(c.timing.dt);
  ++steps_;
  const Vec3& after = drone_.state().position;
  if (scenario_.scene.collides(after, c.collision_margin) || !scenario_.scene.bounds.contains(after)) {
    drone_.block_motion(before);
    ++collisions_;
    log_.add(time(), "collision", {{"p", to_json(after)}, {"mode", to_string(drone_.mode())}});
  }
  note_mode();
  if (steps_ % static_cast<std::uint64_t>(sensor_every_) == 0) {
    scan();
    guard_plan();
  }
  log_state();
  if (steps_ % static_cast<std::uint64_t>(area_every_) == 0) log_area();
}

void Mission::finish() {
  if (explored_area(grid_) != last_area_) log_area();
}

std::shared_ptr<const PlanningGrid> Mission::planning_snapshot() const {
  if (!snapshot_ || snapshot_version_ != grid_.version()) {
    snapshot_ = std::make_shared<const PlanningGrid>(inflate(grid_, scenario_.config.planning.inflation_radius));
    snapshot_version_ = grid_.version();
  }
  return snapshot_;
}

PlanRequest Mission::prepare_publish(const DrawnTrajectory& drawn, bool defer_inflation) {
  if (drawn.empty()) throw NoTrajectory("nothing drawn");
  if (drawn.task() == TaskKind::MultiWaypoint && drawn.size() < 2) {
    throw NoTrajectory("a multi-waypoint drawing needs at least two samples");
  }
  PlanRequest req;
  req.id = next_plan_id_++;
  req.task = drawn.task();
  for (const Vec3& p : drawn.samples()) {
    req.targets.push_back(minimap_to_world(scenario_.config.minimap, {p, Frame::Wv}).p);
  }
  req.start = drone_.state().position;
  if (defer_inflation && !(snapshot_ && snapshot_version_ == grid_.version())) {
    req.map = std::make_shared<const OccupancyGrid>(grid_);
  } else {
    req.grid = planning_snapshot();
  }
  log_.add(time(), "publish",
           {{"id", req.id}, {"task", to_string(req.task)}, {"drawn_mini", to_json(drawn.samples())},
            {"drawn_world", to_json(req.targets)}});
  return req;
}

void Mission::dispatch(const PlanOutcome& o) {
  for (const RepairEvent& r : o.repairs) {
    log_.add(time(), "repair", {{"id", o.id}, {"index", r.index}, {"from", to_json(r.requested)}, {"to", to_json(r.repaired)}});
  }
  for (const LegError& e : o.errors) {
    log_.add(time(), "plan_error", {{"id", o.id}, {"leg", e.leg}, {"code", e.code}, {"message", e.message}});
  }
  if (o.trajectory) {
    log_.add(time(), "plan",
             {{"id", o.id},
              {"path", to_json(o.path)},
              {"samples", to_json(o.trajectory->polyline(0.1))},
              {"duration", o.trajectory->total_duration()},
              {"legs", o.legs.size()},
              {"refinements", o.refinements},
              {"stop_and_go", o.stop_and_go}});
    drone_.start_tracking(*o.trajectory);
    active_ = o;
  } else {
    if (o.errors.empty()) log_.add(time(), "plan", {{"id", o.id}, {"path", to_json(o.path)}, {"legs", 0}});
    if (drone_.mode() == FlightMode::Tracking) drone_.hover();
    active_.reset();
  }
  note_mode();
}

PlanOutcome Mission::publish(const DrawnTrajectory& drawn) {
  const PlanRequest req = prepare_publish(drawn);
  PlanOutcome out = compute_plan(req, scenario_.config.planning);
  dispatch(out);
  return out;
}

PlanOutcome Mission::go_to(const Vec3& goal_world) {
  const Vec3 mini = world_to_minimap(scenario_.config.minimap, {goal_world, Frame::W}).p;
  return publish(DrawnTrajectory::single_goal(mini, time()));
}

void Mission::set_mode(FlightMode mode) {
  switch (mode) {
    case FlightMode::Velocity:
      if (drone_.mode() != FlightMode::Velocity) drone_.enter_velocity_mode();
      break;
    case FlightMode::Hover:
    case FlightMode::Idle:
      drone_.hover();
      break;
    case FlightMode::Tracking:
      throw ModeError("Tracking is entered by publishing a trajectory");
  }
  note_mode();
}

void Mission::set_velocity(const Vec3& velocity, double yaw_rate) { drone_.set_velocity_command(velocity, yaw_rate); }

void Mission::fuse_operator_cloud(const PointCloud& cloud_h, const RigidTransform& h_to_w) {
  merge_operator_cloud(grid_, cloud_h, h_to_w);
  log_.add(time(), "operator_cloud", {{"points", cloud_h.points.size()}});
}

void Mission::begin_drawing(TaskKind task) { drawing_ = DrawnTrajectory(task); }

bool Mission::add_draw_sample(const Vec3& p_mini) { return record_sample(drawing_, p_mini, time(), threshold_); }

PlanRequest Mission::take_drawing(bool defer_inflation) {
  DrawnTrajectory d = std::move(drawing_);
  drawing_ = DrawnTrajectory(TaskKind::MultiWaypoint);
  return prepare_publish(d, defer_inflation);
}

bool Mission::plan_blocked() const {
  const PolynomialTrajectory& traj = *drone_.active_trajectory();
  const GridGeometry& g = grid_.geometry();
  double from = drone_.track_clock();
  if (active_->approach) from = std::max(from, traj.knot_times()[1]);
  const double T = traj.total_duration();
  for (double t = from;; t = std::min(t + 0.1, T)) {
    const GridIndex c = g.floor_index(traj.sample(t).position);
    for (const GridIndex& off : guard_stencil_) {
      const GridIndex q = c + off;
      if (g.contains(q) && grid_.state(q) == CellState::Occupied) return true;
    }
    if (t >= T) break;
  }
  return false;
}

void Mission::guard_plan() {
  if (drone_.mode() != FlightMode::Tracking || !active_ || !drone_.active_trajectory()) return;
  if (!plan_blocked()) return;
  const PolynomialTrajectory& traj = *drone_.active_trajectory();
  PlanRequest req;
  req.id = next_plan_id_++;
  req.task = TaskKind::MultiWaypoint;
  for (std::size_t i = 0; i < active_->targets.size(); ++i) {
    if (traj.knot_times()[active_->target_knots[i]] > drone_.track_clock() + 1e-9) req.targets.push_back(active_->targets[i]);
  }
  req.start = drone_.state().position;
  req.grid = planning_snapshot();
  log_.add(time(), "replan", {{"from", active_->id}, {"id", req.id}, {"targets", to_json(req.targets)}});
  dispatch(compute_plan(req, scenario_.config.planning));
}

}  // namespace mrnav
