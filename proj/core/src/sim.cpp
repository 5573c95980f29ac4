#include "mrnav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mrnav {

namespace {

Vec3 clamp_norm(const Vec3& v, double limit) {
  const double n = v.norm();
  return n > limit ? Vec3(v * (limit / n)) : v;
}

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

}  // namespace

std::optional<double> Aabb::ray_entry(const Vec3& origin, const Vec3& dir) const {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int ax = 0; ax < 3; ++ax) {
    if (dir[ax] == 0.0) {
      if (origin[ax] < min[ax] || origin[ax] > max[ax]) return std::nullopt;
      continue;
    }
    double a = (min[ax] - origin[ax]) / dir[ax];
    double b = (max[ax] - origin[ax]) / dir[ax];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1 || t0 <= 0.0) return std::nullopt;
  return t0;
}

bool Scene::collides(const Vec3& p, double margin) const {
  for (const Aabb& b : boxes) {
    if ((p.array() >= b.min.array() - margin).all() && (p.array() <= b.max.array() + margin).all()) return true;
  }
  return false;
}

std::optional<double> Scene::raycast(const Vec3& origin, const Vec3& dir, double max_range) const {
  std::optional<double> best;
  for (const Aabb& b : boxes) {
    const auto t = b.ray_entry(origin, dir);
    if (t && *t <= max_range && (!best || *t < *best)) best = t;
  }
  return best;
}

double Scene::floor_area() const {
  const Vec3 e = bounds.max - bounds.min;
  return e.x() * e.y();
}

void DepthSensorConfig::validate() const {
  if (!(horizontal_fov_deg > 0.0 && horizontal_fov_deg < 180.0) || !(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0)) {
    throw std::invalid_argument("sensor field of view must lie in (0, 180) degrees");
  }
  if (columns < 1 || rows < 1) throw std::invalid_argument("sensor needs at least one ray");
  if (!(max_range > 0.0)) throw std::invalid_argument("sensor range must be positive");
}

std::vector<Vec3> sensor_rays(const DepthSensorConfig& cfg) {
  cfg.validate();
  const double deg = std::numbers::pi / 180.0;
  const double th = std::tan(0.5 * cfg.horizontal_fov_deg * deg);
  const double tv = std::tan(0.5 * cfg.vertical_fov_deg * deg);
  std::vector<Vec3> rays;
  rays.reserve(static_cast<std::size_t>(cfg.rows) * cfg.columns);
  // Pinhole image plane at unit depth; pixel centers, left-to-right and
  // top-to-bottom as seen from behind the sensor (+y is left, +z is up).
  for (int r = 0; r < cfg.rows; ++r) {
    const double v = 1.0 - (2.0 * r + 1.0) / cfg.rows;
    for (int c = 0; c < cfg.columns; ++c) {
      const double u = 1.0 - (2.0 * c + 1.0) / cfg.columns;
      rays.push_back(Vec3(1.0, u * th, v * tv).normalized());
    }
  }
  return rays;
}

PointCloud sense(const Scene& scene, const RigidTransform& drone_pose, const DepthSensorConfig& cfg,
                 std::mt19937_64* noise_rng) {
  if (drone_pose.from() != Frame::B || drone_pose.to() != Frame::W) {
    throw FrameMismatch("sense: drone pose must map B -> W");
  }
  PointCloud cloud;
  cloud.frame = Frame::B;
  cloud.source = CloudSource::Robot;
  const Vec3 origin_b = cfg.mount.translation();
  const Vec3 origin_w = drone_pose.apply(origin_b);
  const Quat to_body = cfg.mount.rotation();
  const Quat to_world = drone_pose.rotation() * to_body;
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  for (const Vec3& ray : sensor_rays(cfg)) {
    const Vec3 dir_w = to_world * ray;
    auto t = scene.raycast(origin_w, dir_w, cfg.max_range);
    if (!t) continue;
    double range = *t;
    if (cfg.noise_sigma > 0.0 && noise_rng) range = std::max(0.0, range + noise(*noise_rng));
    cloud.points.push_back(origin_b + to_body * (range * ray));
  }
  return cloud;
}

std::string_view to_string(FlightMode m) {
  switch (m) {
    case FlightMode::Idle: return "Idle";
    case FlightMode::Hover: return "Hover";
    case FlightMode::Tracking: return "Tracking";
    case FlightMode::Velocity: return "Velocity";
  }
  return "?";
}

std::optional<FlightMode> flight_mode_from_string(std::string_view s) {
  for (FlightMode m : {FlightMode::Idle, FlightMode::Hover, FlightMode::Tracking, FlightMode::Velocity}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

SimDrone::SimDrone(const DroneState& initial, const DynamicsConfig& dynamics) : state_(initial), dynamics_(dynamics) {
  if (!(dynamics.time_constant > 0.0) || !(dynamics.max_speed > 0.0)) {
    throw std::invalid_argument("dynamics: time constant and max speed must be positive");
  }
}

Vec3 SimDrone::velocity_reference() const {
  switch (mode_) {
    case FlightMode::Tracking: {
      const TrajectorySample ref = trajectory_->sample(track_clock_);
      // Feed-forward velocity, lag compensation and position feedback.
      const Vec3 v = ref.velocity + dynamics_.time_constant * ref.acceleration +
                     dynamics_.position_gain * (ref.position - state_.position);
      return clamp_norm(v, dynamics_.max_speed);
    }
    case FlightMode::Velocity:
      return velocity_command_;
    case FlightMode::Idle:
    case FlightMode::Hover:
      break;
  }
  return Vec3::Zero();
}

void SimDrone::step(double dt) {
  if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("step: dt must lie in (0, 0.1]");
  const Vec3 v_ref = velocity_reference();
  Vec3 v = state_.velocity + (v_ref - state_.velocity) * (dt / dynamics_.time_constant);
  v = clamp_norm(v, dynamics_.max_speed);
  state_.velocity = v;
  state_.position += v * dt;
  state_.stamp += dt;

  double yaw = state_.yaw();
  double yaw_rate = 0.0;
  if (mode_ == FlightMode::Velocity) {
    yaw_rate = yaw_rate_command_;
    yaw = wrap_angle(yaw + yaw_rate * dt);
  } else if (mode_ == FlightMode::Tracking && v.head<2>().norm() > 0.05) {
    const double heading = std::atan2(v.y(), v.x());
    yaw_rate = wrap_angle(heading - yaw) / dt;
    yaw = heading;
  }
  state_.attitude = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  state_.angular_velocity = Vec3(0.0, 0.0, yaw_rate);

  if (mode_ == FlightMode::Tracking) {
    track_clock_ += dt;
    if (track_clock_ >= trajectory_->total_duration()) {
      mode_ = FlightMode::Hover;
      trajectory_.reset();
      track_clock_ = 0.0;
    }
  }
}

void SimDrone::start_tracking(PolynomialTrajectory trajectory) {
  trajectory_ = std::move(trajectory);
  track_clock_ = 0.0;
  mode_ = FlightMode::Tracking;
  velocity_command_.setZero();
  yaw_rate_command_ = 0.0;
}

void SimDrone::enter_velocity_mode() {
  trajectory_.reset();
  track_clock_ = 0.0;
  velocity_command_.setZero();
  yaw_rate_command_ = 0.0;
  mode_ = FlightMode::Velocity;
}

void SimDrone::hover() {
  trajectory_.reset();
  track_clock_ = 0.0;
  velocity_command_.setZero();
  yaw_rate_command_ = 0.0;
  mode_ = FlightMode::Hover;
}

void SimDrone::set_velocity_command(const Vec3& velocity, double yaw_rate) {
  if (mode_ != FlightMode::Velocity) {
    throw ModeError("velocity commands need Velocity mode, drone is in " + std::string(to_string(mode_)));
  }
  if (!velocity.allFinite() || !std::isfinite(yaw_rate)) throw std::invalid_argument("velocity command must be finite");
  velocity_command_ = clamp_norm(velocity, dynamics_.max_speed);
  yaw_rate_command_ = yaw_rate;
}

void SimDrone::block_motion(const Vec3& position) {
  state_.position = position;
  state_.velocity.setZero();
}

SimDrone step(SimDrone drone, double dt) {
  drone.step(dt);
  return drone;
}

}  // namespace mrnav
