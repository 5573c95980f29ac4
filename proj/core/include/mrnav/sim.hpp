#pragma once

#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "mrnav/geom.hpp"
#include "mrnav/mapping.hpp"
#include "mrnav/trajectory.hpp"

namespace mrnav {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  /// Entry distance of a ray (unit `dir`), or nullopt. Rays starting inside
  /// the box report no hit.
  std::optional<double> ray_entry(const Vec3& origin, const Vec3& dir) const;
};

/// Ground-truth world: arena bounds and static axis-aligned boxes.
struct Scene {
  Aabb bounds;
  std::vector<Aabb> boxes;

  /// True if `p` lies inside a box grown by `margin`.
  bool collides(const Vec3& p, double margin = 0.0) const;
  /// Nearest box hit along a unit ray within `max_range`.
  std::optional<double> raycast(const Vec3& origin, const Vec3& dir, double max_range) const;
  /// Floor area of the arena bounds, m^2.
  double floor_area() const;
};

struct DepthSensorConfig {
  double horizontal_fov_deg = 87.0;
  double vertical_fov_deg = 58.0;
  double max_range = 5.0;
  int columns = 32;
  int rows = 24;
  /// Sensor pose inside the body frame (x forward, y left, z up).
  RigidTransform mount = RigidTransform::identity(Frame::B, Frame::B);
  /// Range noise standard deviation in meters; zero disables noise.
  double noise_sigma = 0.0;

  void validate() const;
};

/// Unit ray directions in the sensor frame, row-major over the pixel grid.
std::vector<Vec3> sensor_rays(const DepthSensorConfig& cfg);

/// Simulated depth frame: hit points in frame B, misses omitted.
PointCloud sense(const Scene& scene, const RigidTransform& drone_pose, const DepthSensorConfig& cfg,
                 std::mt19937_64* noise_rng = nullptr);

enum class FlightMode { Idle, Hover, Tracking, Velocity };

std::string_view to_string(FlightMode m);
std::optional<FlightMode> flight_mode_from_string(std::string_view s);

struct DynamicsConfig {
  double time_constant = 0.3;  // first-order velocity lag, s
  double max_speed = 1.5;      // m/s
  double position_gain = 1.5;  // tracking feedback, 1/s
};

/// Kinematic drone: first-order velocity lag towards a mode-dependent
/// velocity reference, speed-clamped.
class SimDrone {
 public:
  explicit SimDrone(const DroneState& initial, const DynamicsConfig& dynamics = {});

  const DroneState& state() const noexcept { return state_; }
  FlightMode mode() const noexcept { return mode_; }
  const DynamicsConfig& dynamics() const noexcept { return dynamics_; }
  const std::optional<PolynomialTrajectory>& active_trajectory() const noexcept { return trajectory_; }
  double track_clock() const noexcept { return track_clock_; }
  const Vec3& velocity_command() const noexcept { return velocity_command_; }
  double yaw_rate_command() const noexcept { return yaw_rate_command_; }

  /// Velocity the lag is driven towards in the current mode.
  Vec3 velocity_reference() const;

  void step(double dt);

  void start_tracking(PolynomialTrajectory trajectory);
  void enter_velocity_mode();
  void hover();
  /// Latches a W-frame velocity command (norm clamped to max_speed).
  /// Throws ModeError outside Velocity mode.
  void set_velocity_command(const Vec3& velocity, double yaw_rate);

  /// Overrides the pose after an external collision response.
  void block_motion(const Vec3& position);

 private:
  DroneState state_;
  DynamicsConfig dynamics_;
  FlightMode mode_ = FlightMode::Idle;
  std::optional<PolynomialTrajectory> trajectory_;
  double track_clock_ = 0.0;
  Vec3 velocity_command_ = Vec3::Zero();
  double yaw_rate_command_ = 0.0;
};

/// Value-style wrapper: returns the drone advanced by dt.
SimDrone step(SimDrone drone, double dt);

}  // namespace mrnav
