#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "mrnav/geom.hpp"
#include "mrnav/grid.hpp"
#include "mrnav/mapping.hpp"
#include "mrnav/sim.hpp"

namespace mrnav {

struct GridConfig {
  Vec3 size{20.0, 20.0, 20.0};
  double resolution = 0.2;
  std::optional<Vec3> center;  // defaults to the take-off position
  LogOddsParams log_odds;
};

struct PlanningConfig {
  double nominal_speed = 1.0;     // m/s
  double inflation_radius = 0.3;  // m
  double repair_radius = 2.0;     // m, nearest-free search limit
  int max_refinements = 8;
  double safety_sample_dt = 0.02;  // s
  double speed_limit = 1.2;        // m/s, peak reference speed after time scaling
};

struct TimingConfig {
  double dt = 0.02;            // s
  double sensor_rate = 10.0;   // Hz
  double state_rate = 20.0;    // Hz
  double metrics_rate = 1.0;   // Hz
  double map_batch = 0.1;      // s
  double mesh_rate = 1.0;      // Hz
};

struct ExplorationConfig {
  double altitude = 1.0;         // m, default goal height for planar input
  double altitude_band = 0.4;    // m, frontier cells within altitude +- band
  double min_goal_distance = 0.6;
  double teleop_min_speed = 0.4;
  double teleop_max_speed = 1.0;
  double teleop_max_yaw_rate = 0.6;
  double teleop_probe_distance = 1.0;
};

struct MissionConfig {
  GridConfig grid;
  MinimapTransform minimap{20.0, RigidTransform::identity(Frame::Wv, Frame::W)};
  PlanningConfig planning;
  TimingConfig timing;
  DynamicsConfig dynamics;
  DepthSensorConfig sensor;
  ExplorationConfig exploration;
  double draw_min_interval = 0.1;  // s between accepted drawing samples
  double collision_margin = 0.05;  // m
};

struct Scenario {
  std::string name = "unnamed";
  Scene scene;
  DroneState start;
  MissionConfig config;

  GridGeometry grid_geometry() const;
};

/// Parses a scenario document. Unknown keys are ignored; missing optional
/// keys keep their defaults. Throws ConfigError.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

/// Applies a config document (same layout as a scenario's "config" object).
void apply_config(MissionConfig& config, const nlohmann::json& doc);
void apply_config_file(MissionConfig& config, const std::filesystem::path& path);

nlohmann::json config_to_json(const MissionConfig& config);

}  // namespace mrnav
