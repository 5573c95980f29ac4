#include "mrnav/scenario.hpp"

#include <fstream>
#include <sstream>

namespace mrnav {

namespace {

using nlohmann::json;

Vec3 vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + ": expected [x, y, z]");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(what) + ": non-numeric component");
    v[i] = j[i].get<double>();
  }
  return v;
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

Aabb box(const json& j, const char* what) {
  if (!j.is_object() || !j.contains("min") || !j.contains("max")) throw ConfigError(std::string(what) + ": expected {min, max}");
  Aabb b{vec3(j["min"], what), vec3(j["max"], what)};
  if (!((b.min.array() <= b.max.array()).all())) throw ConfigError(std::string(what) + ": min exceeds max");
  return b;
}

}  // namespace

GridGeometry Scenario::grid_geometry() const {
  return GridGeometry::centered(config.grid.center.value_or(start.position), config.grid.size, config.grid.resolution);
}

void apply_config(MissionConfig& c, const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be an object");
  if (auto g = doc.find("grid"); g != doc.end()) {
    if (g->contains("size")) c.grid.size = vec3((*g)["size"], "grid.size");
    read(*g, "resolution", c.grid.resolution);
    if (g->contains("center")) c.grid.center = vec3((*g)["center"], "grid.center");
    read(*g, "hit", c.grid.log_odds.hit);
    read(*g, "miss", c.grid.log_odds.miss);
    read(*g, "clamp_min", c.grid.log_odds.clamp_min);
    read(*g, "clamp_max", c.grid.log_odds.clamp_max);
    read(*g, "occupied_threshold", c.grid.log_odds.occupied_threshold);
    if (!(c.grid.resolution > 0.0)) throw ConfigError("grid.resolution must be positive");
  }
  if (auto m = doc.find("minimap"); m != doc.end()) {
    double scale = c.minimap.scale();
    read(*m, "scale", scale);
    RigidTransform rigid = c.minimap.rigid();
    if (m->contains("pose")) {
      std::array<double, 7> a{};
      const json& p = (*m)["pose"];
      if (!p.is_array() || p.size() != 7) throw ConfigError("minimap.pose: expected [qw,qx,qy,qz,tx,ty,tz]");
      for (int i = 0; i < 7; ++i) a[i] = p[i].get<double>();
      rigid = RigidTransform::from_array(Frame::Wv, Frame::W, a);
    }
    try {
      c.minimap = MinimapTransform(scale, rigid);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("minimap: ") + e.what());
    }
  }
  if (auto p = doc.find("planning"); p != doc.end()) {
    read(*p, "nominal_speed", c.planning.nominal_speed);
    read(*p, "inflation_radius", c.planning.inflation_radius);
    read(*p, "repair_radius", c.planning.repair_radius);
    read(*p, "max_refinements", c.planning.max_refinements);
    read(*p, "safety_sample_dt", c.planning.safety_sample_dt);
    read(*p, "speed_limit", c.planning.speed_limit);
  }
  if (auto t = doc.find("timing"); t != doc.end()) {
    read(*t, "dt", c.timing.dt);
    read(*t, "sensor_rate", c.timing.sensor_rate);
    read(*t, "state_rate", c.timing.state_rate);
    read(*t, "metrics_rate", c.timing.metrics_rate);
    read(*t, "map_batch", c.timing.map_batch);
    read(*t, "mesh_rate", c.timing.mesh_rate);
    if (!(c.timing.dt > 0.0 && c.timing.dt <= 0.1)) throw ConfigError("timing.dt must lie in (0, 0.1]");
  }
  if (auto d = doc.find("dynamics"); d != doc.end()) {
    read(*d, "time_constant", c.dynamics.time_constant);
    read(*d, "max_speed", c.dynamics.max_speed);
    read(*d, "position_gain", c.dynamics.position_gain);
  }
  if (auto s = doc.find("sensor"); s != doc.end()) {
    read(*s, "horizontal_fov_deg", c.sensor.horizontal_fov_deg);
    read(*s, "vertical_fov_deg", c.sensor.vertical_fov_deg);
    read(*s, "max_range", c.sensor.max_range);
    read(*s, "columns", c.sensor.columns);
    read(*s, "rows", c.sensor.rows);
    read(*s, "noise_sigma", c.sensor.noise_sigma);
    try {
      c.sensor.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("sensor: ") + e.what());
    }
  }
  if (auto e = doc.find("exploration"); e != doc.end()) {
    read(*e, "altitude", c.exploration.altitude);
    read(*e, "altitude_band", c.exploration.altitude_band);
    read(*e, "min_goal_distance", c.exploration.min_goal_distance);
    read(*e, "teleop_min_speed", c.exploration.teleop_min_speed);
    read(*e, "teleop_max_speed", c.exploration.teleop_max_speed);
    read(*e, "teleop_max_yaw_rate", c.exploration.teleop_max_yaw_rate);
    read(*e, "teleop_probe_distance", c.exploration.teleop_probe_distance);
  }
  read(doc, "draw_min_interval", c.draw_min_interval);
  read(doc, "collision_margin", c.collision_margin);
}

void apply_config_file(MissionConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    apply_config(config, json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
}

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ConfigError("scenario must be an object");
  Scenario s;
  read(doc, "name", s.name);
  if (!doc.contains("arena")) throw ConfigError("scenario needs an arena box");
  s.scene.bounds = box(doc["arena"], "arena");
  if (auto b = doc.find("boxes"); b != doc.end()) {
    for (const json& item : *b) {
      Aabb a = box(item, "boxes[]");
      if (!((a.min.array() >= s.scene.bounds.min.array()).all() && (a.max.array() <= s.scene.bounds.max.array()).all())) {
        throw ConfigError("scenario box lies outside the arena bounds");
      }
      s.scene.boxes.push_back(a);
    }
  }
  if (auto st = doc.find("start"); st != doc.end()) {
    if (st->contains("position")) s.start.position = vec3((*st)["position"], "start.position");
    double yaw = 0.0;
    read(*st, "yaw", yaw);
    s.start.attitude = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  }
  if (!s.scene.bounds.contains(s.start.position)) throw ConfigError("start position lies outside the arena");
  if (s.scene.collides(s.start.position)) throw ConfigError("start position lies inside an obstacle");
  if (auto c = doc.find("config"); c != doc.end()) apply_config(s.config, *c);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  try {
    return parse_scenario(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario file " + path.string() + ": " + e.what());
  }
}

json config_to_json(const MissionConfig& c) {
  json j;
  j["grid"] = {{"size", to_json(c.grid.size)}, {"resolution", c.grid.resolution}};
  if (c.grid.center) j["grid"]["center"] = to_json(*c.grid.center);
  const auto pose = c.minimap.rigid().to_array();
  j["minimap"] = {{"scale", c.minimap.scale()}, {"pose", pose}};
  j["planning"] = {{"nominal_speed", c.planning.nominal_speed},
                   {"inflation_radius", c.planning.inflation_radius},
                   {"repair_radius", c.planning.repair_radius},
                   {"max_refinements", c.planning.max_refinements},
                   {"speed_limit", c.planning.speed_limit}};
  j["timing"] = {{"dt", c.timing.dt},
                 {"sensor_rate", c.timing.sensor_rate},
                 {"state_rate", c.timing.state_rate},
                 {"metrics_rate", c.timing.metrics_rate}};
  j["dynamics"] = {{"time_constant", c.dynamics.time_constant}, {"max_speed", c.dynamics.max_speed}};
  return j;
}

}  // namespace mrnav
