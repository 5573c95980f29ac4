#include "mrnav/protocol.hpp"

#include <array>
#include <cmath>

#include "mrnav/errors.hpp"

namespace mrnav {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kMessageTypeCount> kNames = {
    "StateUpdate", "MapDelta",    "MeshUpdate", "PointCloudIn",  "GoalCmd", "DrawSample", "PublishCmd",
    "ModeCmd",     "VelocityCmd", "PlanResult", "MetricsUpdate", "Ack",     "Error",
};

[[noreturn]] void violation(MessageType t, const std::string& what) {
  throw SchemaViolation(std::string(to_string(t)) + ": " + what);
}

const json& field(MessageType t, const json& p, const char* key) {
  const auto it = p.find(key);
  if (it == p.end()) violation(t, std::string("missing field '") + key + "'");
  return *it;
}

bool finite_number(const json& v) { return v.is_number() && std::isfinite(v.get<double>()); }

void number(MessageType t, const json& v, const char* key) {
  if (!finite_number(v)) violation(t, std::string("'") + key + "' must be a finite number");
}

void integer(MessageType t, const json& v, const char* key) {
  if (!v.is_number_integer()) violation(t, std::string("'") + key + "' must be an integer");
}

void string(MessageType t, const json& v, const char* key) {
  if (!v.is_string()) violation(t, std::string("'") + key + "' must be a string");
}

void numbers(MessageType t, const json& v, const char* key, std::size_t lo, std::size_t hi) {
  if (!v.is_array() || v.size() < lo || v.size() > hi) {
    violation(t, std::string("'") + key + "' must hold " + std::to_string(lo) +
                     (lo == hi ? "" : "-" + std::to_string(hi)) + " numbers");
  }
  for (const json& x : v) number(t, x, key);
}

void points(MessageType t, const json& v, const char* key) {
  if (!v.is_array()) violation(t, std::string("'") + key + "' must be an array of points");
  for (const json& p : v) numbers(t, p, key, 3, 3);
}

void one_of(MessageType t, const json& v, const char* key, std::initializer_list<std::string_view> allowed) {
  string(t, v, key);
  const std::string s = v.get<std::string>();
  for (std::string_view a : allowed) {
    if (s == a) return;
  }
  violation(t, std::string("'") + key + "' has unsupported value '" + s + "'");
}

void validate_cells(MessageType t, const json& cells) {
  if (!cells.is_array()) violation(t, "'cells' must be an array");
  for (const json& c : cells) {
    if (!c.is_array() || c.size() != 4) violation(t, "each cell must be [i, j, k, state]");
    for (const json& x : c) integer(t, x, "cells");
    const auto s = c[3].get<long long>();
    if (s < 0 || s > 2) violation(t, "cell state must be 0 (unknown), 1 (free) or 2 (occupied)");
  }
}

}  // namespace

std::string_view to_string(MessageType t) { return kNames[static_cast<std::size_t>(t)]; }

std::optional<MessageType> message_type_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == s) return static_cast<MessageType>(i);
  }
  return std::nullopt;
}

bool is_command(MessageType t) {
  switch (t) {
    case MessageType::PointCloudIn:
    case MessageType::GoalCmd:
    case MessageType::DrawSample:
    case MessageType::PublishCmd:
    case MessageType::ModeCmd:
    case MessageType::VelocityCmd:
      return true;
    default:
      return false;
  }
}

void validate_payload(MessageType t, const json& p) {
  if (!p.is_object()) violation(t, "payload must be an object");
  switch (t) {
    case MessageType::StateUpdate:
      numbers(t, field(t, p, "pose"), "pose", 7, 7);
      numbers(t, field(t, p, "velocity"), "velocity", 3, 3);
      one_of(t, field(t, p, "mode"), "mode", {"Idle", "Hover", "Tracking", "Velocity"});
      break;
    case MessageType::MapDelta: {
      const json& full = field(t, p, "full");
      if (!full.is_boolean()) violation(t, "'full' must be a boolean");
      validate_cells(t, field(t, p, "cells"));
      if (full.get<bool>()) {
        const json& g = field(t, p, "geometry");
        if (!g.is_object()) violation(t, "'geometry' must be an object");
        numbers(t, field(t, g, "origin"), "origin", 3, 3);
        number(t, field(t, g, "resolution"), "resolution");
        const json& dims = field(t, g, "dims");
        if (!dims.is_array() || dims.size() != 3) violation(t, "'dims' must hold 3 integers");
        for (const json& d : dims) integer(t, d, "dims");
      }
      break;
    }
    case MessageType::MeshUpdate: {
      points(t, field(t, p, "vertices"), "vertices");
      const json& tris = field(t, p, "triangles");
      if (!tris.is_array()) violation(t, "'triangles' must be an array");
      for (const json& tri : tris) {
        if (!tri.is_array() || tri.size() != 3) violation(t, "each triangle must be [a, b, c]");
        for (const json& x : tri) integer(t, x, "triangles");
      }
      break;
    }
    case MessageType::PointCloudIn:
      points(t, field(t, p, "points"), "points");
      string(t, field(t, p, "frame"), "frame");
      numbers(t, field(t, p, "pose"), "pose", 7, 7);
      break;
    case MessageType::GoalCmd:
      numbers(t, field(t, p, "goal"), "goal", 2, 3);
      break;
    case MessageType::DrawSample:
      numbers(t, field(t, p, "point"), "point", 3, 3);
      break;
    case MessageType::PublishCmd:
      break;
    case MessageType::ModeCmd:
      one_of(t, field(t, p, "mode"), "mode", {"Idle", "Hover", "Tracking", "Velocity"});
      break;
    case MessageType::VelocityCmd:
      numbers(t, field(t, p, "velocity"), "velocity", 3, 3);
      number(t, field(t, p, "yaw_rate"), "yaw_rate");
      break;
    case MessageType::PlanResult: {
      integer(t, field(t, p, "for_seq"), "for_seq");
      integer(t, field(t, p, "id"), "id");
      points(t, field(t, p, "sigma_d"), "sigma_d");
      points(t, field(t, p, "sigma_r"), "sigma_r");
      const json& repairs = field(t, p, "repairs");
      if (!repairs.is_array()) violation(t, "'repairs' must be an array");
      for (const json& r : repairs) {
        integer(t, field(t, r, "index"), "index");
        numbers(t, field(t, r, "from"), "from", 3, 3);
        numbers(t, field(t, r, "to"), "to", 3, 3);
      }
      const json& errors = field(t, p, "errors");
      if (!errors.is_array()) violation(t, "'errors' must be an array");
      for (const json& e : errors) {
        integer(t, field(t, e, "leg"), "leg");
        string(t, field(t, e, "code"), "code");
        string(t, field(t, e, "message"), "message");
      }
      break;
    }
    case MessageType::MetricsUpdate:
      number(t, field(t, p, "explored_area"), "explored_area");
      break;
    case MessageType::Ack:
      integer(t, field(t, p, "ack"), "ack");
      break;
    case MessageType::Error: {
      const json& ref = field(t, p, "ref");
      if (!ref.is_null()) integer(t, ref, "ref");
      string(t, field(t, p, "code"), "code");
      string(t, field(t, p, "message"), "message");
      break;
    }
  }
}

std::string encode(const TelemetryMessage& m) {
  json j;
  j["type"] = to_string(m.type);
  j["seq"] = m.seq;
  j["stamp"] = m.stamp;
  j["payload"] = m.payload;
  std::string out = j.dump();
  out.push_back('\n');
  return out;
}

TelemetryMessage decode(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw MalformedFrame(e.what());
  }
  if (!j.is_object()) throw MalformedFrame("frame must be a JSON object");
  const auto type_it = j.find("type");
  if (type_it == j.end() || !type_it->is_string()) throw SchemaViolation("frame lacks a type tag");
  const auto type = message_type_from_string(type_it->get<std::string>());
  if (!type) throw UnknownType("unknown message type '" + type_it->get<std::string>() + "'");

  TelemetryMessage m;
  m.type = *type;
  const auto seq = j.find("seq");
  if (seq == j.end() || !seq->is_number_unsigned()) throw SchemaViolation("frame lacks a non-negative integer seq");
  m.seq = seq->get<std::uint64_t>();
  const auto stamp = j.find("stamp");
  if (stamp == j.end() || !finite_number(*stamp)) throw SchemaViolation("frame lacks a finite stamp");
  m.stamp = stamp->get<double>();
  const auto payload = j.find("payload");
  if (payload == j.end()) throw SchemaViolation("frame lacks a payload");
  validate_payload(m.type, *payload);
  m.payload = std::move(*payload);
  return m;
}

TelemetryMessage make_ack(std::uint64_t command_seq, double stamp) {
  return {MessageType::Ack, 0, stamp, json{{"ack", command_seq}}};
}

TelemetryMessage make_error(std::optional<std::uint64_t> command_seq, std::string_view code, std::string_view message,
                            double stamp) {
  json p{{"code", code}, {"message", message}};
  p["ref"] = command_seq ? json(*command_seq) : json(nullptr);
  return {MessageType::Error, 0, stamp, std::move(p)};
}

}  // namespace mrnav
