#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace mrnav {

enum class MessageType {
  StateUpdate,
  MapDelta,
  MeshUpdate,
  PointCloudIn,
  GoalCmd,
  DrawSample,
  PublishCmd,
  ModeCmd,
  VelocityCmd,
  PlanResult,
  MetricsUpdate,
  Ack,
  Error,
};

inline constexpr std::size_t kMessageTypeCount = 13;

std::string_view to_string(MessageType t);
std::optional<MessageType> message_type_from_string(std::string_view s);
/// Operator -> core messages, each answered by exactly one Ack or Error.
bool is_command(MessageType t);

/// Protocol envelope. The payload layout per type is documented in
/// schema/telemetry.schema.json.
struct TelemetryMessage {
  MessageType type = MessageType::Ack;
  std::uint64_t seq = 0;
  double stamp = 0.0;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const TelemetryMessage& o) const {
    return type == o.type && seq == o.seq && stamp == o.stamp && payload == o.payload;
  }
};

/// One JSON line with sorted keys, newline terminated.
std::string encode(const TelemetryMessage& m);

/// Inverse of encode. A trailing newline is optional.
/// Throws MalformedFrame, UnknownType or SchemaViolation.
TelemetryMessage decode(std::string_view line);

/// Throws SchemaViolation when `payload` does not fit the type's schema.
void validate_payload(MessageType t, const nlohmann::json& payload);

TelemetryMessage make_ack(std::uint64_t command_seq, double stamp);
TelemetryMessage make_error(std::optional<std::uint64_t> command_seq, std::string_view code, std::string_view message,
                            double stamp);

}  // namespace mrnav
