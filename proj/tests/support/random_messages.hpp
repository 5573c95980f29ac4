#pragma once

#include <random>

#include "mrnav/protocol.hpp"

namespace testsupport {

using nlohmann::json;

/// Valid message of every type with random content.
class MessageFactory {
 public:
  explicit MessageFactory(std::uint64_t seed) : rng_(seed) {}

  mrnav::TelemetryMessage make(mrnav::MessageType t) {
    mrnav::TelemetryMessage m;
    m.type = t;
    m.seq = rng_() >> (rng_() % 64);
    m.stamp = real(0.0, 1e4);
    m.payload = payload(t);
    return m;
  }

  mrnav::TelemetryMessage any() {
    return make(static_cast<mrnav::MessageType>(rng_() % mrnav::kMessageTypeCount));
  }

  json payload(mrnav::MessageType t) {
    using mrnav::MessageType;
    switch (t) {
      case MessageType::StateUpdate:
        return {{"pose", vec(7)}, {"velocity", vec(3)}, {"mode", mode()}};
      case MessageType::MapDelta: {
        json cells = json::array();
        for (int n = count(0, 30); n > 0; --n) cells.push_back({count(0, 99), count(0, 99), count(0, 99), count(0, 2)});
        json p{{"full", coin()}, {"cells", cells}};
        if (p["full"].get<bool>()) {
          p["geometry"] = {{"origin", vec(3)}, {"resolution", real(0.05, 1.0)}, {"dims", {count(1, 200), count(1, 200), count(1, 200)}}};
        }
        return p;
      }
      case MessageType::MeshUpdate: {
        json tris = json::array();
        for (int n = count(0, 10); n > 0; --n) tris.push_back({count(0, 50), count(0, 50), count(0, 50)});
        return {{"vertices", pts(count(0, 20))}, {"triangles", tris}};
      }
      case MessageType::PointCloudIn:
        return {{"points", pts(count(0, 40))}, {"frame", "H"}, {"pose", vec(7)}};
      case MessageType::GoalCmd:
        return {{"goal", vec(coin() ? 2 : 3)}};
      case MessageType::DrawSample:
        return {{"point", vec(3)}};
      case MessageType::PublishCmd:
        return json::object();
      case MessageType::ModeCmd:
        return {{"mode", mode()}};
      case MessageType::VelocityCmd:
        return {{"velocity", vec(3)}, {"yaw_rate", real(-1, 1)}};
      case MessageType::PlanResult: {
        json repairs = json::array();
        for (int n = count(0, 3); n > 0; --n) repairs.push_back({{"index", count(-1, 10)}, {"from", vec(3)}, {"to", vec(3)}});
        json errors = json::array();
        for (int n = count(0, 2); n > 0; --n) errors.push_back({{"leg", count(0, 10)}, {"code", "NoPath"}, {"message", text()}});
        return {{"for_seq", count(0, 100000)}, {"id", count(1, 1000)}, {"sigma_d", pts(count(1, 10))},
                {"sigma_r", pts(count(0, 30))}, {"repairs", repairs}, {"errors", errors}};
      }
      case MessageType::MetricsUpdate:
        return {{"explored_area", real(0, 400)}};
      case MessageType::Ack:
        return {{"ack", count(0, 1 << 30)}};
      case MessageType::Error: {
        json p{{"code", "SchemaViolation"}, {"message", text()}};
        p["ref"] = coin() ? json(count(0, 1000)) : json(nullptr);
        return p;
      }
    }
    return json::object();
  }

 private:
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int count(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return rng_() & 1; }
  json vec(int n) {
    json a = json::array();
    for (int i = 0; i < n; ++i) a.push_back(real(-50, 50));
    return a;
  }
  json pts(int n) {
    json a = json::array();
    for (int i = 0; i < n; ++i) a.push_back(vec(3));
    return a;
  }
  std::string mode() {
    static const char* modes[] = {"Idle", "Hover", "Tracking", "Velocity"};
    return modes[rng_() % 4];
  }
  std::string text() {
    static const char* words[] = {"goal", "\"quoted\"", "unicode é", "tab\there", "line\nbreak", "plain"};
    return words[rng_() % 6];
  }

  std::mt19937_64 rng_;
};

}  // namespace testsupport
