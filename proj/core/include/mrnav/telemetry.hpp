#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "mrnav/mission.hpp"
#include "mrnav/protocol.hpp"

namespace mrnav {

nlohmann::json state_payload(const SimDrone& drone);
/// MapDelta payload; `full` adds the grid geometry header.
nlohmann::json map_delta_payload(const std::vector<CellChange>& cells, bool full, const GridGeometry* geometry);
/// Every known cell of the grid as a full MapDelta payload.
nlohmann::json map_snapshot_payload(const OccupancyGrid& grid);
nlohmann::json mesh_payload(const SurfaceMesh& mesh);
nlohmann::json plan_result_payload(const PlanOutcome& outcome, std::uint64_t for_seq);

/// Outbound message buffer of one session. Past `soft_limit` queued
/// messages, StateUpdate / MeshUpdate / MetricsUpdate keep only the newest
/// copy and MapDelta batches merge into the queued one. PlanResult, Ack and
/// Error are never dropped. Sequence numbers are assigned on pop.
class OutboundQueue {
 public:
  explicit OutboundQueue(std::size_t soft_limit = 100) : soft_limit_(soft_limit) {}

  void push(TelemetryMessage m);
  std::optional<TelemetryMessage> try_pop();
  /// Blocks until a message is available, the queue closes, or `timeout`.
  std::optional<TelemetryMessage> pop_wait(std::chrono::milliseconds timeout);

  void close();
  bool closed() const;
  std::size_t size() const;
  std::size_t dropped() const;
  std::size_t merged() const;

 private:
  std::optional<TelemetryMessage> take_locked();

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<TelemetryMessage> queue_;
  std::size_t soft_limit_;
  std::uint64_t next_seq_ = 1;
  std::size_t dropped_ = 0;
  std::size_t merged_ = 0;
  bool closed_ = false;
};

/// One operator connection.
class Session {
 public:
  explicit Session(std::uint64_t id, std::size_t soft_limit = 100) : id_(id), out_(soft_limit) {}

  std::uint64_t id() const noexcept { return id_; }
  OutboundQueue& out() noexcept { return out_; }
  bool open() const { return !out_.closed(); }
  void close() { out_.close(); }

 private:
  std::uint64_t id_;
  OutboundQueue out_;
};

struct RunnerOptions {
  /// Paces the loop against the wall clock; otherwise steps run back to back.
  bool realtime = true;
  std::size_t outbound_limit = 100;
};

/// Owns the mission and serializes everything that touches it: the
/// simulation loop, incoming commands, the planner worker and the telemetry
/// schedule. At most one session is active; attaching a new one closes the
/// previous one.
class MissionRunner {
 public:
  explicit MissionRunner(Scenario scenario, RunnerOptions options = {});
  ~MissionRunner();
  MissionRunner(const MissionRunner&) = delete;
  MissionRunner& operator=(const MissionRunner&) = delete;

  void start();
  void stop();
  bool running() const noexcept { return running_.load(); }

  /// New active session. Its first outbound message is a full map snapshot.
  std::shared_ptr<Session> attach();
  void detach(const std::shared_ptr<Session>& session);

  /// Queues a raw line from `session`; decode errors are answered with Error.
  void submit_line(const std::shared_ptr<Session>& session, std::string_view line);
  void submit(const std::shared_ptr<Session>& session, TelemetryMessage command);

  /// Manual driving when the loop thread is not running: applies queued
  /// commands, then advances one step. Blocks on an in-flight plan.
  void pump(bool step = true);

  /// Read access to the mission; only safe while the loop is stopped.
  const Mission& mission() const noexcept { return mission_; }
  /// Snapshot of the mission log, safe at any time.
  MissionLog log_snapshot() const;

 private:
  struct Inbound {
    std::shared_ptr<Session> session;
    std::optional<TelemetryMessage> command;
    std::optional<TelemetryMessage> reply;  // decode failure answered directly
    bool attach = false;
  };
  struct PendingPublish {
    DrawnTrajectory drawn;
    std::uint64_t for_seq = 0;
    std::shared_ptr<Session> session;
  };
  struct PlanJob {
    PlanRequest request;
    std::uint64_t for_seq = 0;
    std::shared_ptr<Session> session;
  };
  struct PlanDone {
    PlanOutcome outcome;
    std::uint64_t for_seq = 0;
    std::shared_ptr<Session> session;
  };

  void loop();
  void worker();
  void drain_inbound();
  void apply(const std::shared_ptr<Session>& session, const TelemetryMessage& cmd);
  void finish_plans();
  void step_and_publish();
  void emit(TelemetryMessage m);
  bool active(const std::shared_ptr<Session>& s) const { return s && s == session_ && s->open(); }

  Mission mission_;
  RunnerOptions options_;
  double dt_;

  // Loop-thread state.
  std::shared_ptr<Session> session_;
  std::optional<std::uint64_t> last_in_seq_;
  std::optional<PendingPublish> pending_;
  std::map<GridIndex, CellState> pending_cells_;
  double next_state_ = 0.0;
  double next_map_ = 0.0;
  double next_mesh_ = 0.0;
  double next_metrics_ = 0.0;
  std::uint64_t mesh_version_ = 0;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Inbound> inbound_;
  std::optional<PlanJob> job_;       // handed to the worker
  std::optional<PlanDone> done_;     // finished plan waiting for dispatch
  bool worker_busy_ = false;
  bool stopping_ = false;
  mutable std::mutex log_mu_;
  std::atomic<bool> running_{false};
  std::uint64_t next_session_ = 1;
  std::thread loop_thread_;
  std::thread worker_thread_;
  std::condition_variable worker_cv_;
};

}  // namespace mrnav
