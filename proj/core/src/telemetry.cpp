#include "mrnav/telemetry.hpp"

#include <algorithm>
#include <limits>

namespace mrnav {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const std::vector<Vec3>& pts) {
  json a = json::array();
  for (const Vec3& p : pts) a.push_back(to_json(p));
  return a;
}

Vec3 vec3(const json& a) { return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()}; }

bool newest_only(MessageType t) {
  return t == MessageType::StateUpdate || t == MessageType::MeshUpdate || t == MessageType::MetricsUpdate;
}

// Folds the cells of `update` into `base`; later states win.
void merge_delta(json& base, const json& update) {
  std::map<std::array<long long, 3>, std::size_t> where;
  json& cells = base["cells"];
  for (std::size_t n = 0; n < cells.size(); ++n) {
    where[{cells[n][0].get<long long>(), cells[n][1].get<long long>(), cells[n][2].get<long long>()}] = n;
  }
  for (const json& c : update["cells"]) {
    const std::array<long long, 3> key{c[0].get<long long>(), c[1].get<long long>(), c[2].get<long long>()};
    if (auto it = where.find(key); it != where.end()) {
      cells[it->second] = c;
    } else {
      where[key] = cells.size();
      cells.push_back(c);
    }
  }
  if (update["full"].get<bool>() && !base["full"].get<bool>()) {
    base["full"] = true;
    base["geometry"] = update["geometry"];
  }
}

}  // namespace

json state_payload(const SimDrone& drone) {
  const DroneState& s = drone.state();
  return {{"pose", s.pose().to_array()}, {"velocity", to_json(s.velocity)}, {"mode", to_string(drone.mode())}};
}

json map_delta_payload(const std::vector<CellChange>& cells, bool full, const GridGeometry* geometry) {
  json list = json::array();
  for (const CellChange& c : cells) list.push_back({c.index.i, c.index.j, c.index.k, static_cast<int>(c.state)});
  json p{{"cells", std::move(list)}, {"full", full}};
  if (full && geometry) {
    p["geometry"] = {{"origin", to_json(geometry->origin())},
                     {"resolution", geometry->resolution()},
                     {"dims", geometry->dims()}};
  }
  return p;
}

json map_snapshot_payload(const OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  std::vector<CellChange> cells;
  cells.reserve(grid.known_cells());
  for (std::size_t n = 0; n < g.cell_count(); ++n) {
    const CellState s = grid.state(n);
    if (s != CellState::Unknown) cells.push_back({g.unlinear(n), s});
  }
  return map_delta_payload(cells, true, &g);
}

json mesh_payload(const SurfaceMesh& mesh) {
  json tris = json::array();
  for (const auto& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
  return {{"vertices", to_json(mesh.vertices)}, {"triangles", std::move(tris)}};
}

json plan_result_payload(const PlanOutcome& o, std::uint64_t for_seq) {
  json repairs = json::array();
  for (const RepairEvent& r : o.repairs) {
    repairs.push_back({{"index", r.index}, {"from", to_json(r.requested)}, {"to", to_json(r.repaired)}});
  }
  json errors = json::array();
  for (const LegError& e : o.errors) errors.push_back({{"leg", e.leg}, {"code", e.code}, {"message", e.message}});
  return {{"for_seq", for_seq},
          {"id", o.id},
          {"sigma_d", to_json(o.requested)},
          {"sigma_r", o.trajectory ? to_json(o.trajectory->polyline(0.1)) : json::array()},
          {"repairs", std::move(repairs)},
          {"errors", std::move(errors)}};
}

void OutboundQueue::push(TelemetryMessage m) {
  {
    std::lock_guard lk(mu_);
    if (closed_) return;
    if (queue_.size() >= soft_limit_) {
      if (newest_only(m.type)) {
        const auto before = queue_.size();
        queue_.erase(std::remove_if(queue_.begin(), queue_.end(), [&](const TelemetryMessage& q) { return q.type == m.type; }),
                     queue_.end());
        dropped_ += before - queue_.size();
      } else if (m.type == MessageType::MapDelta) {
        const auto last = std::find_if(queue_.rbegin(), queue_.rend(),
                                       [](const TelemetryMessage& q) { return q.type == MessageType::MapDelta; });
        if (last != queue_.rend()) {
          merge_delta(last->payload, m.payload);
          last->stamp = m.stamp;
          ++merged_;
          return;
        }
      }
    }
    queue_.push_back(std::move(m));
  }
  cv_.notify_one();
}

std::optional<TelemetryMessage> OutboundQueue::take_locked() {
  if (queue_.empty()) return std::nullopt;
  TelemetryMessage m = std::move(queue_.front());
  queue_.pop_front();
  m.seq = next_seq_++;
  return m;
}

std::optional<TelemetryMessage> OutboundQueue::try_pop() {
  std::lock_guard lk(mu_);
  return take_locked();
}

std::optional<TelemetryMessage> OutboundQueue::pop_wait(std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, timeout, [&] { return closed_ || !queue_.empty(); });
  if (closed_) return std::nullopt;
  return take_locked();
}

void OutboundQueue::close() {
  {
    std::lock_guard lk(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool OutboundQueue::closed() const {
  std::lock_guard lk(mu_);
  return closed_;
}

std::size_t OutboundQueue::size() const {
  std::lock_guard lk(mu_);
  return queue_.size();
}

std::size_t OutboundQueue::dropped() const {
  std::lock_guard lk(mu_);
  return dropped_;
}

std::size_t OutboundQueue::merged() const {
  std::lock_guard lk(mu_);
  return merged_;
}

MissionRunner::MissionRunner(Scenario scenario, RunnerOptions options)
    : mission_(std::move(scenario), "serve"), options_(options), dt_(mission_.config().timing.dt) {}

MissionRunner::~MissionRunner() { stop(); }

void MissionRunner::start() {
  if (running_.exchange(true)) return;
  {
    std::lock_guard lk(mu_);
    stopping_ = false;
  }
  worker_thread_ = std::thread([this] { worker(); });
  loop_thread_ = std::thread([this] { loop(); });
}

void MissionRunner::stop() {
  {
    std::lock_guard lk(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_cv_.notify_all();
  if (loop_thread_.joinable()) loop_thread_.join();
  if (worker_thread_.joinable()) worker_thread_.join();
  running_ = false;
  if (session_) session_->close();
}

std::shared_ptr<Session> MissionRunner::attach() {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lk(mu_);
    s = std::make_shared<Session>(next_session_++, options_.outbound_limit);
    inbound_.push_back({s, std::nullopt, std::nullopt, true});
  }
  cv_.notify_all();
  if (!running_) drain_inbound();
  return s;
}

void MissionRunner::detach(const std::shared_ptr<Session>& session) {
  if (session) session->close();
}

void MissionRunner::submit_line(const std::shared_ptr<Session>& session, std::string_view line) {
  try {
    submit(session, decode(line));
  } catch (const Error& e) {
    // Recover the sequence number when the envelope itself is readable.
    std::optional<std::uint64_t> ref;
    try {
      const json j = json::parse(line);
      if (j.is_object() && j.contains("seq") && j["seq"].is_number_unsigned()) ref = j["seq"].get<std::uint64_t>();
    } catch (const json::exception&) {
    }
    {
      std::lock_guard lk(mu_);
      inbound_.push_back({session, std::nullopt, make_error(ref, e.code(), e.what(), 0.0), false});
    }
    cv_.notify_all();
  }
}

void MissionRunner::submit(const std::shared_ptr<Session>& session, TelemetryMessage command) {
  {
    std::lock_guard lk(mu_);
    inbound_.push_back({session, std::move(command), std::nullopt, false});
  }
  cv_.notify_all();
}

MissionLog MissionRunner::log_snapshot() const {
  std::lock_guard lk(log_mu_);
  return mission_.log();
}

void MissionRunner::emit(TelemetryMessage m) {
  if (session_ && session_->open()) session_->out().push(std::move(m));
}

void MissionRunner::drain_inbound() {
  std::deque<Inbound> batch;
  {
    std::lock_guard lk(mu_);
    batch.swap(inbound_);
  }
  std::lock_guard lk(log_mu_);
  for (Inbound& in : batch) {
    if (in.attach) {
      if (session_) session_->close();
      session_ = in.session;
      last_in_seq_.reset();
      pending_cells_.clear();
      mission_.take_map_changes();
      emit({MessageType::MapDelta, 0, mission_.time(), map_snapshot_payload(mission_.grid())});
      const double t = mission_.time();
      next_state_ = next_map_ = next_mesh_ = next_metrics_ = t;
      mesh_version_ = std::numeric_limits<std::uint64_t>::max();
      continue;
    }
    if (!active(in.session)) continue;
    if (in.reply) {
      in.reply->stamp = mission_.time();
      emit(std::move(*in.reply));
      continue;
    }
    apply(in.session, *in.command);
  }
}

void MissionRunner::apply(const std::shared_ptr<Session>& session, const TelemetryMessage& cmd) {
  const double t = mission_.time();
  if (last_in_seq_ && cmd.seq <= *last_in_seq_) {
    emit(make_error(cmd.seq, "OutOfOrder", "command seq must increase; last was " + std::to_string(*last_in_seq_), t));
    return;
  }
  last_in_seq_ = cmd.seq;
  if (!is_command(cmd.type)) {
    emit(make_error(cmd.seq, "NotACommand", std::string(to_string(cmd.type)) + " is not accepted from operators", t));
    return;
  }
  const json& p = cmd.payload;
  try {
    const MissionConfig& c = mission_.config();
    switch (cmd.type) {
      case MessageType::GoalCmd: {
        const json& g = p["goal"];
        Vec3 mini(g[0].get<double>(), g[1].get<double>(), g.size() == 3 ? g[2].get<double>() : 0.0);
        if (g.size() == 2) {
          Vec3 world = minimap_to_world(c.minimap, {mini, Frame::Wv}).p;
          world.z() = c.exploration.altitude;
          mini = world_to_minimap(c.minimap, {world, Frame::W}).p;
        }
        pending_ = PendingPublish{DrawnTrajectory::single_goal(mini, t), cmd.seq, session};
        break;
      }
      case MessageType::DrawSample:
        mission_.add_draw_sample(vec3(p["point"]));
        break;
      case MessageType::PublishCmd: {
        DrawnTrajectory d = mission_.drawing();
        mission_.begin_drawing(TaskKind::MultiWaypoint);
        if (d.size() < 2) throw NoTrajectory("draw at least two samples before publishing");
        pending_ = PendingPublish{std::move(d), cmd.seq, session};
        break;
      }
      case MessageType::ModeCmd: {
        const auto mode = flight_mode_from_string(p["mode"].get<std::string>());
        mission_.set_mode(*mode);
        pending_.reset();
        break;
      }
      case MessageType::VelocityCmd:
        mission_.set_velocity(vec3(p["velocity"]), p["yaw_rate"].get<double>());
        break;
      case MessageType::PointCloudIn: {
        if (p["frame"].get<std::string>() != "H") throw FrameMismatch("operator clouds must be in frame H");
        std::array<double, 7> pose{};
        for (int i = 0; i < 7; ++i) pose[i] = p["pose"][i].get<double>();
        PointCloud cloud;
        cloud.frame = Frame::H;
        cloud.source = CloudSource::Operator;
        cloud.stamp = t;
        for (const json& q : p["points"]) cloud.points.push_back(vec3(q));
        mission_.fuse_operator_cloud(cloud, RigidTransform::from_array(Frame::H, Frame::W, pose));
        break;
      }
      default:
        break;
    }
  } catch (const Error& e) {
    emit(make_error(cmd.seq, e.code(), e.what(), t));
    return;
  } catch (const std::exception& e) {
    emit(make_error(cmd.seq, "InvalidCommand", e.what(), t));
    return;
  }
  emit(make_ack(cmd.seq, t));
}

void MissionRunner::finish_plans() {
  std::optional<PlanDone> done;
  {
    std::lock_guard lk(mu_);
    done.swap(done_);
  }
  if (done) {
    mission_.dispatch(done->outcome);
    if (active(done->session)) emit({MessageType::PlanResult, 0, mission_.time(), plan_result_payload(done->outcome, done->for_seq)});
  }
  if (!pending_) return;
  bool idle = false;
  {
    std::lock_guard lk(mu_);
    idle = !worker_busy_ && !job_ && !done_;
  }
  if (running_ && !idle) return;

  PendingPublish p = std::move(*pending_);
  pending_.reset();
  PlanJob job;
  job.for_seq = p.for_seq;
  job.session = p.session;
  try {
    job.request = mission_.prepare_publish(p.drawn, true);
  } catch (const Error& e) {
    if (active(p.session)) emit(make_error(p.for_seq, e.code(), e.what(), mission_.time()));
    return;
  }
  if (!running_) {
    PlanOutcome out = compute_plan(job.request, mission_.config().planning);
    mission_.dispatch(out);
    if (active(job.session)) emit({MessageType::PlanResult, 0, mission_.time(), plan_result_payload(out, job.for_seq)});
    return;
  }
  {
    std::lock_guard lk(mu_);
    job_ = std::move(job);
  }
  worker_cv_.notify_one();
}

void MissionRunner::step_and_publish() {
  std::lock_guard lk(log_mu_);
  finish_plans();
  mission_.tick();
  const double t = mission_.time();
  const TimingConfig& timing = mission_.config().timing;
  const bool live = session_ && session_->open();
  for (const CellChange& c : mission_.take_map_changes()) {
    if (live) pending_cells_[c.index] = c.state;
  }
  if (!live) return;
  const double eps = 1e-9;
  if (t + eps >= next_state_) {
    emit({MessageType::StateUpdate, 0, t, state_payload(mission_.drone())});
    next_state_ += 1.0 / timing.state_rate;
    if (next_state_ <= t) next_state_ = t + 1.0 / timing.state_rate;
  }
  if (t + eps >= next_map_) {
    if (!pending_cells_.empty()) {
      std::vector<CellChange> cells;
      cells.reserve(pending_cells_.size());
      for (const auto& [idx, s] : pending_cells_) cells.push_back({idx, s});
      pending_cells_.clear();
      emit({MessageType::MapDelta, 0, t, map_delta_payload(cells, false, nullptr)});
    }
    next_map_ = t + timing.map_batch;
  }
  if (t + eps >= next_mesh_) {
    if (mission_.grid().version() != mesh_version_) {
      mesh_version_ = mission_.grid().version();
      emit({MessageType::MeshUpdate, 0, t, mesh_payload(extract_mesh(mission_.grid()))});
    }
    next_mesh_ = t + 1.0 / timing.mesh_rate;
  }
  if (t + eps >= next_metrics_) {
    emit({MessageType::MetricsUpdate, 0, t, json{{"explored_area", explored_area(mission_.grid())}}});
    next_metrics_ = t + 1.0 / timing.metrics_rate;
  }
}

void MissionRunner::pump(bool step) {
  drain_inbound();
  if (step) {
    step_and_publish();
  } else {
    std::lock_guard lk(log_mu_);
    finish_plans();
  }
}

void MissionRunner::loop() {
  const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(dt_));
  auto next = Clock::now();
  for (;;) {
    {
      std::unique_lock lk(mu_);
      if (options_.realtime) {
        cv_.wait_until(lk, next, [&] { return stopping_ || !inbound_.empty(); });
      }
      if (stopping_) break;
    }
    drain_inbound();
    const auto now = Clock::now();
    if (!options_.realtime || now >= next) {
      step_and_publish();
      next += period;
      if (now - next > std::chrono::seconds(1)) next = now;
    }
  }
}

void MissionRunner::worker() {
  for (;;) {
    PlanJob job;
    {
      std::unique_lock lk(mu_);
      worker_cv_.wait(lk, [&] { return stopping_ || job_.has_value(); });
      if (stopping_) return;
      job = std::move(*job_);
      job_.reset();
      worker_busy_ = true;
    }
    PlanDone done;
    done.for_seq = job.for_seq;
    done.session = job.session;
    try {
      done.outcome = compute_plan(job.request, mission_.config().planning);
    } catch (const std::exception& e) {
      done.outcome.id = job.request.id;
      done.outcome.requested = job.request.targets;
      done.outcome.errors.push_back({0, "PlannerFailure", e.what()});
    }
    {
      std::lock_guard lk(mu_);
      done_ = std::move(done);
      worker_busy_ = false;
    }
    cv_.notify_all();
  }
}

}  // namespace mrnav
