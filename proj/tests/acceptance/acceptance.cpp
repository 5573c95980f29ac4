#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <boost/asio.hpp>

#include "mrnav/mission.hpp"
#include "mrnav/server.hpp"
#include "oracles/oracles.hpp"
#include "support/random_messages.hpp"

using namespace mrnav;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Scenario scenario(const char* name) { return load_scenario(std::string(MRNAV_SCENARIO_DIR) + "/" + name); }

// JPS optimality

constexpr int kJpsGrids = 200;
constexpr double kJpsBudgetSeconds = 60.0;

Verdict jps_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  int solvable = 0, mismatches = 0, disagreements = 0;
  for (int trial = 0; trial < kJpsGrids; ++trial) {
    const int n = 20 + static_cast<int>(rng() % 31);
    const double density = 0.30 * static_cast<double>(trial % 11) / 10.0;
    const GridGeometry g(Vec3::Zero(), 0.2, {n, n, n});
    std::bernoulli_distribution occ(density);
    std::vector<std::uint8_t> cells(g.cell_count());
    for (auto& c : cells) c = occ(rng) ? 1 : 0;
    const PlanningGrid pg(g, cells);
    auto pick = [&] {
      for (;;) {
        const GridIndex c{static_cast<int>(rng() % n), static_cast<int>(rng() % n), static_cast<int>(rng() % n)};
        if (pg.free(c)) return c;
      }
    };
    const Vec3 s = g.center_of(pick()), t = g.center_of(pick());
    std::optional<PlannedPath> a, j;
    try {
      a = plan_astar(pg, s, t);
    } catch (const NoPath&) {
    }
    try {
      j = plan_jps(pg, s, t);
    } catch (const NoPath&) {
    }
    if (a.has_value() != j.has_value()) {
      ++disagreements;
      continue;
    }
    if (!a) continue;
    ++solvable;
    if (a->cost != j->cost) ++mismatches;
  }
  const double elapsed = seconds_since(t0);
  return {mismatches == 0 && disagreements == 0 && elapsed < kJpsBudgetSeconds && solvable > kJpsGrids / 2,
          fmt("%d grids, %d solvable, %d cost mismatches, %d reachability disagreements, %.1f s (limit %.0f s)",
              kJpsGrids, solvable, mismatches, disagreements, elapsed, kJpsBudgetSeconds)};
}

// Re-plan safety

constexpr int kSafetyCases = 50;

Verdict replan_safety() {
  const Scenario sc = scenario("reference.json");
  OccupancyGrid truth(sc.grid_geometry());
  rasterize_scene(truth, sc.scene);
  const auto grid = std::make_shared<const PlanningGrid>(inflate(truth, sc.config.planning.inflation_radius));
  const GridGeometry& g = truth.geometry();
  const double dt = sc.config.timing.dt;

  std::mt19937_64 rng(2002);
  std::uniform_real_distribution<double> ux(0.3, 9.7), uy(0.3, 8.2), uz(0.6, 2.4);
  auto free_point = [&] {
    for (;;) {
      const Vec3 p(ux(rng), uy(rng), uz(rng));
      if (grid->is_free(p)) return p;
    }
  };

  int samples = 0, unsafe_samples = 0, states = 0, occupied_states = 0, no_trajectory = 0, crossing = 0;
  for (int n = 0; n < kSafetyCases; ++n) {
    // Operator sketch: straight strokes between anchors, one sample per 0.2 m,
    // redrawn until it passes through blocked space.
    const Vec3 start = free_point();
    std::vector<Vec3> drawn;
    for (;;) {
      drawn.clear();
      Vec3 prev = start;
      const int anchors = 2 + static_cast<int>(rng() % 3);
      for (int a = 0; a < anchors; ++a) {
        const Vec3 next = free_point();
        const int steps = std::max(1, static_cast<int>(std::ceil((next - prev).norm() / 0.2)));
        for (int k = 1; k <= steps; ++k) drawn.push_back(prev + (next - prev) * (static_cast<double>(k) / steps));
        prev = next;
      }
      bool crosses = false;
      for (const Vec3& p : drawn) crosses |= !grid->is_free(p);
      if (crosses) break;
    }
    ++crossing;

    PlanRequest req;
    req.id = static_cast<std::uint64_t>(n + 1);
    req.task = TaskKind::MultiWaypoint;
    req.start = start;
    req.targets = drawn;
    req.grid = grid;
    const PlanOutcome out = compute_plan(req, sc.config.planning);
    if (!out.trajectory) {
      ++no_trajectory;
      continue;
    }
    const PolynomialTrajectory& traj = *out.trajectory;
    for (double t = 0.0; t <= traj.total_duration() + 1e-9; t += dt) {
      ++samples;
      unsafe_samples += !grid->is_free(traj.sample(t).position);
    }

    DroneState s0;
    s0.position = start;
    SimDrone drone(s0, sc.config.dynamics);
    drone.start_tracking(traj);
    for (int k = 0; drone.mode() == FlightMode::Tracking && k < 100000; ++k) {
      drone.step(dt);
      ++states;
      const auto c = g.index_of(drone.state().position);
      occupied_states += !c || truth.state(*c) == CellState::Occupied;
    }
  }
  return {unsafe_samples == 0 && occupied_states == 0 && no_trajectory == 0,
          fmt("%d crossing sketches, %d without trajectory, %d/%d sigma_r samples outside free space, "
              "%d/%d tracked states in occupied cells",
              crossing, no_trajectory, unsafe_samples, samples, occupied_states, states)};
}

// Minimum-snap correctness

constexpr int kSnapSets = 20;
constexpr double kKnotTol = 1e-6;
constexpr double kContinuityTol = 1e-4;
constexpr double kCostTol = 0.05;

Verdict min_snap() {
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  double worst_knot = 0.0, worst_cont = 0.0, worst_cost = 0.0;
  for (int n = 0; n < kSnapSets; ++n) {
    std::vector<Vec3> w(2 + rng() % 6);
    for (auto& p : w) p = Vec3(u(rng), u(rng), u(rng));
    auto durations = allocate_times(w, 1.0);
    for (double& d : durations) d = std::max(1e-3, std::round(d * 1e3) / 1e3);
    const auto traj = fit_min_snap(w, durations);
    for (std::size_t k = 0; k < w.size(); ++k) {
      worst_knot = std::max(worst_knot, (traj.sample(traj.knot_times()[k]).position - w[k]).norm());
    }
    worst_cont = std::max(worst_cont, oracle::fd_continuity_error(traj));
    const double ref = oracle::discretized_snap_cost(w, durations, 1e-3);
    const double rel = ref > 0 ? std::abs(traj.snap_cost() - ref) / ref : std::abs(traj.snap_cost());
    worst_cost = std::max(worst_cost, rel);
  }
  return {worst_knot < kKnotTol && worst_cont < kContinuityTol && worst_cost < kCostTol,
          fmt("%d sets: knot error %.2e m (< %.0e), continuity %.2e (< %.0e), snap cost deviation %.2f%% (< %.0f%%)",
              kSnapSets, worst_knot, kKnotTol, worst_cont, kContinuityTol, 100 * worst_cost, 100 * kCostTol)};
}

// Mapping fidelity

constexpr double kArenaArea = 85.0;
constexpr double kAreaTol = 0.02;

double wrap(double a) { return std::atan2(std::sin(a), std::cos(a)); }

// Flies a lawn-mower route in Velocity mode, turning toward each leg first.
double lawn_mower_area() {
  Mission m(scenario("arena85.json"), "lawnmower");
  m.set_mode(FlightMode::Velocity);
  std::vector<Vec3> route;
  const double ys[] = {1.0, 2.6, 4.2, 5.8, 7.4};
  for (int r = 0; r < 5; ++r) {
    const double x0 = r % 2 == 0 ? 1.0 : 9.0, x1 = r % 2 == 0 ? 9.0 : 1.0;
    route.push_back(Vec3(x0, ys[r], 1.0));
    route.push_back(Vec3(x1, ys[r], 1.0));
  }
  for (const Vec3& target : route) {
    for (int k = 0; k < 5000; ++k) {
      const Vec3 e = target - m.drone().state().position;
      if (e.norm() < 0.05) break;
      const double heading = std::atan2(e.y(), e.x());
      const double turn = wrap(heading - m.drone().state().yaw());
      const double yaw_rate = std::clamp(2.0 * turn, -1.0, 1.0);
      Vec3 v = Vec3::Zero();
      if (std::abs(turn) < 0.2 || e.head<2>().norm() < 0.1) v = e.normalized() * std::min(1.0, 1.5 * e.norm());
      m.set_velocity(v, e.head<2>().norm() < 0.1 ? 0.0 : yaw_rate);
      m.tick();
    }
  }
  // Closing spin in place.
  m.set_velocity(Vec3::Zero(), 0.8);
  for (int k = 0; k < 500; ++k) m.tick();
  return explored_area(m.grid());
}

Verdict mapping_fidelity() {
  const Scenario sc = scenario("arena85.json");
  const auto dims = sc.grid_geometry().dims();
  const bool dims_ok = dims[0] == 100 && dims[1] == 100 && dims[2] == 100;

  const double area = lawn_mower_area();
  const bool area_ok = std::abs(area - kArenaArea) <= kAreaTol * kArenaArea;

  // Fusion: robot scans first, then an operator headset looks behind it.
  Mission m(sc, "fusion");
  for (int k = 0; k < 10; ++k) m.tick();
  std::set<std::size_t> robot;
  for (std::size_t n = 0; n < m.grid().geometry().cell_count(); ++n) {
    if (m.grid().state(n) != CellState::Unknown) robot.insert(n);
  }
  PointCloud cloud;
  cloud.frame = Frame::H;
  cloud.source = CloudSource::Operator;
  for (int i = -5; i <= 5; ++i) {
    for (int j = -3; j <= 3; ++j) cloud.points.push_back(Vec3(3.5, 0.4 * i, 0.3 * j));
  }
  const auto headset = RigidTransform(Frame::H, Frame::W, Quat(Eigen::AngleAxisd(M_PI, Vec3::UnitZ())), Vec3(4.5, 4.2, 1.5));
  m.fuse_operator_cloud(cloud, headset);
  std::size_t operator_only = 0, robot_kept = 0;
  for (std::size_t n = 0; n < m.grid().geometry().cell_count(); ++n) {
    if (m.grid().state(n) == CellState::Unknown) continue;
    if (robot.count(n)) {
      ++robot_kept;
    } else {
      ++operator_only;
    }
  }
  const bool fusion_ok = !robot.empty() && robot_kept == robot.size() && operator_only > 0;

  return {dims_ok && area_ok && fusion_ok,
          fmt("dims %dx%dx%d, lawn-mower explored %.2f m^2 (%.0f +- %.0f%%), fused map: %zu robot cells kept, "
              "%zu operator-only cells",
              dims[0], dims[1], dims[2], area, kArenaArea, 100 * kAreaTol, robot_kept, operator_only)};
}

// Exploration gap

constexpr int kSeeds = 10;
constexpr double kBudget = 360.0;
constexpr int kMinWins = 9;
constexpr double kMinRatio = 1.25;

Verdict exploration_gap() {
  const Scenario sc = scenario("reference.json");
  auto final_area = [&](PolicyKind p, std::uint64_t seed) { return explored_series(run_policy(sc, p, kBudget, seed)).back().second; };
  std::vector<std::future<std::pair<double, double>>> jobs;
  for (int s = 0; s < kSeeds; ++s) {
    jobs.push_back(std::async(std::launch::async, [&, s] {
      const auto seed = static_cast<std::uint64_t>(s);
      return std::make_pair(final_area(PolicyKind::AutonomousFrontier, seed), final_area(PolicyKind::TeleopRandomWalk, seed));
    }));
  }
  int wins = 0;
  double auto_sum = 0.0, teleop_sum = 0.0;
  std::string per_seed;
  for (auto& j : jobs) {
    const auto [a, t] = j.get();
    wins += a > t;
    auto_sum += a;
    teleop_sum += t;
    per_seed += fmt(" %.1f/%.1f", a, t);
  }
  const double ratio = teleop_sum > 0 ? auto_sum / teleop_sum : 0.0;
  return {wins >= kMinWins && ratio >= kMinRatio,
          fmt("frontier wins %d/%d (need %d), mean %.2f vs %.2f m^2, ratio %.3f (need %.2f); per seed:%s", wins, kSeeds,
              kMinWins, auto_sum / kSeeds, teleop_sum / kSeeds, ratio, kMinRatio, per_seed.c_str())};
}

// Protocol

constexpr int kRoundTrips = 1000;
constexpr int kLatencyTrials = 1000;
constexpr double kLatencyLimitMs = 5.0;

Verdict protocol() {
  testsupport::MessageFactory f(4004);
  int exact = 0;
  for (int n = 0; n < kRoundTrips; ++n) {
    const TelemetryMessage m = f.any();
    const std::string line = encode(m);
    const TelemetryMessage back = decode(line);
    exact += back == m && encode(back) == line;
  }

  const Scenario sc = scenario("arena85.json");
  MissionRunner runner(sc, {true});
  runner.start();
  GatewayServer server(runner, {"127.0.0.1", 0, 0, {}});
  server.start();
  asio::io_context ioc;
  tcp::socket sock(ioc);
  sock.connect({asio::ip::make_address("127.0.0.1"), static_cast<unsigned short>(server.tcp_port())});
  sock.set_option(tcp::no_delay(true));
  asio::streambuf buf;
  auto read_line = [&] {
    asio::read_until(sock, buf, '\n');
    std::istream in(&buf);
    std::string line;
    std::getline(in, line);
    return decode(line);
  };
  read_line();

  const Vec3 goal = world_to_minimap(sc.config.minimap, {Vec3(5.5, 4.2, 1.0), Frame::W}).p;
  std::vector<double> ms;
  int lost = 0;
  for (int n = 1; n <= kLatencyTrials; ++n) {
    const std::string line = encode({MessageType::GoalCmd, static_cast<std::uint64_t>(n), 0.0,
                                     {{"goal", {goal.x(), goal.y(), goal.z()}}}});
    const auto t0 = Clock::now();
    asio::write(sock, asio::buffer(line));
    bool acked = false;
    while (!acked) {
      const TelemetryMessage m = read_line();
      if (m.type == MessageType::Ack && m.payload["ack"] == n) acked = true;
      if (m.type == MessageType::Error && m.payload["ref"] == n) break;
    }
    if (!acked) {
      ++lost;
      continue;
    }
    ms.push_back(1e3 * seconds_since(t0));
  }
  server.stop();
  runner.stop();
  std::sort(ms.begin(), ms.end());
  const double median = ms.empty() ? 1e9 : ms[ms.size() / 2];
  return {exact == kRoundTrips && lost == 0 && median < kLatencyLimitMs,
          fmt("%d/%d byte-exact round trips; GoalCmd->Ack median %.3f ms (< %.0f ms), p99 %.3f ms, %d unacked of %d",
              exact, kRoundTrips, median, kLatencyLimitMs, ms.empty() ? 0.0 : ms[ms.size() * 99 / 100], lost,
              kLatencyTrials)};
}

// Determinism

Verdict determinism() {
  const Scenario sc = scenario("reference.json");
  auto bytes = [&](PolicyKind p) {
    std::ostringstream out;
    run_policy(sc, p, 60.0, 7).write(out);
    return out.str();
  };
  bool same = true;
  std::size_t size = 0;
  for (PolicyKind p : {PolicyKind::AutonomousFrontier, PolicyKind::TeleopRandomWalk}) {
    const std::string a = bytes(p), b = bytes(p);
    same &= a == b && !a.empty();
    size += a.size();
  }
  return {same, fmt("two runs per policy, %zu log bytes each pass, identical: %s", size, same ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"jps_optimality", jps_optimality}, {"replan_safety", replan_safety},     {"min_snap", min_snap},
      {"mapping_fidelity", mapping_fidelity}, {"exploration_gap", exploration_gap}, {"protocol", protocol},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
