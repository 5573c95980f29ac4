#include <random>

#include <benchmark/benchmark.h>

#include "mrnav/mapping.hpp"
#include "mrnav/mission.hpp"
#include "mrnav/planner.hpp"
#include "mrnav/sim.hpp"
#include "mrnav/trajectory.hpp"

using namespace mrnav;

namespace {

PlanningGrid random_grid(int n, double density, std::uint64_t seed) {
  GridGeometry g(Vec3::Zero(), 1.0, {n, n, n});
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution block(density);
  std::vector<std::uint8_t> cells(g.cell_count());
  for (auto& c : cells) c = block(rng) ? 1 : 0;
  cells[g.linear({0, 0, 0})] = 0;
  cells[g.linear({n - 1, n - 1, n - 1})] = 0;
  return {g, std::move(cells)};
}

void BM_PlanJps(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PlanningGrid grid = random_grid(n, 0.2, 7);
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(search_jps(grid, {0, 0, 0}, {n - 1, n - 1, n - 1}));
    } catch (const NoPath&) {
    }
  }
}
BENCHMARK(BM_PlanJps)->Arg(20)->Arg(35)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_PlanAstar(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PlanningGrid grid = random_grid(n, 0.2, 7);
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(search_astar(grid, {0, 0, 0}, {n - 1, n - 1, n - 1}));
    } catch (const NoPath&) {
    }
  }
}
BENCHMARK(BM_PlanAstar)->Arg(20)->Arg(35)->Arg(50)->Unit(benchmark::kMillisecond);

// Inflated ground-truth map of the reference scenario, cross-room query.
const PlanningGrid& room_grid() {
  static const PlanningGrid grid = [] {
    const Scenario sc = load_scenario(MRNAV_SCENARIO_DIR "/reference.json");
    OccupancyGrid truth(sc.grid_geometry());
    rasterize_scene(truth, sc.scene);
    return inflate(truth, sc.config.planning.inflation_radius);
  }();
  return grid;
}

template <GridPlan (*Search)(const PlanningGrid&, const GridIndex&, const GridIndex&)>
void BM_PlanRooms(benchmark::State& state) {
  const PlanningGrid& grid = room_grid();
  const GridIndex s = *grid.geometry().index_of(Vec3(1.0, 1.0, 1.0));
  const GridIndex g = *grid.geometry().index_of(Vec3(9.0, 7.5, 2.0));
  for (auto _ : state) benchmark::DoNotOptimize(Search(grid, s, g));
}
BENCHMARK_TEMPLATE(BM_PlanRooms, search_jps)->Name("BM_PlanJpsRooms")->Unit(benchmark::kMillisecond);
BENCHMARK_TEMPLATE(BM_PlanRooms, search_astar)->Name("BM_PlanAstarRooms")->Unit(benchmark::kMillisecond);

void BM_InsertCloud(benchmark::State& state) {
  Scene scene;
  scene.bounds = {Vec3(-10, -10, -1), Vec3(10, 10, 5)};
  scene.boxes.push_back({Vec3(3, -10, -1), Vec3(3.2, 10, 5)});
  scene.boxes.push_back({Vec3(-10, -10, -1), Vec3(10, 10, 0)});
  const DepthSensorConfig cfg;
  const RigidTransform pose = RigidTransform::translation(Frame::B, Frame::W, Vec3(0, 0, 1));
  const PointCloud body = sense(scene, pose, cfg);
  PointCloud world;
  for (const Vec3& p : body.points) world.points.push_back(pose.apply(p));
  OccupancyGrid grid(GridGeometry::centered(Vec3::Zero(), Vec3::Constant(20.0), 0.2));
  for (auto _ : state) insert_cloud(grid, world, Vec3(0, 0, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(world.points.size()));
}
BENCHMARK(BM_InsertCloud)->Unit(benchmark::kMicrosecond);

void BM_FitMinSnap(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < state.range(0); ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const auto durations = allocate_times(pts, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(fit_min_snap(pts, durations));
}
BENCHMARK(BM_FitMinSnap)->Arg(3)->Arg(10)->Arg(40)->Unit(benchmark::kMicrosecond);

void BM_Inflate(benchmark::State& state) {
  OccupancyGrid grid(GridGeometry::centered(Vec3::Zero(), Vec3::Constant(20.0), 0.2));
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> idx(0, 99);
  for (int n = 0; n < 20000; ++n) grid.apply_hit({idx(rng), idx(rng), idx(rng)});
  for (auto _ : state) benchmark::DoNotOptimize(inflate(grid, 0.3));
}
BENCHMARK(BM_Inflate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
