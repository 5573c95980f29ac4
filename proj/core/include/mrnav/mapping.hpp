#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mrnav/geom.hpp"
#include "mrnav/grid.hpp"

namespace mrnav {

enum class CellState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

enum class CloudSource { Robot, Operator };

struct PointCloud {
  std::vector<Vec3> points;
  Frame frame = Frame::W;
  CloudSource source = CloudSource::Robot;
  double stamp = 0.0;
};

/// Log-odds evidence model. Octomap-style defaults.
struct LogOddsParams {
  float hit = 0.85f;
  float miss = -0.4f;
  float clamp_min = -2.0f;
  float clamp_max = 3.5f;
  float occupied_threshold = 0.0f;
};

struct CellChange {
  GridIndex index;
  CellState state;
  bool operator==(const CellChange&) const = default;
};

/// Dense voxel map with per-cell log-odds and a known mask.
/// Cells never return to unknown once observed.
class OccupancyGrid {
 public:
  explicit OccupancyGrid(const GridGeometry& geometry, const LogOddsParams& params = {});

  const GridGeometry& geometry() const noexcept { return geometry_; }
  const LogOddsParams& params() const noexcept { return params_; }

  CellState state(const GridIndex& c) const;
  CellState state(std::size_t linear) const;
  float log_odds(const GridIndex& c) const { return log_odds_[geometry_.linear(c)]; }
  bool known(const GridIndex& c) const { return known_[geometry_.linear(c)] != 0; }

  void apply_hit(const GridIndex& c) { update(geometry_.linear(c), params_.hit); }
  void apply_miss(const GridIndex& c) { update(geometry_.linear(c), params_.miss); }

  std::size_t known_cells() const noexcept { return known_count_; }
  /// Number of (i, j) columns holding at least one known cell.
  std::size_t known_columns() const noexcept { return known_columns_; }
  std::size_t occupied_cells() const;

  /// Monotone counter bumped by every state change.
  std::uint64_t version() const noexcept { return version_; }

  /// Cells whose classification changed since the last call, in linear order.
  std::vector<CellChange> take_changes();
  bool has_changes() const noexcept { return !dirty_.empty(); }

 private:
  void update(std::size_t n, float delta);

  GridGeometry geometry_;
  LogOddsParams params_;
  std::vector<float> log_odds_;
  std::vector<std::uint8_t> known_;
  std::vector<std::uint32_t> column_known_;
  std::size_t known_count_ = 0;
  std::size_t known_columns_ = 0;
  std::uint64_t version_ = 0;
  std::vector<std::uint8_t> dirty_flag_;
  std::vector<std::size_t> dirty_;
};

/// Ray-casts every point from `sensor_origin`: the endpoint cell gets a hit,
/// cells crossed on the way get a miss (once per scan; hits win). Rays are
/// truncated at the grid boundary. The cloud must already be in frame W.
void insert_cloud(OccupancyGrid& grid, const PointCloud& cloud, const Vec3& sensor_origin);

/// Transforms an operator (H-frame) cloud into W and fuses it like a robot
/// scan, with the headset position as the ray origin.
void merge_operator_cloud(OccupancyGrid& grid, const PointCloud& cloud, const RigidTransform& h_to_w);

CellState cell_at(const OccupancyGrid& grid, const Vec3& p);

/// Explored floor area in m^2: known columns times the cell footprint.
double explored_area(const OccupancyGrid& grid);

/// Binary traversability map used by the planner. Unknown counts as blocked.
class PlanningGrid {
 public:
  PlanningGrid(const GridGeometry& geometry, std::vector<std::uint8_t> blocked);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  bool blocked(const GridIndex& c) const {
    return !geometry_.contains(c) || blocked_[geometry_.linear(c)] != 0;
  }
  bool free(const GridIndex& c) const { return !blocked(c); }
  bool is_free(const Vec3& p) const;
  std::size_t blocked_count() const;
  const std::vector<std::uint8_t>& cells() const noexcept { return blocked_; }

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> blocked_;
};

/// Blocks every cell whose center lies within `radius` of an occupied cell
/// center, plus every unknown cell.
PlanningGrid inflate(const OccupancyGrid& grid, double radius);

struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

/// Blocky surface: two triangles per occupied-cell face that borders a
/// non-occupied cell (or the grid edge). Shared corners are welded.
SurfaceMesh extract_mesh(const OccupancyGrid& grid);

/// Wavefront OBJ: `v x y z` lines then 1-based `f a b c` lines.
void write_obj(std::ostream& out, const SurfaceMesh& mesh);

/// Geometry + per-cell states, as stored in a grid export.
struct GridSnapshot {
  GridGeometry geometry;
  std::vector<CellState> states;
};

GridSnapshot snapshot_states(const OccupancyGrid& grid);

/// Text export: header (origin, resolution, dims) then run-length encoded
/// states, one `<U|F|O> <count>` run per line.
void write_grid_rle(std::ostream& out, const OccupancyGrid& grid);
GridSnapshot read_grid_rle(std::istream& in);

}  // namespace mrnav
