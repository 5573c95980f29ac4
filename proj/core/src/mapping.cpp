#include "mrnav/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace mrnav {

OccupancyGrid::OccupancyGrid(const GridGeometry& geometry, const LogOddsParams& params)
    : geometry_(geometry),
      params_(params),
      log_odds_(geometry.cell_count(), 0.0f),
      known_(geometry.cell_count(), 0),
      column_known_(static_cast<std::size_t>(geometry.dims()[0]) * geometry.dims()[1], 0),
      dirty_flag_(geometry.cell_count(), 0) {
  if (!(params.clamp_min <= params.occupied_threshold && params.occupied_threshold <= params.clamp_max)) {
    throw std::invalid_argument("occupancy threshold must lie inside the clamp range");
  }
}

CellState OccupancyGrid::state(std::size_t n) const {
  if (!known_[n]) return CellState::Unknown;
  return log_odds_[n] > params_.occupied_threshold ? CellState::Occupied : CellState::Free;
}

CellState OccupancyGrid::state(const GridIndex& c) const { return state(geometry_.linear(c)); }

std::size_t OccupancyGrid::occupied_cells() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < log_odds_.size(); ++i) {
    if (state(i) == CellState::Occupied) ++n;
  }
  return n;
}

void OccupancyGrid::update(std::size_t n, float delta) {
  const CellState before = state(n);
  log_odds_[n] = std::clamp(log_odds_[n] + delta, params_.clamp_min, params_.clamp_max);
  if (!known_[n]) {
    known_[n] = 1;
    ++known_count_;
    const std::size_t column = n % column_known_.size();
    if (column_known_[column]++ == 0) ++known_columns_;
  }
  if (state(n) != before) {
    ++version_;
    if (!dirty_flag_[n]) {
      dirty_flag_[n] = 1;
      dirty_.push_back(n);
    }
  }
}

std::vector<CellChange> OccupancyGrid::take_changes() {
  std::sort(dirty_.begin(), dirty_.end());
  std::vector<CellChange> out;
  out.reserve(dirty_.size());
  for (std::size_t n : dirty_) {
    dirty_flag_[n] = 0;
    out.push_back({geometry_.unlinear(n), state(n)});
  }
  dirty_.clear();
  return out;
}

void insert_cloud(OccupancyGrid& grid, const PointCloud& cloud, const Vec3& sensor_origin) {
  if (cloud.frame != Frame::W) {
    throw FrameMismatch("insert_cloud: cloud must be expressed in W, got " + std::string(to_string(cloud.frame)));
  }
  if (cloud.points.empty()) return;
  const GridGeometry& g = grid.geometry();
  if (!g.contains(sensor_origin)) throw OutOfBounds("insert_cloud: sensor origin outside the grid");

  std::vector<std::size_t> hits;
  std::vector<std::size_t> misses;
  hits.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) {
    if (!p.allFinite()) throw std::invalid_argument("insert_cloud: non-finite point");
    const auto end = g.index_of(p);
    walk_segment(g, sensor_origin, p, [&](const GridIndex& c) {
      if (end && c == *end) return false;
      misses.push_back(g.linear(c));
      return true;
    });
    if (end) hits.push_back(g.linear(*end));
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  std::sort(misses.begin(), misses.end());
  misses.erase(std::unique(misses.begin(), misses.end()), misses.end());
  std::vector<std::size_t> free_only;
  free_only.reserve(misses.size());
  std::set_difference(misses.begin(), misses.end(), hits.begin(), hits.end(), std::back_inserter(free_only));

  for (std::size_t n : free_only) grid.apply_miss(g.unlinear(n));
  for (std::size_t n : hits) grid.apply_hit(g.unlinear(n));
}

void merge_operator_cloud(OccupancyGrid& grid, const PointCloud& cloud, const RigidTransform& h_to_w) {
  if (cloud.frame != Frame::H) {
    throw FrameMismatch("merge_operator_cloud: operator cloud must be in H, got " +
                        std::string(to_string(cloud.frame)));
  }
  if (h_to_w.from() != Frame::H || h_to_w.to() != Frame::W) {
    throw FrameMismatch("merge_operator_cloud: transform must map H -> W");
  }
  PointCloud world;
  world.frame = Frame::W;
  world.source = CloudSource::Operator;
  world.stamp = cloud.stamp;
  world.points.reserve(cloud.points.size());
  for (const Vec3& p : cloud.points) world.points.push_back(h_to_w.apply(p));
  insert_cloud(grid, world, h_to_w.translation());
}

CellState cell_at(const OccupancyGrid& grid, const Vec3& p) {
  const auto c = grid.geometry().index_of(p);
  if (!c) return CellState::Unknown;
  return grid.state(*c);
}

double explored_area(const OccupancyGrid& grid) {
  const double r = grid.geometry().resolution();
  return static_cast<double>(grid.known_columns()) * r * r;
}

PlanningGrid::PlanningGrid(const GridGeometry& geometry, std::vector<std::uint8_t> blocked)
    : geometry_(geometry), blocked_(std::move(blocked)) {
  if (blocked_.size() != geometry_.cell_count()) {
    throw std::invalid_argument("planning grid size does not match geometry");
  }
}

bool PlanningGrid::is_free(const Vec3& p) const {
  const auto c = geometry_.index_of(p);
  return c && free(*c);
}

std::size_t PlanningGrid::blocked_count() const {
  return static_cast<std::size_t>(std::count(blocked_.begin(), blocked_.end(), std::uint8_t{1}));
}

PlanningGrid inflate(const OccupancyGrid& grid, double radius) {
  if (!(radius >= 0.0)) throw std::invalid_argument("inflate: radius must be >= 0");
  const GridGeometry& g = grid.geometry();
  const double res = g.resolution();
  const int reach = static_cast<int>(std::floor(radius / res + 1e-9));
  const double r2 = (radius / res) * (radius / res) + 1e-9;

  std::vector<GridIndex> stencil;
  for (int dk = -reach; dk <= reach; ++dk) {
    for (int dj = -reach; dj <= reach; ++dj) {
      for (int di = -reach; di <= reach; ++di) {
        if (static_cast<double>(di * di + dj * dj + dk * dk) <= r2) stencil.push_back({di, dj, dk});
      }
    }
  }

  std::vector<std::uint8_t> blocked(g.cell_count(), 0);
  for (std::size_t n = 0; n < blocked.size(); ++n) {
    const CellState s = grid.state(n);
    if (s == CellState::Unknown) {
      blocked[n] = 1;
    } else if (s == CellState::Occupied) {
      const GridIndex c = g.unlinear(n);
      for (const GridIndex& off : stencil) {
        const GridIndex q = c + off;
        if (g.contains(q)) blocked[g.linear(q)] = 1;
      }
    }
  }
  return {g, std::move(blocked)};
}

SurfaceMesh extract_mesh(const OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  const auto& dims = g.dims();
  const auto corner_key = [&](int ci, int cj, int ck) {
    return (static_cast<std::uint64_t>(ck) * (dims[1] + 1) + cj) * (dims[0] + 1) + ci;
  };
  SurfaceMesh mesh;
  std::unordered_map<std::uint64_t, std::uint32_t> welded;
  const auto vertex = [&](int ci, int cj, int ck) {
    const auto [it, inserted] = welded.try_emplace(corner_key(ci, cj, ck), static_cast<std::uint32_t>(mesh.vertices.size()));
    if (inserted) mesh.vertices.push_back(g.origin() + g.resolution() * Vec3(ci, cj, ck));
    return it->second;
  };

  for (std::size_t n = 0; n < g.cell_count(); ++n) {
    if (grid.state(n) != CellState::Occupied) continue;
    const GridIndex c = g.unlinear(n);
    const int cell[3] = {c.i, c.j, c.k};
    for (int axis = 0; axis < 3; ++axis) {
      for (int sign : {-1, 1}) {
        int nb[3] = {cell[0], cell[1], cell[2]};
        nb[axis] += sign;
        const GridIndex neighbor{nb[0], nb[1], nb[2]};
        if (g.contains(neighbor) && grid.state(neighbor) == CellState::Occupied) continue;

        const int u = (axis + 1) % 3;
        const int v = (axis + 2) % 3;
        int base[3] = {cell[0], cell[1], cell[2]};
        if (sign > 0) base[axis] += 1;
        std::array<std::uint32_t, 4> quad{};
        const int du[4] = {0, 1, 1, 0};
        const int dv[4] = {0, 0, 1, 1};
        for (int q = 0; q < 4; ++q) {
          int p[3] = {base[0], base[1], base[2]};
          p[u] += du[q];
          p[v] += dv[q];
          quad[q] = vertex(p[0], p[1], p[2]);
        }
        // e_u x e_v = e_axis, so this winding faces +axis; flip for -axis.
        if (sign > 0) {
          mesh.triangles.push_back({quad[0], quad[1], quad[2]});
          mesh.triangles.push_back({quad[0], quad[2], quad[3]});
        } else {
          mesh.triangles.push_back({quad[0], quad[2], quad[1]});
          mesh.triangles.push_back({quad[0], quad[3], quad[2]});
        }
      }
    }
  }
  return mesh;
}

void write_obj(std::ostream& out, const SurfaceMesh& mesh) {
  out << "# mrnav surface mesh\n";
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

GridSnapshot snapshot_states(const OccupancyGrid& grid) {
  GridSnapshot snap{grid.geometry(), {}};
  snap.states.resize(grid.geometry().cell_count());
  for (std::size_t n = 0; n < snap.states.size(); ++n) snap.states[n] = grid.state(n);
  return snap;
}

namespace {

char state_char(CellState s) {
  switch (s) {
    case CellState::Unknown: return 'U';
    case CellState::Free: return 'F';
    case CellState::Occupied: return 'O';
  }
  return 'U';
}

}  // namespace

void write_grid_rle(std::ostream& out, const OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  const auto old_precision = out.precision(17);
  out << "mrnav-grid 1\n";
  out << "origin " << g.origin().x() << ' ' << g.origin().y() << ' ' << g.origin().z() << '\n';
  out << "resolution " << g.resolution() << '\n';
  out << "dims " << g.dims()[0] << ' ' << g.dims()[1] << ' ' << g.dims()[2] << '\n';
  std::size_t n = 0;
  const std::size_t total = g.cell_count();
  while (n < total) {
    const CellState s = grid.state(n);
    std::size_t run = 1;
    while (n + run < total && grid.state(n + run) == s) ++run;
    out << state_char(s) << ' ' << run << '\n';
    n += run;
  }
  out.precision(old_precision);
}

GridSnapshot read_grid_rle(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "mrnav-grid" || version != 1) {
    throw std::runtime_error("read_grid_rle: bad header");
  }
  Vec3 origin;
  double resolution = 0.0;
  std::array<int, 3> dims{};
  std::string key;
  in >> key >> origin.x() >> origin.y() >> origin.z();
  if (key != "origin") throw std::runtime_error("read_grid_rle: expected origin");
  in >> key >> resolution;
  if (key != "resolution") throw std::runtime_error("read_grid_rle: expected resolution");
  in >> key >> dims[0] >> dims[1] >> dims[2];
  if (key != "dims" || !in) throw std::runtime_error("read_grid_rle: expected dims");
  GridSnapshot snap{GridGeometry(origin, resolution, dims), {}};
  snap.states.reserve(snap.geometry.cell_count());
  char c = 0;
  std::size_t run = 0;
  while (snap.states.size() < snap.geometry.cell_count() && (in >> c >> run)) {
    CellState s;
    switch (c) {
      case 'U': s = CellState::Unknown; break;
      case 'F': s = CellState::Free; break;
      case 'O': s = CellState::Occupied; break;
      default: throw std::runtime_error("read_grid_rle: bad state tag");
    }
    if (snap.states.size() + run > snap.geometry.cell_count()) throw std::runtime_error("read_grid_rle: run overflow");
    snap.states.insert(snap.states.end(), run, s);
  }
  if (snap.states.size() != snap.geometry.cell_count()) throw std::runtime_error("read_grid_rle: truncated");
  return snap;
}

}  // namespace mrnav
