#include "mrnav/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace mrnav {

GridGeometry::GridGeometry(const Vec3& origin, double resolution, const std::array<int, 3>& dims)
    : origin_(origin), resolution_(resolution), dims_(dims) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("grid resolution must be positive");
  }
  for (int d : dims) {
    if (d <= 0) throw std::invalid_argument("grid dims must be positive");
  }
  if (!origin.allFinite()) throw std::invalid_argument("grid origin must be finite");
}

GridGeometry GridGeometry::centered(const Vec3& center, const Vec3& size, double resolution) {
  std::array<int, 3> dims{};
  for (int ax = 0; ax < 3; ++ax) {
    dims[ax] = static_cast<int>(std::lround(size[ax] / resolution));
  }
  const Vec3 extent(dims[0] * resolution, dims[1] * resolution, dims[2] * resolution);
  return {center - 0.5 * extent, resolution, dims};
}

Vec3 GridGeometry::max_corner() const {
  return origin_ + resolution_ * Vec3(dims_[0], dims_[1], dims_[2]);
}

bool GridGeometry::contains(const Vec3& p) const {
  const Vec3 hi = max_corner();
  for (int ax = 0; ax < 3; ++ax) {
    if (!(p[ax] >= origin_[ax] && p[ax] < hi[ax])) return false;
  }
  return true;
}

GridIndex GridGeometry::floor_index(const Vec3& p) const {
  const Vec3 q = (p - origin_) / resolution_;
  return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
          static_cast<int>(std::floor(q.z()))};
}

std::optional<GridIndex> GridGeometry::index_of(const Vec3& p) const {
  if (!p.allFinite()) return std::nullopt;
  const GridIndex c = floor_index(p);
  if (!contains(c)) return std::nullopt;
  return c;
}

Vec3 GridGeometry::center_of(const GridIndex& c) const {
  return origin_ + resolution_ * Vec3(c.i + 0.5, c.j + 0.5, c.k + 0.5);
}

GridIndex GridGeometry::unlinear(std::size_t n) const noexcept {
  const auto nx = static_cast<std::size_t>(dims_[0]);
  const auto ny = static_cast<std::size_t>(dims_[1]);
  return {static_cast<int>(n % nx), static_cast<int>((n / nx) % ny), static_cast<int>(n / (nx * ny))};
}

std::optional<std::pair<double, double>> clip_segment(const GridGeometry& g, const Vec3& a, const Vec3& b) {
  const Vec3 lo = g.origin();
  const Vec3 hi = g.max_corner();
  const Vec3 d = b - a;
  double t0 = 0.0;
  double t1 = 1.0;
  for (int ax = 0; ax < 3; ++ax) {
    if (d[ax] == 0.0) {
      if (a[ax] < lo[ax] || a[ax] >= hi[ax]) return std::nullopt;
      continue;
    }
    double ta = (lo[ax] - a[ax]) / d[ax];
    double tb = (hi[ax] - a[ax]) / d[ax];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

}  // namespace mrnav
