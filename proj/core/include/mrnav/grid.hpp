#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "mrnav/geom.hpp"

namespace mrnav {

struct GridIndex {
  int i = 0;
  int j = 0;
  int k = 0;

  friend auto operator<=>(const GridIndex&, const GridIndex&) = default;
  GridIndex operator+(const GridIndex& o) const { return {i + o.i, j + o.j, k + o.k}; }
  GridIndex operator-(const GridIndex& o) const { return {i - o.i, j - o.j, k - o.k}; }
};

/// Axis-aligned voxel lattice: cell (i,j,k) covers
/// [origin + (i,j,k) * res, origin + (i+1,j+1,k+1) * res).
class GridGeometry {
 public:
  GridGeometry(const Vec3& origin, double resolution, const std::array<int, 3>& dims);

  /// Lattice of `size` meters per axis centered on `center`.
  static GridGeometry centered(const Vec3& center, const Vec3& size, double resolution);

  const Vec3& origin() const noexcept { return origin_; }
  double resolution() const noexcept { return resolution_; }
  const std::array<int, 3>& dims() const noexcept { return dims_; }
  std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }
  Vec3 max_corner() const;

  bool contains(const GridIndex& c) const noexcept {
    return c.i >= 0 && c.j >= 0 && c.k >= 0 && c.i < dims_[0] && c.j < dims_[1] && c.k < dims_[2];
  }
  bool contains(const Vec3& p) const;

  /// Cell holding `p`, unclamped (may lie outside the lattice).
  GridIndex floor_index(const Vec3& p) const;
  std::optional<GridIndex> index_of(const Vec3& p) const;
  Vec3 center_of(const GridIndex& c) const;

  std::size_t linear(const GridIndex& c) const noexcept {
    return (static_cast<std::size_t>(c.k) * dims_[1] + c.j) * dims_[0] + c.i;
  }
  GridIndex unlinear(std::size_t n) const noexcept;

  bool operator==(const GridGeometry&) const = default;

 private:
  Vec3 origin_;
  double resolution_;
  std::array<int, 3> dims_;
};

/// Parametric clip of segment a->b against the lattice box. Returns [t0, t1]
/// in segment units, or nullopt if the segment misses the box.
std::optional<std::pair<double, double>> clip_segment(const GridGeometry& g, const Vec3& a, const Vec3& b);

/// 3D DDA (Amanatides & Woo) from the cell of `a` towards the cell of `b`,
/// clipped to the lattice. `visit(GridIndex)` is called once per traversed
/// cell in order; returning false stops the walk. Returns true if the walk
/// reached the cell containing `b`.
template <typename Visit>
bool walk_segment(const GridGeometry& g, const Vec3& a, const Vec3& b, Visit&& visit);

/// Like walk_segment but also visits every cell the segment touches when it
/// passes exactly through an edge or corner (supercover). Used for
/// line-of-sight checks where touching counts as entering.
template <typename Visit>
bool walk_segment_conservative(const GridGeometry& g, const Vec3& a, const Vec3& b, Visit&& visit);

}  // namespace mrnav

#include "mrnav/grid_impl.hpp"
