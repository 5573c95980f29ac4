#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace mrnav::detail {

struct DdaState {
  GridIndex cell;
  GridIndex last;
  std::array<int, 3> step{};
  std::array<double, 3> t_max{};
  std::array<double, 3> t_delta{};
  double t_end = 0.0;
  long budget = 0;
};

inline std::optional<DdaState> dda_init(const GridGeometry& g, const Vec3& a, const Vec3& b) {
  const auto clip = clip_segment(g, a, b);
  if (!clip) return std::nullopt;
  const auto [t0, t1] = *clip;
  const Vec3 d = b - a;
  const Vec3 entry = a + t0 * d;
  const Vec3 exit = a + t1 * d;
  const auto& dims = g.dims();
  auto clamp_cell = [&](GridIndex c) {
    c.i = std::clamp(c.i, 0, dims[0] - 1);
    c.j = std::clamp(c.j, 0, dims[1] - 1);
    c.k = std::clamp(c.k, 0, dims[2] - 1);
    return c;
  };
  DdaState s;
  s.cell = clamp_cell(g.floor_index(entry));
  s.last = clamp_cell(g.floor_index(exit));
  s.t_end = t1;
  const double res = g.resolution();
  const int cell_arr[3] = {s.cell.i, s.cell.j, s.cell.k};
  for (int ax = 0; ax < 3; ++ax) {
    if (d[ax] > 0.0) {
      s.step[ax] = 1;
      const double boundary = g.origin()[ax] + (cell_arr[ax] + 1) * res;
      s.t_max[ax] = (boundary - a[ax]) / d[ax];
      s.t_delta[ax] = res / d[ax];
    } else if (d[ax] < 0.0) {
      s.step[ax] = -1;
      const double boundary = g.origin()[ax] + cell_arr[ax] * res;
      s.t_max[ax] = (boundary - a[ax]) / d[ax];
      s.t_delta[ax] = -res / d[ax];
    } else {
      s.step[ax] = 0;
      s.t_max[ax] = std::numeric_limits<double>::infinity();
      s.t_delta[ax] = std::numeric_limits<double>::infinity();
    }
  }
  s.budget = std::abs(s.last.i - s.cell.i) + std::abs(s.last.j - s.cell.j) + std::abs(s.last.k - s.cell.k);
  return s;
}

inline int& axis_ref(GridIndex& c, int ax) { return ax == 0 ? c.i : (ax == 1 ? c.j : c.k); }

}  // namespace mrnav::detail

namespace mrnav {

template <typename Visit>
bool walk_segment(const GridGeometry& g, const Vec3& a, const Vec3& b, Visit&& visit) {
  auto init = detail::dda_init(g, a, b);
  if (!init) return false;
  detail::DdaState s = *init;
  const bool end_inside = g.contains(b);
  for (long n = 0;; ++n) {
    if (!visit(s.cell)) return false;
    if (s.cell == s.last) return end_inside;
    if (n >= s.budget) return false;
    int ax = 0;
    if (s.t_max[1] < s.t_max[ax]) ax = 1;
    if (s.t_max[2] < s.t_max[ax]) ax = 2;
    if (s.t_max[ax] > s.t_end) return false;
    detail::axis_ref(s.cell, ax) += s.step[ax];
    s.t_max[ax] += s.t_delta[ax];
    if (!g.contains(s.cell)) return false;
  }
}

template <typename Visit>
bool walk_segment_conservative(const GridGeometry& g, const Vec3& a, const Vec3& b, Visit&& visit) {
  auto init = detail::dda_init(g, a, b);
  if (!init) return false;
  detail::DdaState s = *init;
  const bool end_inside = g.contains(b);
  constexpr double kTie = 1e-9;
  for (long n = 0;; ++n) {
    if (!visit(s.cell)) return false;
    if (s.cell == s.last) return end_inside;
    if (n >= s.budget + 3) return false;
    const double t_min = std::min({s.t_max[0], s.t_max[1], s.t_max[2]});
    if (t_min > s.t_end + kTie) return false;
    int tied[3];
    int n_tied = 0;
    for (int ax = 0; ax < 3; ++ax) {
      if (s.step[ax] != 0 && s.t_max[ax] - t_min <= kTie) tied[n_tied++] = ax;
    }
    // Passing through an edge or corner: every proper subset of the tied
    // steps lands in a cell the segment touches.
    for (int mask = 1; mask < (1 << n_tied) - 1; ++mask) {
      GridIndex side = s.cell;
      for (int q = 0; q < n_tied; ++q) {
        if (mask & (1 << q)) detail::axis_ref(side, tied[q]) += s.step[tied[q]];
      }
      if (g.contains(side) && !visit(side)) return false;
    }
    for (int q = 0; q < n_tied; ++q) {
      detail::axis_ref(s.cell, tied[q]) += s.step[tied[q]];
      s.t_max[tied[q]] += s.t_delta[tied[q]];
    }
    if (!g.contains(s.cell)) return false;
  }
}

}  // namespace mrnav
