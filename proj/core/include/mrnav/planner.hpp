#pragma once

#include <cstddef>
#include <vector>

#include "mrnav/grid.hpp"
#include "mrnav/mapping.hpp"

namespace mrnav {

/// Move tally on the 26-connected lattice. The path length in cells is
/// axis + face*sqrt(2) + corner*sqrt(3); keeping the counts makes costs from
/// different search engines bit-identical whenever the moves agree.
struct MoveCounts {
  long axis = 0;
  long face = 0;
  long corner = 0;

  double length() const;
  MoveCounts& add(int rank, long steps);
  bool operator==(const MoveCounts&) const = default;
};

/// Cost of a single lattice step of the given rank (1 = axis, 2 = face
/// diagonal, 3 = corner diagonal), in cells.
double step_cost(int rank);

struct GridPlan {
  std::vector<GridIndex> cells;  // turning / jump points, start and goal included
  MoveCounts moves;
  std::size_t expansions = 0;
};

struct PlannedPath {
  std::vector<Vec3> waypoints;  // frame W, cell centers
  double cost = 0.0;            // meters
};

/// A diagonal move is legal only if every cell of the unit box it spans is
/// free (no corner cutting).
bool move_allowed(const PlanningGrid& grid, const GridIndex& from, const GridIndex& dir);

/// Jump Point Search on the 26-connected lattice. Optimal under the move
/// metric above. Throws StartOccupied / NoPath.
GridPlan search_jps(const PlanningGrid& grid, const GridIndex& start, const GridIndex& goal);
/// Plain A* with the same metric and Euclidean heuristic.
GridPlan search_astar(const PlanningGrid& grid, const GridIndex& start, const GridIndex& goal);

PlannedPath plan_jps(const PlanningGrid& grid, const Vec3& start, const Vec3& goal);
PlannedPath plan_astar(const PlanningGrid& grid, const Vec3& start, const Vec3& goal);

/// Closest free cell to `p` (integer cell distance, ties by (i,j,k)), or `p`
/// itself when its cell is already free. Throws NoFreeCell beyond max_radius.
Vec3 nearest_free_pose(const PlanningGrid& grid, const Vec3& p, double max_radius);

/// True when every cell the segment touches is free.
bool segment_free(const PlanningGrid& grid, const Vec3& a, const Vec3& b);

/// Drops each interior waypoint whose neighbours see each other.
PlannedPath shortcut(const PlannedPath& path, const PlanningGrid& grid);

double polyline_length(const std::vector<Vec3>& points);

}  // namespace mrnav
