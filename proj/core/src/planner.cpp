#include "mrnav/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>

namespace mrnav {

double step_cost(int rank) {
  static const double kCost[4] = {0.0, 1.0, std::sqrt(2.0), std::sqrt(3.0)};
  return kCost[rank];
}

double MoveCounts::length() const {
  return static_cast<double>(axis) * step_cost(1) + static_cast<double>(face) * step_cost(2) +
         static_cast<double>(corner) * step_cost(3);
}

MoveCounts& MoveCounts::add(int rank, long steps) {
  (rank == 1 ? axis : rank == 2 ? face : corner) += steps;
  return *this;
}

namespace {

// Directions are encoded as (dx+1)*9 + (dy+1)*3 + (dz+1); code 13 is "no move"
// and doubles as the incoming direction of the start node. Neighbourhood masks
// use the same code as bit position.
constexpr int kNone = 13;

struct Dir {
  int d[3];
  int rank;
};

constexpr int code_of(int dx, int dy, int dz) { return (dx + 1) * 9 + (dy + 1) * 3 + (dz + 1); }

struct ForcedRule {
  int dir;
  std::uint32_t legal;                      // cells the move x -> x+dir needs free
  std::vector<std::uint32_t> alternatives;  // each: cells a dominating detour needs free
};

struct DirTables {
  std::array<Dir, 27> dirs{};
  std::array<std::uint32_t, 27> box{};
  std::array<std::vector<int>, 27> canonical;  // C(d), d first
  std::array<std::vector<int>, 27> sub;        // C(d) without d
  std::array<std::vector<ForcedRule>, 27> forced;
  std::vector<int> all;

  DirTables();
  std::uint32_t forced_mask(std::uint32_t blocked, int d) const;
};

bool in_nbhd(const int o[3]) {
  return std::abs(o[0]) <= 1 && std::abs(o[1]) <= 1 && std::abs(o[2]) <= 1;
}

DirTables::DirTables() {
  for (int c = 0; c < 27; ++c) {
    Dir& dir = dirs[c];
    dir.d[0] = c / 9 - 1;
    dir.d[1] = (c / 3) % 3 - 1;
    dir.d[2] = c % 3 - 1;
    dir.rank = std::abs(dir.d[0]) + std::abs(dir.d[1]) + std::abs(dir.d[2]);
    if (c != kNone) all.push_back(c);
  }
  const auto is_sub = [&](int e, int d) {
    for (int a = 0; a < 3; ++a) {
      if (dirs[e].d[a] != 0 && dirs[e].d[a] != dirs[d].d[a]) return false;
    }
    return true;
  };
  // Cells of the unit box swept by moving from offset `o` along `f`.
  const auto box_from = [&](const int o[3], int f) -> std::optional<std::uint32_t> {
    std::uint32_t mask = 0;
    for (int s : all) {
      if (!is_sub(s, f)) continue;
      const int q[3] = {o[0] + dirs[s].d[0], o[1] + dirs[s].d[1], o[2] + dirs[s].d[2]};
      if (!in_nbhd(q)) return std::nullopt;
      mask |= 1u << code_of(q[0], q[1], q[2]);
    }
    return mask;
  };
  const int zero[3] = {0, 0, 0};
  for (int d : all) {
    box[d] = *box_from(zero, d);
    canonical[d].push_back(d);
    for (int e : all) {
      if (e != d && is_sub(e, d)) {
        canonical[d].push_back(e);
        sub[d].push_back(e);
      }
    }
  }
  canonical[kNone] = all;

  // A neighbour m = x+e with e outside C(d) is forced unless some local detour
  // from the parent p = x-d reaches m without x and either is strictly
  // shorter or equally long and starts with a higher-rank move. Such a detour
  // lets any optimal path be rewritten so that non-canonical turns only
  // happen at forced cells.
  for (int d : all) {
    const int p[3] = {-dirs[d].d[0], -dirs[d].d[1], -dirs[d].d[2]};
    const double direct = step_cost(dirs[d].rank);
    for (int e : all) {
      if (is_sub(e, d)) continue;
      const int* m = dirs[e].d;
      if (m[0] == p[0] && m[1] == p[1] && m[2] == p[2]) continue;  // straight back to the parent
      ForcedRule rule{e, box[e], {}};
      const double via_x = direct + step_cost(dirs[e].rank);

      const int single[3] = {m[0] - p[0], m[1] - p[1], m[2] - p[2]};
      if (in_nbhd(single)) {
        if (auto mask = box_from(p, code_of(single[0], single[1], single[2]))) rule.alternatives.push_back(*mask);
      }
      for (int f : all) {
        const int q[3] = {p[0] + dirs[f].d[0], p[1] + dirs[f].d[1], p[2] + dirs[f].d[2]};
        if (!in_nbhd(q) || (q[0] == 0 && q[1] == 0 && q[2] == 0)) continue;
        const int g[3] = {m[0] - q[0], m[1] - q[1], m[2] - q[2]};
        if (!in_nbhd(g) || (g[0] == 0 && g[1] == 0 && g[2] == 0)) continue;
        const int gc = code_of(g[0], g[1], g[2]);
        if (!is_sub(gc, f)) continue;
        const double detour = step_cost(dirs[f].rank) + step_cost(dirs[gc].rank);
        const bool shorter = detour < via_x - 1e-9;
        const bool tie_preferred = std::abs(detour - via_x) <= 1e-9 && dirs[f].rank > dirs[d].rank;
        if (!shorter && !tie_preferred) continue;
        const auto mf = box_from(p, f);
        const auto mg = box_from(q, gc);
        if (mf && mg) rule.alternatives.push_back(*mf | *mg);
      }
      forced[d].push_back(std::move(rule));
    }
  }
}

std::uint32_t DirTables::forced_mask(std::uint32_t blocked, int d) const {
  if (blocked == 0) return 0;
  std::uint32_t out = 0;
  for (const ForcedRule& rule : forced[d]) {
    if (blocked & rule.legal) continue;
    bool dominated = false;
    for (std::uint32_t alt : rule.alternatives) {
      if ((blocked & alt) == 0) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out |= 1u << rule.dir;
  }
  return out;
}

const DirTables& tables() {
  static const DirTables t;
  return t;
}

// Planning grid copy with a one-cell blocked border so neighbourhood reads
// never need bounds checks.
class Lattice {
 public:
  explicit Lattice(const PlanningGrid& grid) : geometry_(grid.geometry()) {
    const auto& dims = geometry_.dims();
    nx_ = dims[0] + 2;
    ny_ = dims[1] + 2;
    nz_ = dims[2] + 2;
    blocked_.assign(static_cast<std::size_t>(nx_) * ny_ * nz_, 1);
    for (int k = 0; k < dims[2]; ++k) {
      for (int j = 0; j < dims[1]; ++j) {
        for (int i = 0; i < dims[0]; ++i) {
          blocked_[index({i, j, k})] = grid.blocked({i, j, k}) ? 1 : 0;
        }
      }
    }
    const auto& t = tables();
    for (int c = 0; c < 27; ++c) {
      const auto& d = t.dirs[c].d;
      offset_[c] = (static_cast<long>(d[2]) * ny_ + d[1]) * nx_ + d[0];
    }
  }

  long index(const GridIndex& c) const { return (static_cast<long>(c.k + 1) * ny_ + (c.j + 1)) * nx_ + (c.i + 1); }
  GridIndex cell(long n) const {
    return {static_cast<int>(n % nx_) - 1, static_cast<int>((n / nx_) % ny_) - 1, static_cast<int>(n / (static_cast<long>(nx_) * ny_)) - 1};
  }
  std::size_t size() const { return blocked_.size(); }
  bool blocked(long n) const { return blocked_[static_cast<std::size_t>(n)] != 0; }
  long offset(int code) const { return offset_[code]; }

  std::uint32_t mask(long n) const {
    std::uint32_t m = 0;
    for (int c = 0; c < 27; ++c) {
      if (blocked_[static_cast<std::size_t>(n + offset_[c])]) m |= 1u << c;
    }
    return m;
  }

 private:
  GridGeometry geometry_;
  int nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<std::uint8_t> blocked_;
  std::array<long, 27> offset_{};
};

double heuristic(const GridIndex& a, const GridIndex& b) {
  const double dx = a.i - b.i, dy = a.j - b.j, dz = a.k - b.k;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

int chebyshev(const GridIndex& a, const GridIndex& b) {
  return std::max({std::abs(a.i - b.i), std::abs(a.j - b.j), std::abs(a.k - b.k)});
}

struct OpenEntry {
  double f;
  std::uint64_t seq;
  std::uint64_t key;
  bool operator>(const OpenEntry& o) const { return f != o.f ? f > o.f : seq > o.seq; }
};
using OpenList = std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>>;

void check_endpoints(const PlanningGrid& grid, const GridIndex& start, const GridIndex& goal) {
  if (grid.blocked(start)) throw StartOccupied("start cell is not free");
  if (grid.blocked(goal)) throw NoPath("goal cell is not free");
}

class JumpSearch {
 public:
  JumpSearch(const Lattice& lattice, long goal) : lat_(lattice), t_(tables()), goal_(goal) {}

  long jump(long n, int d) const {
    std::uint32_t m = lat_.mask(n);
    for (;;) {
      if (m & t_.box[d]) return -1;
      n += lat_.offset(d);
      if (n == goal_) return n;
      m = lat_.mask(n);
      if (t_.forced_mask(m, d)) return n;
      for (int s : t_.sub[d]) {
        if (jump(n, s) >= 0) return n;
      }
    }
  }

  std::uint32_t successors(long n, int incoming) const {
    if (incoming == kNone) {
      std::uint32_t all = 0;
      for (int c : t_.all) all |= 1u << c;
      return all;
    }
    std::uint32_t out = t_.forced_mask(lat_.mask(n), incoming);
    for (int c : t_.canonical[incoming]) out |= 1u << c;
    return out;
  }

 private:
  const Lattice& lat_;
  const DirTables& t_;
  long goal_;
};

}  // namespace

bool move_allowed(const PlanningGrid& grid, const GridIndex& from, const GridIndex& dir) {
  if (dir == GridIndex{0, 0, 0}) return grid.free(from);
  if (std::abs(dir.i) > 1 || std::abs(dir.j) > 1 || std::abs(dir.k) > 1) return false;
  if (grid.blocked(from)) return false;
  for (int si : {0, dir.i}) {
    for (int sj : {0, dir.j}) {
      for (int sk : {0, dir.k}) {
        if (si == 0 && sj == 0 && sk == 0) continue;
        if (grid.blocked(from + GridIndex{si, sj, sk})) return false;
      }
    }
  }
  return true;
}

GridPlan search_jps(const PlanningGrid& grid, const GridIndex& start, const GridIndex& goal) {
  check_endpoints(grid, start, goal);
  GridPlan plan;
  if (start == goal) {
    plan.cells = {start};
    return plan;
  }
  const Lattice lat(grid);
  const long s = lat.index(start);
  const long g = lat.index(goal);
  const JumpSearch js(lat, g);
  const auto& t = tables();

  struct Node {
    double g;
    MoveCounts moves;
    std::uint64_t parent;
    bool closed;
  };
  std::unordered_map<std::uint64_t, Node> nodes;
  const auto key_of = [](long n, int d) { return static_cast<std::uint64_t>(n) * 27u + static_cast<std::uint64_t>(d); };
  const std::uint64_t start_key = key_of(s, kNone);
  nodes[start_key] = {0.0, {}, start_key, false};
  OpenList open;
  std::uint64_t seq = 0;
  open.push({heuristic(start, goal), seq++, start_key});

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    Node& node = nodes[top.key];
    if (node.closed) continue;
    node.closed = true;
    ++plan.expansions;
    const long n = static_cast<long>(top.key / 27u);
    const int incoming = static_cast<int>(top.key % 27u);
    if (n == g) {
      plan.moves = node.moves;
      std::vector<GridIndex> rev;
      std::uint64_t k = top.key;
      for (;;) {
        rev.push_back(lat.cell(static_cast<long>(k / 27u)));
        const std::uint64_t parent = nodes[k].parent;
        if (parent == k) break;
        k = parent;
      }
      plan.cells.assign(rev.rbegin(), rev.rend());
      return plan;
    }
    const MoveCounts base = node.moves;
    const GridIndex here = lat.cell(n);
    const std::uint32_t dirs = js.successors(n, incoming);
    for (int e : t.all) {
      if (!(dirs & (1u << e))) continue;
      const long m = js.jump(n, e);
      if (m < 0) continue;
      const GridIndex there = lat.cell(m);
      MoveCounts moves = base;
      moves.add(t.dirs[e].rank, chebyshev(here, there));
      const double cost = moves.length();
      const std::uint64_t key = key_of(m, e);
      auto [it, inserted] = nodes.try_emplace(key, Node{cost, moves, top.key, false});
      if (!inserted) {
        if (it->second.closed || !(cost < it->second.g)) continue;
        it->second = Node{cost, moves, top.key, false};
      }
      open.push({cost + heuristic(there, goal), seq++, key});
    }
  }
  throw NoPath("goal unreachable");
}

GridPlan search_astar(const PlanningGrid& grid, const GridIndex& start, const GridIndex& goal) {
  check_endpoints(grid, start, goal);
  GridPlan plan;
  if (start == goal) {
    plan.cells = {start};
    return plan;
  }
  const Lattice lat(grid);
  const auto& t = tables();
  const long s = lat.index(start);
  const long goal_n = lat.index(goal);
  const std::size_t count = lat.size();
  std::vector<double> g(count, std::numeric_limits<double>::infinity());
  std::vector<MoveCounts> moves(count);
  std::vector<long> parent(count, -1);
  std::vector<std::uint8_t> closed(count, 0);
  std::vector<std::int8_t> via(count, kNone);

  OpenList open;
  std::uint64_t seq = 0;
  g[s] = 0.0;
  parent[s] = s;
  open.push({heuristic(start, goal), seq++, static_cast<std::uint64_t>(s)});
  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();
    const long n = static_cast<long>(top.key);
    if (closed[n]) continue;
    closed[n] = 1;
    ++plan.expansions;
    if (n == goal_n) break;
    const std::uint32_t mask = lat.mask(n);
    const GridIndex here = lat.cell(n);
    for (int e : t.all) {
      if (mask & t.box[e]) continue;
      const long m = n + lat.offset(e);
      if (closed[m]) continue;
      MoveCounts mc = moves[n];
      mc.add(t.dirs[e].rank, 1);
      const double cost = mc.length();
      if (!(cost < g[m])) continue;
      g[m] = cost;
      moves[m] = mc;
      parent[m] = n;
      via[m] = static_cast<std::int8_t>(e);
      const GridIndex there{here.i + t.dirs[e].d[0], here.j + t.dirs[e].d[1], here.k + t.dirs[e].d[2]};
      open.push({cost + heuristic(there, goal), seq++, static_cast<std::uint64_t>(m)});
    }
  }
  if (!closed[goal_n]) throw NoPath("goal unreachable");

  plan.moves = moves[goal_n];
  std::vector<GridIndex> rev;
  long n = goal_n;
  int last_dir = -1;
  while (n != s) {
    if (via[n] != last_dir) rev.push_back(lat.cell(n));
    last_dir = via[n];
    n = parent[n];
  }
  rev.push_back(lat.cell(s));
  plan.cells.assign(rev.rbegin(), rev.rend());
  return plan;
}

namespace {

PlannedPath to_path(const PlanningGrid& grid, const GridPlan& plan) {
  PlannedPath out;
  out.waypoints.reserve(plan.cells.size());
  for (const GridIndex& c : plan.cells) out.waypoints.push_back(grid.geometry().center_of(c));
  out.cost = plan.moves.length() * grid.geometry().resolution();
  return out;
}

std::pair<GridIndex, GridIndex> endpoints(const PlanningGrid& grid, const Vec3& start, const Vec3& goal) {
  const auto s = grid.geometry().index_of(start);
  if (!s) throw StartOccupied("start lies outside the planning grid");
  const auto g = grid.geometry().index_of(goal);
  if (!g) throw NoPath("goal lies outside the planning grid");
  return {*s, *g};
}

}  // namespace

PlannedPath plan_jps(const PlanningGrid& grid, const Vec3& start, const Vec3& goal) {
  const auto [s, g] = endpoints(grid, start, goal);
#ifdef MRNAV_FORCE_ASTAR
  return to_path(grid, search_astar(grid, s, g));
#else
  return to_path(grid, search_jps(grid, s, g));
#endif
}

PlannedPath plan_astar(const PlanningGrid& grid, const Vec3& start, const Vec3& goal) {
  const auto [s, g] = endpoints(grid, start, goal);
  return to_path(grid, search_astar(grid, s, g));
}

Vec3 nearest_free_pose(const PlanningGrid& grid, const Vec3& p, double max_radius) {
  if (!(max_radius > 0.0)) throw std::invalid_argument("nearest_free_pose: max_radius must be positive");
  const GridGeometry& geo = grid.geometry();
  const GridIndex c0 = geo.floor_index(p);
  if (geo.contains(c0) && grid.free(c0)) return p;

  const double res = geo.resolution();
  const long limit2 = static_cast<long>(std::floor((max_radius / res) * (max_radius / res) + 1e-9));
  const int rings = static_cast<int>(std::floor(max_radius / res + 1e-9));
  std::optional<GridIndex> best;
  long best_d2 = std::numeric_limits<long>::max();
  for (int r = 1; r <= rings; ++r) {
    if (best && static_cast<long>(r) * r > best_d2) break;
    for (int dk = -r; dk <= r; ++dk) {
      for (int dj = -r; dj <= r; ++dj) {
        for (int di = -r; di <= r; ++di) {
          if (std::max({std::abs(di), std::abs(dj), std::abs(dk)}) != r) continue;
          const GridIndex q = c0 + GridIndex{di, dj, dk};
          if (!geo.contains(q) || grid.blocked(q)) continue;
          const long d2 = static_cast<long>(di) * di + static_cast<long>(dj) * dj + static_cast<long>(dk) * dk;
          if (d2 > limit2) continue;
          if (!best || d2 < best_d2 || (d2 == best_d2 && q < *best)) {
            best = q;
            best_d2 = d2;
          }
        }
      }
    }
  }
  if (!best) throw NoFreeCell("no free cell within " + std::to_string(max_radius) + " m");
  return geo.center_of(*best);
}

bool segment_free(const PlanningGrid& grid, const Vec3& a, const Vec3& b) {
  const GridGeometry& geo = grid.geometry();
  if (!geo.contains(a) || !geo.contains(b)) return false;
  bool clear = true;
  const bool reached = walk_segment_conservative(geo, a, b, [&](const GridIndex& c) {
    clear = grid.free(c);
    return clear;
  });
  return reached && clear;
}

PlannedPath shortcut(const PlannedPath& path, const PlanningGrid& grid) {
  if (path.waypoints.size() <= 2) return path;
  PlannedPath out;
  const auto& w = path.waypoints;
  out.waypoints.push_back(w.front());
  for (std::size_t k = 1; k + 1 < w.size(); ++k) {
    if (!segment_free(grid, out.waypoints.back(), w[k + 1])) out.waypoints.push_back(w[k]);
  }
  out.waypoints.push_back(w.back());
  out.cost = polyline_length(out.waypoints);
  return out;
}

double polyline_length(const std::vector<Vec3>& points) {
  double len = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
  return len;
}

}  // namespace mrnav
