#include "bwexp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>

#include "bwexp/grid_traversal.hpp"

namespace bwexp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTol = 1e-9;

// True when a ray from p within range_m reaches one of frontier cell f's unknown
// 4-neighbours. Cells before it must not be occupied, and with strict they must be
// known free, so a sensor at p would already have looked at that neighbour.
bool sees_unknown_side(const BeliefMap& belief, Point p, CellIndex f, double range_m, bool strict) {
  constexpr CellIndex kSides[] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (const CellIndex& s : kSides) {
    const CellIndex u{f.x + s.x, f.y + s.y};
    if (!belief.in_bounds(u) || belief.at(u) != Belief::Unknown) continue;
    const Point target = belief.center_of(u);
    if (distance(p, target) > range_m) continue;
    bool clear = true;
    std::optional<CellIndex> prev;
    auto occupied = [&](CellIndex c) { return !belief.in_bounds(c) || belief.at(c) == Belief::Occupied; };
    detail::traverse_segment(p, target, belief.resolution(), [&](CellIndex c, double) {
      // A corner-to-corner step between two occupied cells is sealed for real rays.
      if (prev && prev->x != c.x && prev->y != c.y && occupied({c.x, prev->y}) && occupied({prev->x, c.y})) {
        clear = false;
        return false;
      }
      prev = c;
      if (c == u) return false;
      const Belief b = belief.in_bounds(c) ? belief.at(c) : Belief::Occupied;
      if (b == Belief::Occupied || (strict && b != Belief::Free)) {
        clear = false;
        return false;
      }
      return true;
    });
    if (clear) return true;
  }
  return false;
}
}  // namespace

ViewpointSet sample_viewpoints(const BeliefMap& merged, double sensor_range_m, int min_gain, double spacing_m,
                               const std::vector<char>* exhausted) {
  auto frontier_cells = frontiers(merged);
  if (exhausted)
    std::erase_if(frontier_cells, [&](CellIndex c) { return (*exhausted)[merged.index(c)] != 0; });
  ViewpointSet out;
  if (frontier_cells.empty()) return out;

  const double r2 = sensor_range_m * sensor_range_m;
  auto visible = [&](Point p) {
    std::vector<int> seen;
    for (int f = 0; f < static_cast<int>(frontier_cells.size()); ++f) {
      const Point d = merged.center_of(frontier_cells[f]) - p;
      if (d.x * d.x + d.y * d.y > r2) continue;
      if (sees_unknown_side(merged, p, frontier_cells[f], sensor_range_m, false)) seen.push_back(f);
    }
    return seen;
  };

  const int step = lattice_step_cells(spacing_m, merged.resolution());
  std::vector<Point> candidates;
  std::vector<std::vector<int>> covers;
  for (int y = 0; y < merged.height(); y += step)
    for (int x = 0; x < merged.width(); x += step) {
      if (!merged.is_free({x, y})) continue;
      const Point p = merged.center_of({x, y});
      auto seen = visible(p);
      if (!seen.empty()) {
        candidates.push_back(p);
        covers.push_back(std::move(seen));
      }
    }

  std::vector<char> covered(frontier_cells.size(), 0);
  std::vector<char> used(candidates.size(), 0);
  const int threshold = std::max(1, min_gain);
  for (;;) {
    int best = -1;
    int best_gain = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (used[c]) continue;
      int gain = 0;
      for (int f : covers[c]) gain += covered[f] ? 0 : 1;
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<int>(c);
      }
    }
    if (best < 0 || best_gain < threshold) break;
    used[best] = 1;
    for (int f : covers[best]) covered[f] = 1;
    out.push_back({candidates[best], best_gain});
  }
  return out;
}

std::vector<double> grid_distance_field(const BeliefMap& belief, CellIndex source) {
  std::vector<double> dist(belief.cells().size(), kInf);
  if (!belief.is_free(source)) return dist;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[belief.index(source)] = 0.0;
  open.push({0.0, belief.index(source)});
  const double res = belief.resolution();
  const double diag = std::sqrt(2.0) * res;
  const int w = belief.width();
  while (!open.empty()) {
    const auto [d, i] = open.top();
    open.pop();
    if (d > dist[i]) continue;
    const CellIndex c{static_cast<int>(i % w), static_cast<int>(i / w)};
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const CellIndex n{c.x + dx, c.y + dy};
        if (!belief.is_free(n)) continue;
        if (dx != 0 && dy != 0 && (!belief.is_free({c.x + dx, c.y}) || !belief.is_free({c.x, c.y + dy}))) continue;
        const double nd = d + ((dx != 0 && dy != 0) ? diag : res);
        const std::size_t j = belief.index(n);
        if (nd < dist[j]) {
          dist[j] = nd;
          open.push({nd, j});
        }
      }
  }
  return dist;
}

Eigen::MatrixXd shortest_path_matrix(const std::vector<Point>& points, const BeliefMap& belief) {
  const int n = static_cast<int>(points.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, kInf);
  for (int i = 0; i < n; ++i) {
    const auto field = grid_distance_field(belief, belief.cell_of(points[i]));
    for (int j = 0; j < n; ++j) {
      const CellIndex c = belief.cell_of(points[j]);
      m(i, j) = belief.in_bounds(c) ? field[belief.index(c)] : kInf;
    }
  }
  // Dijkstra is exact, but symmetrise against floating-point summation order.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m(i, j) = m(j, i) = std::min(m(i, j), m(j, i));
  return m;
}

double TourPlan::max_length() const {
  double m = 0.0;
  for (double l : lengths) m = std::max(m, l);
  return m;
}

double TourPlan::total_length() const { return std::accumulate(lengths.begin(), lengths.end(), 0.0); }

double tour_length(const Eigen::MatrixXd& dist, int n_robots, int robot, const std::vector<int>& tour) {
  double len = 0.0;
  int at = robot;
  for (int v : tour) {
    len += dist(at, n_robots + v);
    at = n_robots + v;
  }
  return len;
}

namespace {

struct Objective {
  double max = 0.0;
  double total = 0.0;
  bool better_than(const Objective& o) const {
    if (max < o.max - kTol) return true;
    if (max > o.max + kTol) return false;
    return total < o.total - kTol;
  }
};

Objective objective_of(const std::vector<double>& lengths) {
  Objective o;
  for (double l : lengths) {
    o.max = std::max(o.max, l);
    o.total += l;
  }
  return o;
}

class TourImprover {
 public:
  TourImprover(const Eigen::MatrixXd& dist, int n_robots, std::vector<std::vector<int>>& tours,
               std::vector<std::pair<double, double>>* trace)
      : dist_(dist), n_robots_(n_robots), tours_(tours), trace_(trace) {
    for (int r = 0; r < n_robots_; ++r) lengths_.push_back(tour_length(dist_, n_robots_, r, tours_[r]));
    current_ = objective_of(lengths_);
    if (trace_) trace_->push_back({current_.max, current_.total});
  }

  void run() {
    while (two_opt() || relocate() || swap()) {
    }
  }

  const std::vector<double>& lengths() const { return lengths_; }

 private:
  // Tries a candidate state for the touched tours; keeps it iff the objective improves.
  bool try_accept(int a, const std::vector<int>& ta, int b, const std::vector<int>& tb) {
    std::vector<double> lengths = lengths_;
    lengths[a] = tour_length(dist_, n_robots_, a, ta);
    if (b >= 0) lengths[b] = tour_length(dist_, n_robots_, b, tb);
    const Objective next = objective_of(lengths);
    if (!next.better_than(current_)) return false;
    tours_[a] = ta;
    if (b >= 0) tours_[b] = tb;
    lengths_ = std::move(lengths);
    current_ = next;
    if (trace_) trace_->push_back({current_.max, current_.total});
    return true;
  }

  bool two_opt() {
    for (int r = 0; r < n_robots_; ++r) {
      const int n = static_cast<int>(tours_[r].size());
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          std::vector<int> t = tours_[r];
          std::reverse(t.begin() + i, t.begin() + j + 1);
          if (try_accept(r, t, -1, {})) return true;
        }
    }
    return false;
  }

  bool relocate() {
    for (int a = 0; a < n_robots_; ++a)
      for (int i = 0; i < static_cast<int>(tours_[a].size()); ++i)
        for (int b = 0; b < n_robots_; ++b) {
          std::vector<int> ta = tours_[a];
          const int v = ta[i];
          ta.erase(ta.begin() + i);
          const int slots = static_cast<int>((a == b ? ta : tours_[b]).size());
          for (int p = 0; p <= slots; ++p) {
            if (a == b) {
              if (p == i) continue;
              std::vector<int> t = ta;
              t.insert(t.begin() + p, v);
              if (try_accept(a, t, -1, {})) return true;
            } else {
              std::vector<int> tb = tours_[b];
              tb.insert(tb.begin() + p, v);
              if (try_accept(a, ta, b, tb)) return true;
            }
          }
        }
    return false;
  }

  bool swap() {
    for (int a = 0; a < n_robots_; ++a)
      for (int b = a + 1; b < n_robots_; ++b)
        for (std::size_t i = 0; i < tours_[a].size(); ++i)
          for (std::size_t j = 0; j < tours_[b].size(); ++j) {
            std::vector<int> ta = tours_[a], tb = tours_[b];
            std::swap(ta[i], tb[j]);
            if (try_accept(a, ta, b, tb)) return true;
          }
    return false;
  }

  const Eigen::MatrixXd& dist_;
  int n_robots_;
  std::vector<std::vector<int>>& tours_;
  std::vector<std::pair<double, double>>* trace_;
  std::vector<double> lengths_;
  Objective current_;
};

}  // namespace

TourPlan solve_mtsp_heuristic(int n_robots, int n_viewpoints, const Eigen::MatrixXd& dist,
                              std::vector<std::pair<double, double>>* trace) {
  if (n_robots < 1) throw Error("solve_mtsp: need at least one robot");
  if (dist.rows() != n_robots + n_viewpoints || dist.cols() != dist.rows()) throw Error("solve_mtsp: bad matrix");
  TourPlan plan;
  plan.tours.assign(static_cast<std::size_t>(n_robots), {});
  std::vector<double> lengths(static_cast<std::size_t>(n_robots), 0.0);
  std::vector<char> assigned(static_cast<std::size_t>(n_viewpoints), 0);

  for (int placed = 0; placed < n_viewpoints; ++placed) {
    double cur_max = *std::max_element(lengths.begin(), lengths.end());
    Objective best{kInf, kInf};
    int best_v = -1, best_r = -1, best_pos = -1;
    for (int v = 0; v < n_viewpoints; ++v) {
      if (assigned[v]) continue;
      for (int r = 0; r < n_robots; ++r) {
        const auto& t = plan.tours[r];
        for (int p = 0; p <= static_cast<int>(t.size()); ++p) {
          const int prev = p == 0 ? r : n_robots + t[p - 1];
          double inc = dist(prev, n_robots + v);
          if (p < static_cast<int>(t.size())) inc += dist(n_robots + v, n_robots + t[p]) - dist(prev, n_robots + t[p]);
          const Objective o{std::max(cur_max, lengths[r] + inc), inc};
          if (o.better_than(best)) {
            best = o;
            best_v = v;
            best_r = r;
            best_pos = p;
          }
        }
      }
    }
    plan.tours[best_r].insert(plan.tours[best_r].begin() + best_pos, best_v);
    lengths[best_r] = tour_length(dist, n_robots, best_r, plan.tours[best_r]);
    assigned[best_v] = 1;
  }

  TourImprover improver(dist, n_robots, plan.tours, trace);
  improver.run();
  plan.lengths = improver.lengths();
  return plan;
}

TourPlan solve_mtsp_exact(int n_robots, int n_viewpoints, const Eigen::MatrixXd& dist) {
  if (n_robots < 1) throw Error("solve_mtsp: need at least one robot");
  if (n_viewpoints > 16) throw Error("solve_mtsp_exact: instance too large");
  if (dist.rows() != n_robots + n_viewpoints || dist.cols() != dist.rows()) throw Error("solve_mtsp: bad matrix");
  const int V = n_viewpoints;
  const std::size_t full = std::size_t{1} << V;

  // Held-Karp per robot: path[r][S * V + last], best open path over S ending at last.
  std::vector<std::vector<double>> path(n_robots, std::vector<double>(full * std::max(V, 1), kInf));
  std::vector<std::vector<int>> parent(n_robots, std::vector<int>(full * std::max(V, 1), -1));
  std::vector<std::vector<double>> cost(n_robots, std::vector<double>(full, kInf));
  std::vector<std::vector<int>> cost_last(n_robots, std::vector<int>(full, -1));
  for (int r = 0; r < n_robots; ++r) {
    auto& P = path[r];
    for (int v = 0; v < V; ++v) P[(std::size_t{1} << v) * V + v] = dist(r, n_robots + v);
    for (std::size_t S = 1; S < full; ++S)
      for (int last = 0; last < V; ++last) {
        if (!(S >> last & 1u)) continue;
        const double base = P[S * V + last];
        if (base == kInf) continue;
        for (int nxt = 0; nxt < V; ++nxt) {
          if (S >> nxt & 1u) continue;
          const std::size_t T = S | (std::size_t{1} << nxt);
          const double c = base + dist(n_robots + last, n_robots + nxt);
          if (c < P[T * V + nxt]) {
            P[T * V + nxt] = c;
            parent[r][T * V + nxt] = last;
          }
        }
      }
    cost[r][0] = 0.0;
    for (std::size_t S = 1; S < full; ++S)
      for (int last = 0; last < V; ++last)
        if ((S >> last & 1u) && P[S * V + last] < cost[r][S]) {
          cost[r][S] = P[S * V + last];
          cost_last[r][S] = last;
        }
  }

  // best[k][S]: serve S with robots k..R-1, lexicographic (max, total).
  std::vector<std::vector<Objective>> best(n_robots + 1, std::vector<Objective>(full, {kInf, kInf}));
  std::vector<std::vector<std::size_t>> choice(n_robots, std::vector<std::size_t>(full, 0));
  best[n_robots][0] = {0.0, 0.0};
  for (int k = n_robots - 1; k >= 0; --k)
    for (std::size_t S = 0; S < full; ++S) {
      // Enumerate subsets T of S (including the empty set) assigned to robot k.
      for (std::size_t T = S;; T = (T - 1) & S) {
        const Objective& rest = best[k + 1][S & ~T];
        if (rest.max != kInf && cost[k][T] != kInf) {
          const Objective o{std::max(cost[k][T], rest.max), cost[k][T] + rest.total};
          if (o.better_than(best[k][S])) {
            best[k][S] = o;
            choice[k][S] = T;
          }
        }
        if (T == 0) break;
      }
    }

  TourPlan plan;
  plan.tours.assign(static_cast<std::size_t>(n_robots), {});
  if (best[0][full - 1].max == kInf) throw Error("solve_mtsp_exact: some viewpoint is unreachable");
  std::size_t S = full - 1;
  for (int k = 0; k < n_robots; ++k) {
    std::size_t T = choice[k][S];
    S &= ~T;
    std::vector<int> tour;
    int last = T ? cost_last[k][T] : -1;
    while (T) {
      tour.push_back(last);
      const int prev = parent[k][T * V + last];
      T &= ~(std::size_t{1} << last);
      last = prev;
    }
    std::reverse(tour.begin(), tour.end());
    plan.tours[k] = std::move(tour);
  }
  for (int r = 0; r < n_robots; ++r) plan.lengths.push_back(tour_length(dist, n_robots, r, plan.tours[r]));
  return plan;
}

TourPlan solve_mtsp(int n_robots, int n_viewpoints, const Eigen::MatrixXd& dist) {
  if (dist.rows() != n_robots + n_viewpoints || dist.cols() != dist.rows()) throw Error("solve_mtsp: bad matrix");
  std::vector<int> keep;
  std::vector<int> dropped;
  for (int v = 0; v < n_viewpoints; ++v) {
    bool reachable = false;
    for (int r = 0; r < n_robots; ++r) reachable = reachable || std::isfinite(dist(r, n_robots + v));
    (reachable ? keep : dropped).push_back(v);
  }
  const int m = static_cast<int>(keep.size());
  Eigen::MatrixXd sub(n_robots + m, n_robots + m);
  auto src = [&](int i) { return i < n_robots ? i : n_robots + keep[i - n_robots]; };
  for (int i = 0; i < n_robots + m; ++i)
    for (int j = 0; j < n_robots + m; ++j) sub(i, j) = dist(src(i), src(j));

  // Pairs unreachable from each other make the instance infeasible for single
  // tours; cap them so the solver still returns a plan.
  const double finite_cap = 1e9;
  for (Eigen::Index i = 0; i < sub.size(); ++i)
    if (!std::isfinite(sub.data()[i])) sub.data()[i] = finite_cap;

  TourPlan plan = m <= kExactMtspLimit ? solve_mtsp_exact(n_robots, m, sub) : solve_mtsp_heuristic(n_robots, m, sub);
  for (auto& tour : plan.tours)
    for (int& v : tour) v = keep[v];
  plan.dropped = dropped;
  for (int v : dropped) plan.warnings.push_back("viewpoint " + std::to_string(v) + " unreachable, dropped");
  return plan;
}

std::vector<double> graph_distances(const InformativeGraph& graph, int source, std::vector<int>* parent) {
  const int n = graph.size();
  std::vector<double> dist(static_cast<std::size_t>(n), kInf);
  if (parent) parent->assign(static_cast<std::size_t>(n), -1);
  if (source < 0 || source >= n) return dist;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[source] = 0.0;
  open.push({0.0, source});
  while (!open.empty()) {
    const auto [d, v] = open.top();
    open.pop();
    if (d > dist[v]) continue;
    for (int u : graph.navigable_neighbors(v)) {
      const double nd = d + distance(graph.vertices[v].coords, graph.vertices[u].coords);
      if (nd < dist[u]) {
        dist[u] = nd;
        if (parent) (*parent)[u] = v;
        open.push({nd, u});
      }
    }
  }
  return dist;
}

std::optional<int> first_hop(const InformativeGraph& graph, int target) {
  std::vector<int> parent;
  const auto dist = graph_distances(graph, graph.current_index, &parent);
  if (target < 0 || target >= graph.size() || target == graph.current_index || !std::isfinite(dist[target]))
    return std::nullopt;
  int v = target;
  while (parent[v] != graph.current_index) v = parent[v];
  return v;
}

namespace {

// Next waypoint along the grid shortest path from `from` toward the field's source:
// the farthest path cell within max_hop_m of path length that is in straight view.
std::optional<Point> advance_along(const BeliefMap& belief, const std::vector<double>& field, Point from,
                                   double max_hop_m) {
  CellIndex c = belief.cell_of(from);
  if (!belief.in_bounds(c) || !std::isfinite(field[belief.index(c)])) return std::nullopt;
  const double res = belief.resolution();
  const double diag = std::sqrt(2.0) * res;
  std::optional<Point> best;
  double walked = 0.0;
  while (field[belief.index(c)] > 0.0) {
    CellIndex next = c;
    double step = 0.0;
    double best_d = field[belief.index(c)];
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const CellIndex n{c.x + dx, c.y + dy};
        if ((dx == 0 && dy == 0) || !belief.in_bounds(n)) continue;
        if (dx != 0 && dy != 0 && (!belief.is_free({c.x + dx, c.y}) || !belief.is_free({c.x, c.y + dy}))) continue;
        const double d = field[belief.index(n)];
        if (d < best_d - kTol) {
          best_d = d;
          next = n;
          step = (dx != 0 && dy != 0) ? diag : res;
        }
      }
    if (next == c) break;
    walked += step;
    if (walked > max_hop_m + kTol) break;
    c = next;
    const Point p = belief.center_of(c);
    if (segment_clear(belief, from, p)) best = p;
  }
  return best;
}

}  // namespace

MtspDecision mtsp_step(const BeliefMap& merged, const std::vector<Point>& robot_positions, const MtspConfig& config,
                       MtspMemory* memory) {
  MtspDecision out;
  const int n = static_cast<int>(robot_positions.size());
  if (memory) {
    // A frontier whose unknown side a robot had in plain view and still did not
    // resolve is a ray gap; no viewpoint will clear it.
    memory->exhausted.resize(merged.cells().size(), 0);
    const double r = std::max(config.graph.spacing_m, config.sensor_range_m - config.coverage_margin_m);
    for (const CellIndex& f : frontiers(merged))
      for (const Point& p : robot_positions)
        if (sees_unknown_side(merged, p, f, r, true)) {
          memory->exhausted[merged.index(f)] = 1;
          break;
        }
  }
  out.waypoint.assign(static_cast<std::size_t>(n), std::nullopt);
  out.viewpoints = sample_viewpoints(merged, std::max(config.graph.spacing_m, config.sensor_range_m - config.coverage_margin_m),
                                     config.min_gain, config.graph.spacing_m, memory ? &memory->exhausted : nullptr);
  if (out.viewpoints.empty()) {
    out.done = true;
    return out;
  }

  std::vector<Point> points = robot_positions;
  for (const Viewpoint& v : out.viewpoints) points.push_back(v.position);
  const Eigen::MatrixXd dist = shortest_path_matrix(points, merged);
  out.plan = solve_mtsp(n, static_cast<int>(out.viewpoints.size()), dist);

  const double hop = config.max_hop_m > 0.0 ? config.max_hop_m : config.graph.spacing_m;
  for (int r = 0; r < n; ++r) {
    const CellIndex here = merged.cell_of(robot_positions[r]);
    for (int v : out.plan.tours[r]) {
      const CellIndex goal = merged.cell_of(out.viewpoints[v].position);
      if (goal == here) continue;
      const auto field = grid_distance_field(merged, goal);
      if (auto p = advance_along(merged, field, robot_positions[r], hop)) {
        out.waypoint[r] = *p;
        break;
      }
    }
  }
  return out;
}

int random_policy(const InformativeGraph& graph, std::mt19937_64& rng) {
  const auto nbrs = graph.navigable_neighbors(graph.current_index);
  if (nbrs.empty()) throw Error("random_policy: no navigable neighbour");
  std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
  return nbrs[pick(rng)];
}

std::optional<int> nearest_frontier_policy(const InformativeGraph& graph, const BeliefMap& belief, double reach_m) {
  std::vector<int> parent;
  const auto dist = graph_distances(graph, graph.current_index, &parent);
  const double reach2 = reach_m * reach_m;
  double best_cost = kInf;
  int best = -1;
  const Point here = graph.vertices[graph.current_index].coords;
  for (const CellIndex& f : frontiers(belief)) {
    const Point p = belief.center_of(f);
    // Already sensed from here without resolving it; a vertex that looks at it the
    // same way would not do better.
    if (sees_unknown_side(belief, here, f, reach_m, false)) continue;
    for (int v = 0; v < graph.size(); ++v) {
      if (graph.vertices[v].temporary || !std::isfinite(dist[v])) continue;
      const Point d = p - graph.vertices[v].coords;
      const double d2 = d.x * d.x + d.y * d.y;
      if (d2 > reach2 || dist[v] + std::sqrt(d2) >= best_cost - kTol) continue;
      if (v == graph.current_index || !sees_unknown_side(belief, graph.vertices[v].coords, f, reach_m, false)) continue;
      best_cost = dist[v] + std::sqrt(d2);
      best = v;
    }
  }
  if (best < 0) return std::nullopt;
  return first_hop(graph, best);
}

}  // namespace bwexp
