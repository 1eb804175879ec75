#include "bwexp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include "bwexp/grid_traversal.hpp"

namespace bwexp {

Eigen::MatrixXd InformativeGraph::edge_mask() const {
  const int n = size();
  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(n, n);
  for (int i = 0; i < n; ++i) {
    mask(i, i) = 0.0;
    for (int j : adjacency[i]) mask(i, j) = 0.0;
  }
  return mask;
}

std::vector<int> InformativeGraph::navigable_neighbors(int i) const {
  std::vector<int> out;
  for (int j : adjacency[i])
    if (!vertices[j].temporary) out.push_back(j);
  return out;
}

int InformativeGraph::find_vertex(Point p, double tol) const {
  int best = -1;
  double best_d = tol;
  for (int i = 0; i < size(); ++i) {
    if (vertices[i].temporary) continue;
    const double d = distance(vertices[i].coords, p);
    if (d <= best_d) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

bool InformativeGraph::has_edge(int i, int j) const {
  return std::binary_search(adjacency[i].begin(), adjacency[i].end(), j);
}

int lattice_step_cells(double spacing_m, double resolution) {
  return std::max(1, static_cast<int>(std::lround(spacing_m / resolution)));
}

namespace {

template <typename IsFree>
bool clear_between(Point a, Point b, double resolution, IsFree&& is_free) {
  // A segment through an exact cell corner touches both flank cells, so a diagonal
  // step needs them free too. Otherwise edges could graze walls or slip through
  // diagonal pinholes.
  bool clear = true;
  std::optional<CellIndex> prev;
  detail::traverse_segment(a, b, resolution, [&](CellIndex c, double) {
    const bool diagonal = prev && prev->x != c.x && prev->y != c.y;
    if (!is_free(c) || (diagonal && (!is_free({c.x, prev->y}) || !is_free({prev->x, c.y})))) {
      clear = false;
      return false;
    }
    prev = c;
    return true;
  });
  return clear;
}

struct LatticeOffset {
  int dx, dy;
  double dist;
};

std::vector<LatticeOffset> lattice_offsets(int step, double resolution, double radius) {
  const int reach = static_cast<int>(std::floor(radius / (step * resolution) + 1e-9));
  std::vector<LatticeOffset> out;
  for (int dy = -reach; dy <= reach; ++dy)
    for (int dx = -reach; dx <= reach; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const double d = std::hypot(dx, dy) * step * resolution;
      if (d <= radius + 1e-9) out.push_back({dx, dy, d});
    }
  std::stable_sort(out.begin(), out.end(), [](const LatticeOffset& a, const LatticeOffset& b) { return a.dist < b.dist; });
  return out;
}

// Vertices on every lattice point that passes is_free, with mutual k-nearest
// collision-free edges inside the radius.
template <typename IsFree>
InformativeGraph build_lattice(int width, int height, double resolution, const GraphParams& params, IsFree&& is_free) {
  const int step = lattice_step_cells(params.spacing_m, resolution);
  const int nx = (width + step - 1) / step;
  const int ny = (height + step - 1) / step;

  InformativeGraph g;
  g.extent_x_m = width * resolution;
  g.extent_y_m = height * resolution;
  std::vector<int> id(static_cast<std::size_t>(nx) * ny, -1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const CellIndex c{i * step, j * step};
      if (!is_free(c)) continue;
      id[static_cast<std::size_t>(j) * nx + i] = g.size();
      g.vertices.push_back({{(c.x + 0.5) * resolution, (c.y + 0.5) * resolution}});
    }

  const auto offsets = lattice_offsets(step, resolution, params.neighbor_radius_m);
  std::vector<std::vector<int>> nearest(g.vertices.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int v = id[static_cast<std::size_t>(j) * nx + i];
      if (v < 0) continue;
      for (const LatticeOffset& o : offsets) {
        if (static_cast<int>(nearest[v].size()) >= params.max_neighbors) break;
        const int ti = i + o.dx, tj = j + o.dy;
        if (ti < 0 || tj < 0 || ti >= nx || tj >= ny) continue;
        const int u = id[static_cast<std::size_t>(tj) * nx + ti];
        if (u < 0) continue;
        if (clear_between(g.vertices[v].coords, g.vertices[u].coords, resolution, is_free)) nearest[v].push_back(u);
      }
    }
  for (auto& list : nearest) std::sort(list.begin(), list.end());

  g.adjacency.assign(g.vertices.size(), {});
  for (int v = 0; v < g.size(); ++v)
    for (int u : nearest[v])
      if (std::binary_search(nearest[u].begin(), nearest[u].end(), v)) g.adjacency[v].push_back(u);
  return g;
}

void mark_guideposts(InformativeGraph& g, std::span<const Point> visited, double spacing_m) {
  const double r = spacing_m / 2.0;
  for (Vertex& v : g.vertices) {
    v.guidepost = 0;
    if (v.temporary) continue;
    for (const Point& p : visited)
      if (distance(p, v.coords) <= r) {
        v.guidepost = 1;
        break;
      }
  }
}

int nearest_vertex(const InformativeGraph& g, Point p) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < g.size(); ++i) {
    if (g.vertices[i].temporary) continue;
    const double d = distance(g.vertices[i].coords, p);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

bool segment_clear(const BeliefMap& belief, Point a, Point b) {
  return clear_between(a, b, belief.resolution(), [&](CellIndex c) { return belief.is_free(c); });
}

bool segment_clear(const GridMap& truth, Point a, Point b) {
  return clear_between(a, b, truth.resolution(), [&](CellIndex c) { return truth.is_free(c); });
}

int vertex_utility(Point coords, const BeliefMap& belief, std::span<const CellIndex> frontier_cells,
                   double sensor_range_m) {
  const double r2 = sensor_range_m * sensor_range_m;
  int count = 0;
  for (const CellIndex& f : frontier_cells) {
    const Point target = belief.center_of(f);
    const Point d = target - coords;
    if (d.x * d.x + d.y * d.y > r2) continue;
    bool blocked = false;
    detail::traverse_segment(coords, target, belief.resolution(), [&](CellIndex c, double) {
      if (!belief.in_bounds(c) || belief.at(c) == Belief::Occupied) {
        blocked = true;
        return false;
      }
      return true;
    });
    if (!blocked) ++count;
  }
  return count;
}

int vertex_utility(Point coords, const BeliefMap& belief, double sensor_range_m) {
  const auto f = frontiers(belief);
  return vertex_utility(coords, belief, f, sensor_range_m);
}

InformativeGraph insert_temp_vertex(InformativeGraph graph, Point external_robot_pose, double spacing_m) {
  const int covered = graph.find_vertex(external_robot_pose, spacing_m / 2.0);
  if (covered >= 0) {
    if (graph.vertices[covered].occupancy != -1) graph.vertices[covered].occupancy = 1;
    return graph;
  }
  const int anchor = nearest_vertex(graph, external_robot_pose);
  const int id = graph.size();
  Vertex v;
  v.coords = external_robot_pose;
  v.occupancy = 1;
  v.temporary = true;
  graph.vertices.push_back(v);
  graph.adjacency.emplace_back();
  if (anchor >= 0) {
    graph.adjacency[id].push_back(anchor);
    graph.adjacency[anchor].push_back(id);  // id is the largest index, order stays sorted
  }
  return graph;
}

InformativeGraph build_graph(const BeliefMap& belief, Point self_pose, std::span<const Point> other_poses,
                             std::span<const Point> visited, const GraphParams& params) {
  if (!belief.is_free(belief.cell_of(self_pose))) throw Error("build_graph: robot pose is not believed free");
  InformativeGraph g = build_lattice(belief.width(), belief.height(), belief.resolution(), params,
                                     [&](CellIndex c) { return belief.is_free(c); });
  if (g.vertices.empty()) throw Error("build_graph: no believed-free lattice vertex");

  const auto frontier_cells = frontiers(belief);
  for (Vertex& v : g.vertices) v.utility = vertex_utility(v.coords, belief, frontier_cells, params.sensor_range_m);
  mark_guideposts(g, visited, params.spacing_m);

  g.current_index = nearest_vertex(g, self_pose);
  g.vertices[g.current_index].occupancy = -1;
  for (const Point& p : other_poses) g = insert_temp_vertex(std::move(g), p, params.spacing_m);
  return g;
}

InformativeGraph ground_truth_structure(const GridMap& truth, const GraphParams& params) {
  InformativeGraph g = build_lattice(truth.width(), truth.height(), truth.resolution(), params,
                                     [&](CellIndex c) { return truth.is_free(c); });
  if (g.vertices.empty()) throw Error("ground_truth_structure: no free lattice vertex");
  return g;
}

InformativeGraph annotate_ground_truth(InformativeGraph g, const GridMap& truth, const BeliefMap& merged,
                                       std::span<const Point> all_poses, int robot, std::span<const Point> visited,
                                       const GraphParams& params) {
  if (!merged.same_frame(truth)) throw Error("annotate_ground_truth: frame mismatch");
  if (robot < 0 || robot >= static_cast<int>(all_poses.size())) throw Error("annotate_ground_truth: bad robot index");
  const double res = truth.resolution();
  const double r = params.sensor_range_m;
  const double r2 = r * r;
  for (Vertex& v : g.vertices) {
    const CellIndex lo = truth.cell_of({v.coords.x - r, v.coords.y - r});
    const CellIndex hi = truth.cell_of({v.coords.x + r, v.coords.y + r});
    int count = 0;
    for (int y = std::max(lo.y, 0); y <= std::min(hi.y, truth.height() - 1); ++y)
      for (int x = std::max(lo.x, 0); x <= std::min(hi.x, truth.width() - 1); ++x) {
        const double dx = (x + 0.5) * res - v.coords.x;
        const double dy = (y + 0.5) * res - v.coords.y;
        if (dx * dx + dy * dy > r2) continue;
        if (truth.at({x, y}) == Cell::Free && merged.at({x, y}) == Belief::Unknown) ++count;
      }
    v.utility = count;
    v.occupancy = 0;
  }
  mark_guideposts(g, visited, params.spacing_m);
  g.current_index = nearest_vertex(g, all_poses[robot]);
  for (int k = 0; k < static_cast<int>(all_poses.size()); ++k) {
    if (k == robot) continue;
    const int v = nearest_vertex(g, all_poses[k]);
    if (v >= 0 && v != g.current_index) g.vertices[v].occupancy = 1;
  }
  g.vertices[g.current_index].occupancy = -1;
  return g;
}

InformativeGraph build_ground_truth_graph(const GridMap& truth, const BeliefMap& merged,
                                          std::span<const Point> all_poses, int robot,
                                          std::span<const Point> visited, const GraphParams& params) {
  for (const Point& p : all_poses)
    if (!truth.is_free(truth.cell_of(p))) throw Error("build_ground_truth_graph: pose not in free space");
  return annotate_ground_truth(ground_truth_structure(truth, params), truth, merged, all_poses, robot, visited,
                               params);
}

void write_graph_dump(std::ostream& os, const InformativeGraph& g) {
  for (const Vertex& v : g.vertices)
    os << "V " << v.coords.x << ' ' << v.coords.y << ' ' << v.utility << ' ' << v.guidepost << ' ' << v.occupancy
       << '\n';
  for (int i = 0; i < g.size(); ++i)
    for (int j : g.adjacency[i])
      if (i < j) os << "E " << i << ' ' << j << '\n';
}

}  // namespace bwexp
