#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <vector>

#include "bwexp/belief.hpp"
#include "bwexp/world.hpp"

namespace bwexp {

struct GraphParams {
  double spacing_m = 4.0;
  double neighbor_radius_m = 12.0;
  int max_neighbors = 24;
  double sensor_range_m = 20.0;
};

struct Vertex {
  Point coords;
  int utility = 0;
  int guidepost = 0;
  int occupancy = 0;  // -1 observing robot, +1 another robot, 0 none
  // Stand-in for a robot outside the explored area: attention only, never a move target.
  bool temporary = false;
};

/// Policy (or critic) observation: lattice vertices with features, symmetric adjacency.
struct InformativeGraph {
  std::vector<Vertex> vertices;
  std::vector<std::vector<int>> adjacency;  // sorted, symmetric, no self entries
  int current_index = -1;
  double extent_x_m = 0.0;
  double extent_y_m = 0.0;

  int size() const { return static_cast<int>(vertices.size()); }

  /// N x N, 0 where attention is allowed (edges and the diagonal), 1 elsewhere.
  Eigen::MatrixXd edge_mask() const;

  /// Move targets from vertex i: adjacent, non-temporary vertices.
  std::vector<int> navigable_neighbors(int i) const;

  /// Index of the non-temporary vertex nearest p within tol meters, or -1.
  int find_vertex(Point p, double tol) const;

  bool has_edge(int i, int j) const;
};

/// Lattice cell indices for a spacing: every step-th cell in x and y.
int lattice_step_cells(double spacing_m, double resolution);

/// True iff every cell on the segment a-b is believed free.
bool segment_clear(const BeliefMap& belief, Point a, Point b);
bool segment_clear(const GridMap& truth, Point a, Point b);

/// Frontier cells within range of coords and not hidden behind believed-occupied cells.
int vertex_utility(Point coords, const BeliefMap& belief, double sensor_range_m);
int vertex_utility(Point coords, const BeliefMap& belief, std::span<const CellIndex> frontier_cells,
                   double sensor_range_m);

InformativeGraph build_graph(const BeliefMap& belief, Point self_pose, std::span<const Point> other_poses,
                             std::span<const Point> visited, const GraphParams& params);

/// Appends a stand-in vertex for a robot outside the graph, linked to its nearest
/// vertex. If a vertex already lies within spacing/2 it is marked occupied instead.
InformativeGraph insert_temp_vertex(InformativeGraph graph, Point external_robot_pose, double spacing_m);

/// Lattice and edges over ground-truth free space (no features).
InformativeGraph ground_truth_structure(const GridMap& truth, const GraphParams& params);

/// Fills utility (unknown-but-free cells in sensor range), occupancy and guidepost
/// on a ground_truth_structure for the robot at all_poses[robot].
InformativeGraph annotate_ground_truth(InformativeGraph base, const GridMap& truth, const BeliefMap& merged,
                                       std::span<const Point> all_poses, int robot, std::span<const Point> visited,
                                       const GraphParams& params);

InformativeGraph build_ground_truth_graph(const GridMap& truth, const BeliefMap& merged,
                                          std::span<const Point> all_poses, int robot,
                                          std::span<const Point> visited, const GraphParams& params);

/// "V x y u g occ" per vertex then "E i j" per undirected edge (i < j).
void write_graph_dump(std::ostream& os, const InformativeGraph& graph);

}  // namespace bwexp
