#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bwexp/belief.hpp"
#include "bwexp/graph.hpp"

namespace bwexp {

struct Viewpoint {
  Point position;
  int gain = 0;  // frontier cells newly covered when this viewpoint was picked
};

using ViewpointSet = std::vector<Viewpoint>;

/// Greedy set cover of frontier cells by believed-free lattice points (visibility as
/// in vertex_utility). Stops when the best remaining gain drops below min_gain.
/// Cells flagged in exhausted (indexed like the belief) are ignored.
ViewpointSet sample_viewpoints(const BeliefMap& merged, double sensor_range_m, int min_gain, double spacing_m,
                               const std::vector<char>* exhausted = nullptr);

/// Shortest 8-connected path lengths over believed-free cells from source to every
/// cell (infinity when unreachable). Diagonal steps cost sqrt(2) * resolution and may
/// not cut a corner of a non-free cell.
std::vector<double> grid_distance_field(const BeliefMap& belief, CellIndex source);

/// Symmetric matrix of grid path lengths between points (meters, infinity if unreachable).
Eigen::MatrixXd shortest_path_matrix(const std::vector<Point>& points, const BeliefMap& belief);

struct TourPlan {
  std::vector<std::vector<int>> tours;  // per robot, viewpoint indices in visiting order
  std::vector<double> lengths;          // open tour lengths from each robot's start
  std::vector<int> dropped;             // viewpoints unreachable from every robot
  std::vector<std::string> warnings;

  double max_length() const;
  double total_length() const;
};

/// Open-tour length for robot r. dist is (R + V) square: robots first, then viewpoints.
double tour_length(const Eigen::MatrixXd& dist, int n_robots, int robot, const std::vector<int>& tour);

/// Greedy min-max insertion refined by 2-opt, relocate and swap moves. Each accepted
/// move strictly decreases (max length, total length) lexicographically; the
/// objective after the initial insertion and after every accepted move is
/// appended to trace when given.
TourPlan solve_mtsp_heuristic(int n_robots, int n_viewpoints, const Eigen::MatrixXd& dist,
                              std::vector<std::pair<double, double>>* trace = nullptr);

/// Optimal min-max assignment by subset dynamic programming; practical up to ~12 viewpoints.
TourPlan solve_mtsp_exact(int n_robots, int n_viewpoints, const Eigen::MatrixXd& dist);

inline constexpr int kExactMtspLimit = 10;

/// Dispatches to the exact solver for small instances, else the heuristic.
/// Unreachable viewpoints are dropped with a warning.
TourPlan solve_mtsp(int n_robots, int n_viewpoints, const Eigen::MatrixXd& dist);

/// Dijkstra over navigable edges (Euclidean weights). parent[v] = predecessor or -1.
std::vector<double> graph_distances(const InformativeGraph& graph, int source, std::vector<int>* parent = nullptr);

/// First hop on the graph shortest path from the current vertex to target, or nullopt.
std::optional<int> first_hop(const InformativeGraph& graph, int target);

struct MtspConfig {
  double sensor_range_m = 20.0;
  // Viewpoints only claim frontiers this much inside the sensor range, so a frontier
  // at the edge of the range is actually cleared once the robot gets there.
  double coverage_margin_m = 1.0;
  int min_gain = 1;
  double max_hop_m = 0.0;  // path length per replanning step; 0 means graph spacing
  GraphParams graph;
};

struct MtspDecision {
  bool done = false;                          // no frontier left worth a viewpoint
  std::vector<std::optional<Point>> waypoint;  // next grid-path point per robot; nullopt holds
  ViewpointSet viewpoints;
  TourPlan plan;
};

/// Per-episode planner state: frontier cells that survived being sensed from close by.
struct MtspMemory {
  std::vector<char> exhausted;
};

/// One replanning round of the mTSP-based planner over the shared merged belief.
/// Robots follow grid shortest paths toward their first tour viewpoint.
MtspDecision mtsp_step(const BeliefMap& merged, const std::vector<Point>& robot_positions, const MtspConfig& config,
                       MtspMemory* memory = nullptr);

/// Uniform choice among navigable neighbours of the current vertex.
int random_policy(const InformativeGraph& graph, std::mt19937_64& rng);

/// Next hop toward the closest frontier cell: the cost of a frontier is the graph
/// distance to a vertex that sees its unknown side within reach_m plus the remaining straight
/// line. Frontiers whose best vertex is the current one are skipped. nullopt holds.
std::optional<int> nearest_frontier_policy(const InformativeGraph& graph, const BeliefMap& belief, double reach_m);

}  // namespace bwexp
