#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "bwexp/graph.hpp"
#include "support.hpp"

using namespace bwexp;

namespace {

struct Scenario {
  GridMap truth;
  BeliefMap belief;
  Point pose;
};

Scenario explored(std::uint64_t seed) {
  Scenario s{generate_dungeon(testing::small_dungeon(seed)), {}, {}};
  s.belief = BeliefMap(s.truth);
  std::mt19937_64 rng(seed);
  std::vector<Point> free_points;
  for (int y = 0; y < s.truth.height(); y += 8)
    for (int x = 0; x < s.truth.width(); x += 8)
      if (s.truth.is_free({x, y})) free_points.push_back(s.truth.center_of({x, y}));
  s.pose = free_points[rng() % free_points.size()];
  s.belief.apply(sense(s.truth, s.pose, {8.0, 0}));
  return s;
}

GraphParams small_params() {
  GraphParams p;
  p.spacing_m = 2.0;
  p.neighbor_radius_m = 6.0;
  p.max_neighbors = 8;
  p.sensor_range_m = 8.0;
  return p;
}

// Dense point sampling along a segment; any non-free sample fails.
bool densely_clear(const BeliefMap& b, Point a, Point c) {
  const int n = 2000;
  for (int k = 0; k <= n; ++k) {
    const Point p = a + (static_cast<double>(k) / n) * (c - a);
    if (!b.is_free(b.cell_of(p))) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("graph edges are collision-free, symmetric and match the mask") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scenario s = explored(seed);
    const GraphParams params = small_params();
    const InformativeGraph g = build_graph(s.belief, s.pose, {}, {}, params);
    REQUIRE(g.size() > 0);
    const Eigen::MatrixXd mask = g.edge_mask();
    for (int i = 0; i < g.size(); ++i) {
      CHECK(std::is_sorted(g.adjacency[i].begin(), g.adjacency[i].end()));
      CHECK(static_cast<int>(g.adjacency[i].size()) <= params.max_neighbors);
      CHECK(s.belief.is_free(s.belief.cell_of(g.vertices[i].coords)));
      for (int j : g.adjacency[i]) {
        CHECK(j != i);
        CHECK(g.has_edge(j, i));
        CHECK(distance(g.vertices[i].coords, g.vertices[j].coords) <= params.neighbor_radius_m + 1e-9);
        CHECK(densely_clear(s.belief, g.vertices[i].coords, g.vertices[j].coords));
      }
      for (int j = 0; j < g.size(); ++j) CHECK((mask(i, j) == 0.0) == (i == j || g.has_edge(i, j)));
    }
    CHECK(g.vertices[g.current_index].occupancy == -1);
    CHECK(distance(g.vertices[g.current_index].coords, s.pose) <= params.spacing_m);
  }
}

TEST_CASE("lattice vertices sit on the spacing grid") {
  const Scenario s = explored(1);
  const GraphParams params = small_params();
  const InformativeGraph g = build_graph(s.belief, s.pose, {}, {}, params);
  const int step = lattice_step_cells(params.spacing_m, s.belief.resolution());
  CHECK(step == 8);
  int expected = 0;
  for (int y = 0; y < s.belief.height(); y += step)
    for (int x = 0; x < s.belief.width(); x += step) expected += s.belief.is_free({x, y}) ? 1 : 0;
  CHECK(g.size() == expected);
}

TEST_CASE("utility counts visible frontier cells") {
  // Corridor of known free cells; the unknown band on the right makes column 5 a frontier.
  auto corridor = [](bool obstacle) {
    BeliefMap b(8, 5, 1.0);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 6; ++x) {
        const bool wall = y == 0 || y == 4 || (obstacle && x == 3 && y == 2);
        b.set({x, y}, wall ? Belief::Occupied : Belief::Free);
      }
    return b;
  };
  const BeliefMap b = corridor(false);
  const auto f = frontiers(b);
  CHECK(f.size() == 3);
  CHECK(vertex_utility({0.5, 2.5}, b, 100.0) == 3);
  CHECK(vertex_utility({0.5, 2.5}, b, 5.0) == 1);  // only (5, 2) within 5 m
  // From slightly above the centre line the obstacle hides (5, 2) and (5, 1).
  CHECK(vertex_utility({0.5, 2.6}, corridor(true), 100.0) == 1);
}

TEST_CASE("guideposts and occupancy") {
  const Scenario s = explored(2);
  const GraphParams params = small_params();
  const InformativeGraph base = build_graph(s.belief, s.pose, {}, {}, params);
  const std::vector<Point> visited{s.pose};
  const InformativeGraph g = build_graph(s.belief, s.pose, {}, visited, params);
  int marked = 0;
  for (int i = 0; i < g.size(); ++i) {
    const bool near = distance(g.vertices[i].coords, s.pose) <= params.spacing_m / 2.0;
    CHECK(g.vertices[i].guidepost == (near ? 1 : 0));
    marked += g.vertices[i].guidepost;
    CHECK(base.vertices[i].guidepost == 0);
  }
  CHECK(marked >= 1);

  // Another robot on a vertex marks it; one far outside gets a temporary stand-in.
  const int other = base.adjacency[base.current_index].front();
  const std::vector<Point> others{base.vertices[other].coords};
  const InformativeGraph g2 = build_graph(s.belief, s.pose, others, {}, params);
  CHECK(g2.size() == base.size());
  CHECK(g2.vertices[other].occupancy == 1);

  const InformativeGraph g3 = insert_temp_vertex(base, {-50.0, -50.0}, params.spacing_m);
  CHECK(g3.size() == base.size() + 1);
  const Vertex& t = g3.vertices.back();
  CHECK(t.temporary);
  CHECK(t.occupancy == 1);
  REQUIRE(g3.adjacency.back().size() == 1);
  const int anchor = g3.adjacency.back().front();
  CHECK(g3.has_edge(anchor, g3.size() - 1));
  const auto nav = g3.navigable_neighbors(anchor);
  CHECK(std::find(nav.begin(), nav.end(), g3.size() - 1) == nav.end());
  CHECK(g3.find_vertex({-50.0, -50.0}, 1.0) == -1);
}

TEST_CASE("build_graph rejects poses outside believed free space") {
  const Scenario s = explored(3);
  CHECK_THROWS_AS(build_graph(s.belief, {0.01, 0.01}, {}, {}, small_params()), Error);
}

TEST_CASE("ground-truth graph annotates unknown free area") {
  const Scenario s = explored(4);
  const GraphParams params = small_params();
  const std::vector<Point> poses{s.pose};
  const InformativeGraph g = build_ground_truth_graph(s.truth, s.belief, poses, 0, {}, params);
  const double r2 = params.sensor_range_m * params.sensor_range_m;
  for (int i = 0; i < g.size(); i += 7) {
    int count = 0;
    for (int y = 0; y < s.truth.height(); ++y)
      for (int x = 0; x < s.truth.width(); ++x) {
        const Point c = s.truth.center_of({x, y});
        const Point d = c - g.vertices[i].coords;
        if (d.x * d.x + d.y * d.y <= r2 && s.truth.is_free({x, y}) && s.belief.at({x, y}) == Belief::Unknown) ++count;
      }
    CHECK(g.vertices[i].utility == count);
  }
  CHECK(g.vertices[g.current_index].occupancy == -1);
  // The structure covers every free lattice point of the truth, not only believed ones.
  const InformativeGraph believed = build_graph(s.belief, s.pose, {}, {}, params);
  CHECK(g.size() >= believed.size());
}

TEST_CASE("graph dump lists vertices then undirected edges") {
  const Scenario s = explored(5);
  const InformativeGraph g = build_graph(s.belief, s.pose, {}, {}, small_params());
  std::stringstream ss;
  write_graph_dump(ss, g);
  int v = 0, e = 0;
  std::string line;
  while (std::getline(ss, line)) {
    if (line[0] == 'V') ++v;
    if (line[0] == 'E') ++e;
  }
  int edges = 0;
  for (const auto& a : g.adjacency) edges += static_cast<int>(a.size());
  CHECK(v == g.size());
  CHECK(e * 2 == edges);
}
