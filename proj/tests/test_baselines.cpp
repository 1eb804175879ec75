#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "bwexp/baselines.hpp"
#include "bwexp/harness.hpp"
#include "support.hpp"

using namespace bwexp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd euclidean_instance(int robots, int viewpoints, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 20.0);
  std::vector<Point> pts;
  for (int i = 0; i < robots + viewpoints; ++i) pts.push_back({u(rng), u(rng)});
  Eigen::MatrixXd d(pts.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) d(i, j) = distance(pts[i], pts[j]);
  return d;
}

// Min-max open tours by brute force: best path per (robot, subset) over all
// orderings, then every assignment of viewpoints to robots.
double brute_force_min_max(int robots, int viewpoints, const Eigen::MatrixXd& d) {
  const int full = 1 << viewpoints;
  std::vector<std::vector<double>> best(robots, std::vector<double>(full, kInf));
  for (int r = 0; r < robots; ++r) {
    best[r][0] = 0.0;
    for (int s = 1; s < full; ++s) {
      std::vector<int> order;
      for (int v = 0; v < viewpoints; ++v)
        if (s >> v & 1) order.push_back(v);
      do {
        double len = d(r, robots + order[0]);
        for (std::size_t k = 1; k < order.size(); ++k) len += d(robots + order[k - 1], robots + order[k]);
        best[r][s] = std::min(best[r][s], len);
      } while (std::next_permutation(order.begin(), order.end()));
    }
  }
  double answer = kInf;
  std::vector<int> owner(viewpoints, 0);
  while (true) {
    std::vector<int> sets(robots, 0);
    for (int v = 0; v < viewpoints; ++v) sets[owner[v]] |= 1 << v;
    double worst = 0.0;
    for (int r = 0; r < robots; ++r) worst = std::max(worst, best[r][sets[r]]);
    answer = std::min(answer, worst);
    int k = 0;
    while (k < viewpoints && ++owner[k] == robots) owner[k++] = 0;
    if (k == viewpoints) break;
  }
  return answer;
}

void check_plan_consistent(const TourPlan& plan, int robots, int viewpoints, const Eigen::MatrixXd& d) {
  REQUIRE(static_cast<int>(plan.tours.size()) == robots);
  std::vector<int> seen;
  for (int r = 0; r < robots; ++r) {
    CHECK(plan.lengths[r] == doctest::Approx(tour_length(d, robots, r, plan.tours[r])));
    seen.insert(seen.end(), plan.tours[r].begin(), plan.tours[r].end());
  }
  std::sort(seen.begin(), seen.end());
  std::vector<int> all(viewpoints);
  std::iota(all.begin(), all.end(), 0);
  CHECK(seen == all);
}

// Dijkstra written out over a dense cost matrix of the 8-connected grid.
std::vector<double> grid_oracle(const BeliefMap& b, CellIndex src) {
  const int w = b.width(), h = b.height(), n = w * h;
  std::vector<double> dist(n, kInf);
  std::vector<bool> done(n, false);
  auto free = [&](int x, int y) { return x >= 0 && y >= 0 && x < w && y < h && b.at({x, y}) == Belief::Free; };
  if (!free(src.x, src.y)) return dist;
  dist[src.y * w + src.x] = 0.0;
  for (int it = 0; it < n; ++it) {
    int u = -1;
    for (int k = 0; k < n; ++k)
      if (!done[k] && dist[k] < kInf && (u < 0 || dist[k] < dist[u])) u = k;
    if (u < 0) break;
    done[u] = true;
    const int ux = u % w, uy = u / w;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if ((dx == 0 && dy == 0) || !free(ux + dx, uy + dy)) continue;
        if (dx != 0 && dy != 0 && !(free(ux + dx, uy) && free(ux, uy + dy))) continue;
        const double step = (dx != 0 && dy != 0 ? std::sqrt(2.0) : 1.0) * b.resolution();
        const int v = (uy + dy) * w + ux + dx;
        dist[v] = std::min(dist[v], dist[u] + step);
      }
  }
  return dist;
}

}  // namespace

TEST_CASE("exact mTSP matches brute force") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int robots = 1 + static_cast<int>(rng() % 3);
    const int viewpoints = 1 + static_cast<int>(rng() % 8);
    const Eigen::MatrixXd d = euclidean_instance(robots, viewpoints, rng);
    const TourPlan plan = solve_mtsp_exact(robots, viewpoints, d);
    check_plan_consistent(plan, robots, viewpoints, d);
    CHECK(plan.max_length() == doctest::Approx(brute_force_min_max(robots, viewpoints, d)).epsilon(1e-9));
    const TourPlan heuristic = solve_mtsp_heuristic(robots, viewpoints, d);
    check_plan_consistent(heuristic, robots, viewpoints, d);
    CHECK(heuristic.max_length() >= plan.max_length() - 1e-9);
  }
}

TEST_CASE("heuristic improvements strictly decrease the objective") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 30; ++trial) {
    const int robots = 2 + static_cast<int>(rng() % 3);
    const int viewpoints = 10 + static_cast<int>(rng() % 30);
    const Eigen::MatrixXd d = euclidean_instance(robots, viewpoints, rng);
    std::vector<std::pair<double, double>> trace;
    const TourPlan plan = solve_mtsp_heuristic(robots, viewpoints, d, &trace);
    check_plan_consistent(plan, robots, viewpoints, d);
    REQUIRE(!trace.empty());
    for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] < trace[k - 1]);
    CHECK(trace.back().first == doctest::Approx(plan.max_length()));
    CHECK(trace.back().second == doctest::Approx(plan.total_length()));
  }
}

TEST_CASE("unreachable viewpoints are dropped") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
  d(0, 1) = d(1, 0) = 2.0;
  d(0, 2) = d(2, 0) = d(1, 2) = d(2, 1) = kInf;
  const TourPlan plan = solve_mtsp(1, 2, d);
  CHECK(plan.dropped == std::vector<int>{1});
  CHECK(plan.tours[0] == std::vector<int>{0});
  CHECK_FALSE(plan.warnings.empty());
}

TEST_CASE("grid distance field matches Dijkstra") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    BeliefMap b(9, 8, 0.5);
    b.set({4, 4}, Belief::Free);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 9; ++x) {
        const auto r = rng() % 5;
        if (x == 4 && y == 4) continue;
        if (r < 3) b.set({x, y}, Belief::Free);
        else if (r == 3) b.set({x, y}, Belief::Occupied);
      }
    const auto field = grid_distance_field(b, {4, 4});
    const auto oracle = grid_oracle(b, {4, 4});
    REQUIRE(field.size() == oracle.size());
    for (std::size_t k = 0; k < field.size(); ++k) {
      if (oracle[k] == kInf) CHECK(field[k] == kInf);
      else CHECK(field[k] == doctest::Approx(oracle[k]));
    }
  }
}

TEST_CASE("graph distances match Floyd-Warshall") {
  const GridMap m = generate_dungeon(testing::small_dungeon(6));
  BeliefMap b(m);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) b.set({x, y}, m.is_free({x, y}) ? Belief::Free : Belief::Occupied);
  GraphParams params;
  params.spacing_m = 2.0;
  params.neighbor_radius_m = 6.0;
  params.max_neighbors = 8;
  params.sensor_range_m = 6.0;
  Point start{};
  for (int y = 0; y < m.height() && start.x == 0.0; y += 8)
    for (int x = 0; x < m.width(); x += 8)
      if (m.is_free({x, y})) {
        start = m.center_of({x, y});
        break;
      }
  const InformativeGraph g = build_graph(b, start, {}, {}, params);
  const int n = g.size();
  Eigen::MatrixXd fw = Eigen::MatrixXd::Constant(n, n, kInf);
  for (int i = 0; i < n; ++i) {
    fw(i, i) = 0.0;
    for (int j : g.adjacency[i]) fw(i, j) = distance(g.vertices[i].coords, g.vertices[j].coords);
  }
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) fw(i, j) = std::min(fw(i, j), fw(i, k) + fw(k, j));
  std::vector<int> parent;
  const auto dist = graph_distances(g, g.current_index, &parent);
  for (int j = 0; j < n; ++j) {
    if (fw(g.current_index, j) == kInf) {
      CHECK(dist[j] == kInf);
      continue;
    }
    CHECK(dist[j] == doctest::Approx(fw(g.current_index, j)));
    if (j != g.current_index) {
      const int p = parent[j];
      REQUIRE(p >= 0);
      CHECK(dist[j] == doctest::Approx(dist[p] + distance(g.vertices[p].coords, g.vertices[j].coords)));
      const auto hop = first_hop(g, j);
      REQUIRE(hop);
      CHECK(g.has_edge(g.current_index, *hop));
    }
  }
}

TEST_CASE("random policy picks navigable neighbours uniformly") {
  InformativeGraph g;
  for (int i = 0; i < 4; ++i) g.vertices.push_back({{double(i), 0.0}});
  g.vertices[3].temporary = true;
  g.adjacency = {{1, 2, 3}, {0}, {0}, {0}};
  g.current_index = 0;
  std::mt19937_64 rng(34);
  int ones = 0;
  for (int k = 0; k < 4000; ++k) {
    const int a = random_policy(g, rng);
    CHECK((a == 1 || a == 2));
    ones += a == 1;
  }
  CHECK(std::abs(ones / 4000.0 - 0.5) < 0.04);
}

TEST_CASE("viewpoints cover every reachable frontier") {
  const GridMap m = generate_dungeon(testing::small_dungeon(7));
  BeliefMap b(m);
  const Point p = [&] {
    for (int y = 0; y < m.height(); y += 4)
      for (int x = 0; x < m.width(); x += 4)
        if (m.is_free({x, y})) return m.center_of({x, y});
    return Point{};
  }();
  b.apply(sense(m, p, {6.0, 0}));
  const ViewpointSet vps = sample_viewpoints(b, 6.0, 1, 2.0);
  CHECK(!vps.empty());
  int total_gain = 0;
  for (std::size_t k = 0; k < vps.size(); ++k) {
    CHECK(b.is_free(b.cell_of(vps[k].position)));
    CHECK(vps[k].gain >= 1);
    if (k > 0) CHECK(vps[k].gain <= vps[k - 1].gain);
    total_gain += vps[k].gain;
  }
  CHECK(total_gain <= static_cast<int>(frontiers(b).size()));
}

TEST_CASE("baselines finish a small map") {
  const GridMap m = generate_dungeon(dungeon_for_size(30.0, 0.25, 2.0, 11));
  for (Mode mode : {Mode::MtspBased, Mode::NearestFrontier}) {
    RunConfig c;
    c.mode = mode;
    c.n_robots = 2;
    c.theta = 0.9;
    c.sensor = {10.0, 0};
    c.graph.spacing_m = 2.0;
    c.graph.neighbor_radius_m = 6.0;
    c.graph.sensor_range_m = 10.0;
    c.record_timing = false;
    const EpisodeResult r = run_episode(c, m, nullptr, 5);
    CHECK_MESSAGE(r.reached, to_string(mode));
    CHECK(r.rate >= 0.9);
    CHECK_FALSE(r.aborted);
    CHECK(r.makespan == doctest::Approx(*std::max_element(r.lengths.begin(), r.lengths.end())));
  }
}
