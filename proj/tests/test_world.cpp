#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include "bwexp/world.hpp"
#include "support.hpp"

using namespace bwexp;

namespace {

// Independent 4-connectivity check: labels components by repeated BFS.
int count_free_components(const GridMap& m) {
  std::vector<int> label(m.cells().size(), -1);
  int components = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      if (!m.is_free({x, y}) || label[m.index({x, y})] >= 0) continue;
      std::queue<CellIndex> q;
      q.push({x, y});
      label[m.index({x, y})] = components;
      while (!q.empty()) {
        const CellIndex c = q.front();
        q.pop();
        for (CellIndex n : {CellIndex{c.x + 1, c.y}, CellIndex{c.x - 1, c.y}, CellIndex{c.x, c.y + 1},
                            CellIndex{c.x, c.y - 1}})
          if (m.is_free(n) && label[m.index(n)] < 0) {
            label[m.index(n)] = components;
            q.push(n);
          }
      }
      ++components;
    }
  return components;
}

// Does the segment origin + t * dir, t in [0, len], pass through the cell (slab test)?
bool segment_touches_cell(Point o, Point dir, double len, CellIndex c, double res) {
  double t0 = 0.0, t1 = len;
  const double lo[2] = {c.x * res, c.y * res};
  const double hi[2] = {(c.x + 1) * res, (c.y + 1) * res};
  const double org[2] = {o.x, o.y};
  const double d[2] = {dir.x, dir.y};
  for (int a = 0; a < 2; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (org[a] < lo[a] || org[a] > hi[a]) return false;
      continue;
    }
    double ta = (lo[a] - org[a]) / d[a], tb = (hi[a] - org[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t0 <= t1 + 1e-9;
}

}  // namespace

TEST_CASE("grid map basics and text round trip") {
  GridMap m = testing::map_from_rows({"#####", "#..##", "#...#", "#####"}, 0.5);
  CHECK(m.width() == 5);
  CHECK(m.height() == 4);
  CHECK(m.free_count() == 5);
  CHECK(m.cell_of({0.74, 0.26}) == CellIndex{1, 0});
  CHECK(m.is_free({1, 1}));
  CHECK_FALSE(m.is_free({0, 0}));
  CHECK_FALSE(m.is_free({-1, 2}));

  std::stringstream ss;
  write_map(ss, m);
  CHECK(read_map(ss) == m);

  std::stringstream bad("3 1 1.0\n.x.\n");
  CHECK_THROWS_AS(read_map(bad), Error);
  CHECK_THROWS_AS(GridMap(0, 3, 1.0), Error);
  CHECK_THROWS_AS(GridMap(3, 3, 0.0), Error);
}

TEST_CASE("single room fills the interior") {
  DungeonConfig c;
  c.map_size_m = 10.0;
  c.resolution = 0.5;
  c.min_rooms = c.max_rooms = 1;
  c.min_room_m = c.max_room_m = 9.0;
  c.seed = 1;
  const GridMap m = generate_dungeon(c);
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const bool border = x == 0 || y == 0 || x == m.width() - 1 || y == m.height() - 1;
      CHECK(m.is_free({x, y}) == !border);
    }
}

TEST_CASE("dungeon generation is deterministic and connected") {
  DungeonConfig c;
  c.map_size_m = 100.0;
  c.seed = 7;
  const GridMap a = generate_dungeon(c);
  const GridMap b = generate_dungeon(c);
  CHECK(a == b);
  const double fraction = static_cast<double>(a.free_count()) / a.cells().size();
  CHECK(fraction > 0.2);
  CHECK(fraction < 0.9);
  CHECK(count_free_components(a) == 1);
  CHECK(free_space_connected(a));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GridMap m = generate_dungeon(testing::small_dungeon(seed));
    CHECK(count_free_components(m) == 1);
    CHECK(free_space_connected(m) == (count_free_components(m) == 1));
  }

  c.seed = 8;
  CHECK_FALSE(generate_dungeon(c) == a);
}

TEST_CASE("free_space_connected detects splits") {
  const GridMap split = testing::map_from_rows({"#####", "#.#.#", "#####"});
  CHECK_FALSE(free_space_connected(split));
  CHECK(count_free_components(split) == 2);
  // Diagonal contact is not 4-connectivity.
  const GridMap diag = testing::map_from_rows({"####", "#.##", "##.#", "####"});
  CHECK_FALSE(free_space_connected(diag));
  CHECK_FALSE(free_space_connected(GridMap(3, 3, 1.0, Cell::Occupied)));
}

TEST_CASE("invalid configurations are rejected") {
  DungeonConfig c;
  c.min_rooms = 5;
  c.max_rooms = 4;
  CHECK_THROWS_AS(generate_dungeon(c), Error);
  SensorSpec s{0.0, 360};
  CHECK_THROWS_AS(s.validate(), Error);
  s = {10.0, 4};
  CHECK_THROWS_AS(s.validate(), Error);
  s = {10.0, 0};
  CHECK_NOTHROW(s.validate());
  CHECK(s.rays_for(0.25) >= static_cast<int>(2 * std::numbers::pi * 10.0 / 0.125));
}

TEST_CASE("raycast agrees with dense sampling along the ray") {
  const GridMap m = generate_dungeon(testing::small_dungeon(3));
  std::mt19937_64 rng(11);
  std::vector<CellIndex> free_cells;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.is_free({x, y})) free_cells.push_back({x, y});
  std::uniform_int_distribution<std::size_t> pick(0, free_cells.size() - 1);
  std::uniform_real_distribution<double> jitter(0.05, 0.95), angle(0.0, 2.0 * std::numbers::pi);

  for (int trial = 0; trial < 300; ++trial) {
    const CellIndex c = free_cells[pick(rng)];
    const Point o{(c.x + jitter(rng)) * m.resolution(), (c.y + jitter(rng)) * m.resolution()};
    const double a = angle(rng);
    const Point dir{std::cos(a), std::sin(a)};
    const double range = 8.0;
    const RayTrace ray = raycast(m, o, dir, range);

    // Oracle: sample at t = (k + 0.5) / 997 of the range and stop at the first occupied cell.
    std::set<CellIndex> sampled;
    std::optional<CellIndex> sampled_hit;
    for (int k = 0; k < 997; ++k) {
      const double t = (k + 0.5) / 997.0 * range;
      const CellIndex s = m.cell_of(o + t * dir);
      if (!m.in_bounds(s)) break;
      if (!m.is_free(s)) {
        sampled_hit = s;
        break;
      }
      sampled.insert(s);
    }

    const std::set<CellIndex> traced(ray.free_cells.begin(), ray.free_cells.end());
    CHECK(traced.size() == ray.free_cells.size());
    for (const CellIndex& s : sampled) CHECK(traced.count(s) == 1);
    // Cells the samples stepped over must be genuine slivers of the segment.
    for (const CellIndex& t : traced) {
      CHECK(m.is_free(t));
      CHECK(segment_touches_cell(o, dir, range, t, m.resolution()));
    }
    if (sampled_hit) {
      REQUIRE(ray.hit.has_value());
      CHECK(segment_touches_cell(o, dir, range, *ray.hit, m.resolution()));
    }
    // Consecutive cells are 8-neighbours.
    for (std::size_t i = 1; i < ray.free_cells.size(); ++i) {
      CHECK(std::abs(ray.free_cells[i].x - ray.free_cells[i - 1].x) <= 1);
      CHECK(std::abs(ray.free_cells[i].y - ray.free_cells[i - 1].y) <= 1);
    }
  }
}

TEST_CASE("raycast preconditions and range cut-off") {
  const GridMap m = testing::map_from_rows({"#######", "#.....#", "#######"});
  CHECK_THROWS_AS(raycast(m, {0.5, 0.5}, {1, 0}, 3.0), Error);
  CHECK_THROWS_AS(raycast(m, {1.5, 1.5}, {0, 0}, 3.0), Error);
  const RayTrace short_ray = raycast(m, {1.5, 1.5}, {1, 0}, 1.0);
  CHECK(short_ray.free_cells.size() == 2);  // enters cell 2 at 0.5, cell 3 at 1.5 (not < 1.0)
  CHECK_FALSE(short_ray.hit);
  const RayTrace long_ray = raycast(m, {1.5, 1.5}, {1, 0}, 10.0);
  CHECK(long_ray.free_cells.size() == 5);
  REQUIRE(long_ray.hit);
  CHECK(*long_ray.hit == CellIndex{6, 1});
}

TEST_CASE("sensing is sound and nearly complete against brute-force visibility") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GridMap m = generate_dungeon(testing::small_dungeon(seed));
    std::mt19937_64 rng(seed);
    std::vector<CellIndex> free_cells;
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x)
        if (m.is_free({x, y})) free_cells.push_back({x, y});
    const CellIndex start = free_cells[rng() % free_cells.size()];
    const Point pose = m.center_of(start);
    const SensorSpec spec{6.0, 0};
    const Observation obs = sense(m, pose, spec);

    // Sorted by (y, x), unique, labels match the truth.
    for (std::size_t i = 1; i < obs.size(); ++i)
      CHECK(std::make_pair(obs[i - 1].cell.y, obs[i - 1].cell.x) < std::make_pair(obs[i].cell.y, obs[i].cell.x));
    std::set<CellIndex> seen;
    for (const ObservedCell& o : obs) {
      CHECK(o.label == m.at(o.cell));
      seen.insert(o.cell);
    }

    // Oracle: a free cell is visible when densely sampled points on the segment from
    // the pose to its centre never fall in an occupied cell (and the centre is in range).
    int visible = 0, recalled = 0;
    for (const CellIndex& c : free_cells) {
      const Point target = m.center_of(c);
      const double len = distance(pose, target);
      if (len > spec.range_m - m.resolution()) continue;
      bool clear = true;
      const int samples = std::max(2, static_cast<int>(len / (0.02 * m.resolution())));
      for (int k = 0; k <= samples && clear; ++k) {
        const Point p = pose + (static_cast<double>(k) / samples) * (target - pose);
        if (!m.is_free(m.cell_of(p))) clear = false;
      }
      if (!clear) continue;
      ++visible;
      recalled += seen.count(c) ? 1 : 0;
    }
    REQUIRE(visible > 0);
    CHECK(static_cast<double>(recalled) / visible >= 0.98);

    // Soundness: every observed cell lies within range of the pose (cell entry distance).
    for (const ObservedCell& o : obs) {
      const Point nearest{std::clamp(pose.x, o.cell.x * m.resolution(), (o.cell.x + 1) * m.resolution()),
                          std::clamp(pose.y, o.cell.y * m.resolution(), (o.cell.y + 1) * m.resolution())};
      CHECK(distance(pose, nearest) < spec.range_m + 1e-9);
    }
  }
}

TEST_CASE("map files round trip") {
  const GridMap m = generate_dungeon(testing::small_dungeon(4, 12.0));
  const std::string path = "test_world_map.txt";
  save_map(path, m);
  CHECK(load_map(path) == m);
  CHECK_THROWS_AS(load_map("does/not/exist.txt"), Error);
}
