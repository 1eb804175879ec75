#include <doctest.h>

#include <random>
#include <sstream>

#include "bwexp/belief.hpp"
#include "support.hpp"

using namespace bwexp;

namespace {

// Brute-force frontier rule written out cell by cell.
bool frontier_oracle(const BeliefMap& b, int x, int y) {
  if (b.at({x, y}) != Belief::Free) return false;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const int nx = x + dx, ny = y + dy;
      if (nx < 0 || ny < 0 || nx >= b.width() || ny >= b.height()) continue;
      if (b.at({nx, ny}) != Belief::Unknown) continue;
      if (dx != 0 && dy != 0) {
        const bool side_a = b.at({nx, y}) == Belief::Occupied;
        const bool side_b = b.at({x, ny}) == Belief::Occupied;
        if (side_a && side_b) continue;
      }
      return true;
    }
  return false;
}

BeliefMap random_belief(int w, int h, std::mt19937_64& rng) {
  BeliefMap b(w, h, 1.0);
  std::uniform_int_distribution<int> label(0, 2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int l = label(rng);
      if (l > 0) b.set({x, y}, static_cast<Belief>(l));
    }
  return b;
}

}  // namespace

TEST_CASE("labels are monotone") {
  BeliefMap b(4, 3, 0.5);
  CHECK(b.known_count() == 0);
  b.set({1, 1}, Belief::Free);
  b.set({1, 1}, Belief::Free);
  CHECK(b.free_count() == 1);
  CHECK(b.known_count() == 1);
  CHECK_THROWS_AS(b.set({1, 1}, Belief::Occupied), Error);
  CHECK_THROWS_AS(b.set({1, 1}, Belief::Unknown), Error);
  CHECK_THROWS_AS(b.set({9, 1}, Belief::Free), Error);
}

TEST_CASE("sensing only ever grows the belief") {
  const GridMap m = generate_dungeon(testing::small_dungeon(5));
  BeliefMap b(m);
  CHECK(b.same_frame(m));
  std::mt19937_64 rng(5);
  std::vector<Point> free_points;
  for (int y = 0; y < m.height(); y += 3)
    for (int x = 0; x < m.width(); x += 3)
      if (m.is_free({x, y})) free_points.push_back(m.center_of({x, y}));
  for (int k = 0; k < 12; ++k) {
    const BeliefMap before = b;
    const Point p = free_points[rng() % free_points.size()];
    b = update_belief(b, sense(m, p, {5.0, 0}));
    CHECK(b.known_count() >= before.known_count());
    for (int y = 0; y < m.height(); ++y)
      for (int x = 0; x < m.width(); ++x) {
        if (before.at({x, y}) != Belief::Unknown) CHECK(b.at({x, y}) == before.at({x, y}));
        if (b.at({x, y}) == Belief::Free) CHECK(m.is_free({x, y}));
        if (b.at({x, y}) == Belief::Occupied) CHECK_FALSE(m.is_free({x, y}));
      }
  }
  CHECK(exploration_rate(b, m) > 0.0);
  CHECK(exploration_rate(b, m) <= 1.0);
}

TEST_CASE("frontier scan matches the brute-force rule") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const BeliefMap b = random_belief(9, 7, rng);
    std::vector<CellIndex> expected;
    for (int y = 0; y < b.height(); ++y)
      for (int x = 0; x < b.width(); ++x)
        if (frontier_oracle(b, x, y)) expected.push_back({x, y});
    CHECK(frontiers(b) == expected);
    for (int y = 0; y < b.height(); ++y)
      for (int x = 0; x < b.width(); ++x) CHECK(is_frontier(b, {x, y}) == frontier_oracle(b, x, y));
  }
}

TEST_CASE("a sealed diagonal is not a frontier") {
  BeliefMap b(2, 2, 1.0);
  b.set({0, 0}, Belief::Free);
  b.set({1, 0}, Belief::Occupied);
  b.set({0, 1}, Belief::Occupied);
  CHECK_FALSE(is_frontier(b, {0, 0}));
  BeliefMap open(2, 2, 1.0);
  open.set({0, 0}, Belief::Free);
  open.set({1, 0}, Belief::Occupied);
  open.set({0, 1}, Belief::Free);
  CHECK(is_frontier(open, {0, 0}));
}

TEST_CASE("merge is the union of knowledge") {
  BeliefMap a(3, 1, 1.0), b(3, 1, 1.0);
  a.set({0, 0}, Belief::Free);
  b.set({2, 0}, Belief::Occupied);
  b.set({0, 0}, Belief::Free);
  const std::vector<BeliefMap> parts{a, b};
  const BeliefMap m = merge(parts);
  CHECK(m.at({0, 0}) == Belief::Free);
  CHECK(m.at({1, 0}) == Belief::Unknown);
  CHECK(m.at({2, 0}) == Belief::Occupied);

  BeliefMap c(3, 1, 1.0);
  c.set({2, 0}, Belief::Free);
  const std::vector<BeliefMap> clash{b, c};
  CHECK_THROWS_AS(merge(clash), Error);
  const std::vector<BeliefMap> frames{a, BeliefMap(4, 1, 1.0)};
  CHECK_THROWS_AS(merge(frames), Error);
  CHECK_THROWS_AS(merge(std::span<const BeliefMap>{}), Error);
}

TEST_CASE("belief text round trip") {
  std::mt19937_64 rng(2);
  const BeliefMap b = random_belief(6, 4, rng);
  std::stringstream ss;
  write_belief(ss, b);
  const BeliefMap r = read_belief(ss);
  CHECK(r == b);
  CHECK(r.free_count() == b.free_count());
  CHECK(r.known_count() == b.known_count());
}
