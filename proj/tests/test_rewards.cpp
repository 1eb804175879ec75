#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bwexp/rewards.hpp"
#include "support.hpp"

using namespace bwexp;

TEST_CASE("step reward is the signed sum of its parts") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const RewardParts p{u(rng), u(rng), u(rng), u(rng), u(rng)};
    CHECK(step_reward(p) == doctest::Approx(p.observation + p.momentum + p.team + p.finish - p.distance));
  }
  CHECK(step_reward({}) == 0.0);
}

TEST_CASE("sensor disc cell count") {
  CHECK(sensor_disc_cells(1.0, 1.0) == 5);
  CHECK(sensor_disc_cells(2.0, 1.0) == 13);
  // Gauss circle problem: count approaches the disc area in cells.
  const int big = sensor_disc_cells(20.0, 0.25);
  CHECK(std::abs(big - std::numbers::pi * 80.0 * 80.0) / big < 0.01);
  const RewardConfig c = default_reward_config(20.0, 0.25);
  CHECK(c.rho == doctest::Approx(1.0 / big));
  CHECK(c.distance_coeff == doctest::Approx(1.0 / 40.0));
  CHECK(c.momentum_coeff == doctest::Approx(0.1));
  CHECK(c.finish_bonus == doctest::Approx(20.0));
  RewardConfig bad = c;
  bad.rho = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("momentum rewards keeping direction") {
  const Momentum first = momentum_reward({0, 0}, {1, 1}, {3, 1});
  CHECK(first.lambda == 0.0);
  CHECK(first.direction == Point{1, 0});
  const Momentum straight = momentum_reward(first.direction, {3, 1}, {5, 1});
  CHECK(straight.lambda == doctest::Approx(0.1));
  const Momentum back = momentum_reward(first.direction, {3, 1}, {1, 1});
  CHECK(back.lambda == doctest::Approx(-0.1));
  const Momentum turn = momentum_reward(first.direction, {3, 1}, {3, 4}, 0.5);
  CHECK(turn.lambda == doctest::Approx(0.0));
  CHECK(turn.direction.y == doctest::Approx(1.0));
  const Momentum diag = momentum_reward({1, 0}, {0, 0}, {2, 2});
  CHECK(diag.lambda == doctest::Approx(0.1 / std::sqrt(2.0)));
  const Momentum hold = momentum_reward({0, 1}, {2, 2}, {2, 2});
  CHECK(hold.lambda == 0.0);
  CHECK(hold.direction == Point{0, 1});
  // Literal variant normalises the elementwise product of the positions.
  const Momentum lit = momentum_reward({1, 0}, {2, 3}, {4, 0}, 0.1, true);
  CHECK(lit.direction == Point{1, 0});
  CHECK(lit.lambda == doctest::Approx(0.1));
}

TEST_CASE("observation reward counts unknown free cells in range") {
  const GridMap m = testing::map_from_rows({"#######", "#.....#", "#.....#", "#######"});
  BeliefMap b(m);
  CHECK(observation_reward({1.5, 1.5}, m, b, 1.0, 1.0) == 3.0);  // self, right, up
  CHECK(observation_reward({1.5, 1.5}, m, b, 100.0, 0.5) == 5.0);
  b.set({2, 1}, Belief::Free);
  CHECK(observation_reward({1.5, 1.5}, m, b, 1.0, 1.0) == 2.0);
  CHECK_THROWS_AS(observation_reward({1.5, 1.5}, m, BeliefMap(3, 3, 1.0), 1.0, 1.0), Error);
}

TEST_CASE("team reward counts newly known free cells") {
  BeliefMap before(4, 1, 1.0);
  before.set({0, 0}, Belief::Free);
  BeliefMap after = before;
  after.set({1, 0}, Belief::Free);
  after.set({2, 0}, Belief::Free);
  after.set({3, 0}, Belief::Occupied);
  CHECK(team_reward(before, after, 0.25) == doctest::Approx(0.5));
  CHECK(team_reward(after, after, 1.0) == 0.0);
  CHECK_THROWS_AS(team_reward(after, before, 1.0), Error);
  CHECK_THROWS_AS(team_reward(before, BeliefMap(5, 1, 1.0), 1.0), Error);
}
