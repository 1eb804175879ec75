#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "bwexp/learner.hpp"

using namespace bwexp;

namespace {

// Single robot on a two-vertex graph: one navigable neighbour.
std::shared_ptr<const JointObservation> two_vertex_obs() {
  InformativeGraph g;
  g.vertices = {Vertex{{1.0, 1.0}}, Vertex{{3.0, 1.0}}};
  g.vertices[0].occupancy = -1;
  g.adjacency = {{1}, {0}};
  g.current_index = 0;
  g.extent_x_m = g.extent_y_m = 4.0;
  auto obs = std::make_shared<JointObservation>();
  obs->policy = {g};
  obs->critic = {g};
  obs->critic_actions = {{1}};
  return obs;
}

Transition synthetic(double reward) {
  Transition t;
  t.obs = t.next = two_vertex_obs();
  t.actions = {0};
  t.rewards = {reward};
  return t;
}

TrainConfig tiny_train_config() {
  TrainConfig c;
  c.n_robots = 2;
  c.episodes = 3;
  c.episode_len = 12;
  c.theta = 0.9;
  c.warmup_steps = 4;
  c.batch_size = 4;
  c.updates_per_step = 0.5;
  c.learning_rate = 1e-3;
  c.net.d = 8;
  c.net.encoder_layers = 1;
  c.sensor = {3.0, 0};
  c.graph.spacing_m = 2.0;
  c.graph.neighbor_radius_m = 6.0;
  c.graph.max_neighbors = 8;
  c.graph.sensor_range_m = 3.0;
  c.seed = 3;
  return c;
}

std::vector<GridMap> tiny_maps(int count) {
  std::vector<GridMap> maps;
  for (int i = 0; i < count; ++i) maps.push_back(generate_dungeon(dungeon_for_size(16.0, 0.25, 2.0, 100 + i)));
  return maps;
}

}  // namespace

TEST_CASE("replay buffer is FIFO at capacity") {
  ReplayBuffer buffer(3);
  for (int k = 0; k < 5; ++k) buffer.push(synthetic(k));
  REQUIRE(buffer.size() == 3);
  CHECK(buffer[0].rewards[0] == 2.0);
  CHECK(buffer[2].rewards[0] == 4.0);
  CHECK_THROWS_AS(ReplayBuffer(0), Error);
}

TEST_CASE("replay sampling is uniform with replacement") {
  ReplayBuffer buffer(4);
  for (int k = 0; k < 4; ++k) buffer.push(synthetic(k));
  std::mt19937_64 rng(51);
  std::vector<int> counts(4, 0);
  const int draws = 40000;
  for (const Transition* t : buffer.sample(draws, rng)) ++counts[static_cast<int>(t->rewards[0])];
  for (int c : counts) CHECK(std::abs(c / double(draws) - 0.25) < 0.01);
}

TEST_CASE("malformed transitions are rejected") {
  CHECK_NOTHROW(check_transition(synthetic(1.0)));
  Transition bad = synthetic(1.0);
  bad.actions = {1};
  CHECK_THROWS_AS(check_transition(bad), Error);
  bad = synthetic(std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(check_transition(bad), Error);
  bad = synthetic(1.0);
  bad.rewards = {1.0, 2.0};
  CHECK_THROWS_AS(check_transition(bad), Error);
  bad = synthetic(1.0);
  bad.next = nullptr;
  CHECK_THROWS_AS(check_transition(bad), Error);
  ReplayBuffer buffer(2);
  CHECK_THROWS_AS(buffer.push(bad), Error);
}

TEST_CASE("collected episodes are well formed") {
  const TrainConfig c = tiny_train_config();
  const auto maps = tiny_maps(1);
  SacAgent agent(c);
  EpisodeStats stats;
  const auto ts = collect_episode(agent.policy(), c, maps[0], 7, &stats);
  REQUIRE(!ts.empty());
  CHECK(static_cast<int>(ts.size()) == stats.steps);
  CHECK(static_cast<int>(ts.size()) <= c.episode_len);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    CHECK_NOTHROW(check_transition(ts[k]));
    CHECK(ts[k].obs->robots() == 2);
    if (k + 1 < ts.size()) {
      CHECK_FALSE(ts[k].done);
      CHECK(ts[k].next == ts[k + 1].obs);
    }
    for (int i = 0; i < 2; ++i) CHECK(ts[k].rewards[i] == doctest::Approx(step_reward(ts[k].parts[i])));
  }
  CHECK(ts.back().done == stats.reached);
}

TEST_CASE("terminal targets are the rewards and tau 1 copies the critics") {
  TrainConfig c = tiny_train_config();
  c.tau = 1.0;
  const auto maps = tiny_maps(1);
  SacAgent agent(c);
  auto ts = collect_episode(agent.policy(), c, maps[0], 8, nullptr);
  REQUIRE(ts.size() >= 2);
  std::vector<const Transition*> batch;
  for (auto& t : ts) {
    t.done = true;
    batch.push_back(&t);
  }
  const auto targets = agent.critic_targets(batch);
  for (std::size_t b = 0; b < batch.size(); ++b)
    for (int i = 0; i < 2; ++i) CHECK(targets[b][i] == batch[b]->rewards[i]);

  CHECK(agent.critic(0).params().values_equal(agent.target(0).params()));
  const LossReport report = agent.update(batch);
  CHECK(report.updates == 1);
  CHECK(std::isfinite(report.critic));
  CHECK(std::isfinite(report.actor));
  CHECK(agent.critic(0).params().values_equal(agent.target(0).params()));
  CHECK(agent.critic(1).params().values_equal(agent.target(1).params()));
  CHECK(report.target_entropy == doctest::Approx(agent.target_entropy(batch)));
}

TEST_CASE("critic loss gradient matches finite differences") {
  TrainConfig c = tiny_train_config();
  const auto maps = tiny_maps(1);
  SacAgent agent(c);
  const auto ts = collect_episode(agent.policy(), c, maps[0], 9, nullptr);
  std::vector<const Transition*> batch{&ts[0], &ts[ts.size() / 2]};
  const auto targets = agent.critic_targets(batch);
  nn::ParameterStore& store = agent.critic(0).params();
  store.zero_grad();
  agent.critic_loss(batch, 0, targets, true);
  std::mt19937_64 rng(52);
  double diff = 0.0, norm = 0.0;
  const double eps = 1e-5;
  for (int probe = 0; probe < 60; ++probe) {
    nn::Parameter& p = store[rng() % store.size()];
    const Eigen::Index i = static_cast<Eigen::Index>(rng() % p.value.size());
    const double keep = p.value.data()[i];
    p.value.data()[i] = keep + eps;
    const double up = agent.critic_loss(batch, 0, targets, false);
    p.value.data()[i] = keep - eps;
    const double down = agent.critic_loss(batch, 0, targets, false);
    p.value.data()[i] = keep;
    const double fd = (up - down) / (2 * eps);
    diff += (fd - p.grad.data()[i]) * (fd - p.grad.data()[i]);
    norm += fd * fd;
  }
  CHECK(std::sqrt(diff) <= 1e-3 * std::max(1e-8, std::sqrt(norm)));
}

TEST_CASE("training is deterministic for a fixed seed") {
  const TrainConfig c = tiny_train_config();
  const auto maps = tiny_maps(2);
  SacAgent a(c), b(c);
  const TrainResult ra = train(c, maps, {}, a);
  const TrainResult rb = train(c, maps, {}, b);
  REQUIRE(ra.curve.size() == 3);
  CHECK(ra.total_updates > 0);
  std::ostringstream ca, cb;
  write_curve_csv(ca, ra.curve);
  write_curve_csv(cb, rb.curve);
  CHECK(ca.str() == cb.str());
  CHECK(a.policy().params().values_equal(b.policy().params()));
  CHECK(a.log_alpha() == b.log_alpha());
}

TEST_CASE("train config keys override defaults") {
  const KeyValues kv{{"batch_size", "7"}, {"gamma", "0.5"}, {"privileged", "false"}, {"d", "12"}};
  const TrainConfig c = train_config_from(kv);
  CHECK(c.batch_size == 7);
  CHECK(c.gamma == 0.5);
  CHECK_FALSE(c.privileged);
  CHECK(c.net.d == 12);
  CHECK(c.learning_rate == TrainConfig{}.learning_rate);
  for (const auto& [k, v] : kv)
    CHECK(std::find(train_config_keys().begin(), train_config_keys().end(), k) != train_config_keys().end());
  TrainConfig bad;
  bad.gamma = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
}
