#include "bwexp/env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

namespace bwexp {

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Ours: return "ours";
    case Mode::GlobalMap: return "global_map";
    case Mode::MtspBased: return "mtsp_based";
    case Mode::NearestFrontier: return "nearest_frontier";
    case Mode::Random: return "random";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  for (Mode m : {Mode::Ours, Mode::GlobalMap, Mode::MtspBased, Mode::NearestFrontier, Mode::Random})
    if (name == to_string(m)) return m;
  throw Error("unknown mode '" + name + "'");
}

void EnvConfig::validate() const {
  if (n_robots < 1) throw Error("EnvConfig: n_robots must be positive");
  if (!(theta > 0.0 && theta <= 1.0)) throw Error("EnvConfig: theta must lie in (0, 1]");
  sensor.validate();
  if (!(graph.spacing_m > 0.0) || !(graph.neighbor_radius_m >= graph.spacing_m) || graph.max_neighbors < 1)
    throw Error("EnvConfig: bad graph parameters");
  if (!(sense_interval_m > 0.0)) throw Error("EnvConfig: sense_interval_m must be positive");
  if (uses_policy(mode) && message_dim < 1) throw Error("EnvConfig: learned modes need message_dim");
  if (step_cap < 0 || min_step_cap < 1) throw Error("EnvConfig: bad step cap");
  reward.validate();
}

int derive_step_cap(const GridMap& truth, double sensor_range_m, int min_cap) {
  const double free_area = static_cast<double>(truth.free_count()) * truth.resolution() * truth.resolution();
  const double disc = std::numbers::pi * sensor_range_m * sensor_range_m;
  return std::max(min_cap, static_cast<int>(std::ceil(4.0 * free_area / disc)));
}

ExplorationEnv::ExplorationEnv(const GridMap& truth, const EnvConfig& config, std::uint64_t seed)
    : truth_(&truth), config_(config), ledger_(config.n_robots) {
  config_.validate();
  config_.graph.sensor_range_m = config_.sensor.range_m;
  const RewardConfig defaults = default_reward_config(config_.sensor.range_m, truth.resolution());
  if (config_.reward.rho == 0.0) config_.reward.rho = defaults.rho;
  if (config_.reward.distance_coeff == 0.0) config_.reward.distance_coeff = defaults.distance_coeff;
  truth_free_ = truth.free_count();
  if (truth_free_ == 0) throw Error("ExplorationEnv: map has no free cells");
  step_cap_ = config_.step_cap > 0 ? config_.step_cap : derive_step_cap(truth, config_.sensor.range_m, config_.min_step_cap);

  truth_structure_ = ground_truth_structure(truth, config_.graph);
  const int n = config_.n_robots;
  if (truth_structure_.size() < n) throw Error("ExplorationEnv: fewer lattice vertices than robots");

  // Robots start on distinct lattice vertices, breadth-first around one random vertex.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, truth_structure_.size() - 1);
  const int start = pick(rng);
  std::vector<int> order;
  std::vector<char> seen(truth_structure_.size(), 0);
  std::deque<int> queue{start};
  seen[start] = 1;
  while (!queue.empty() && static_cast<int>(order.size()) < n) {
    const int v = queue.front();
    queue.pop_front();
    order.push_back(v);
    for (int u : truth_structure_.adjacency[v])
      if (!seen[u]) {
        seen[u] = 1;
        queue.push_back(u);
      }
  }
  if (static_cast<int>(order.size()) < n) throw Error("ExplorationEnv: start component too small for the team");

  merged_ = BeliefMap(truth);
  beliefs_.assign(n, BeliefMap(truth));
  for (int i = 0; i < n; ++i) {
    positions_.push_back(truth_structure_.vertices[order[i]].coords);
    trajectories_.push_back({positions_.back()});
    sense_at(i, positions_.back());
  }
  shared_ = beliefs_;
  lengths_.assign(n, 0.0);
  momentum_.assign(n, Point{});
  received_poses_.assign(n, {});
}

void ExplorationEnv::sense_at(int robot, Point p) {
  const Observation obs = sense(*truth_, p, config_.sensor);
  beliefs_[robot].apply(obs);
  merged_.apply(obs);
}

const BeliefMap& ExplorationEnv::working_belief(int robot) const {
  return shares_maps(config_.mode) ? shared_.at(robot) : beliefs_.at(robot);
}

double ExplorationEnv::rate() const { return static_cast<double>(merged_.free_count()) / truth_free_; }

double ExplorationEnv::makespan() const { return *std::max_element(lengths_.begin(), lengths_.end()); }

const std::vector<InformativeGraph>& ExplorationEnv::observe() {
  const int n = config_.n_robots;

  std::vector<WirePacket> poses;
  for (int i = 0; i < n; ++i) poses.push_back({i, step_, PayloadKind::Pose, encode_pose(positions_[i])});
  const auto pose_inbox = broadcast(poses, n, ledger_);
  for (int i = 0; i < n; ++i) {
    received_poses_[i].clear();
    for (const WirePacket& p : pose_inbox[i]) received_poses_[i].push_back(decode_pose(p.payload));
  }

  if (shares_maps(config_.mode)) {
    std::vector<WirePacket> maps;
    for (int i = 0; i < n; ++i) maps.push_back({i, step_, PayloadKind::BeliefMap, encode_belief(beliefs_[i])});
    const auto map_inbox = broadcast(maps, n, ledger_);
    for (int i = 0; i < n; ++i) {
      std::vector<BeliefMap> parts{beliefs_[i]};
      for (const WirePacket& p : map_inbox[i])
        parts.push_back(decode_belief(p.payload, truth_->height(), truth_->width(), truth_->resolution()));
      shared_[i] = merge(parts);
    }
  }

  graphs_.clear();
  if (config_.mode != Mode::MtspBased)
    for (int i = 0; i < n; ++i)
      graphs_.push_back(
          build_graph(working_belief(i), positions_[i], received_poses_[i], trajectories_[i], config_.graph));
  observed_ = true;
  return graphs_;
}

std::vector<std::vector<nn::Vector>> ExplorationEnv::exchange_messages(const std::vector<nn::Vector>& messages) {
  if (!uses_policy(config_.mode)) throw Error("exchange_messages: mode sends no learned messages");
  if (!observed_) throw Error("exchange_messages: call observe() first");
  const int n = config_.n_robots;
  if (static_cast<int>(messages.size()) != n) throw Error("exchange_messages: one message per robot");
  std::vector<WirePacket> packets;
  for (int i = 0; i < n; ++i) {
    if (messages[i].size() != config_.message_dim) throw Error("exchange_messages: message length mismatch");
    packets.push_back({i, step_, PayloadKind::LearnedMessage, encode_learned(messages[i])});
  }
  const auto inbox = broadcast(packets, n, ledger_);
  std::vector<std::vector<nn::Vector>> out(n);
  for (int i = 0; i < n; ++i)
    for (const WirePacket& p : inbox[i]) out[i].push_back(decode_learned(p.payload, config_.message_dim));
  return out;
}

std::vector<InformativeGraph> ExplorationEnv::privileged_graphs() const {
  std::vector<InformativeGraph> out;
  for (int i = 0; i < config_.n_robots; ++i)
    out.push_back(annotate_ground_truth(truth_structure_, *truth_, merged_, positions_, i, trajectories_[i],
                                        config_.graph));
  return out;
}

EnvStep ExplorationEnv::step(const std::vector<int>& targets) {
  if (!observed_ || graphs_.size() != static_cast<std::size_t>(config_.n_robots))
    throw Error("ExplorationEnv::step: no graphs observed for this step");
  if (static_cast<int>(targets.size()) != config_.n_robots) throw Error("ExplorationEnv::step: one target per robot");
  std::vector<std::optional<Point>> waypoints(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0) continue;
    const InformativeGraph& g = graphs_[i];
    if (targets[i] >= g.size() || g.vertices[targets[i]].temporary || !g.has_edge(g.current_index, targets[i]))
      throw Error("ExplorationEnv::step: target is not a navigable neighbour");
    waypoints[i] = g.vertices[targets[i]].coords;
  }
  return step_to(waypoints);
}

EnvStep ExplorationEnv::step_to(const std::vector<std::optional<Point>>& waypoints) {
  if (finished_) throw Error("ExplorationEnv: episode already finished");
  if (!observed_) throw Error("ExplorationEnv: call observe() before moving");
  const int n = config_.n_robots;
  if (static_cast<int>(waypoints.size()) != n) throw Error("ExplorationEnv::step_to: one waypoint per robot");

  const BeliefMap before = merged_;
  const double rate_before = rate();
  const std::vector<Point> from = positions_;
  std::vector<double> hop(n, 0.0);

  for (int i = 0; i < n; ++i) {
    if (!waypoints[i]) continue;
    const Point a = positions_[i];
    const Point b = *waypoints[i];
    if (!segment_clear(*truth_, a, b)) throw Error("ExplorationEnv: hop crosses an obstacle");
    hop[i] = distance(a, b);
    const int samples = static_cast<int>(std::floor(hop[i] / config_.sense_interval_m));
    for (int k = 1; k <= samples; ++k) {
      const double s = k * config_.sense_interval_m / hop[i];
      if (s < 1.0) sense_at(i, a + s * (b - a));
    }
    sense_at(i, b);
    positions_[i] = b;
    trajectories_[i].push_back(b);
    lengths_[i] += hop[i];
  }

  ++step_;
  observed_ = false;
  EnvStep out;
  out.rate = rate();
  out.done = out.rate >= config_.theta;
  out.truncated = !out.done && step_ >= step_cap_;
  finished_ = out.done || out.truncated;

  if (config_.compute_rewards) {
    const RewardConfig& rc = config_.reward;
    const double xi = team_reward(before, merged_, rc.rho);
    const double finish = (out.done && rate_before < config_.theta) ? rc.finish_bonus : 0.0;
    for (int i = 0; i < n; ++i) {
      RewardParts p;
      p.observation = observation_reward(positions_[i], *truth_, before, config_.sensor.range_m, rc.rho);
      const Momentum m = momentum_reward(momentum_[i], from[i], positions_[i], rc.momentum_coeff, rc.literal_momentum);
      momentum_[i] = m.direction;
      p.momentum = m.lambda;
      p.team = xi;
      p.finish = finish;
      p.distance = rc.distance_coeff * hop[i];
      out.parts.push_back(p);
      out.rewards.push_back(step_reward(p));
    }
  }
  return out;
}

}  // namespace bwexp
