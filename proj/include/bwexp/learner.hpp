#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "bwexp/env.hpp"
#include "bwexp/harness.hpp"
#include "bwexp/nn/optim.hpp"
#include "bwexp/policy_net.hpp"
#include "bwexp/rewards.hpp"

namespace bwexp {

/// Everything the team sees at one decision step. Policy graphs come from beliefs;
/// critic graphs are the privileged ground-truth graphs (or the policy graphs when
/// the critic is not privileged). critic_actions[i][k] is the critic-graph vertex
/// of robot i's k-th navigable neighbour.
struct JointObservation {
  std::vector<InformativeGraph> policy;
  std::vector<InformativeGraph> critic;
  std::vector<std::vector<int>> critic_actions;

  int robots() const { return static_cast<int>(policy.size()); }
  int action_count(int robot) const { return static_cast<int>(critic_actions[robot].size()); }
};

/// One decision step for the whole team; per-robot fields are indexed by robot.
struct Transition {
  std::shared_ptr<const JointObservation> obs;
  std::shared_ptr<const JointObservation> next;
  std::vector<int> actions;  // index into the robot's navigable neighbours
  std::vector<double> rewards;
  std::vector<RewardParts> parts;
  bool done = false;  // threshold reached; truncation bootstraps
};

/// Throws unless shapes agree, actions are in range and rewards are finite.
void check_transition(const Transition& t);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);  // evicts the oldest entry at capacity
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  /// Uniform with replacement.
  std::vector<const Transition*> sample(std::size_t batch, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

struct TrainConfig {
  int n_robots = 4;
  int episodes = 100;
  int episode_len = 128;  // hop cap per training episode
  double theta = 0.95;
  std::size_t buffer_capacity = 20000;
  int warmup_steps = 5000;
  int batch_size = 256;
  double learning_rate = 1e-5;
  double critic_learning_rate = 0.0;  // 0 means learning_rate
  double alpha_learning_rate = 0.0;   // 0 means learning_rate
  double gamma = 1.0;
  double tau = 0.005;
  double updates_per_step = 2.0;
  double target_entropy_scale = 0.3;
  double init_alpha = 0.2;
  double grad_clip_norm = 0.0;
  bool privileged = true;
  Mode mode = Mode::Ours;  // ours or global_map
  int workers = 1;
  std::uint64_t seed = 1;

  NetConfig net;
  SensorSpec sensor{20.0, 0};  // dense rays, see SensorSpec
  GraphParams graph;
  double sense_interval_m = 2.0;
  RewardConfig reward;  // zero rho / distance_coeff take the sensor defaults

  int eval_every = 0;  // episodes; 0 disables
  double eval_theta = 0.9;
  int checkpoint_every = 0;
  std::string out_dir;  // empty: no files

  void validate() const;
};

struct LossReport {
  double critic = 0.0;
  double actor = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;
  double entropy = 0.0;
  double target_entropy = 0.0;
  int updates = 0;
};

/// Policy, twin critics with targets, temperature and their optimisers.
class SacAgent {
 public:
  explicit SacAgent(const TrainConfig& config);

  PolicyNet& policy() { return policy_; }
  const PolicyNet& policy() const { return policy_; }
  CriticNet& critic(int k) { return k == 0 ? q1_ : q2_; }
  CriticNet& target(int k) { return k == 0 ? q1_target_ : q2_target_; }
  double alpha() const;
  double log_alpha() const { return log_alpha_.value(0, 0); }
  void set_log_alpha(double v) { log_alpha_.value(0, 0) = v; }

  /// Soft Bellman targets per robot: r + gamma (1 - done) sum pi (min Q_target - alpha log pi).
  std::vector<std::vector<double>> critic_targets(const std::vector<const Transition*>& batch) const;

  /// Mean squared-error critic loss (0.5 factor) of critic k against fixed targets;
  /// accumulates gradients into that critic when backward.
  double critic_loss(const std::vector<const Transition*>& batch, int k,
                     const std::vector<std::vector<double>>& targets, bool backward,
                     std::vector<std::vector<Vector>>* q_out = nullptr);

  /// Q-values of the online critics' minimum per (transition, robot), detached.
  std::vector<std::vector<Vector>> min_q(const std::vector<const Transition*>& batch) const;

  /// Expected alpha log pi - min Q under the current policy, with a joint forward
  /// pass so gradients reach other robots' messages. Reports mean entropy.
  double actor_loss(const std::vector<const Transition*>& batch, const std::vector<std::vector<Vector>>& q,
                    bool backward, double* entropy = nullptr);

  /// Target entropy 0.3 log(mean neighbour count) over the batch.
  double target_entropy(const std::vector<const Transition*>& batch) const;

  /// One full update: critics, actor, temperature, target soft-update.
  LossReport update(const std::vector<const Transition*>& batch);

  void save(const std::string& path, const std::map<std::string, std::string>& meta) const;

 private:
  TrainConfig config_;
  PolicyNet policy_;
  CriticNet q1_, q2_, q1_target_, q2_target_;
  nn::ParameterStore alpha_store_;
  nn::Parameter& log_alpha_;
  nn::Adam policy_opt_, q1_opt_, q2_opt_, alpha_opt_;
};

struct EpisodeStats {
  int episode = 0;
  int steps = 0;
  double rate = 0.0;
  double makespan = 0.0;
  double mean_reward = 0.0;  // per robot-step
  bool reached = false;
};

/// Runs one training episode with a sampled policy and returns its transitions.
std::vector<Transition> collect_episode(const PolicyNet& policy, const TrainConfig& config, const GridMap& map,
                                        std::uint64_t seed, EpisodeStats* stats);

struct TrainCurveRow {
  EpisodeStats stats;
  LossReport loss;
};

struct TrainResult {
  std::vector<TrainCurveRow> curve;
  std::vector<std::pair<int, double>> eval_makespan;  // (episode, mean makespan)
  long total_steps = 0;
  long total_updates = 0;
};

/// episode,steps,explored_rate,makespan,mean_reward,critic_loss,actor_loss,alpha_loss,temperature,entropy
void write_curve_csv(std::ostream& os, const std::vector<TrainCurveRow>& rows);

/// Parameter-shared SAC training over a map set. Writes curve.csv and checkpoints
/// into config.out_dir when set. on_episode is called after each ingested episode.
TrainResult train(const TrainConfig& config, const std::vector<GridMap>& train_maps,
                  const std::vector<GridMap>& eval_maps, SacAgent& agent,
                  const std::function<void(const TrainCurveRow&)>& on_episode = {});

/// Keys understood by train_config_from.
const std::vector<std::string>& train_config_keys();

/// key=value overrides on top of config.
TrainConfig train_config_from(const KeyValues& kv, TrainConfig base = {});
RunConfig run_config_from(const KeyValues& kv, RunConfig base = {});

}  // namespace bwexp
