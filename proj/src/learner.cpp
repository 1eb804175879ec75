#include "bwexp/learner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace bwexp {

void check_transition(const Transition& t) {
  if (!t.obs || !t.next) throw Error("transition: missing observation");
  const int n = t.obs->robots();
  if (n < 1 || t.next->robots() != n) throw Error("transition: robot count mismatch");
  if (static_cast<int>(t.obs->critic.size()) != n || static_cast<int>(t.obs->critic_actions.size()) != n ||
      static_cast<int>(t.actions.size()) != n || static_cast<int>(t.rewards.size()) != n)
    throw Error("transition: per-robot field sizes disagree");
  if (!t.parts.empty() && static_cast<int>(t.parts.size()) != n) throw Error("transition: reward parts size");
  for (int i = 0; i < n; ++i) {
    const InformativeGraph& g = t.obs->policy[i];
    const int k = static_cast<int>(g.navigable_neighbors(g.current_index).size());
    if (k != t.obs->action_count(i)) throw Error("transition: critic action set does not match the neighbours");
    if (t.actions[i] < 0 || t.actions[i] >= k) throw Error("transition: action outside the neighbour set");
    if (!std::isfinite(t.rewards[i])) throw Error("transition: non-finite reward");
    for (int v : t.obs->critic_actions[i])
      if (v < 0 || v >= t.obs->critic[i].size()) throw Error("transition: critic action out of range");
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  check_transition(t);
  if (!items_.empty() && items_.front().obs->robots() != t.obs->robots())
    throw Error("ReplayBuffer: team size differs from stored transitions");
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, std::mt19937_64& rng) const {
  if (items_.empty()) throw Error("ReplayBuffer: sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) out.push_back(&items_[pick(rng)]);
  return out;
}

void TrainConfig::validate() const {
  if (n_robots < 1 || episodes < 0 || episode_len < 1 || batch_size < 1 || warmup_steps < 0 || workers < 1)
    throw Error("TrainConfig: sizes must be positive");
  if (buffer_capacity < 1) throw Error("TrainConfig: buffer capacity must be positive");
  if (!(learning_rate > 0.0) || critic_learning_rate < 0.0 || alpha_learning_rate < 0.0)
    throw Error("TrainConfig: learning rates must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("TrainConfig: gamma must lie in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) throw Error("TrainConfig: tau must lie in (0, 1]");
  if (updates_per_step < 0.0 || target_entropy_scale < 0.0 || !(init_alpha > 0.0))
    throw Error("TrainConfig: bad temperature settings");
  if (!uses_policy(mode)) throw Error("TrainConfig: mode must be ours or global_map");
  if (!(theta > 0.0 && theta <= 1.0)) throw Error("TrainConfig: theta must lie in (0, 1]");
  net.validate();
  sensor.validate();
  reward.validate();
}

namespace {

NetConfig with_seed(NetConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

nn::AdamConfig adam(double lr, double clip) {
  nn::AdamConfig a;
  a.learning_rate = lr;
  a.grad_clip_norm = clip;
  return a;
}

// Log-probabilities for every robot from one joint pass; messages stay on the tape.
std::vector<Var> joint_log_probs(const PolicyNet& policy, Tape& t, const JointObservation& obs) {
  const int n = obs.robots();
  std::vector<RobotEncoding> enc;
  for (int i = 0; i < n; ++i) enc.push_back(policy.encode_robot(t, obs.policy[i]));
  std::vector<Var> out(n);
  for (int i = 0; i < n; ++i) {
    if (enc[i].neighbors.empty()) continue;
    std::vector<Var> others;
    for (int j = 0; j < n; ++j)
      if (j != i) others.push_back(enc[j].message);
    out[i] = policy.action_log_probs(t, enc[i], others);
  }
  return out;
}

void require_finite(double v, const char* what, std::size_t index) {
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "sac_update: non-finite " << what << " at batch entry " << index;
    throw Error(msg.str());
  }
}

std::size_t robot_samples(const std::vector<const Transition*>& batch) {
  std::size_t m = 0;
  for (const Transition* t : batch) m += static_cast<std::size_t>(t->obs->robots());
  return m;
}

}  // namespace

SacAgent::SacAgent(const TrainConfig& config)
    : config_(config),
      policy_(with_seed(config.net, config.seed)),
      q1_(with_seed(config.net, config.seed + 1)),
      q2_(with_seed(config.net, config.seed + 2)),
      q1_target_(with_seed(config.net, config.seed + 1)),
      q2_target_(with_seed(config.net, config.seed + 2)),
      log_alpha_(alpha_store_.add("log_alpha", Matrix::Constant(1, 1, std::log(config.init_alpha)))),
      policy_opt_(policy_.params(), adam(config.learning_rate, config.grad_clip_norm)),
      q1_opt_(q1_.params(),
              adam(config.critic_learning_rate > 0 ? config.critic_learning_rate : config.learning_rate,
                   config.grad_clip_norm)),
      q2_opt_(q2_.params(),
              adam(config.critic_learning_rate > 0 ? config.critic_learning_rate : config.learning_rate,
                   config.grad_clip_norm)),
      alpha_opt_(alpha_store_,
                 adam(config.alpha_learning_rate > 0 ? config.alpha_learning_rate : config.learning_rate, 0.0)) {
  config_.validate();
  q1_target_.params().copy_values_from(q1_.params());
  q2_target_.params().copy_values_from(q2_.params());
}

double SacAgent::alpha() const { return std::exp(log_alpha()); }

std::vector<std::vector<double>> SacAgent::critic_targets(const std::vector<const Transition*>& batch) const {
  const double a = alpha();
  std::vector<std::vector<double>> y(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& tr = *batch[b];
    const int n = tr.obs->robots();
    y[b] = tr.rewards;
    if (tr.done || config_.gamma == 0.0) continue;
    const JointObservation& next = *tr.next;
    Tape t;
    const auto logp = joint_log_probs(policy_, t, next);
    for (int i = 0; i < n; ++i) {
      if (!logp[i].valid()) continue;
      const Vector lp = t.value(logp[i]);
      const Vector q1 = t.value(q1_target_.q_values(t, next.critic[i], next.critic_actions[i]));
      const Vector q2 = t.value(q2_target_.q_values(t, next.critic[i], next.critic_actions[i]));
      const Vector soft = q1.cwiseMin(q2) - a * lp;
      y[b][i] += config_.gamma * lp.array().exp().matrix().dot(soft);
      require_finite(y[b][i], "critic target", b);
    }
  }
  return y;
}

double SacAgent::critic_loss(const std::vector<const Transition*>& batch, int k,
                             const std::vector<std::vector<double>>& targets, bool backward,
                             std::vector<std::vector<Vector>>* q_out) {
  CriticNet& net = critic(k);
  const double inv_m = 1.0 / static_cast<double>(robot_samples(batch));
  if (q_out) q_out->assign(batch.size(), {});
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& tr = *batch[b];
    Tape t;
    Var loss;
    for (int i = 0; i < tr.obs->robots(); ++i) {
      const Var q = net.q_values(t, tr.obs->critic[i], tr.obs->critic_actions[i]);
      if (q_out) (*q_out)[b].push_back(t.value(q));
      const Var diff = t.add_scalar(t.element(q, tr.actions[i], 0), -targets[b][i]);
      const Var sq = t.scale(t.hadamard(diff, diff), 0.5 * inv_m);
      loss = loss.valid() ? t.add(loss, sq) : sq;
    }
    total += t.scalar(loss);
    require_finite(total, "critic loss", b);
    if (backward) t.backward(loss);
  }
  return total;
}

std::vector<std::vector<Vector>> SacAgent::min_q(const std::vector<const Transition*>& batch) const {
  std::vector<std::vector<Vector>> out(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const JointObservation& obs = *batch[b]->obs;
    for (int i = 0; i < obs.robots(); ++i) {
      Tape t;
      const Vector a = t.value(q1_.q_values(t, obs.critic[i], obs.critic_actions[i]));
      const Vector c = t.value(q2_.q_values(t, obs.critic[i], obs.critic_actions[i]));
      out[b].push_back(a.cwiseMin(c));
    }
  }
  return out;
}

double SacAgent::actor_loss(const std::vector<const Transition*>& batch, const std::vector<std::vector<Vector>>& q,
                            bool backward, double* entropy) {
  const double a = alpha();
  const double inv_m = 1.0 / static_cast<double>(robot_samples(batch));
  double total = 0.0;
  double ent = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const JointObservation& obs = *batch[b]->obs;
    Tape t;
    const auto logp = joint_log_probs(policy_, t, obs);
    Var loss;
    for (int i = 0; i < obs.robots(); ++i) {
      if (!logp[i].valid()) throw Error("actor_loss: stored state without neighbours");
      const Var p = t.exp(logp[i]);
      const Var inner = t.sub(t.scale(logp[i], a), t.constant(q[b][i]));
      const Var term = t.scale(t.sum(t.hadamard(p, inner)), inv_m);
      loss = loss.valid() ? t.add(loss, term) : term;
      const Vector lp = t.value(logp[i]);
      ent -= lp.array().exp().matrix().dot(lp) * inv_m;
    }
    total += t.scalar(loss);
    require_finite(total, "actor loss", b);
    if (backward) t.backward(loss);
  }
  if (entropy) *entropy = ent;
  return total;
}

double SacAgent::target_entropy(const std::vector<const Transition*>& batch) const {
  double k = 0.0;
  std::size_t m = 0;
  for (const Transition* tr : batch)
    for (int i = 0; i < tr->obs->robots(); ++i) {
      k += tr->obs->action_count(i);
      ++m;
    }
  const double mean_k = m ? k / static_cast<double>(m) : 1.0;
  return config_.target_entropy_scale * std::log(std::max(1.0, mean_k));
}

LossReport SacAgent::update(const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw Error("sac_update: empty batch");
  LossReport r;
  const auto y = critic_targets(batch);

  std::vector<std::vector<Vector>> qa, qb;
  q1_.params().zero_grad();
  r.critic = critic_loss(batch, 0, y, true, &qa);
  q1_opt_.step();
  q2_.params().zero_grad();
  r.critic += critic_loss(batch, 1, y, true, &qb);
  q2_opt_.step();

  // Pre-update critic values; they are constants for the actor.
  for (std::size_t b = 0; b < qa.size(); ++b)
    for (std::size_t i = 0; i < qa[b].size(); ++i) qa[b][i] = qa[b][i].cwiseMin(qb[b][i]);

  policy_.params().zero_grad();
  r.actor = actor_loss(batch, qa, true, &r.entropy);
  policy_opt_.step();

  r.target_entropy = target_entropy(batch);
  const double gap = r.entropy - r.target_entropy;
  r.alpha_loss = log_alpha() * gap;
  alpha_store_.zero_grad();
  log_alpha_.grad(0, 0) = gap;
  alpha_opt_.step();
  r.alpha = alpha();

  q1_target_.params().soft_update_from(q1_.params(), config_.tau);
  q2_target_.params().soft_update_from(q2_.params(), config_.tau);
  r.updates = 1;
  return r;
}

void SacAgent::save(const std::string& path, const std::map<std::string, std::string>& meta) const {
  Checkpoint ckpt;
  ckpt.config = policy_.config();
  ckpt.meta = meta;
  ckpt.meta["log_alpha"] = std::to_string(log_alpha());
  store_into(ckpt, "policy/", policy_.params());
  store_into(ckpt, "q1/", q1_.params());
  store_into(ckpt, "q2/", q2_.params());
  save_checkpoint(path, ckpt);
}

namespace {

std::shared_ptr<JointObservation> observe_joint(ExplorationEnv& env, bool privileged) {
  auto jo = std::make_shared<JointObservation>();
  jo->policy = env.observe();
  const int n = env.n_robots();
  jo->critic_actions.resize(n);
  if (privileged) jo->critic = env.privileged_graphs();
  else jo->critic = jo->policy;
  for (int i = 0; i < n; ++i) {
    const InformativeGraph& g = jo->policy[i];
    for (int v : g.navigable_neighbors(g.current_index)) {
      if (!privileged) {
        jo->critic_actions[i].push_back(v);
        continue;
      }
      const int u = jo->critic[i].find_vertex(g.vertices[v].coords, 1e-6);
      if (u < 0) throw Error("observe_joint: neighbour vertex missing from the ground-truth graph");
      jo->critic_actions[i].push_back(u);
    }
  }
  return jo;
}

EnvConfig env_config_of(const TrainConfig& c) {
  EnvConfig e;
  e.mode = c.mode;
  e.n_robots = c.n_robots;
  e.theta = c.theta;
  e.sensor = c.sensor;
  e.graph = c.graph;
  e.step_cap = c.episode_len;
  e.min_step_cap = 1;
  e.sense_interval_m = c.sense_interval_m;
  e.message_dim = c.net.d;
  e.reward = c.reward;
  e.compute_rewards = true;
  return e;
}

}  // namespace

std::vector<Transition> collect_episode(const PolicyNet& policy, const TrainConfig& config, const GridMap& map,
                                        std::uint64_t seed, EpisodeStats* stats) {
  ExplorationEnv env(map, env_config_of(config), seed);
  std::mt19937_64 rng(mix_seed(seed, 1));
  std::vector<Transition> out;
  auto obs = observe_joint(env, config.privileged);
  double reward_sum = 0.0;
  bool reached = false;
  while (!env.finished()) {
    const auto decisions = decide_with_policy(policy, env, true, rng);
    std::vector<int> targets(env.n_robots());
    std::vector<int> actions(env.n_robots());
    bool stuck = false;
    for (int i = 0; i < env.n_robots(); ++i) {
      if (decisions[i].action < 0) stuck = true;
      else {
        actions[i] = decisions[i].action;
        targets[i] = decisions[i].neighbors[decisions[i].action];
      }
    }
    if (stuck) break;
    const EnvStep s = env.step(targets);
    Transition tr;
    tr.obs = obs;
    tr.actions = actions;
    tr.rewards = s.rewards;
    tr.parts = s.parts;
    tr.done = s.done;
    reached = s.done;
    if (s.done) {
      tr.next = obs;
    } else {
      obs = observe_joint(env, config.privileged);
      tr.next = obs;
    }
    for (double r : s.rewards) reward_sum += r;
    out.push_back(std::move(tr));
  }
  if (stats) {
    stats->steps = env.step_index();
    stats->rate = env.rate();
    stats->makespan = env.makespan();
    stats->reached = reached;
    stats->mean_reward = out.empty() ? 0.0 : reward_sum / static_cast<double>(out.size() * env.n_robots());
  }
  return out;
}

namespace {

void write_curve_row(std::ostream& os, const TrainCurveRow& r) {
  const auto& s = r.stats;
  const auto& l = r.loss;
  os << s.episode << ',' << s.steps << ',' << std::setprecision(6) << s.rate << ',' << s.makespan << ','
     << s.mean_reward << ',' << l.critic << ',' << l.actor << ',' << l.alpha_loss << ',' << l.alpha << ','
     << l.entropy << '\n';
}

const char* kCurveHeader =
    "episode,steps,explored_rate,makespan,mean_reward,critic_loss,actor_loss,alpha_loss,temperature,entropy\n";

}  // namespace

void write_curve_csv(std::ostream& os, const std::vector<TrainCurveRow>& rows) {
  os << kCurveHeader;
  for (const auto& r : rows) write_curve_row(os, r);
}

TrainResult train(const TrainConfig& config, const std::vector<GridMap>& train_maps,
                  const std::vector<GridMap>& eval_maps, SacAgent& agent,
                  const std::function<void(const TrainCurveRow&)>& on_episode) {
  config.validate();
  if (train_maps.empty()) throw Error("train: no training maps");
  TrainResult result;
  ReplayBuffer buffer(config.buffer_capacity);
  std::mt19937_64 update_rng(mix_seed(config.seed, 0xba7c4));
  double update_credit = 0.0;

  std::ofstream curve;
  std::ofstream eval_curve;
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    curve.open(config.out_dir + "/curve.csv");
    if (!curve) throw Error("train: cannot write curve.csv");
    curve << kCurveHeader;
    if (config.eval_every > 0 && !eval_maps.empty()) {
      eval_curve.open(config.out_dir + "/eval_curve.csv");
      eval_curve << "episode,mean_makespan,std_makespan,reached_fraction\n";
    }
  }
  auto checkpoint = [&](const std::string& name, int episode) {
    if (config.out_dir.empty()) return;
    const std::string path = config.out_dir + "/" + name;
    try {
      agent.save(path, {{"episode", std::to_string(episode)}, {"seed", std::to_string(config.seed)},
                        {"privileged", config.privileged ? "true" : "false"}});
    } catch (const std::exception& e) {
      throw Error(std::string("train: checkpoint write failed: ") + e.what());
    }
  };

  RunConfig eval_cfg;
  eval_cfg.mode = config.mode;
  eval_cfg.n_robots = config.n_robots;
  eval_cfg.theta = config.eval_theta;
  eval_cfg.sensor = config.sensor;
  eval_cfg.graph = config.graph;
  eval_cfg.sense_interval_m = config.sense_interval_m;
  eval_cfg.record_timing = false;
  eval_cfg.seed = mix_seed(config.seed, 0xe7a1);

  int episode = 0;
  while (episode < config.episodes) {
    const int round = std::min(config.workers, config.episodes - episode);
    std::vector<std::vector<Transition>> collected(round);
    std::vector<EpisodeStats> stats(round);
    auto run = [&](int w, const PolicyNet& net) {
      const int ep = episode + w;
      const std::uint64_t s = mix_seed(config.seed, static_cast<std::uint64_t>(ep) + 1);
      const GridMap& map = train_maps[s % train_maps.size()];
      collected[w] = collect_episode(net, config, map, mix_seed(s, 2), &stats[w]);
      stats[w].episode = ep;
    };
    if (round == 1) {
      run(0, agent.policy());
    } else {
      // Workers act from a frozen copy of the current policy.
      std::vector<std::unique_ptr<PolicyNet>> snapshots;
      for (int w = 0; w < round; ++w) {
        snapshots.push_back(std::make_unique<PolicyNet>(agent.policy().config()));
        snapshots.back()->params().copy_values_from(agent.policy().params());
      }
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(round);
      for (int w = 0; w < round; ++w)
        pool.emplace_back([&, w] {
          try {
            run(w, *snapshots[w]);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      for (auto& t : pool) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }

    for (int w = 0; w < round; ++w) {
      TrainCurveRow row;
      row.stats = stats[w];
      for (Transition& t : collected[w]) buffer.push(std::move(t));
      result.total_steps += static_cast<long>(collected[w].size());
      if (result.total_steps >= config.warmup_steps && buffer.size() > 0) {
        update_credit += config.updates_per_step * static_cast<double>(collected[w].size());
        while (update_credit >= 1.0) {
          update_credit -= 1.0;
          const LossReport r = agent.update(buffer.sample(static_cast<std::size_t>(config.batch_size), update_rng));
          row.loss.critic += r.critic;
          row.loss.actor += r.actor;
          row.loss.alpha_loss += r.alpha_loss;
          row.loss.entropy += r.entropy;
          row.loss.updates += 1;
          ++result.total_updates;
        }
        if (row.loss.updates > 0) {
          const double k = 1.0 / row.loss.updates;
          row.loss.critic *= k;
          row.loss.actor *= k;
          row.loss.alpha_loss *= k;
          row.loss.entropy *= k;
        }
      }
      row.loss.alpha = agent.alpha();
      result.curve.push_back(row);
      if (curve.is_open()) {
        write_curve_row(curve, row);
        curve.flush();
      }
      if (on_episode) on_episode(row);

      const int done_episodes = row.stats.episode + 1;
      if (config.eval_every > 0 && !eval_maps.empty() && done_episodes % config.eval_every == 0) {
        const EvalSummary s = evaluate(eval_cfg, eval_maps, &agent.policy());
        result.eval_makespan.push_back({done_episodes, s.distance.mean});
        if (eval_curve.is_open()) {
          eval_curve << done_episodes << ',' << s.distance.mean << ',' << s.distance.std << ','
                     << s.reached_fraction << '\n';
          eval_curve.flush();
        }
      }
      if (config.checkpoint_every > 0 && done_episodes % config.checkpoint_every == 0)
        checkpoint("ckpt_" + std::to_string(done_episodes) + ".bin", done_episodes);
    }
    episode += round;
  }
  checkpoint("final.bin", episode);
  return result;
}

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = {
      "n_robots", "episodes", "episode_len", "theta", "buffer_capacity", "warmup_steps", "batch_size",
      "learning_rate", "critic_learning_rate", "alpha_learning_rate", "gamma", "tau", "updates_per_step",
      "target_entropy_scale", "init_alpha", "grad_clip_norm", "privileged", "mode", "workers", "seed", "d",
      "encoder_layers", "feed_forward", "ff_hidden", "utility_cap", "logit_clip", "sensor_range_m", "ray_count",
      "spacing_m", "neighbor_radius_m", "max_neighbors", "sense_interval_m", "momentum_coeff", "distance_coeff",
      "finish_bonus", "literal_momentum", "eval_every", "eval_theta", "checkpoint_every", "out_dir"};
  return keys;
}

TrainConfig train_config_from(const KeyValues& kv, TrainConfig c) {
  c.n_robots = kv_int(kv, "n_robots", c.n_robots);
  c.episodes = kv_int(kv, "episodes", c.episodes);
  c.episode_len = kv_int(kv, "episode_len", c.episode_len);
  c.theta = kv_double(kv, "theta", c.theta);
  c.buffer_capacity = kv_u64(kv, "buffer_capacity", c.buffer_capacity);
  c.warmup_steps = kv_int(kv, "warmup_steps", c.warmup_steps);
  c.batch_size = kv_int(kv, "batch_size", c.batch_size);
  c.learning_rate = kv_double(kv, "learning_rate", c.learning_rate);
  c.critic_learning_rate = kv_double(kv, "critic_learning_rate", c.critic_learning_rate);
  c.alpha_learning_rate = kv_double(kv, "alpha_learning_rate", c.alpha_learning_rate);
  c.gamma = kv_double(kv, "gamma", c.gamma);
  c.tau = kv_double(kv, "tau", c.tau);
  c.updates_per_step = kv_double(kv, "updates_per_step", c.updates_per_step);
  c.target_entropy_scale = kv_double(kv, "target_entropy_scale", c.target_entropy_scale);
  c.init_alpha = kv_double(kv, "init_alpha", c.init_alpha);
  c.grad_clip_norm = kv_double(kv, "grad_clip_norm", c.grad_clip_norm);
  c.privileged = kv_bool(kv, "privileged", c.privileged);
  c.mode = parse_mode(kv_string(kv, "mode", to_string(c.mode)));
  c.workers = kv_int(kv, "workers", c.workers);
  c.seed = kv_u64(kv, "seed", c.seed);
  c.net.d = kv_int(kv, "d", c.net.d);
  c.net.encoder_layers = kv_int(kv, "encoder_layers", c.net.encoder_layers);
  c.net.feed_forward = kv_bool(kv, "feed_forward", c.net.feed_forward);
  c.net.ff_hidden = kv_int(kv, "ff_hidden", c.net.ff_hidden);
  c.net.utility_cap = kv_double(kv, "utility_cap", c.net.utility_cap);
  c.net.logit_clip = kv_double(kv, "logit_clip", c.net.logit_clip);
  c.sensor.range_m = kv_double(kv, "sensor_range_m", c.sensor.range_m);
  c.sensor.ray_count = kv_int(kv, "ray_count", c.sensor.ray_count);
  c.graph.spacing_m = kv_double(kv, "spacing_m", c.graph.spacing_m);
  c.graph.neighbor_radius_m = kv_double(kv, "neighbor_radius_m", c.graph.neighbor_radius_m);
  c.graph.max_neighbors = kv_int(kv, "max_neighbors", c.graph.max_neighbors);
  c.graph.sensor_range_m = c.sensor.range_m;
  c.sense_interval_m = kv_double(kv, "sense_interval_m", c.sense_interval_m);
  c.reward.momentum_coeff = kv_double(kv, "momentum_coeff", c.reward.momentum_coeff);
  c.reward.distance_coeff = kv_double(kv, "distance_coeff", c.reward.distance_coeff);
  c.reward.finish_bonus = kv_double(kv, "finish_bonus", c.reward.finish_bonus);
  c.reward.literal_momentum = kv_bool(kv, "literal_momentum", c.reward.literal_momentum);
  c.eval_every = kv_int(kv, "eval_every", c.eval_every);
  c.eval_theta = kv_double(kv, "eval_theta", c.eval_theta);
  c.checkpoint_every = kv_int(kv, "checkpoint_every", c.checkpoint_every);
  c.out_dir = kv_string(kv, "out_dir", c.out_dir);
  c.validate();
  return c;
}

RunConfig run_config_from(const KeyValues& kv, RunConfig c) {
  c.n_robots = kv_int(kv, "n_robots", c.n_robots);
  c.theta = kv_double(kv, "theta", c.theta);
  c.sensor.range_m = kv_double(kv, "sensor_range_m", c.sensor.range_m);
  c.sensor.ray_count = kv_int(kv, "ray_count", c.sensor.ray_count);
  c.graph.spacing_m = kv_double(kv, "spacing_m", c.graph.spacing_m);
  c.graph.neighbor_radius_m = kv_double(kv, "neighbor_radius_m", c.graph.neighbor_radius_m);
  c.graph.max_neighbors = kv_int(kv, "max_neighbors", c.graph.max_neighbors);
  c.graph.sensor_range_m = c.sensor.range_m;
  c.sense_interval_m = kv_double(kv, "sense_interval_m", c.sense_interval_m);
  return c;
}

}  // namespace bwexp
