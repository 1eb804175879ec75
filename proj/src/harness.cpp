#include "bwexp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

namespace bwexp {

void RunConfig::validate() const {
  if (!(theta >= 0.9 && theta <= 1.0)) throw Error("RunConfig: theta must lie in [0.9, 1]");
  if (n_robots < 1) throw Error("RunConfig: n_robots must be positive");
  if (threads < 1) throw Error("RunConfig: threads must be positive");
}

EnvConfig RunConfig::env_config(int message_dim) const {
  EnvConfig e;
  e.mode = mode;
  e.n_robots = n_robots;
  e.theta = theta;
  e.sensor = sensor;
  e.graph = graph;
  e.step_cap = step_cap;
  e.min_step_cap = min_step_cap;
  e.sense_interval_m = sense_interval_m;
  e.message_dim = message_dim;
  e.compute_rewards = false;
  return e;
}

std::vector<PolicyOutput> decide_with_policy(const PolicyNet& policy, ExplorationEnv& env, bool sample,
                                             std::mt19937_64& rng) {
  const auto& graphs = env.graphs();
  const int n = env.n_robots();
  Tape tape;
  std::vector<RobotEncoding> enc;
  std::vector<Vector> messages;
  for (int i = 0; i < n; ++i) {
    enc.push_back(policy.encode_robot(tape, graphs[i]));
    messages.push_back(tape.value(enc.back().message));
  }
  const auto inbox = env.exchange_messages(messages);
  std::vector<PolicyOutput> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].neighbors = enc[i].neighbors;
    if (enc[i].neighbors.empty()) continue;
    std::vector<Var> others;
    for (const Vector& m : inbox[i]) others.push_back(tape.constant(m));
    out[i].log_probs = tape.value(policy.action_log_probs(tape, enc[i], others));
    out[i].action = choose_action(out[i].log_probs, sample, rng);
  }
  return out;
}

EpisodeResult run_episode(const RunConfig& config, const GridMap& map, const PolicyNet* policy,
                          std::uint64_t episode_seed) {
  config.validate();
  if (uses_policy(config.mode) && !policy) throw Error("run_episode: learned mode needs weights");
  const int d = policy ? policy->config().d : 0;
  ExplorationEnv env(map, config.env_config(uses_policy(config.mode) ? d : 0), episode_seed);
  std::mt19937_64 rng(mix_seed(episode_seed, 0x5eed));

  EpisodeResult res;
  double planning = 0.0;
  using Clock = std::chrono::steady_clock;
  MtspConfig mtsp_cfg;
  mtsp_cfg.sensor_range_m = config.sensor.range_m;
  mtsp_cfg.min_gain = config.mtsp_min_gain;
  mtsp_cfg.graph = config.graph;
  mtsp_cfg.graph.sensor_range_m = config.sensor.range_m;
  MtspMemory mtsp_memory;

  while (!env.finished()) {
    const auto t0 = Clock::now();
    env.observe();
    std::vector<std::optional<Point>> waypoints(config.n_robots);
    std::vector<int> targets(config.n_robots, -1);
    bool use_targets = true;

    switch (config.mode) {
      case Mode::Ours:
      case Mode::GlobalMap: {
        const auto outs = decide_with_policy(*policy, env, !config.greedy, rng);
        for (int i = 0; i < config.n_robots; ++i) {
          if (outs[i].action < 0) {
            res.aborted = true;
            res.abort_reason = "robot " + std::to_string(i) + " has no navigable neighbour";
            break;
          }
          targets[i] = outs[i].neighbors[outs[i].action];
        }
        break;
      }
      case Mode::NearestFrontier:
        for (int i = 0; i < config.n_robots; ++i)
          if (auto hop = nearest_frontier_policy(env.graphs()[i], env.working_belief(i), 1.5 * config.graph.spacing_m))
            targets[i] = *hop;
        break;
      case Mode::Random:
        for (int i = 0; i < config.n_robots; ++i) {
          const InformativeGraph& g = env.graphs()[i];
          if (g.navigable_neighbors(g.current_index).empty()) {
            res.aborted = true;
            res.abort_reason = "robot " + std::to_string(i) + " has no navigable neighbour";
            break;
          }
          targets[i] = random_policy(g, rng);
        }
        break;
      case Mode::MtspBased: {
        use_targets = false;
        // Every robot plans on the same shared map with the poses it received, so the
        // plans agree and robot 0's copy stands for all of them.
        std::vector<Point> believed{env.positions()[0]};
        for (Point p : env.received_poses()[0]) believed.push_back(p);
        const MtspDecision dec = mtsp_step(env.working_belief(0), believed, mtsp_cfg, &mtsp_memory);
        waypoints = dec.waypoint;
        break;
      }
    }
    planning += std::chrono::duration<double>(Clock::now() - t0).count();
    if (res.aborted) break;
    if (use_targets)
      env.step(targets);
    else
      env.step_to(waypoints);
  }

  res.lengths = env.path_lengths();
  res.makespan = env.makespan();
  res.steps = env.step_index();
  res.rate = env.rate();
  res.reached = !res.aborted && res.rate >= config.theta;
  for (int i = 0; i < config.n_robots; ++i) {
    res.uv.push_back(env.ledger().uv(i));
    res.dv.push_back(env.ledger().dv(i));
  }
  res.belief_map_bytes = env.ledger().uv_of(PayloadKind::BeliefMap);
  res.planning_s = config.record_timing ? planning : 0.0;
  res.ledger = env.ledger();
  return res;
}

Stat mean_std(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

EvalSummary evaluate(const RunConfig& config, const std::vector<GridMap>& maps, const PolicyNet* policy) {
  config.validate();
  if (maps.empty()) throw Error("evaluate: need at least one map");
  EvalSummary s;
  s.mode = config.mode;
  s.n_robots = config.n_robots;
  s.theta = config.theta;
  s.rows.resize(maps.size());

  auto run = [&](std::size_t i) {
    s.rows[i].map_id = static_cast<int>(i);
    s.rows[i].result = run_episode(config, maps[i], policy, mix_seed(config.seed, i));
  };
  const int threads = std::min<int>(config.threads, static_cast<int>(maps.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < maps.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < maps.size(); i += threads) run(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<double> d, uv, dv, t;
  int reached = 0;
  for (const EvalRow& r : s.rows) {
    d.push_back(r.result.makespan);
    uv.push_back(static_cast<double>(*std::max_element(r.result.uv.begin(), r.result.uv.end())));
    dv.push_back(static_cast<double>(*std::max_element(r.result.dv.begin(), r.result.dv.end())));
    t.push_back(r.result.planning_s);
    reached += r.result.reached ? 1 : 0;
  }
  s.distance = mean_std(d);
  s.uv = mean_std(uv);
  s.dv = mean_std(dv);
  s.time = mean_std(t);
  s.reached_fraction = static_cast<double>(reached) / static_cast<double>(s.rows.size());
  return s;
}

void write_eval_header(std::ostream& os) { os << "mode,map_id,n_robots,theta,D_m,UV_bytes,DV_bytes,T_s,steps,rate\n"; }

void write_eval_rows(std::ostream& os, const EvalSummary& s) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  for (const EvalRow& r : s.rows) {
    const EpisodeResult& e = r.result;
    os << to_string(s.mode) << ',' << r.map_id << ',' << s.n_robots << ',' << std::setprecision(4) << s.theta << ','
       << std::fixed << std::setprecision(3) << e.makespan << ',' << *std::max_element(e.uv.begin(), e.uv.end())
       << ',' << *std::max_element(e.dv.begin(), e.dv.end()) << ',' << std::setprecision(4) << e.planning_s << ','
       << e.steps << ',' << std::setprecision(5) << e.rate << '\n';
    os.flags(flags);
    os.precision(prec);
  }
}

std::uint64_t map_seed(std::uint64_t base, MapSplit split, int index) {
  if (index < 0 || index >= (1 << 20)) throw Error("map_seed: index out of range");
  return (base << 21) | (static_cast<std::uint64_t>(split) << 20) | static_cast<std::uint64_t>(index);
}

std::vector<GridMap> generate_map_set(const MapSetConfig& config) {
  if (config.count < 1) throw Error("generate_map_set: count must be positive");
  std::vector<GridMap> maps;
  for (int i = 0; i < config.count; ++i) {
    DungeonConfig d = config.dungeon;
    d.seed = map_seed(config.dungeon.seed, config.split, i);
    maps.push_back(generate_dungeon(d));
  }
  return maps;
}

void write_map_set(const std::string& dir, const std::vector<GridMap>& maps) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    std::ostringstream name;
    name << "map_" << std::setw(3) << std::setfill('0') << i << ".txt";
    save_map((std::filesystem::path(dir) / name.str()).string(), maps[i]);
  }
}

std::vector<GridMap> load_map_set(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir)) throw Error("load_map_set: not a directory: " + dir);
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("load_map_set: no maps in " + dir);
  std::vector<GridMap> maps;
  for (const auto& f : files) maps.push_back(load_map(f.string()));
  return maps;
}

DungeonConfig dungeon_for_size(double size_m, double resolution, double align_m, std::uint64_t seed) {
  DungeonConfig d;
  d.map_size_m = size_m;
  d.resolution = resolution;
  d.align_m = align_m;
  d.seed = seed;
  if (size_m < 100.0) {
    const double s = size_m / 100.0;
    d.min_room_m = std::max(4.0, 8.0 * s * 1.5);
    d.max_room_m = std::max(d.min_room_m, 24.0 * s * 1.2);
    d.min_rooms = std::max(2, static_cast<int>(std::round(8 * s)));
    d.max_rooms = std::max(d.min_rooms, static_cast<int>(std::round(15 * s)));
  }
  return d;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T, typename Parse>
T kv_get(const KeyValues& kv, const std::string& key, T fallback, Parse parse) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t used = 0;
    T v = parse(it->second, &used);
    if (used != it->second.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error("config: bad value for '" + key + "': " + it->second);
  }
}

}  // namespace

KeyValues parse_key_values(std::istream& is) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error("config line " + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
      throw Error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  return parse_key_values(in);
}

double kv_double(const KeyValues& kv, const std::string& key, double fallback) {
  return kv_get<double>(kv, key, fallback, [](const std::string& s, std::size_t* u) { return std::stod(s, u); });
}

int kv_int(const KeyValues& kv, const std::string& key, int fallback) {
  return kv_get<int>(kv, key, fallback, [](const std::string& s, std::size_t* u) { return std::stoi(s, u); });
}

std::uint64_t kv_u64(const KeyValues& kv, const std::string& key, std::uint64_t fallback) {
  return kv_get<std::uint64_t>(kv, key, fallback,
                               [](const std::string& s, std::size_t* u) { return std::stoull(s, u); });
}

bool kv_bool(const KeyValues& kv, const std::string& key, bool fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw Error("config: bad value for '" + key + "': " + it->second);
}

std::string kv_string(const KeyValues& kv, const std::string& key, const std::string& fallback) {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

}  // namespace bwexp
