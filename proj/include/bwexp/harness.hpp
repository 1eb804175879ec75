#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bwexp/baselines.hpp"
#include "bwexp/env.hpp"
#include "bwexp/policy_net.hpp"

namespace bwexp {

struct RunConfig {
  Mode mode = Mode::Ours;
  int n_robots = 4;
  double theta = 0.95;
  SensorSpec sensor{20.0, 0};  // dense rays, see SensorSpec
  GraphParams graph;
  double sense_interval_m = 2.0;
  int step_cap = 0;
  int min_step_cap = 128;
  int mtsp_min_gain = 1;
  bool greedy = true;          // argmax actions for learned modes; sampling otherwise
  bool record_timing = true;   // T_s is wall-clock and therefore not reproducible
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;  // theta must lie in [0.9, 1]
  EnvConfig env_config(int message_dim) const;
};

struct EpisodeResult {
  std::vector<double> lengths;  // L(psi_i)
  double makespan = 0.0;
  int steps = 0;
  double rate = 0.0;
  bool reached = false;  // rate >= theta before the cap
  bool aborted = false;
  std::string abort_reason;
  std::vector<std::uint64_t> uv, dv;
  std::uint64_t belief_map_bytes = 0;  // uploaded BELIEF_MAP payload, all robots
  double planning_s = 0.0;
  BandwidthLedger ledger;
};

/// Policy forward pass for every robot on the current graphs, including the
/// LEARNED_MSG exchange. Returns one PolicyOutput per robot.
std::vector<PolicyOutput> decide_with_policy(const PolicyNet& policy, ExplorationEnv& env, bool sample,
                                             std::mt19937_64& rng);

/// One episode; policy is required for learned modes and ignored otherwise.
EpisodeResult run_episode(const RunConfig& config, const GridMap& map, const PolicyNet* policy,
                          std::uint64_t episode_seed);

struct EvalRow {
  int map_id = 0;
  EpisodeResult result;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

Stat mean_std(const std::vector<double>& xs);

struct EvalSummary {
  Mode mode = Mode::Ours;
  int n_robots = 0;
  double theta = 0.0;
  std::vector<EvalRow> rows;
  Stat distance, uv, dv, time;  // uv / dv: worst robot per map
  double reached_fraction = 0.0;
};

/// Runs one episode per map (map i uses seed mix(config.seed, i)) and aggregates.
EvalSummary evaluate(const RunConfig& config, const std::vector<GridMap>& maps, const PolicyNet* policy);

/// mode,map_id,n_robots,theta,D_m,UV_bytes,DV_bytes,T_s,steps,rate
void write_eval_header(std::ostream& os);
void write_eval_rows(std::ostream& os, const EvalSummary& summary);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Map sets. Train and test seeds come from disjoint streams.
enum class MapSplit { Train = 0, Test = 1 };

struct MapSetConfig {
  int count = 10;
  DungeonConfig dungeon;
  MapSplit split = MapSplit::Test;
};

std::uint64_t map_seed(std::uint64_t base, MapSplit split, int index);
std::vector<GridMap> generate_map_set(const MapSetConfig& config);
void write_map_set(const std::string& dir, const std::vector<GridMap>& maps);
std::vector<GridMap> load_map_set(const std::string& dir);

/// Dungeon parameters scaled for small maps (rooms and counts shrink with the side length).
DungeonConfig dungeon_for_size(double size_m, double resolution, double align_m, std::uint64_t seed);

// Flat key=value configuration with '#' comments.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& is);
KeyValues load_key_values(const std::string& path);

double kv_double(const KeyValues& kv, const std::string& key, double fallback);
int kv_int(const KeyValues& kv, const std::string& key, int fallback);
std::uint64_t kv_u64(const KeyValues& kv, const std::string& key, std::uint64_t fallback);
bool kv_bool(const KeyValues& kv, const std::string& key, bool fallback);
std::string kv_string(const KeyValues& kv, const std::string& key, const std::string& fallback);

}  // namespace bwexp
