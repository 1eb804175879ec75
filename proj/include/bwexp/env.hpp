#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bwexp/belief.hpp"
#include "bwexp/comms.hpp"
#include "bwexp/graph.hpp"
#include "bwexp/rewards.hpp"
#include "bwexp/world.hpp"

namespace bwexp {

enum class Mode { Ours, GlobalMap, MtspBased, NearestFrontier, Random };

const char* to_string(Mode mode);
Mode parse_mode(const std::string& name);

inline bool uses_policy(Mode m) { return m == Mode::Ours || m == Mode::GlobalMap; }
inline bool shares_maps(Mode m) { return m == Mode::GlobalMap || m == Mode::MtspBased; }

struct EnvConfig {
  Mode mode = Mode::Ours;
  int n_robots = 4;
  double theta = 0.95;
  SensorSpec sensor;
  GraphParams graph;  // graph.sensor_range_m is overridden by sensor.range_m
  int step_cap = 0;   // 0 derives it from the map
  int min_step_cap = 128;
  double sense_interval_m = 2.0;  // extra scans along each hop
  int message_dim = 0;            // learned message length (policy modes)
  RewardConfig reward;            // zero rho / distance_coeff take the sensor defaults
  bool compute_rewards = true;

  void validate() const;
};

/// max(min_cap, ceil(4 * free area / sensor disc area)).
int derive_step_cap(const GridMap& truth, double sensor_range_m, int min_cap);

struct EnvStep {
  std::vector<RewardParts> parts;
  std::vector<double> rewards;
  bool done = false;       // exploration threshold reached
  bool truncated = false;  // step cap reached first
  double rate = 0.0;
};

/// Multi-robot exploration episode on one ground-truth map. A decision step is
/// observe() -> [exchange_messages()] -> step()/step_to(). The robots' graphs
/// are built from their own (or shared) beliefs and received poses only.
class ExplorationEnv {
 public:
  ExplorationEnv(const GridMap& truth, const EnvConfig& config, std::uint64_t seed);

  const EnvConfig& config() const { return config_; }
  const GridMap& truth() const { return *truth_; }
  int n_robots() const { return config_.n_robots; }
  int step_index() const { return step_; }
  int step_cap() const { return step_cap_; }

  /// Exchanges POSE (and BELIEF_MAP when maps are shared) packets and builds each
  /// robot's graph. Graphs are not built in mtsp_based mode.
  const std::vector<InformativeGraph>& observe();
  const std::vector<InformativeGraph>& graphs() const { return graphs_; }

  /// Broadcasts one LEARNED_MSG per robot; inbox[i] holds the decoded messages of the others.
  std::vector<std::vector<nn::Vector>> exchange_messages(const std::vector<nn::Vector>& messages);

  /// Ground-truth graph per robot for the current state. Training only.
  std::vector<InformativeGraph> privileged_graphs() const;

  /// Move each robot to a vertex of its own graph (-1 holds).
  EnvStep step(const std::vector<int>& targets);
  /// Move each robot to a point one hop away (nullopt holds).
  EnvStep step_to(const std::vector<std::optional<Point>>& waypoints);

  const std::vector<Point>& positions() const { return positions_; }
  const std::vector<std::vector<Point>>& trajectories() const { return trajectories_; }
  const std::vector<double>& path_lengths() const { return lengths_; }
  double makespan() const;

  const BeliefMap& belief(int robot) const { return beliefs_.at(robot); }
  /// The robot's own belief, or the union with received maps when maps are shared.
  const BeliefMap& working_belief(int robot) const;
  /// Evaluator-side union of all beliefs; decides termination.
  const BeliefMap& merged() const { return merged_; }
  double rate() const;
  bool finished() const { return finished_; }

  const BandwidthLedger& ledger() const { return ledger_; }
  /// Poses as received over the wire in the last exchange: others[i][j] for j != i.
  const std::vector<std::vector<Point>>& received_poses() const { return received_poses_; }

 private:
  void sense_at(int robot, Point p);

  const GridMap* truth_;
  EnvConfig config_;
  int step_cap_ = 0;
  int step_ = 0;
  bool finished_ = false;
  std::size_t truth_free_ = 0;
  InformativeGraph truth_structure_;

  std::vector<Point> positions_;
  std::vector<std::vector<Point>> trajectories_;
  std::vector<double> lengths_;
  std::vector<Point> momentum_;
  std::vector<BeliefMap> beliefs_;
  std::vector<BeliefMap> shared_;
  BeliefMap merged_;

  std::vector<InformativeGraph> graphs_;
  std::vector<std::vector<Point>> received_poses_;
  BandwidthLedger ledger_;
  bool observed_ = false;
};

}  // namespace bwexp
