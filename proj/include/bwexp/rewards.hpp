#pragma once

#include "bwexp/belief.hpp"
#include "bwexp/world.hpp"

namespace bwexp {

struct RewardConfig {
  double rho = 0.0;  // 1 / free cells of a full sensor disc
  double momentum_coeff = 0.1;
  double distance_coeff = 0.0;  // per meter
  double finish_bonus = 20.0;
  // Follow the elementwise-product direction of the original pseudocode instead of
  // the displacement direction. Kept only for comparison.
  bool literal_momentum = false;

  void validate() const;
};

/// Cells whose centre lies within range of a cell centre.
int sensor_disc_cells(double sensor_range_m, double resolution);

/// rho = 1 / disc cells, distance_coeff = 1 / (2 * range).
RewardConfig default_reward_config(double sensor_range_m, double resolution);

struct Momentum {
  double lambda = 0.0;
  Point direction;  // unit vector or zero
};

/// Holding still returns lambda 0 and keeps prev_dir.
Momentum momentum_reward(Point prev_dir, Point p_t, Point p_next, double coeff = 0.1, bool literal = false);

/// rho * ground-truth free cells within range of p_next that are unknown in merged_before.
double observation_reward(Point p_next, const GridMap& truth, const BeliefMap& merged_before, double sensor_range_m,
                          double rho);

/// rho * newly known free cells. Throws if after forgets or changes anything in before.
double team_reward(const BeliefMap& merged_before, const BeliefMap& merged_after, double rho);

struct RewardParts {
  double observation = 0.0;  // r_o
  double momentum = 0.0;     // lambda
  double team = 0.0;         // xi
  double finish = 0.0;       // r_f
  double distance = 0.0;     // r_c, subtracted
};

double step_reward(const RewardParts& p);

}  // namespace bwexp
