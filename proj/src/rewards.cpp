#include "bwexp/rewards.hpp"

#include <cmath>

namespace bwexp {

void RewardConfig::validate() const {
  if (rho < 0 || momentum_coeff < 0 || distance_coeff < 0 || finish_bonus < 0)
    throw Error("RewardConfig: coefficients must be non-negative");
}

int sensor_disc_cells(double sensor_range_m, double resolution) {
  const int r = static_cast<int>(std::ceil(sensor_range_m / resolution));
  const double r2 = sensor_range_m * sensor_range_m;
  int count = 0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      if ((dx * dx + dy * dy) * resolution * resolution <= r2) ++count;
  return count;
}

RewardConfig default_reward_config(double sensor_range_m, double resolution) {
  RewardConfig c;
  c.rho = 1.0 / sensor_disc_cells(sensor_range_m, resolution);
  c.distance_coeff = 1.0 / (2.0 * sensor_range_m);
  return c;
}

Momentum momentum_reward(Point prev_dir, Point p_t, Point p_next, double coeff, bool literal) {
  if (p_t == p_next) return {0.0, prev_dir};
  const Point raw = literal ? Point{p_t.x * p_next.x, p_t.y * p_next.y} : p_next - p_t;
  const double n = norm(raw);
  if (n == 0.0) return {0.0, prev_dir};
  const Point beta = (1.0 / n) * raw;
  return {coeff * dot(prev_dir, beta), beta};
}

double observation_reward(Point p_next, const GridMap& truth, const BeliefMap& merged_before, double sensor_range_m,
                          double rho) {
  if (!merged_before.same_frame(truth)) throw Error("observation_reward: frame mismatch");
  const CellIndex c = truth.cell_of(p_next);
  const int r = static_cast<int>(std::ceil(sensor_range_m / truth.resolution())) + 1;
  const double r2 = sensor_range_m * sensor_range_m;
  int count = 0;
  for (int y = c.y - r; y <= c.y + r; ++y)
    for (int x = c.x - r; x <= c.x + r; ++x) {
      const CellIndex n{x, y};
      if (!truth.is_free(n) || merged_before.at(n) != Belief::Unknown) continue;
      const Point d = truth.center_of(n) - p_next;
      if (d.x * d.x + d.y * d.y <= r2) ++count;
    }
  return rho * count;
}

double team_reward(const BeliefMap& before, const BeliefMap& after, double rho) {
  if (!before.same_frame(after)) throw Error("team_reward: frame mismatch");
  const auto b = before.cells();
  const auto a = after.cells();
  std::size_t fresh = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] != Belief::Unknown && a[i] != b[i]) throw Error("team_reward: merged belief is not monotone");
    if (b[i] == Belief::Unknown && a[i] == Belief::Free) ++fresh;
  }
  return rho * static_cast<double>(fresh);
}

double step_reward(const RewardParts& p) { return p.observation + p.momentum + p.team + p.finish - p.distance; }

}  // namespace bwexp
