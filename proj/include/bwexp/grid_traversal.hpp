#pragma once

// Exact cell traversal of a ray over a uniform grid (Amanatides & Woo).
// Shared by the range sensor, edge collision checks and frontier visibility.

#include <cmath>
#include <limits>

#include "bwexp/geometry.hpp"

namespace bwexp::detail {

// Crossings closer than this (in ray parameter units) count as passing a
// cell corner exactly; the walk then steps diagonally.
inline constexpr double kCornerTolerance = 1e-9;

/// Walks every cell intersected by origin + t * dir for t in [0, t_max).
/// The visitor is called as visit(cell, t_entry) in order and returns false to stop.
/// Cells whose entry parameter is >= t_max are not visited.
template <typename Visitor>
void traverse(Point origin, Point dir, double t_max, double resolution, Visitor&& visit) {
  CellIndex cell{static_cast<int>(std::floor(origin.x / resolution)),
                 static_cast<int>(std::floor(origin.y / resolution))};
  constexpr double inf = std::numeric_limits<double>::infinity();

  int step_x = 0;
  int step_y = 0;
  double t_next_x = inf;
  double t_next_y = inf;
  double dt_x = inf;
  double dt_y = inf;
  if (dir.x > 0) {
    step_x = 1;
    t_next_x = ((cell.x + 1) * resolution - origin.x) / dir.x;
    dt_x = resolution / dir.x;
  } else if (dir.x < 0) {
    step_x = -1;
    t_next_x = (cell.x * resolution - origin.x) / dir.x;
    dt_x = -resolution / dir.x;
  }
  if (dir.y > 0) {
    step_y = 1;
    t_next_y = ((cell.y + 1) * resolution - origin.y) / dir.y;
    dt_y = resolution / dir.y;
  } else if (dir.y < 0) {
    step_y = -1;
    t_next_y = (cell.y * resolution - origin.y) / dir.y;
    dt_y = -resolution / dir.y;
  }

  double t_entry = 0.0;
  while (t_entry < t_max) {
    if (!visit(cell, t_entry)) return;
    if (std::abs(t_next_x - t_next_y) <= kCornerTolerance) {
      t_entry = t_next_x;
      cell.x += step_x;
      cell.y += step_y;
      t_next_x += dt_x;
      t_next_y += dt_y;
    } else if (t_next_x < t_next_y) {
      t_entry = t_next_x;
      cell.x += step_x;
      t_next_x += dt_x;
    } else {
      t_entry = t_next_y;
      cell.y += step_y;
      t_next_y += dt_y;
    }
    if (t_entry == inf) return;
  }
}

/// Walks the cells of the closed segment a -> b (the cell containing b included).
template <typename Visitor>
void traverse_segment(Point a, Point b, double resolution, Visitor&& visit) {
  if (a == b) {
    visit(CellIndex{static_cast<int>(std::floor(a.x / resolution)),
                    static_cast<int>(std::floor(a.y / resolution))},
          0.0);
    return;
  }
  // Entry parameters of the end cell are < 1 because b lies strictly inside it
  // for every cell-centred endpoint used by this library.
  traverse(a, b - a, 1.0, resolution, visit);
}

}  // namespace bwexp::detail
