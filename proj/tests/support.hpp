#pragma once

#include <string>
#include <vector>

#include "bwexp/world.hpp"

namespace testing {

// '#' occupied, anything else free; the first string is the top row.
inline bwexp::GridMap map_from_rows(const std::vector<std::string>& rows, double resolution = 1.0) {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows.front().size());
  bwexp::GridMap m(w, h, resolution, bwexp::Cell::Free);
  for (int r = 0; r < h; ++r)
    for (int x = 0; x < w; ++x)
      if (rows[r][x] == '#') m.set({x, h - 1 - r}, bwexp::Cell::Occupied);
  return m;
}

inline bwexp::DungeonConfig small_dungeon(std::uint64_t seed, double size_m = 24.0) {
  bwexp::DungeonConfig c;
  c.map_size_m = size_m;
  c.resolution = 0.25;
  c.min_rooms = 2;
  c.max_rooms = 4;
  c.min_room_m = 4.0;
  c.max_room_m = 8.0;
  c.align_m = 2.0;
  c.seed = seed;
  return c;
}

}  // namespace testing
