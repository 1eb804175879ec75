#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bwexp/geometry.hpp"

namespace bwexp {

enum class Cell : std::uint8_t { Free = 0, Occupied = 1 };

/// Ground-truth environment: a uniform grid partitioned into free and occupied cells.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int width_cells, int height_cells, double resolution, Cell fill = Cell::Occupied);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  double width_m() const { return width_ * resolution_; }
  double height_m() const { return height_ * resolution_; }

  bool in_bounds(CellIndex c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  Cell at(CellIndex c) const { return cells_[index(c)]; }
  bool is_free(CellIndex c) const { return in_bounds(c) && at(c) == Cell::Free; }
  void set(CellIndex c, Cell v) { cells_[index(c)] = v; }

  CellIndex cell_of(Point p) const;
  Point center_of(CellIndex c) const { return {(c.x + 0.5) * resolution_, (c.y + 0.5) * resolution_}; }

  std::size_t free_count() const;
  std::span<const Cell> cells() const { return cells_; }

  std::size_t index(CellIndex c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  std::vector<Cell> cells_;
};

struct DungeonConfig {
  double map_size_m = 100.0;
  double resolution = 0.25;
  int min_rooms = 8;
  int max_rooms = 15;
  double min_room_m = 8.0;
  double max_room_m = 24.0;
  double corridor_width_m = 2.0;
  // Corridors run along multiples of this pitch so a lattice of the same
  // spacing always has vertices inside them.
  double align_m = 4.0;
  std::uint64_t seed = 0;
  int max_attempts = 32;

  void validate() const;
};

/// Rooms-plus-corridors generator. Deterministic in (config, seed); throws if every
/// attempt yields disconnected free space.
GridMap generate_dungeon(const DungeonConfig& config);

/// True iff the free cells form a single 4-connected component (and there is at least one).
bool free_space_connected(const GridMap& map);

struct SensorSpec {
  double range_m = 20.0;
  // 0 picks enough rays that neighbouring rays are at most half a cell apart at full range.
  int ray_count = 360;

  int rays_for(double resolution) const;
  void validate() const;
};

struct RayTrace {
  std::vector<CellIndex> free_cells;
  std::optional<CellIndex> hit;
};

/// Cells crossed by a ray until the first occupied cell, the map edge, or max_range.
/// A cell is included when the ray enters it at a distance strictly below max_range.
RayTrace raycast(const GridMap& map, Point origin, Point direction, double max_range);

struct ObservedCell {
  CellIndex cell;
  Cell label;

  friend bool operator==(const ObservedCell&, const ObservedCell&) = default;
};

/// Sorted by (y, x), no duplicates.
using Observation = std::vector<ObservedCell>;

Observation sense(const GridMap& map, Point pose, const SensorSpec& spec);

// Text format: header "width height resolution_m", then one row per line
// (top row first), '.' free and '#' occupied.
void write_map(std::ostream& os, const GridMap& map);
GridMap read_map(std::istream& is);
void save_map(const std::string& path, const GridMap& map);
GridMap load_map(const std::string& path);

}  // namespace bwexp
