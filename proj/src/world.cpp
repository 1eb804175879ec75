#include "bwexp/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

#include "bwexp/grid_traversal.hpp"

namespace bwexp {

GridMap::GridMap(int width_cells, int height_cells, double resolution, Cell fill)
    : width_(width_cells), height_(height_cells), resolution_(resolution) {
  if (width_cells <= 0 || height_cells <= 0) throw Error("GridMap: dimensions must be positive");
  if (!(resolution > 0.0)) throw Error("GridMap: resolution must be positive");
  cells_.assign(static_cast<std::size_t>(width_cells) * height_cells, fill);
}

CellIndex GridMap::cell_of(Point p) const {
  return {static_cast<int>(std::floor(p.x / resolution_)), static_cast<int>(std::floor(p.y / resolution_))};
}

std::size_t GridMap::free_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), Cell::Free));
}

void DungeonConfig::validate() const {
  if (!(map_size_m > 0.0)) throw Error("DungeonConfig: map_size_m must be positive");
  if (!(resolution > 0.0)) throw Error("DungeonConfig: resolution must be positive");
  if (min_rooms < 1 || max_rooms < min_rooms) throw Error("DungeonConfig: empty room count range");
  if (!(min_room_m > 0.0) || max_room_m < min_room_m) throw Error("DungeonConfig: bad room size range");
  if (!(corridor_width_m > 0.0)) throw Error("DungeonConfig: corridor width must be positive");
  if (!(align_m > 0.0)) throw Error("DungeonConfig: align_m must be positive");
  if (max_attempts < 1) throw Error("DungeonConfig: max_attempts must be >= 1");
}

namespace {

struct Room {
  int x0, y0, x1, y1;  // half-open cell bounds

  bool overlaps(const Room& o, int gap) const {
    return x0 - gap < o.x1 && o.x0 - gap < x1 && y0 - gap < o.y1 && o.y0 - gap < y1;
  }
};

void carve(GridMap& map, int x0, int y0, int x1, int y1) {
  x0 = std::max(x0, 1);
  y0 = std::max(y0, 1);
  x1 = std::min(x1, map.width() - 1);
  y1 = std::min(y1, map.height() - 1);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) map.set({x, y}, Cell::Free);
}

GridMap generate_once(const DungeonConfig& cfg, std::uint64_t seed) {
  const int size = static_cast<int>(std::lround(cfg.map_size_m / cfg.resolution));
  if (size < 3) throw Error("generate_dungeon: map too small for its resolution");
  GridMap map(size, size, cfg.resolution, Cell::Occupied);
  std::mt19937_64 rng(seed);

  const int interior = size - 2;
  auto to_cells = [&](double m) { return std::max(1, static_cast<int>(std::lround(m / cfg.resolution))); };
  const int min_room = std::min(to_cells(cfg.min_room_m), interior);
  const int max_room = std::min(to_cells(cfg.max_room_m), interior);
  const int wall_gap = to_cells(1.0);

  std::uniform_int_distribution<int> room_count(cfg.min_rooms, cfg.max_rooms);
  const int wanted = room_count(rng);
  std::uniform_int_distribution<int> room_size(min_room, max_room);

  std::vector<Room> rooms;
  for (int tries = 0; tries < 200 * wanted && static_cast<int>(rooms.size()) < wanted; ++tries) {
    const int w = room_size(rng);
    const int h = room_size(rng);
    std::uniform_int_distribution<int> px(1, 1 + interior - w);
    std::uniform_int_distribution<int> py(1, 1 + interior - h);
    Room r{px(rng), py(rng), 0, 0};
    r.x1 = r.x0 + w;
    r.y1 = r.y0 + h;
    const bool clash = std::any_of(rooms.begin(), rooms.end(), [&](const Room& o) { return r.overlaps(o, wall_gap); });
    if (!clash) rooms.push_back(r);
  }
  if (rooms.empty()) throw Error("generate_dungeon: could not place any room");
  for (const Room& r : rooms) carve(map, r.x0, r.y0, r.x1, r.y1);

  // Corridor centre lines sit on lattice lines of pitch align_m (cell-centred).
  const int pitch = to_cells(cfg.align_m);
  const int half = std::max(1, to_cells(cfg.corridor_width_m) / 2);
  auto snap_inside = [&](int lo, int hi) {
    const int mid = (lo + hi) / 2;
    int best = mid;
    int best_off = size;
    for (int k = 0; k * pitch < size; ++k) {
      const int c = k * pitch;
      if (c >= lo && c < hi && std::abs(c - mid) < best_off) {
        best = c;
        best_off = std::abs(c - mid);
      }
    }
    return best;
  };

  std::vector<int> order(rooms.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const Room& a = rooms[order[k - 1]];
    const Room& b = rooms[order[k]];
    const int ax = snap_inside(a.x0, a.x1), ay = snap_inside(a.y0, a.y1);
    const int bx = snap_inside(b.x0, b.x1), by = snap_inside(b.y0, b.y1);
    if (rng() & 1u) {
      carve(map, std::min(ax, bx) - half, ay - half, std::max(ax, bx) + half + 1, ay + half + 1);
      carve(map, bx - half, std::min(ay, by) - half, bx + half + 1, std::max(ay, by) + half + 1);
    } else {
      carve(map, ax - half, std::min(ay, by) - half, ax + half + 1, std::max(ay, by) + half + 1);
      carve(map, std::min(ax, bx) - half, by - half, std::max(ax, bx) + half + 1, by + half + 1);
    }
  }
  return map;
}

std::uint64_t mix_seed(std::uint64_t seed, int attempt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(attempt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

GridMap generate_dungeon(const DungeonConfig& config) {
  config.validate();
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    GridMap map = generate_once(config, mix_seed(config.seed, attempt));
    if (free_space_connected(map)) return map;
  }
  throw Error("generate_dungeon: free space disconnected after " + std::to_string(config.max_attempts) +
              " attempts");
}

bool free_space_connected(const GridMap& map) {
  const std::size_t total = map.free_count();
  if (total == 0) return false;
  std::vector<std::uint8_t> seen(map.cells().size(), 0);
  std::queue<CellIndex> frontier;
  for (int y = 0; y < map.height() && frontier.empty(); ++y)
    for (int x = 0; x < map.width(); ++x)
      if (map.at({x, y}) == Cell::Free) {
        frontier.push({x, y});
        seen[map.index({x, y})] = 1;
        break;
      }
  std::size_t reached = 0;
  constexpr int dx[] = {1, -1, 0, 0};
  constexpr int dy[] = {0, 0, 1, -1};
  while (!frontier.empty()) {
    const CellIndex c = frontier.front();
    frontier.pop();
    ++reached;
    for (int k = 0; k < 4; ++k) {
      const CellIndex n{c.x + dx[k], c.y + dy[k]};
      if (map.is_free(n) && !seen[map.index(n)]) {
        seen[map.index(n)] = 1;
        frontier.push(n);
      }
    }
  }
  return reached == total;
}

void SensorSpec::validate() const {
  if (!(range_m > 0.0)) throw Error("SensorSpec: range must be positive");
  if (ray_count != 0 && ray_count < 8) throw Error("SensorSpec: ray_count must be 0 (auto) or >= 8");
}

RayTrace raycast(const GridMap& map, Point origin, Point direction, double max_range) {
  const CellIndex start = map.cell_of(origin);
  if (!map.in_bounds(start)) throw Error("raycast: origin out of bounds");
  if (map.at(start) != Cell::Free) throw Error("raycast: origin inside an occupied cell");
  const double len = norm(direction);
  if (!(len > 0.0)) throw Error("raycast: zero direction");
  const Point dir = (1.0 / len) * direction;

  RayTrace out;
  detail::traverse(origin, dir, max_range, map.resolution(), [&](CellIndex c, double) {
    if (!map.in_bounds(c)) return false;
    if (map.at(c) == Cell::Occupied) {
      out.hit = c;
      return false;
    }
    out.free_cells.push_back(c);
    return true;
  });
  return out;
}

int SensorSpec::rays_for(double resolution) const {
  if (ray_count > 0) return ray_count;
  return std::max(8, static_cast<int>(std::ceil(2.0 * std::numbers::pi * range_m / (0.5 * resolution))));
}

Observation sense(const GridMap& map, Point pose, const SensorSpec& spec) {
  spec.validate();
  const int rays = spec.rays_for(map.resolution());
  std::vector<std::size_t> seen;
  seen.reserve(static_cast<std::size_t>(rays) * static_cast<std::size_t>(spec.range_m / map.resolution() + 2));
  for (int k = 0; k < rays; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / rays;
    const RayTrace ray = raycast(map, pose, {std::cos(angle), std::sin(angle)}, spec.range_m);
    for (const CellIndex& c : ray.free_cells) seen.push_back(map.index(c));
    if (ray.hit) seen.push_back(map.index(*ray.hit));
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());

  Observation obs;
  obs.reserve(seen.size());
  const auto w = static_cast<std::size_t>(map.width());
  for (std::size_t i : seen) {
    const CellIndex c{static_cast<int>(i % w), static_cast<int>(i / w)};
    obs.push_back({c, map.at(c)});
  }
  return obs;
}

void write_map(std::ostream& os, const GridMap& map) {
  os << map.width() << ' ' << map.height() << ' ' << map.resolution() << '\n';
  std::string row(static_cast<std::size_t>(map.width()), '.');
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) row[x] = map.at({x, y}) == Cell::Free ? '.' : '#';
    os << row << '\n';
  }
}

GridMap read_map(std::istream& is) {
  int w = 0, h = 0;
  double res = 0.0;
  std::string header;
  if (!std::getline(is, header)) throw Error("read_map: missing header");
  std::istringstream hs(header);
  if (!(hs >> w >> h >> res)) throw Error("read_map: malformed header");
  GridMap map(w, h, res, Cell::Occupied);
  std::string line;
  for (int y = h - 1; y >= 0; --y) {
    if (!std::getline(is, line)) throw Error("read_map: truncated grid");
    if (static_cast<int>(line.size()) != w) throw Error("read_map: row width mismatch");
    for (int x = 0; x < w; ++x) {
      if (line[x] == '.')
        map.set({x, y}, Cell::Free);
      else if (line[x] != '#')
        throw Error("read_map: unexpected character");
    }
  }
  return map;
}

void save_map(const std::string& path, const GridMap& map) {
  std::ofstream os(path);
  if (!os) throw Error("save_map: cannot open " + path);
  write_map(os, map);
  if (!os) throw Error("save_map: write failed for " + path);
}

GridMap load_map(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_map: cannot open " + path);
  return read_map(is);
}

}  // namespace bwexp
