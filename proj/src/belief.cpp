#include "bwexp/belief.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace bwexp {

BeliefMap::BeliefMap(int width_cells, int height_cells, double resolution)
    : width_(width_cells), height_(height_cells), resolution_(resolution) {
  if (width_cells <= 0 || height_cells <= 0) throw Error("BeliefMap: dimensions must be positive");
  if (!(resolution > 0.0)) throw Error("BeliefMap: resolution must be positive");
  cells_.assign(static_cast<std::size_t>(width_cells) * height_cells, Belief::Unknown);
}

CellIndex BeliefMap::cell_of(Point p) const {
  return {static_cast<int>(std::floor(p.x / resolution_)), static_cast<int>(std::floor(p.y / resolution_))};
}

void BeliefMap::set(CellIndex c, Belief v) {
  if (!in_bounds(c)) throw Error("BeliefMap::set: cell outside grid");
  Belief& cur = cells_[index(c)];
  if (cur == v) return;
  if (cur != Belief::Unknown) throw Error("BeliefMap::set: known cells cannot be relabelled");
  cur = v;
  ++known_count_;
  if (v == Belief::Free) ++free_count_;
}

void BeliefMap::apply(const Observation& obs) {
  for (const ObservedCell& o : obs)
    if (!in_bounds(o.cell)) throw Error("update_belief: observed cell outside grid");
  for (const ObservedCell& o : obs) set(o.cell, o.label == Cell::Free ? Belief::Free : Belief::Occupied);
}

BeliefMap update_belief(BeliefMap belief, const Observation& obs) {
  belief.apply(obs);
  return belief;
}

bool is_frontier(const BeliefMap& b, CellIndex c) {
  if (!b.in_bounds(c) || b.at(c) != Belief::Free) return false;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const CellIndex n{c.x + dx, c.y + dy};
      if (!b.in_bounds(n) || b.at(n) != Belief::Unknown) continue;
      // A diagonal unknown cell sealed off by two occupied cells is not reachable from here.
      if (dx != 0 && dy != 0 && b.at({c.x + dx, c.y}) == Belief::Occupied &&
          b.at({c.x, c.y + dy}) == Belief::Occupied)
        continue;
      return true;
    }
  return false;
}

std::vector<CellIndex> frontiers(const BeliefMap& belief) {
  std::vector<CellIndex> out;
  for (int y = 0; y < belief.height(); ++y)
    for (int x = 0; x < belief.width(); ++x)
      if (is_frontier(belief, {x, y})) out.push_back({x, y});
  return out;
}

BeliefMap merge(std::span<const BeliefMap> beliefs) {
  if (beliefs.empty()) throw Error("merge: no beliefs given");
  BeliefMap out = beliefs.front();
  for (std::size_t k = 1; k < beliefs.size(); ++k) {
    const BeliefMap& b = beliefs[k];
    if (!out.same_frame(b)) throw Error("merge: frame mismatch");
    const auto cells = b.cells();
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i] == Belief::Unknown) continue;
      const CellIndex c{static_cast<int>(i % b.width()), static_cast<int>(i / b.width())};
      out.set(c, cells[i]);
    }
  }
  return out;
}

double exploration_rate(const BeliefMap& merged, const GridMap& truth) {
  if (!merged.same_frame(truth)) throw Error("exploration_rate: frame mismatch");
  const std::size_t total = truth.free_count();
  if (total == 0) throw Error("exploration_rate: ground truth has no free cells");
  return static_cast<double>(merged.free_count()) / static_cast<double>(total);
}

void write_belief(std::ostream& os, const BeliefMap& b) {
  os << b.width() << ' ' << b.height() << ' ' << b.resolution() << '\n';
  std::string row(static_cast<std::size_t>(b.width()), 'U');
  for (int y = b.height() - 1; y >= 0; --y) {
    for (int x = 0; x < b.width(); ++x) {
      const Belief v = b.at({x, y});
      row[x] = v == Belief::Free ? '.' : v == Belief::Occupied ? '#' : 'U';
    }
    os << row << '\n';
  }
}

BeliefMap read_belief(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw Error("read_belief: missing header");
  std::istringstream hs(header);
  int w = 0, h = 0;
  double res = 0.0;
  if (!(hs >> w >> h >> res)) throw Error("read_belief: malformed header");
  BeliefMap b(w, h, res);
  std::string line;
  for (int y = h - 1; y >= 0; --y) {
    if (!std::getline(is, line) || static_cast<int>(line.size()) != w) throw Error("read_belief: bad row");
    for (int x = 0; x < w; ++x) {
      switch (line[x]) {
        case '.': b.set({x, y}, Belief::Free); break;
        case '#': b.set({x, y}, Belief::Occupied); break;
        case 'U': break;
        default: throw Error("read_belief: unexpected character");
      }
    }
  }
  return b;
}

}  // namespace bwexp
