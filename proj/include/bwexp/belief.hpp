#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "bwexp/world.hpp"

namespace bwexp {

/// Tri-state label. The numeric values double as the one-byte wire encoding.
enum class Belief : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

/// A robot's partial map over the ground-truth grid frame. Starts all-unknown;
/// a cell, once labelled, is never cleared.
class BeliefMap {
 public:
  BeliefMap() = default;
  BeliefMap(int width_cells, int height_cells, double resolution);
  explicit BeliefMap(const GridMap& frame) : BeliefMap(frame.width(), frame.height(), frame.resolution()) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  double width_m() const { return width_ * resolution_; }
  double height_m() const { return height_ * resolution_; }

  bool in_bounds(CellIndex c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  Belief at(CellIndex c) const { return cells_[index(c)]; }
  bool is_free(CellIndex c) const { return in_bounds(c) && at(c) == Belief::Free; }
  CellIndex cell_of(Point p) const;
  Point center_of(CellIndex c) const { return {(c.x + 0.5) * resolution_, (c.y + 0.5) * resolution_}; }
  std::size_t index(CellIndex c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

  /// Labels a cell. Relabelling a known cell to a different label, or back to
  /// Unknown, throws.
  void set(CellIndex c, Belief v);

  /// In-place form of update_belief.
  void apply(const Observation& obs);

  std::size_t free_count() const { return free_count_; }
  std::size_t known_count() const { return known_count_; }
  std::span<const Belief> cells() const { return cells_; }

  bool same_frame(const BeliefMap& o) const {
    return width_ == o.width_ && height_ == o.height_ && resolution_ == o.resolution_;
  }
  bool same_frame(const GridMap& g) const {
    return width_ == g.width() && height_ == g.height() && resolution_ == g.resolution();
  }

  friend bool operator==(const BeliefMap& a, const BeliefMap& b) {
    return a.same_frame(b) && a.cells_ == b.cells_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  std::vector<Belief> cells_;
  std::size_t free_count_ = 0;
  std::size_t known_count_ = 0;
};

BeliefMap update_belief(BeliefMap belief, const Observation& obs);

/// Free cells with at least one unknown cell among their 8 neighbours, in row-major order.
/// A diagonal unknown neighbour whose two shared side cells are both occupied does not count.
std::vector<CellIndex> frontiers(const BeliefMap& belief);
bool is_frontier(const BeliefMap& belief, CellIndex c);

/// Union of knowledge. Throws on frame mismatch, an empty list, or contradicting labels.
BeliefMap merge(std::span<const BeliefMap> beliefs);

/// |free cells known in merged| / |free cells in truth|.
double exploration_rate(const BeliefMap& merged, const GridMap& truth);

// Same text layout as the map format, with 'U' for unknown cells.
void write_belief(std::ostream& os, const BeliefMap& belief);
BeliefMap read_belief(std::istream& is);

}  // namespace bwexp
