#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bwexp/belief.hpp"
#include "bwexp/nn/autodiff.hpp"

namespace bwexp {

enum class PayloadKind : std::uint8_t { LearnedMessage, BeliefMap, Pose };

const char* to_string(PayloadKind kind);

struct WirePacket {
  int sender = 0;
  int step = 0;
  PayloadKind kind = PayloadKind::Pose;
  std::vector<std::uint8_t> payload;
};

// Learned message: d IEEE-754 float32 values, little-endian (4 * d bytes).
std::vector<std::uint8_t> encode_learned(const nn::Vector& message);
nn::Vector decode_learned(const std::vector<std::uint8_t>& payload, int d);

// Belief map: one byte per cell, row-major from row 0, Unknown=0 Free=1 Occupied=2.
std::vector<std::uint8_t> encode_belief(const BeliefMap& belief);
BeliefMap decode_belief(const std::vector<std::uint8_t>& payload, int height, int width, double resolution);

// Pose: x then y as signed 16.16 fixed-point int32, little-endian (8 bytes).
std::vector<std::uint8_t> encode_pose(Point p);
Point decode_pose(const std::vector<std::uint8_t>& payload);

inline constexpr std::size_t kPoseBytes = 8;
inline std::size_t learned_bytes(int d) { return 4u * static_cast<std::size_t>(d); }

/// Cumulative upload (UV) and download (DV) byte counters per robot, with a per-step log.
class BandwidthLedger {
 public:
  struct Entry {
    int robot;
    int step;
    std::uint64_t uv_bytes;
    std::uint64_t dv_bytes;
  };

  explicit BandwidthLedger(int n_robots = 0);

  int robots() const { return static_cast<int>(uv_.size()); }
  std::uint64_t uv(int robot) const { return uv_.at(robot); }
  std::uint64_t dv(int robot) const { return dv_.at(robot); }
  std::uint64_t total_uv() const;
  std::uint64_t total_dv() const;
  std::uint64_t uv_of(PayloadKind kind) const { return by_kind_uv_[static_cast<int>(kind)]; }
  std::uint64_t dv_of(PayloadKind kind) const { return by_kind_dv_[static_cast<int>(kind)]; }

  void record(int robot, int step, PayloadKind kind, std::uint64_t uv_bytes, std::uint64_t dv_bytes);
  const std::vector<Entry>& entries() const { return entries_; }

  /// CSV: robot,step,uv_bytes,dv_bytes,uv_total,dv_total (one row per robot-step).
  void write_csv(std::ostream& os) const;

 private:
  std::vector<std::uint64_t> uv_, dv_;
  std::uint64_t by_kind_uv_[3] = {0, 0, 0};
  std::uint64_t by_kind_dv_[3] = {0, 0, 0};
  std::vector<Entry> entries_;
};

/// Synchronous full broadcast of one packet per robot. inboxes[i] holds every
/// packet with sender != i, ordered by sender id. The ledger is charged per payload.
std::vector<std::vector<WirePacket>> broadcast(const std::vector<WirePacket>& packets, int n_robots,
                                               BandwidthLedger& ledger);

/// 1 - (UV+DV)_learned / (UV+DV)_map.
double savings_ratio(const BandwidthLedger& learned, const BandwidthLedger& map_sharing);

}  // namespace bwexp
