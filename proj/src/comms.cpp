#include "bwexp/comms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <ostream>

namespace bwexp {

const char* to_string(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::LearnedMessage: return "LEARNED_MSG";
    case PayloadKind::BeliefMap: return "BELIEF_MAP";
    case PayloadKind::Pose: return "POSE";
  }
  return "?";
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_learned(const nn::Vector& message) {
  std::vector<std::uint8_t> out;
  out.reserve(learned_bytes(static_cast<int>(message.size())));
  for (Eigen::Index i = 0; i < message.size(); ++i) {
    if (!std::isfinite(message(i))) throw Error("encode_learned: non-finite message entry");
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(message(i))));
  }
  return out;
}

nn::Vector decode_learned(const std::vector<std::uint8_t>& payload, int d) {
  if (d < 1 || payload.size() != learned_bytes(d)) throw Error("decode_learned: payload length mismatch");
  nn::Vector m(d);
  for (int i = 0; i < d; ++i) m(i) = std::bit_cast<float>(get_u32(payload.data() + 4 * i));
  return m;
}

std::vector<std::uint8_t> encode_belief(const BeliefMap& belief) {
  std::vector<std::uint8_t> out(belief.cells().size());
  std::transform(belief.cells().begin(), belief.cells().end(), out.begin(),
                 [](Belief b) { return static_cast<std::uint8_t>(b); });
  return out;
}

BeliefMap decode_belief(const std::vector<std::uint8_t>& payload, int height, int width, double resolution) {
  if (height <= 0 || width <= 0 || payload.size() != static_cast<std::size_t>(height) * width)
    throw Error("decode_belief: payload size does not match H x W");
  BeliefMap b(width, height, resolution);
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const std::uint8_t v = payload[i];
    if (v > 2) throw Error("decode_belief: invalid cell byte");
    if (v != 0)
      b.set({static_cast<int>(i % width), static_cast<int>(i / width)}, static_cast<Belief>(v));
  }
  return b;
}

std::vector<std::uint8_t> encode_pose(Point p) {
  auto fixed = [](double v) {
    const double scaled = std::round(v * 65536.0);
    if (scaled < -2147483648.0 || scaled > 2147483647.0) throw Error("encode_pose: coordinate out of range");
    return static_cast<std::uint32_t>(static_cast<std::int32_t>(scaled));
  };
  std::vector<std::uint8_t> out;
  out.reserve(kPoseBytes);
  put_u32(out, fixed(p.x));
  put_u32(out, fixed(p.y));
  return out;
}

Point decode_pose(const std::vector<std::uint8_t>& payload) {
  if (payload.size() != kPoseBytes) throw Error("decode_pose: payload must be 8 bytes");
  return {static_cast<std::int32_t>(get_u32(payload.data())) / 65536.0,
          static_cast<std::int32_t>(get_u32(payload.data() + 4)) / 65536.0};
}

BandwidthLedger::BandwidthLedger(int n_robots) : uv_(static_cast<std::size_t>(n_robots), 0), dv_(uv_) {}

std::uint64_t BandwidthLedger::total_uv() const {
  std::uint64_t s = 0;
  for (auto v : uv_) s += v;
  return s;
}

std::uint64_t BandwidthLedger::total_dv() const {
  std::uint64_t s = 0;
  for (auto v : dv_) s += v;
  return s;
}

void BandwidthLedger::record(int robot, int step, PayloadKind kind, std::uint64_t uv_bytes, std::uint64_t dv_bytes) {
  uv_.at(robot) += uv_bytes;
  dv_.at(robot) += dv_bytes;
  by_kind_uv_[static_cast<int>(kind)] += uv_bytes;
  by_kind_dv_[static_cast<int>(kind)] += dv_bytes;
  if (!entries_.empty() && entries_.back().robot == robot && entries_.back().step == step) {
    entries_.back().uv_bytes += uv_bytes;
    entries_.back().dv_bytes += dv_bytes;
  } else {
    entries_.push_back({robot, step, uv_bytes, dv_bytes});
  }
}

void BandwidthLedger::write_csv(std::ostream& os) const {
  // Merge per (robot, step) since several broadcasts may share a step.
  std::map<std::pair<int, int>, std::pair<std::uint64_t, std::uint64_t>> rows;
  for (const Entry& e : entries_) {
    auto& r = rows[{e.robot, e.step}];
    r.first += e.uv_bytes;
    r.second += e.dv_bytes;
  }
  std::vector<std::uint64_t> uv_total(uv_.size(), 0), dv_total(dv_.size(), 0);
  os << "robot,step,uv_bytes,dv_bytes,uv_total,dv_total\n";
  for (const auto& [key, r] : rows) {
    uv_total[key.first] += r.first;
    dv_total[key.first] += r.second;
    os << key.first << ',' << key.second << ',' << r.first << ',' << r.second << ',' << uv_total[key.first] << ','
       << dv_total[key.first] << '\n';
  }
}

std::vector<std::vector<WirePacket>> broadcast(const std::vector<WirePacket>& packets, int n_robots,
                                               BandwidthLedger& ledger) {
  if (ledger.robots() != n_robots) throw Error("broadcast: ledger sized for a different team");
  if (static_cast<int>(packets.size()) != n_robots) throw Error("broadcast: need exactly one packet per robot");
  std::vector<const WirePacket*> by_sender(static_cast<std::size_t>(n_robots), nullptr);
  for (const WirePacket& p : packets) {
    if (p.sender < 0 || p.sender >= n_robots) throw Error("broadcast: sender id out of range");
    if (by_sender[p.sender]) throw Error("broadcast: duplicate sender id");
    by_sender[p.sender] = &p;
  }
  std::vector<std::vector<WirePacket>> inboxes(static_cast<std::size_t>(n_robots));
  for (int i = 0; i < n_robots; ++i) {
    const WirePacket& out = *by_sender[i];
    ledger.record(i, out.step, out.kind, out.payload.size(), 0);
    std::uint64_t received = 0;
    for (int s = 0; s < n_robots; ++s) {
      if (s == i) continue;
      inboxes[i].push_back(*by_sender[s]);
      received += by_sender[s]->payload.size();
    }
    ledger.record(i, out.step, out.kind, 0, received);
  }
  return inboxes;
}

double savings_ratio(const BandwidthLedger& learned, const BandwidthLedger& map_sharing) {
  const double denom = static_cast<double>(map_sharing.total_uv() + map_sharing.total_dv());
  if (denom == 0.0) throw Error("savings_ratio: map-sharing ledger is empty");
  return 1.0 - static_cast<double>(learned.total_uv() + learned.total_dv()) / denom;
}

}  // namespace bwexp
