#pragma once

#include <cstdint>
#include <tuple>

#include "lunes/graph.hpp"

namespace lunes {

using Timestep = std::uint32_t;
using Seq = std::uint32_t;
using LpId = std::uint32_t;

enum class MsgKind : std::uint8_t { kData = 0, kStimulus = 1 };

// Timestamped inter-entity message. Delivery is always one timestep after
// the send (unit lookahead), which is what makes conservative, partition-
// independent execution possible.
struct Envelope {
  MsgKind kind = MsgKind::kData;
  NodeId origin = 0;   // data: originator; stimulus: emitting node
  Seq seq = 0;         // per-origin sequence (separate space per kind)
  NodeId sender = 0;
  NodeId dest = 0;
  Timestep send_time = 0;
  std::uint16_t ttl_remaining = 0;
  std::uint16_t hop_count = 0;
  NodeId stimulus_target = 0;  // stimulus only: origin whose rate is low

  Timestep deliver_time() const { return send_time + 1; }
};

// Canonical per-timestep delivery order: groups by destination, then orders
// each entity's deliveries by (origin, seq, sender). Total, so processing is
// identical for every LP count and worker schedule.
struct CanonicalDeliveryOrder {
  bool operator()(const Envelope& a, const Envelope& b) const {
    return std::tuple(a.dest, a.origin, a.seq, a.sender, a.kind,
                      a.stimulus_target, a.ttl_remaining, a.hop_count) <
           std::tuple(b.dest, b.origin, b.seq, b.sender, b.kind,
                      b.stimulus_target, b.ttl_remaining, b.hop_count);
  }
};

}  // namespace lunes
