#pragma once

#include <cstdint>
#include <vector>

#include "lunes/config.hpp"
#include "lunes/engine.hpp"
#include "lunes/graph.hpp"

namespace lunes {

struct ProtocolParams {
  ProtocolKind kind = ProtocolKind::kFixed;
  double forward_prob = 0.8;   // v
  double gen_prob = 0.05;
  std::uint16_t ttl = 8;
  // adaptive only
  double alpha = 0.5;
  double stim_prob = 1.0;
  Timestep stim_duration = 50;
  Timestep recv_window = 20;
  bool preboost = false;

  static ProtocolParams from_config(const ScenarioConfig& cfg,
                                    int resolved_ttl);
};

// Dissemination protocols, one state record per entity:
//  - broadcast: forward every fresh message to all neighbors but the sender
//  - fixed: forward to each neighbor independently with probability v
//  - adaptive: fixed plus reception-rate monitoring; under-served receivers
//    stimulate their usual provider, which forwards that origin's messages
//    at stim_prob until the boost expires
class GossipProtocol final : public Protocol {
 public:
  GossipProtocol(const Graph& graph, ProtocolParams params);

  void on_data(EntityContext& ctx, const Envelope& env) override;
  void on_stimulus(EntityContext& ctx, const Envelope& env) override;
  void on_step(EntityContext& ctx) override;
  std::uint64_t state_bytes(NodeId entity) const override;

 private:
  struct NodeState {
    // seen[(origin, seq)] as per-origin bitmaps; seq grows by at most one
    // per timestep so these stay small
    std::vector<std::vector<std::uint64_t>> seen;
    Seq next_seq = 0;
    std::uint64_t seen_count = 0;
  };
  struct AdaptiveState {
    std::vector<std::uint16_t> recv_count;      // per origin, tumbling window
    std::vector<std::uint32_t> provider_count;  // origin * degree + nbr index
    std::vector<Timestep> boost_until;          // origin * degree + nbr index
  };

  bool seen_test_and_set(NodeState& st, NodeId origin, Seq seq);
  double effective_prob(NodeId self, NodeId origin, std::uint32_t nbr_index,
                        Timestep t) const;
  void gossip(EntityContext& ctx, NodeId origin, Seq seq,
              std::uint16_t ttl_remaining, std::uint16_t hop_count,
              NodeId arrived_from, bool exclude_sender);
  void monitor(EntityContext& ctx);
  std::uint32_t neighbor_index(NodeId self, NodeId neighbor) const;

  const Graph& graph_;
  ProtocolParams params_;
  std::vector<NodeState> nodes_;
  std::vector<AdaptiveState> adaptive_;  // empty unless kind == kAdaptive
};

}  // namespace lunes
