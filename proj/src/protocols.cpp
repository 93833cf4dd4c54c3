#include "lunes/protocols.hpp"

#include <algorithm>

#include "lunes/errors.hpp"
#include "lunes/rng.hpp"

namespace lunes {

namespace {

constexpr std::uint64_t pack_msg(NodeId origin, Seq seq) {
  return (static_cast<std::uint64_t>(origin) << 32) | seq;
}

}  // namespace

ProtocolParams ProtocolParams::from_config(const ScenarioConfig& cfg,
                                           int resolved_ttl) {
  if (resolved_ttl < 0 || resolved_ttl > 0xffff)
    throw ConfigError("ttl out of range: " + std::to_string(resolved_ttl));
  ProtocolParams p;
  p.kind = cfg.protocol;
  p.forward_prob = cfg.prob;
  p.gen_prob = cfg.gen_prob;
  p.ttl = static_cast<std::uint16_t>(resolved_ttl);
  p.alpha = cfg.alpha;
  p.stim_prob = cfg.stim_prob;
  p.stim_duration = cfg.stim_duration;
  p.recv_window = cfg.recv_window;
  p.preboost = cfg.stim_preboost;
  return p;
}

GossipProtocol::GossipProtocol(const Graph& graph, ProtocolParams params)
    : graph_(graph), params_(params) {
  const NodeId n = graph_.node_count();
  nodes_.resize(n);
  for (NodeId u = 0; u < n; ++u) nodes_[u].seen.resize(n);
  if (params_.kind == ProtocolKind::kAdaptive) {
    adaptive_.resize(n);
    for (NodeId u = 0; u < n; ++u) {
      adaptive_[u].recv_count.assign(n, 0);
      const std::size_t cells =
          static_cast<std::size_t>(n) * graph_.degree(u);
      adaptive_[u].provider_count.assign(cells, 0);
      adaptive_[u].boost_until.assign(cells, 0);
    }
  }
}

bool GossipProtocol::seen_test_and_set(NodeState& st, NodeId origin,
                                       Seq seq) {
  auto& words = st.seen[origin];
  const std::size_t word = seq >> 6;
  const std::uint64_t bit = 1ULL << (seq & 63);
  if (word >= words.size()) words.resize(word + 1, 0);
  if (words[word] & bit) return true;
  words[word] |= bit;
  ++st.seen_count;
  return false;
}

std::uint32_t GossipProtocol::neighbor_index(NodeId self,
                                             NodeId neighbor) const {
  auto nb = graph_.neighbors(self);
  auto it = std::lower_bound(nb.begin(), nb.end(), neighbor);
  return static_cast<std::uint32_t>(it - nb.begin());
}

double GossipProtocol::effective_prob(NodeId self, NodeId origin,
                                      std::uint32_t nbr_index,
                                      Timestep t) const {
  if (params_.kind != ProtocolKind::kAdaptive) {
    return params_.kind == ProtocolKind::kBroadcast ? 1.0
                                                    : params_.forward_prob;
  }
  if (params_.preboost && t < params_.stim_duration) return params_.stim_prob;
  const auto& st = adaptive_[self];
  const std::size_t cell =
      static_cast<std::size_t>(origin) * graph_.degree(self) + nbr_index;
  if (st.boost_until[cell] > t) return params_.stim_prob;
  return params_.forward_prob;
}

void GossipProtocol::gossip(EntityContext& ctx, NodeId origin, Seq seq,
                            std::uint16_t ttl_remaining,
                            std::uint16_t hop_count, NodeId arrived_from,
                            bool exclude_sender) {
  if (ttl_remaining == 0) return;
  const NodeId self = ctx.id();
  const Timestep t = ctx.time();
  auto nbrs = ctx.neighbors();
  // one draw per neighbor in ascending id order; keying by (origin, seq,
  // neighbor) couples the decision across runs with different probabilities
  for (std::uint32_t j = 0; j < nbrs.size(); ++j) {
    const NodeId w = nbrs[j];
    if (exclude_sender && w == arrived_from) continue;
    const double p = effective_prob(self, origin, j, t);
    const double u = rng::keyed_unit(ctx.seed(), self, rng::tag::kForward,
                                     pack_msg(origin, seq), w);
    if (u < p)
      ctx.send_data(w, origin, seq,
                    static_cast<std::uint16_t>(ttl_remaining - 1),
                    static_cast<std::uint16_t>(hop_count + 1));
  }
}

void GossipProtocol::on_data(EntityContext& ctx, const Envelope& env) {
  const NodeId self = ctx.id();
  NodeState& st = nodes_[self];
  if (seen_test_and_set(st, env.origin, env.seq)) {
    ctx.trace_duplicate(env.origin, env.seq);
    return;
  }
  ctx.trace_received(env.origin, env.seq, env.hop_count);
  if (params_.kind == ProtocolKind::kAdaptive) {
    AdaptiveState& ad = adaptive_[self];
    if (ad.recv_count[env.origin] != 0xffff) ++ad.recv_count[env.origin];
    const std::size_t cell =
        static_cast<std::size_t>(env.origin) * graph_.degree(self) +
        neighbor_index(self, env.sender);
    ++ad.provider_count[cell];
  }
  gossip(ctx, env.origin, env.seq, env.ttl_remaining, env.hop_count,
         env.sender, true);
}

void GossipProtocol::on_stimulus(EntityContext& ctx, const Envelope& env) {
  if (params_.kind != ProtocolKind::kAdaptive) return;
  const NodeId self = ctx.id();
  const std::size_t cell =
      static_cast<std::size_t>(env.stimulus_target) * graph_.degree(self) +
      neighbor_index(self, env.sender);
  // refresh, not stack: a later stimulus extends to the latest t + D
  adaptive_[self].boost_until[cell] = ctx.time() + params_.stim_duration;
}

void GossipProtocol::on_step(EntityContext& ctx) {
  const NodeId self = ctx.id();
  const Timestep t = ctx.time();
  NodeState& st = nodes_[self];

  const double u =
      rng::keyed_unit(ctx.seed(), self, rng::tag::kGenerate, t);
  if (u < params_.gen_prob) {
    const Seq seq = st.next_seq++;
    seen_test_and_set(st, self, seq);
    ctx.trace_generated(seq);
    gossip(ctx, self, seq, params_.ttl, 0, 0, false);
  }

  if (params_.kind == ProtocolKind::kAdaptive &&
      (t + 1) % params_.recv_window == 0)
    monitor(ctx);
}

void GossipProtocol::monitor(EntityContext& ctx) {
  const NodeId self = ctx.id();
  const Timestep t = ctx.time();
  AdaptiveState& ad = adaptive_[self];
  auto nbrs = ctx.neighbors();
  const NodeId n = graph_.node_count();
  const double expected_floor =
      params_.alpha * params_.gen_prob * params_.recv_window;

  if (!nbrs.empty()) {
    for (NodeId q = 0; q < n; ++q) {
      if (q == self) continue;
      if (static_cast<double>(ad.recv_count[q]) >= expected_floor) continue;
      // usual provider of q's messages; ties resolve to the lowest id
      const std::size_t base = static_cast<std::size_t>(q) * nbrs.size();
      std::uint32_t best = 0;
      std::uint32_t best_count = 0;
      for (std::uint32_t j = 0; j < nbrs.size(); ++j) {
        if (ad.provider_count[base + j] > best_count) {
          best_count = ad.provider_count[base + j];
          best = j;
        }
      }
      NodeId dest;
      if (best_count > 0) {
        dest = nbrs[best];
      } else {
        // never received anything for q: ask a random neighbor
        dest = nbrs[rng::bounded(rng::keyed_bits(ctx.seed(), self,
                                                 rng::tag::kStimulusPick, q,
                                                 t),
                                 static_cast<std::uint32_t>(nbrs.size()))];
      }
      ctx.send_stimulus(dest, q);
    }
  }
  std::fill(ad.recv_count.begin(), ad.recv_count.end(), 0);
}

std::uint64_t GossipProtocol::state_bytes(NodeId entity) const {
  std::uint64_t bytes = 64 + 8 * nodes_[entity].seen_count;
  if (params_.kind == ProtocolKind::kAdaptive)
    bytes += 2ULL * graph_.node_count() +
             8ULL * adaptive_[entity].provider_count.size();
  return bytes;
}

}  // namespace lunes
