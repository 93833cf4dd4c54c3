#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lunes/envelope.hpp"
#include "lunes/graph.hpp"
#include "lunes/trace.hpp"

namespace lunes {

// Entity -> Logical Process assignment. Mutated only by migration rounds.
struct LpMap {
  std::vector<LpId> assignment;
  LpId lp_count = 1;

  // block partition: entity i -> floor(i*L/n); populations differ by <= 1
  static LpMap block_partition(NodeId n, LpId lp_count);

  LpId operator()(NodeId entity) const { return assignment[entity]; }
  std::vector<std::uint32_t> populations() const;
};

// Sliding window of outgoing message counts per entity, kept per destination
// entity so totals re-key automatically when any entity migrates.
class InteractionLedger {
 public:
  InteractionLedger(NodeId entities, Timestep window);

  Timestep window() const { return window_; }
  void begin_step(NodeId entity, Timestep t);  // evicts the slot wrapping to t
  void record_send(NodeId from, NodeId dest);
  // window totals for `entity`, bucketed by the given assignment
  void window_totals(NodeId entity, const LpMap& map,
                     std::span<std::uint64_t> per_lp) const;

 private:
  struct Slot {
    std::vector<std::pair<NodeId, std::uint32_t>> counts;
  };
  Timestep window_;
  std::vector<Slot> slots_;        // entity * window_ + (t % window_)
  std::vector<std::size_t> slot_cursor_;  // per entity, set by begin_step
};

struct Migration {
  NodeId entity;
  LpId from;
  LpId to;
};

// GAIA-style clustering pass: propose entity -> busiest foreign LP when its
// window traffic there exceeds theta x home traffic; apply proposals in
// descending attraction gain under the load cap ceil((1+delta)*n/L).
std::vector<Migration> migration_round(const InteractionLedger& ledger,
                                       LpMap& map, double delta, double theta);

// integer ceiling with a snap for quotients that are integral up to fp noise
std::uint32_t load_cap(NodeId entities, LpId lp_count, double delta);

struct EngineStats {
  std::uint64_t total_messages = 0;
  std::uint64_t intra_lp_messages = 0;
  std::uint64_t inter_lp_messages = 0;
  std::uint64_t data_sent = 0;
  std::uint64_t stimuli_sent = 0;
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t migrations = 0;
  std::uint64_t migration_cost_units = 0;
  double wct_seconds = 0.0;

  // per-timestep series
  std::vector<std::uint64_t> inter_per_step;
  std::vector<std::uint64_t> total_per_step;
  std::vector<std::vector<std::uint32_t>> populations_per_step;

  double inter_ratio() const {
    return total_messages ? static_cast<double>(inter_lp_messages) /
                                static_cast<double>(total_messages)
                          : 0.0;
  }
  // message-weighted inter-LP ratio over steps [begin, end)
  double inter_ratio_over(std::size_t begin, std::size_t end) const;
};

class Engine;

// Handle an entity uses while one of its handlers runs. Sends are buffered
// and delivered at t+1; destination validity is checked immediately.
class EntityContext {
 public:
  NodeId id() const { return entity_; }
  Timestep time() const { return t_; }
  std::uint64_t seed() const;
  std::span<const NodeId> neighbors() const;
  const Graph& graph() const;

  void send_data(NodeId dest, NodeId origin, Seq seq,
                 std::uint16_t ttl_remaining, std::uint16_t hop_count);
  void send_stimulus(NodeId dest, NodeId target_origin);

  void trace_generated(Seq seq);
  void trace_received(NodeId origin, Seq seq, std::uint16_t hops);
  void trace_duplicate(NodeId origin, Seq seq);

 private:
  friend class Engine;
  EntityContext(Engine& engine, std::uint32_t shard, NodeId entity,
                Timestep t)
      : engine_(&engine), shard_(shard), entity_(entity), t_(t) {}
  Engine* engine_;
  std::uint32_t shard_;
  NodeId entity_;
  Timestep t_;
};

// Per-entity behavior. State belongs to the implementation; entities only
// interact through sends, so handlers run without locking on whichever
// worker owns their LP.
class Protocol {
 public:
  virtual ~Protocol() = default;
  virtual void on_data(EntityContext& ctx, const Envelope& env) = 0;
  virtual void on_stimulus(EntityContext& /*ctx*/, const Envelope& /*env*/) {}
  virtual void on_step(EntityContext& ctx) = 0;
  // modeled state size; charged to migration_cost_units per migration
  virtual std::uint64_t state_bytes(NodeId /*entity*/) const { return 64; }
};

struct EngineOptions {
  Timestep steps = 1;
  LpId lp_count = 1;
  bool gaia = false;
  double delta = 0.2;
  double theta = 1.5;
  Timestep audit_window = 20;
  Timestep mig_period = 10;
  std::uint64_t seed = 1;
  unsigned workers = 0;  // 0 = one per LP, capped by hardware threads
  int verbosity = 1;
};

struct RunResult {
  EngineStats stats;
  trace::Fingerprint grd;  // fingerprint of G/R/D lines
};

// Executes `steps` timesteps. Per step: deliver (canonical order), step
// handlers (ascending entity id), collect sends with unit lookahead, then a
// migration round when gaia is on and t % mig_period == 0. The trace sink,
// when given, receives events in canonical order plus trailing metadata.
RunResult run_engine(const EngineOptions& opts, const Graph& graph,
                     Protocol& protocol, trace::TraceSink* sink = nullptr);

}  // namespace lunes
