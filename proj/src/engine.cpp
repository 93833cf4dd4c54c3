#include "lunes/engine.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <thread>

#include "lunes/errors.hpp"

namespace lunes {

LpMap LpMap::block_partition(NodeId n, LpId lp_count) {
  if (lp_count < 1) throw ParameterError("lp_count must be >= 1");
  LpMap map;
  map.lp_count = lp_count;
  map.assignment.resize(n);
  for (NodeId i = 0; i < n; ++i)
    map.assignment[i] = static_cast<LpId>(
        (static_cast<std::uint64_t>(i) * lp_count) / n);
  return map;
}

std::vector<std::uint32_t> LpMap::populations() const {
  std::vector<std::uint32_t> pops(lp_count, 0);
  for (LpId lp : assignment) ++pops[lp];
  return pops;
}

InteractionLedger::InteractionLedger(NodeId entities, Timestep window)
    : window_(window),
      slots_(static_cast<std::size_t>(entities) * window),
      slot_cursor_(entities) {
  for (NodeId e = 0; e < entities; ++e)
    slot_cursor_[e] = static_cast<std::size_t>(e) * window_;
}

void InteractionLedger::begin_step(NodeId entity, Timestep t) {
  // reuse the slot that wraps around: it held step t - window
  std::size_t slot = static_cast<std::size_t>(entity) * window_ + t % window_;
  slots_[slot].counts.clear();
  slot_cursor_[entity] = slot;
}

void InteractionLedger::record_send(NodeId from, NodeId dest) {
  auto& counts = slots_[slot_cursor_[from]].counts;
  for (auto& [d, c] : counts) {
    if (d == dest) {
      ++c;
      return;
    }
  }
  counts.emplace_back(dest, 1);
}

void InteractionLedger::window_totals(NodeId entity, const LpMap& map,
                                      std::span<std::uint64_t> per_lp) const {
  std::fill(per_lp.begin(), per_lp.end(), 0);
  const std::size_t base = static_cast<std::size_t>(entity) * window_;
  for (Timestep s = 0; s < window_; ++s)
    for (const auto& [dest, count] : slots_[base + s].counts)
      per_lp[map(dest)] += count;
}

std::uint32_t load_cap(NodeId entities, LpId lp_count, double delta) {
  double q = (1.0 + delta) * static_cast<double>(entities) / lp_count;
  double nearest = std::round(q);
  if (std::abs(q - nearest) < 1e-9) return static_cast<std::uint32_t>(nearest);
  return static_cast<std::uint32_t>(std::ceil(q));
}

std::vector<Migration> migration_round(const InteractionLedger& ledger,
                                       LpMap& map, double delta,
                                       double theta) {
  const LpId lp_count = map.lp_count;
  const NodeId n = static_cast<NodeId>(map.assignment.size());
  if (lp_count < 2 || n == 0) return {};

  struct Proposal {
    std::uint64_t gain;
    NodeId entity;
    LpId from, to;
  };
  std::vector<Proposal> proposals;
  std::vector<std::uint64_t> totals(lp_count);
  for (NodeId i = 0; i < n; ++i) {
    ledger.window_totals(i, map, totals);
    const LpId home = map(i);
    LpId best = home;
    std::uint64_t best_count = 0;
    for (LpId lp = 0; lp < lp_count; ++lp) {
      if (lp == home) continue;
      if (totals[lp] > best_count) {
        best_count = totals[lp];
        best = lp;
      }
    }
    if (best != home &&
        static_cast<double>(best_count) >
            theta * static_cast<double>(totals[home]))
      proposals.push_back({best_count - totals[home], i, home, best});
  }

  std::sort(proposals.begin(), proposals.end(),
            [](const Proposal& a, const Proposal& b) {
              if (a.gain != b.gain) return a.gain > b.gain;
              return a.entity < b.entity;
            });

  const std::uint32_t cap = load_cap(n, lp_count, delta);
  std::vector<std::uint32_t> pops = map.populations();
  std::vector<Migration> applied;
  for (const Proposal& p : proposals) {
    if (pops[p.to] + 1 > cap) continue;
    ++pops[p.to];
    --pops[p.from];
    map.assignment[p.entity] = p.to;
    applied.push_back({p.entity, p.from, p.to});
  }
  return applied;
}

double EngineStats::inter_ratio_over(std::size_t begin,
                                     std::size_t end) const {
  std::uint64_t inter = 0, total = 0;
  end = std::min(end, total_per_step.size());
  for (std::size_t t = begin; t < end; ++t) {
    inter += inter_per_step[t];
    total += total_per_step[t];
  }
  return total ? static_cast<double>(inter) / static_cast<double>(total)
               : 0.0;
}

namespace {

struct Shard {
  std::vector<Envelope> inbox;
  std::vector<Envelope> outbox;
  std::vector<trace::TraceEvent> events;
  std::uint64_t intra = 0, inter = 0, data = 0, stim = 0;
  std::uint64_t gen = 0, recv = 0, dup = 0;
};

}  // namespace

class Engine {
 public:
  Engine(const EngineOptions& opts, const Graph& graph, Protocol& protocol,
         trace::TraceSink* sink)
      : opts_(opts),
        graph_(graph),
        protocol_(protocol),
        sink_(sink),
        n_(graph.node_count()),
        map_(LpMap::block_partition(graph.node_count(), opts.lp_count)),
        ledger_(graph.node_count(), opts.audit_window),
        ctl_seq_(graph.node_count(), 0) {
    if (n_ < 1) throw ParameterError("engine: graph must have >= 1 node");
    if (opts_.steps < 1) throw ParameterError("engine: steps must be >= 1");
    if (!(opts_.theta > 1.0))
      throw ParameterError("engine: theta must be > 1");
    shards_.resize(opts_.lp_count);
  }

  RunResult run();

  // called from EntityContext
  void send(std::uint32_t shard_idx, NodeId from, Timestep t, Envelope env) {
    if (env.dest >= n_)
      throw ModelError("protocol sent to invalid destination " +
                       std::to_string(env.dest) + " (n=" +
                       std::to_string(n_) + ")");
    Shard& sh = shards_[shard_idx];
    ledger_.record_send(from, env.dest);
    if (map_(env.dest) == map_(from))
      ++sh.intra;
    else
      ++sh.inter;
    if (env.kind == MsgKind::kData) {
      ++sh.data;
      if (opts_.verbosity >= 2 && sink_)
        sh.events.push_back({trace::EventKind::kSend, t, from, env.origin,
                             env.seq, env.dest, 0});
    } else {
      ++sh.stim;
    }
    sh.outbox.push_back(env);
  }

  Seq next_ctl_seq(NodeId entity) { return ctl_seq_[entity]++; }

  void emit(std::uint32_t shard_idx, const trace::TraceEvent& ev) {
    Shard& sh = shards_[shard_idx];
    switch (ev.kind) {
      case trace::EventKind::kGenerate: ++sh.gen; break;
      case trace::EventKind::kReceive: ++sh.recv; break;
      case trace::EventKind::kDuplicate: ++sh.dup; break;
      default: break;
    }
    sh.events.push_back(ev);
  }

  std::uint64_t seed() const { return opts_.seed; }
  const Graph& graph() const { return graph_; }

 private:
  void process_shard(std::uint32_t shard_idx, Timestep t);
  void barrier_work(Timestep t, trace::FingerprintSink& grd,
                    EngineStats& stats);

  EngineOptions opts_;
  const Graph& graph_;
  Protocol& protocol_;
  trace::TraceSink* sink_;
  NodeId n_;
  LpMap map_;
  InteractionLedger ledger_;
  std::vector<Seq> ctl_seq_;
  std::vector<Shard> shards_;
  std::vector<trace::TraceEvent> scratch_events_;
};

std::uint64_t EntityContext::seed() const { return engine_->seed(); }

std::span<const NodeId> EntityContext::neighbors() const {
  return engine_->graph().neighbors(entity_);
}

const Graph& EntityContext::graph() const { return engine_->graph(); }

void EntityContext::send_data(NodeId dest, NodeId origin, Seq seq,
                              std::uint16_t ttl_remaining,
                              std::uint16_t hop_count) {
  Envelope env;
  env.kind = MsgKind::kData;
  env.origin = origin;
  env.seq = seq;
  env.sender = entity_;
  env.dest = dest;
  env.send_time = t_;
  env.ttl_remaining = ttl_remaining;
  env.hop_count = hop_count;
  engine_->send(shard_, entity_, t_, env);
}

void EntityContext::send_stimulus(NodeId dest, NodeId target_origin) {
  Envelope env;
  env.kind = MsgKind::kStimulus;
  env.origin = entity_;
  env.seq = engine_->next_ctl_seq(entity_);
  env.sender = entity_;
  env.dest = dest;
  env.send_time = t_;
  env.stimulus_target = target_origin;
  engine_->send(shard_, entity_, t_, env);
}

void EntityContext::trace_generated(Seq seq) {
  engine_->emit(shard_, {trace::EventKind::kGenerate, t_, entity_, entity_,
                         seq, 0, 0});
}

void EntityContext::trace_received(NodeId origin, Seq seq,
                                   std::uint16_t hops) {
  engine_->emit(shard_, {trace::EventKind::kReceive, t_, entity_, origin, seq,
                         hops, 0});
}

void EntityContext::trace_duplicate(NodeId origin, Seq seq) {
  engine_->emit(shard_, {trace::EventKind::kDuplicate, t_, entity_, origin,
                         seq, 0, 0});
}

void Engine::process_shard(std::uint32_t shard_idx, Timestep t) {
  Shard& sh = shards_[shard_idx];

  for (NodeId e = 0; e < n_; ++e)
    if (map_(e) == shard_idx) ledger_.begin_step(e, t);

  // phase 1: deliver in canonical order (comparator groups by destination)
  std::sort(sh.inbox.begin(), sh.inbox.end(), CanonicalDeliveryOrder{});
  for (const Envelope& env : sh.inbox) {
    EntityContext ctx(*this, shard_idx, env.dest, t);
    if (env.kind == MsgKind::kData)
      protocol_.on_data(ctx, env);
    else
      protocol_.on_stimulus(ctx, env);
  }
  sh.inbox.clear();

  // phase 2: per-step handlers, ascending entity id
  for (NodeId e = 0; e < n_; ++e) {
    if (map_(e) != shard_idx) continue;
    EntityContext ctx(*this, shard_idx, e, t);
    protocol_.on_step(ctx);
  }
}

void Engine::barrier_work(Timestep t, trace::FingerprintSink& grd,
                          EngineStats& stats) {
  if (sink_) {
    // merge and order this step's events for emission
    scratch_events_.clear();
    for (Shard& sh : shards_) {
      scratch_events_.insert(scratch_events_.end(), sh.events.begin(),
                             sh.events.end());
      sh.events.clear();
    }
    std::sort(scratch_events_.begin(), scratch_events_.end(),
              trace::CanonicalEventOrder{});
  }

  // migration round, applied atomically between timesteps
  if (opts_.gaia && t % opts_.mig_period == 0) {
    std::vector<Migration> applied =
        migration_round(ledger_, map_, opts_.delta, opts_.theta);
    std::sort(applied.begin(), applied.end(),
              [](const Migration& a, const Migration& b) {
                return a.entity < b.entity;
              });
    for (const Migration& m : applied) {
      stats.migrations += 1;
      stats.migration_cost_units += protocol_.state_bytes(m.entity);
      if (sink_)
        scratch_events_.push_back(
            {trace::EventKind::kMigrate, t, m.entity, 0, 0, m.from, m.to});
    }
    const std::uint32_t cap = load_cap(n_, opts_.lp_count, opts_.delta);
    for (std::uint32_t pop : map_.populations())
      if (pop > cap)
        throw InvariantViolation(
            "load cap violated after migration round at t=" +
            std::to_string(t) + ": population " + std::to_string(pop) +
            " > cap " + std::to_string(cap));
  }

  if (sink_) {
    for (const trace::TraceEvent& ev : scratch_events_) {
      grd.on_event(ev);
      sink_->on_event(ev);
    }
  } else {
    // the fingerprint is order-insensitive, so skip the merge sort
    for (Shard& sh : shards_) {
      for (const trace::TraceEvent& ev : sh.events) grd.on_event(ev);
      sh.events.clear();
    }
  }

  // route sends to their destination shards for t+1 (post-migration map)
  for (Shard& sh : shards_) {
    for (const Envelope& env : sh.outbox)
      shards_[map_(env.dest)].inbox.push_back(env);
    sh.outbox.clear();
  }

  std::uint64_t step_total = 0, step_inter = 0;
  for (Shard& sh : shards_) {
    step_inter += sh.inter;
    step_total += sh.intra + sh.inter;
    stats.intra_lp_messages += sh.intra;
    stats.inter_lp_messages += sh.inter;
    stats.data_sent += sh.data;
    stats.stimuli_sent += sh.stim;
    stats.generated += sh.gen;
    stats.delivered += sh.recv;
    stats.duplicates += sh.dup;
    sh.intra = sh.inter = sh.data = sh.stim = 0;
    sh.gen = sh.recv = sh.dup = 0;
  }
  stats.total_messages += step_total;
  stats.inter_per_step.push_back(step_inter);
  stats.total_per_step.push_back(step_total);
  stats.populations_per_step.push_back(map_.populations());
}

RunResult Engine::run() {
  RunResult result;
  EngineStats& stats = result.stats;
  stats.inter_per_step.reserve(opts_.steps);
  stats.total_per_step.reserve(opts_.steps);
  stats.populations_per_step.reserve(opts_.steps);
  trace::FingerprintSink grd("GRD");

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  unsigned workers = opts_.workers ? opts_.workers : hw;
  workers = std::min<unsigned>(workers, opts_.lp_count);
  if (workers < 1) workers = 1;

  const auto start = std::chrono::steady_clock::now();

  if (workers == 1) {
    for (Timestep t = 0; t < opts_.steps; ++t) {
      for (std::uint32_t s = 0; s < opts_.lp_count; ++s) process_shard(s, t);
      barrier_work(t, grd, stats);
    }
  } else {
    Timestep current_t = 0;
    bool stop = false;
    std::vector<std::exception_ptr> errors(workers);
    std::barrier phase_start(workers + 1);
    std::barrier phase_done(workers + 1);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        while (true) {
          phase_start.arrive_and_wait();
          if (stop) return;
          try {
            for (std::uint32_t s = w; s < opts_.lp_count; s += workers)
              process_shard(s, current_t);
          } catch (...) {
            if (!errors[w]) errors[w] = std::current_exception();
          }
          phase_done.arrive_and_wait();
        }
      });
    }
    try {
      for (Timestep t = 0; t < opts_.steps; ++t) {
        current_t = t;
        phase_start.arrive_and_wait();
        phase_done.arrive_and_wait();
        for (auto& err : errors)
          if (err) std::rethrow_exception(err);
        barrier_work(t, grd, stats);
      }
    } catch (...) {
      stop = true;
      phase_start.arrive_and_wait();
      for (auto& th : pool) th.join();
      throw;
    }
    stop = true;
    phase_start.arrive_and_wait();
    for (auto& th : pool) th.join();
  }

  const auto end = std::chrono::steady_clock::now();
  stats.wct_seconds =
      std::chrono::duration<double>(end - start).count();

  if (sink_) {
    sink_->on_metadata("generated", std::to_string(stats.generated));
    sink_->on_metadata("delivered", std::to_string(stats.delivered));
    sink_->on_metadata("duplicates", std::to_string(stats.duplicates));
    sink_->on_metadata("data_sent", std::to_string(stats.data_sent));
    sink_->on_metadata("stimuli_sent", std::to_string(stats.stimuli_sent));
    sink_->on_metadata("migrations", std::to_string(stats.migrations));
  }
  result.grd = grd.fingerprint();
  return result;
}

RunResult run_engine(const EngineOptions& opts, const Graph& graph,
                     Protocol& protocol, trace::TraceSink* sink) {
  Engine engine(opts, graph, protocol, sink);
  return engine.run();
}

}  // namespace lunes
