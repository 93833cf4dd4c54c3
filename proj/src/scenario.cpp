#include "lunes/scenario.hpp"

#include <fstream>

#include "lunes/errors.hpp"
#include "lunes/protocols.hpp"
#include "lunes/rng.hpp"

namespace lunes {

int resolve_ttl(const ScenarioConfig& cfg, const Graph& g) {
  if (cfg.ttl != ScenarioConfig::kTtlAuto) return cfg.ttl;
  return ttl_auto(g.node_count(), g.edge_count());
}

std::uint64_t run_seed_for(const ScenarioConfig& cfg, std::uint32_t index) {
  return rng::derive_seed(cfg.seed, index);
}

void emit_trace_header(trace::TraceSink& sink, const ScenarioConfig& cfg,
                       const Graph& g, int ttl, std::uint64_t run_seed,
                       const std::string& scenario_label) {
  sink.on_header("seed", std::to_string(run_seed));
  sink.on_header("scenario", scenario_label);
  sink.on_header("protocol", protocol_name(cfg.protocol));
  sink.on_header("n", std::to_string(g.node_count()));
  sink.on_header("e", std::to_string(g.edge_count()));
  sink.on_header("ttl", std::to_string(ttl));
  sink.on_header("steps", std::to_string(cfg.steps));
  sink.on_header("lp", std::to_string(cfg.lp));
  sink.on_header("gaia", cfg.gaia ? "on" : "off");
  sink.on_header("format_version", "1");
  sink.on_header("prob", std::to_string(cfg.prob));
  sink.on_header("gen_prob", std::to_string(cfg.gen_prob));
  if (cfg.protocol == ProtocolKind::kAdaptive) {
    sink.on_header("alpha", std::to_string(cfg.alpha));
    sink.on_header("stim_prob", std::to_string(cfg.stim_prob));
    sink.on_header("stim_duration", std::to_string(cfg.stim_duration));
    sink.on_header("recv_window", std::to_string(cfg.recv_window));
    sink.on_header("stim_preboost", cfg.stim_preboost ? "on" : "off");
  }
  if (cfg.gaia) {
    sink.on_header("delta", std::to_string(cfg.delta));
    sink.on_header("theta", std::to_string(cfg.theta));
    sink.on_header("window", std::to_string(cfg.window));
    sink.on_header("mig_period", std::to_string(cfg.mig_period));
  }
}

GraphRunOutcome run_graph(const ScenarioConfig& cfg, const Graph& g,
                          std::uint64_t run_seed,
                          const std::string& scenario_label,
                          trace::TraceSink* sink) {
  GraphRunOutcome out;
  out.ttl = resolve_ttl(cfg, g);
  out.run_seed = run_seed;

  if (sink) emit_trace_header(*sink, cfg, g, out.ttl, run_seed, scenario_label);

  GossipProtocol protocol(g, ProtocolParams::from_config(cfg, out.ttl));

  EngineOptions opts;
  opts.steps = cfg.steps;
  opts.lp_count = cfg.lp;
  opts.gaia = cfg.gaia;
  opts.delta = cfg.delta;
  opts.theta = cfg.theta;
  opts.audit_window = cfg.window;
  opts.mig_period = cfg.mig_period;
  opts.seed = run_seed;
  opts.workers = cfg.workers;
  opts.verbosity = cfg.verbosity;

  RunResult result = run_engine(opts, g, protocol, sink);
  out.stats = std::move(result.stats);
  out.grd = result.grd;
  return out;
}

kv::Map stats_to_kv(const ScenarioConfig& cfg, const Graph& g,
                    const GraphRunOutcome& run, const std::string& label) {
  kv::Map m;
  kv::set(m, "label", label);
  kv::set(m, "protocol", protocol_name(cfg.protocol));
  kv::set(m, "n", std::to_string(g.node_count()));
  kv::set(m, "e", std::to_string(g.edge_count()));
  kv::set(m, "ttl", std::to_string(run.ttl));
  kv::set(m, "steps", std::to_string(cfg.steps));
  kv::set(m, "lp", std::to_string(cfg.lp));
  kv::set(m, "gaia", cfg.gaia ? "on" : "off");
  kv::set(m, "seed", std::to_string(run.run_seed));
  kv::set(m, "wct_seconds", std::to_string(run.stats.wct_seconds));
  kv::set(m, "total_messages", std::to_string(run.stats.total_messages));
  kv::set(m, "intra_lp_messages",
          std::to_string(run.stats.intra_lp_messages));
  kv::set(m, "inter_lp_messages",
          std::to_string(run.stats.inter_lp_messages));
  kv::set(m, "inter_lp_ratio", std::to_string(run.stats.inter_ratio()));
  kv::set(m, "data_sent", std::to_string(run.stats.data_sent));
  kv::set(m, "stimuli_sent", std::to_string(run.stats.stimuli_sent));
  kv::set(m, "generated", std::to_string(run.stats.generated));
  kv::set(m, "delivered", std::to_string(run.stats.delivered));
  kv::set(m, "duplicates", std::to_string(run.stats.duplicates));
  kv::set(m, "migrations", std::to_string(run.stats.migrations));
  kv::set(m, "migration_cost_units",
          std::to_string(run.stats.migration_cost_units));
  return m;
}

void write_stats_file(const std::filesystem::path& path, const kv::Map& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  kv::write(out, m);
  if (!out) throw IoError("write failed: " + path.string());
}

void write_series_csv(const std::filesystem::path& path,
                      const EngineStats& stats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t lp_count = stats.populations_per_step.empty()
                                   ? 0
                                   : stats.populations_per_step[0].size();
  out << "t,inter_lp_ratio";
  for (std::size_t lp = 0; lp < lp_count; ++lp) out << ",pop_" << lp;
  out << '\n';
  for (std::size_t t = 0; t < stats.total_per_step.size(); ++t) {
    double ratio =
        stats.total_per_step[t]
            ? static_cast<double>(stats.inter_per_step[t]) /
                  static_cast<double>(stats.total_per_step[t])
            : 0.0;
    out << t << ',' << ratio;
    for (std::size_t lp = 0; lp < lp_count; ++lp)
      out << ',' << stats.populations_per_step[t][lp];
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace lunes
