#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lunes/config.hpp"
#include "lunes/engine.hpp"
#include "lunes/graph.hpp"
#include "lunes/trace.hpp"

namespace lunes {

struct GraphRunOutcome {
  EngineStats stats;
  trace::Fingerprint grd;
  int ttl = 0;
  std::uint64_t run_seed = 0;
};

// effective TTL for a graph under this config (`auto` resolves as e/n)
int resolve_ttl(const ScenarioConfig& cfg, const Graph& g);

std::uint64_t run_seed_for(const ScenarioConfig& cfg, std::uint32_t index);

void emit_trace_header(trace::TraceSink& sink, const ScenarioConfig& cfg,
                       const Graph& g, int ttl, std::uint64_t run_seed,
                       const std::string& scenario_label);

GraphRunOutcome run_graph(const ScenarioConfig& cfg, const Graph& g,
                          std::uint64_t run_seed,
                          const std::string& scenario_label,
                          trace::TraceSink* sink);

kv::Map stats_to_kv(const ScenarioConfig& cfg, const Graph& g,
                    const GraphRunOutcome& run, const std::string& label);

void write_stats_file(const std::filesystem::path& path, const kv::Map& kv);
void write_series_csv(const std::filesystem::path& path,
                      const EngineStats& stats);

}  // namespace lunes
