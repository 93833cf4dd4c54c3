#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "lunes/config.hpp"
#include "lunes/engine.hpp"
#include "lunes/errors.hpp"
#include "lunes/graph.hpp"
#include "lunes/keyvalue.hpp"
#include "lunes/scenario.hpp"
#include "lunes/trace.hpp"

namespace fs = std::filesystem;
using namespace lunes;

namespace {

// gen has its own small key set; same precedence rules as the scenario
// configuration (flags > LUNES_* environment > file > defaults)
const char* kGenKeys[] = {"model", "nodes",  "edges", "m0",   "m_attach",
                          "count", "seed",   "out",   "label"};

kv::Map gen_env_overrides() {
  kv::Map out;
  for (const char* key : kGenKeys) {
    std::string env_name = "LUNES_";
    for (const char* p = key; *p; ++p)
      env_name.push_back(static_cast<char>(std::toupper(*p)));
    if (const char* v = std::getenv(env_name.c_str()))
      out.emplace_back(key, v);
  }
  return out;
}

struct GenFlags {
  std::string config;
  kv::Map flags;
};

int cmd_gen(const GenFlags& in) {
  kv::Map merged;
  if (!in.config.empty()) {
    std::ifstream f(in.config);
    if (!f) throw IoError("cannot open config file: " + in.config);
    for (auto& [k, v] : kv::parse(f)) kv::set(merged, k, v);
  }
  for (auto& [k, v] : gen_env_overrides()) kv::set(merged, k, v);
  for (auto& [k, v] : in.flags) kv::set(merged, k, v);

  CorpusSpec spec;
  std::string model = kv::try_get(merged, "model").value_or("er");
  if (model == "er")
    spec.model = GraphModel::kErdosRenyi;
  else if (model == "ba")
    spec.model = GraphModel::kBarabasiAlbert;
  else
    throw ParameterError("unknown model: " + model + " (expected er or ba)");

  spec.n = static_cast<NodeId>(kv::get_u64(merged, "nodes"));
  if (spec.model == GraphModel::kErdosRenyi) {
    spec.m = kv::get_u64(merged, "edges");
  } else {
    spec.m0 = static_cast<NodeId>(kv::get_u64(merged, "m0"));
    spec.m_attach = static_cast<NodeId>(kv::get_u64(merged, "m_attach"));
  }
  spec.count = static_cast<std::uint32_t>(
      kv::try_get(merged, "count") ? kv::get_u64(merged, "count") : 10);
  spec.master_seed =
      kv::try_get(merged, "seed") ? kv::get_u64(merged, "seed") : 1;
  spec.label = kv::try_get(merged, "label").value_or("");

  std::string out = kv::get(merged, "out");
  // validate parameters before touching the filesystem
  corpus_member(spec, 0);
  corpus_generate(spec, out);
  std::cout << "corpus " << out << ": " << spec.count << " graphs, n="
            << spec.n << "\n";
  return kExitOk;
}

struct SimFlags {
  std::string config;
  kv::Map flags;
};

int cmd_sim(const SimFlags& in) {
  ScenarioConfig cfg = resolve_config(in.config, in.flags);
  if (cfg.corpus.empty()) throw ConfigError("sim: --corpus is required");
  Corpus corpus = corpus_load(cfg.corpus);

  std::string corpus_name = cfg.corpus;
  while (corpus_name.size() > 1 && corpus_name.back() == '/')
    corpus_name.pop_back();
  fs::path out_dir = cfg.out.empty()
                         ? fs::path("runs") / fs::path(corpus_name).filename()
                         : fs::path(cfg.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  for (std::uint32_t k = 0; k < corpus.graphs.size(); ++k) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "graph_%03u", k);
    const Graph& g = corpus.graphs[k];
    std::string label = corpus.spec.label + "/" + stem;

    trace::FileTraceSink sink((out_dir / (std::string(stem) + ".trace")).string(),
                              cfg.verbosity);
    GraphRunOutcome run =
        run_graph(cfg, g, run_seed_for(cfg, k), label, &sink);

    write_stats_file(out_dir / (std::string(stem) + ".stats"),
                     stats_to_kv(cfg, g, run, label));
    write_series_csv(out_dir / (std::string(stem) + ".series.csv"), run.stats);
    std::cout << stem << ": ttl=" << run.ttl << " delivered="
              << run.stats.delivered << " duplicates="
              << run.stats.duplicates << " migrations="
              << run.stats.migrations << " wct=" << run.stats.wct_seconds
              << "s\n";
  }
  std::cout << "wrote " << corpus.graphs.size() << " traces to "
            << out_dir.string() << "\n";
  return kExitOk;
}

struct AnalyzeFlags {
  std::string config;
  std::string report;
  std::vector<std::string> traces;
  std::vector<std::string> stats;
  NodeId node_count = 0;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// flags > LUNES_* environment > config file, like the other subcommands;
// trace/stats lists are space- or comma-separated outside of flags
AnalyzeFlags resolve_analyze(const AnalyzeFlags& flags) {
  kv::Map merged;
  if (!flags.config.empty()) {
    std::ifstream f(flags.config);
    if (!f) throw IoError("cannot open config file: " + flags.config);
    for (auto& [k, v] : kv::parse(f)) kv::set(merged, k, v);
  }
  for (const char* key : {"report", "trace", "stats", "n"}) {
    std::string env_name = "LUNES_";
    for (const char* p = key; *p; ++p)
      env_name.push_back(static_cast<char>(std::toupper(*p)));
    if (const char* v = std::getenv(env_name.c_str())) kv::set(merged, key, v);
  }

  AnalyzeFlags out = flags;
  if (out.report.empty())
    out.report = kv::try_get(merged, "report").value_or("");
  if (out.traces.empty())
    if (auto v = kv::try_get(merged, "trace")) out.traces = split_list(*v);
  if (out.stats.empty())
    if (auto v = kv::try_get(merged, "stats")) out.stats = split_list(*v);
  if (out.node_count == 0)
    if (auto v = kv::try_get(merged, "n"))
      out.node_count = static_cast<NodeId>(std::stoull(*v));
  if (out.report.empty())
    throw ParameterError("analyze: --report is required");
  return out;
}

int cmd_analyze(const AnalyzeFlags& flags) {
  AnalyzeFlags in = resolve_analyze(flags);
  const char* known[] = {"coverage", "messages", "delay", "speedup",
                         "integrity"};
  if (std::find(std::begin(known), std::end(known), in.report) ==
      std::end(known))
    throw ParameterError("unknown report: " + in.report);

  if (in.report == "speedup") {
    if (in.stats.empty())
      throw ParameterError("speedup report needs --stats files");
    std::vector<trace::StatsInput> runs;
    for (const std::string& path : in.stats) {
      std::ifstream f(path);
      if (!f) throw IoError("cannot open stats file: " + path);
      trace::StatsInput s;
      s.values = kv::parse(f);
      s.label = kv::try_get(s.values, "label")
                    .value_or(fs::path(path).stem().string());
      runs.push_back(std::move(s));
    }
    std::cout << trace::format_speedup_csv(trace::speedup_report(runs));
    return kExitOk;
  }

  if (in.traces.empty()) throw ParameterError("report needs --trace files");

  if (in.report == "integrity") {
    bool clean = true;
    for (const std::string& path : in.traces) {
      std::ifstream f(path, std::ios::binary);
      if (!f) throw IoError("cannot open trace file: " + path);
      auto violations = trace::verify_trace(f);
      std::cout << "file=" << path << " violations=" << violations.size()
                << "\n";
      for (const auto& v : violations) std::cout << "  " << v << "\n";
      clean = clean && violations.empty();
    }
    if (!clean) throw IntegrityError("trace integrity violations found");
    return kExitOk;
  }

  std::vector<trace::DisseminationReport> reports;
  for (const std::string& path : in.traces) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open trace file: " + path);
    reports.push_back(trace::dissemination_report(f, in.node_count));
  }

  if (in.report == "messages") {
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      std::cout << "file=" << in.traces[i] << " messages="
                << reports[i].messages << " delivered="
                << reports[i].delivered << " duplicates="
                << reports[i].duplicates << " control="
                << reports[i].control_messages << "\n";
      total += reports[i].delivered;
    }
    std::cout << "corpus_delivered_total=" << total << "\n";
    std::cout << "corpus_delivered_mean="
              << static_cast<double>(total) /
                     static_cast<double>(reports.size())
              << "\n";
  } else if (in.report == "coverage") {
    double acc = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      std::cout << "file=" << in.traces[i] << " mean_coverage="
                << reports[i].mean_coverage << "\n";
      acc += reports[i].mean_coverage;
    }
    std::cout << "corpus_mean_coverage="
              << acc / static_cast<double>(reports.size()) << "\n";
  } else if (in.report == "delay") {
    std::vector<std::uint64_t> hist;
    for (const auto& rep : reports) {
      if (hist.size() < rep.hop_histogram.size())
        hist.resize(rep.hop_histogram.size(), 0);
      for (std::size_t h = 0; h < rep.hop_histogram.size(); ++h)
        hist[h] += rep.hop_histogram[h];
    }
    std::cout << "hops,count\n";
    for (std::size_t h = 0; h < hist.size(); ++h)
      std::cout << h << "," << hist[h] << "\n";
  }
  return kExitOk;
}

struct BenchFlags {
  std::string config;
  std::string scenarios;
  kv::Map flags;
};

struct BenchConfigResult {
  std::string label;
  ScenarioConfig cfg;
  trace::Fingerprint grd;
  double wct = 0;
  EngineStats totals;
};

void bench_corpus(const ScenarioConfig& base, const Corpus& corpus,
                  const fs::path& out_dir, const std::string& scenario_tag) {
  struct Setup {
    const char* label;
    LpId lp;
    bool gaia;
  };
  const Setup setups[] = {{"lp1", 1, false},
                          {"lp2", 2, false},
                          {"lp4", 4, false},
                          {"lp2_gaia", 2, true},
                          {"lp4_gaia", 4, true}};

  std::vector<trace::StatsInput> stats_inputs;
  trace::Fingerprint reference;
  bool have_reference = false;

  for (const Setup& setup : setups) {
    ScenarioConfig cfg = base;
    cfg.lp = setup.lp;
    cfg.gaia = setup.gaia;
    cfg.verbosity = 0;  // WCT measures protocol simulation, not trace io

    trace::Fingerprint combined;
    double wct = 0;
    EngineStats totals;
    for (std::uint32_t k = 0; k < corpus.graphs.size(); ++k) {
      GraphRunOutcome run =
          run_graph(cfg, corpus.graphs[k], run_seed_for(cfg, k),
                    corpus.spec.label, nullptr);
      combined.merge(run.grd);
      wct += run.stats.wct_seconds;
      totals.total_messages += run.stats.total_messages;
      totals.delivered += run.stats.delivered;
      totals.migrations += run.stats.migrations;
    }
    if (!have_reference) {
      reference = combined;
      have_reference = true;
    } else if (!(combined == reference)) {
      throw InvariantViolation(
          "bench: protocol-level trace differs between configurations (" +
          std::string(setup.label) + ")");
    }

    std::string label = scenario_tag.empty()
                            ? std::string(setup.label)
                            : scenario_tag + "_" + setup.label;
    kv::Map m;
    kv::set(m, "label", label);
    kv::set(m, "lp", std::to_string(setup.lp));
    kv::set(m, "gaia", setup.gaia ? "on" : "off");
    kv::set(m, "wct_seconds", std::to_string(wct));
    kv::set(m, "total_messages", std::to_string(totals.total_messages));
    kv::set(m, "delivered", std::to_string(totals.delivered));
    kv::set(m, "migrations", std::to_string(totals.migrations));
    write_stats_file(out_dir / (label + ".stats"), m);

    trace::StatsInput input;
    input.label = label;
    input.values = m;
    stats_inputs.push_back(std::move(input));
    std::cout << label << ": wct=" << wct << "s messages="
              << totals.total_messages << "\n";
  }

  trace::SpeedupReport report = trace::speedup_report(stats_inputs);
  std::string csv = trace::format_speedup_csv(report);
  std::string name =
      scenario_tag.empty() ? "speedup.csv" : scenario_tag + "_speedup.csv";
  std::ofstream out(out_dir / name, std::ios::binary);
  out << csv;
  std::cout << "trace equivalence: ok\n" << csv;
}

int cmd_bench(const BenchFlags& in) {
  ScenarioConfig cfg = resolve_config(in.config, in.flags);
  fs::path out_dir = cfg.out.empty() ? fs::path("bench") : fs::path(cfg.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  if (in.scenarios.empty()) {
    if (cfg.corpus.empty())
      throw ConfigError("bench: --corpus or --scenarios is required");
    bench_corpus(cfg, corpus_load(cfg.corpus), out_dir, "");
    return kExitOk;
  }
  if (in.scenarios != "table1")
    throw ParameterError("unknown scenario set: " + in.scenarios);

  struct Row {
    NodeId n;
    std::uint64_t e;
  };
  const Row rows[] = {{200, 400}, {300, 600}, {400, 800}, {500, 1000}};
  for (std::size_t i = 0; i < 4; ++i) {
    std::string tag = "s" + std::to_string(i + 1);
    fs::path corpus_dir = out_dir / ("corpus_" + tag);
    if (!fs::exists(corpus_dir / "manifest.txt")) {
      CorpusSpec spec;
      spec.model = GraphModel::kErdosRenyi;
      spec.n = rows[i].n;
      spec.m = rows[i].e;
      spec.count = 10;
      spec.master_seed = cfg.seed;
      spec.label = tag;
      corpus_generate(spec, corpus_dir);
    }
    std::cout << "== scenario " << tag << " (n=" << rows[i].n << ", e="
              << rows[i].e << ") ==\n";
    bench_corpus(cfg, corpus_load(corpus_dir), out_dir, tag);
  }
  return kExitOk;
}

// registers one option per scenario-config key; only user-set values are
// passed on so file/env/default precedence stays intact
void add_config_flags(CLI::App* cmd, std::map<std::string, std::string>& vals) {
  for (const std::string& key : config_keys()) {
    std::string flag = "--" + key;
    for (auto& c : flag)
      if (c == '_') c = '-';
    cmd->add_option(flag, vals[key]);
  }
}

kv::Map collect_set_flags(CLI::App* cmd,
                          const std::map<std::string, std::string>& vals) {
  kv::Map out;
  for (const auto& [key, value] : vals) {
    std::string flag = "--" + key;
    for (auto& c : flag)
      if (c == '_') c = '-';
    if (cmd->count(flag) > 0) kv::set(out, key, value);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lunes: gossip dissemination on large unstructured networks"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a graph corpus");
  std::map<std::string, std::string> gen_vals;
  std::string gen_config;
  gen->add_option("--config", gen_config, "key=value config file");
  for (const char* key : kGenKeys) {
    std::string flag = std::string("--") + key;
    for (auto& c : flag)
      if (c == '_') c = '-';
    gen->add_option(flag, gen_vals[key]);
  }

  // sim
  auto* sim = app.add_subcommand("sim", "simulate a protocol over a corpus");
  std::map<std::string, std::string> sim_vals;
  std::string sim_config;
  sim->add_option("--config", sim_config, "key=value config file");
  add_config_flags(sim, sim_vals);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "report on traces or stats");
  AnalyzeFlags an;
  analyze->add_option("--config", an.config, "key=value config file");
  analyze->add_option("--report", an.report,
                      "coverage | messages | delay | speedup | integrity");
  analyze->add_option("--trace", an.traces, "trace files");
  analyze->add_option("--stats", an.stats, "stats files (speedup)");
  analyze->add_option("--n", an.node_count,
                      "node count override for coverage");

  // bench
  auto* bench = app.add_subcommand(
      "bench", "run the five reference configurations and report speedup");
  std::map<std::string, std::string> bench_vals;
  BenchFlags bf;
  bench->add_option("--config", bf.config, "key=value config file");
  bench->add_option("--scenarios", bf.scenarios,
                    "named scenario set (table1)");
  add_config_flags(bench, bench_vals);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      GenFlags gf;
      gf.config = gen_config;
      for (const char* key : kGenKeys) {
        std::string flag = std::string("--") + key;
        for (auto& c : flag)
          if (c == '_') c = '-';
        if (gen->count(flag) > 0) kv::set(gf.flags, key, gen_vals[key]);
      }
      return cmd_gen(gf);
    }
    if (sim->parsed()) {
      SimFlags sf;
      sf.config = sim_config;
      sf.flags = collect_set_flags(sim, sim_vals);
      return cmd_sim(sf);
    }
    if (analyze->parsed()) return cmd_analyze(an);
    if (bench->parsed()) {
      bf.flags = collect_set_flags(bench, bench_vals);
      return cmd_bench(bf);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IntegrityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ModelError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const InvariantViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitUsage;
}
