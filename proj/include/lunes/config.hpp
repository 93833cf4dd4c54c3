#pragma once

#include <cstdint>
#include <string>

#include "lunes/envelope.hpp"
#include "lunes/keyvalue.hpp"

namespace lunes {

enum class ProtocolKind { kBroadcast, kFixed, kAdaptive };

std::string protocol_name(ProtocolKind kind);
ProtocolKind protocol_from_name(const std::string& name);

// One scenario = one corpus simulated under one protocol/engine setup.
// Sources merge with precedence: flags > environment (LUNES_<KEY>) > config
// file > defaults.
struct ScenarioConfig {
  // paths
  std::string corpus;
  std::string out;

  // protocol
  ProtocolKind protocol = ProtocolKind::kFixed;
  double prob = 0.8;           // baseline dissemination probability v
  double gen_prob = 0.05;      // per-node per-timestep generation probability
  int ttl = kTtlAuto;          // kTtlAuto resolves per graph as e/n
  double alpha = 0.5;          // expected-rate trigger fraction
  double stim_prob = 1.0;      // boosted dissemination probability
  Timestep stim_duration = 50; // boost lifetime D
  Timestep recv_window = 20;   // reception-rate window W_r
  bool stim_preboost = false;  // diagnostic: boost every pair from t=0

  // engine
  Timestep steps = 1000;
  LpId lp = 1;
  bool gaia = false;
  double delta = 0.2;          // load slack
  double theta = 1.5;          // migration attraction threshold
  Timestep window = 20;        // communication audit window W
  Timestep mig_period = 10;    // migration evaluation period k_mig
  std::uint64_t seed = 1;
  unsigned workers = 0;        // 0 = one per LP up to hardware threads
  int verbosity = 1;           // 0 none, 1 G/R/D/M, 2 +S

  static constexpr int kTtlAuto = -1;

  void validate() const;  // throws ConfigError
  kv::Map to_kv() const;  // effective configuration, echoed in trace headers
};

// Recognized keys, in echo order.
const std::vector<std::string>& config_keys();

// Apply `overrides` on top of `cfg`. Unknown keys throw ConfigError.
void apply_kv(ScenarioConfig& cfg, const kv::Map& overrides);

// Collect LUNES_<UPPERCASED_KEY> environment overrides.
kv::Map env_overrides();

// defaults <- file (optional) <- env <- flags
ScenarioConfig resolve_config(const std::string& config_path,
                              const kv::Map& flag_overrides);

}  // namespace lunes
