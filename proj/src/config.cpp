#include "lunes/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>

#include "lunes/errors.hpp"

namespace lunes {

std::string protocol_name(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::kBroadcast: return "broadcast";
    case ProtocolKind::kFixed: return "fixed";
    case ProtocolKind::kAdaptive: return "adaptive";
  }
  return "?";
}

ProtocolKind protocol_from_name(const std::string& name) {
  if (name == "broadcast") return ProtocolKind::kBroadcast;
  if (name == "fixed") return ProtocolKind::kFixed;
  if (name == "adaptive") return ProtocolKind::kAdaptive;
  throw ConfigError("unknown protocol: " + name +
                    " (expected broadcast, fixed or adaptive)");
}

namespace {

const char* kKeys[] = {
    "corpus",     "out",        "protocol",     "prob",
    "gen_prob",   "ttl",        "alpha",        "stim_prob",
    "stim_duration", "recv_window", "stim_preboost", "steps",
    "lp",         "gaia",       "delta",        "theta",
    "window",     "mig_period", "seed",         "workers",
    "verbosity",
};

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("key " + key + ": expected on/off, got " + v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError("key " + key + ": not an integer: " + v);
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not a number: " + v);
  }
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys(std::begin(kKeys),
                                             std::end(kKeys));
  return keys;
}

void apply_kv(ScenarioConfig& cfg, const kv::Map& overrides) {
  for (const auto& [key, value] : overrides) {
    if (key == "corpus") cfg.corpus = value;
    else if (key == "out") cfg.out = value;
    else if (key == "protocol") cfg.protocol = protocol_from_name(value);
    else if (key == "prob") cfg.prob = parse_double(key, value);
    else if (key == "gen_prob") cfg.gen_prob = parse_double(key, value);
    else if (key == "ttl") {
      if (value == "auto")
        cfg.ttl = ScenarioConfig::kTtlAuto;
      else
        cfg.ttl = static_cast<int>(parse_u64(key, value));
    } else if (key == "alpha") cfg.alpha = parse_double(key, value);
    else if (key == "stim_prob") cfg.stim_prob = parse_double(key, value);
    else if (key == "stim_duration")
      cfg.stim_duration = static_cast<Timestep>(parse_u64(key, value));
    else if (key == "recv_window")
      cfg.recv_window = static_cast<Timestep>(parse_u64(key, value));
    else if (key == "stim_preboost") cfg.stim_preboost = parse_bool(key, value);
    else if (key == "steps") cfg.steps = static_cast<Timestep>(parse_u64(key, value));
    else if (key == "lp") cfg.lp = static_cast<LpId>(parse_u64(key, value));
    else if (key == "gaia") cfg.gaia = parse_bool(key, value);
    else if (key == "delta") cfg.delta = parse_double(key, value);
    else if (key == "theta") cfg.theta = parse_double(key, value);
    else if (key == "window")
      cfg.window = static_cast<Timestep>(parse_u64(key, value));
    else if (key == "mig_period")
      cfg.mig_period = static_cast<Timestep>(parse_u64(key, value));
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else if (key == "workers")
      cfg.workers = static_cast<unsigned>(parse_u64(key, value));
    else if (key == "verbosity")
      cfg.verbosity = static_cast<int>(parse_u64(key, value));
    else
      throw ConfigError("unknown configuration key: " + key);
  }
}

kv::Map env_overrides() {
  kv::Map out;
  for (const auto& key : config_keys()) {
    std::string env_name = "LUNES_";
    for (char c : key)
      env_name.push_back(
          static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (const char* v = std::getenv(env_name.c_str()))
      out.emplace_back(key, v);
  }
  return out;
}

ScenarioConfig resolve_config(const std::string& config_path,
                              const kv::Map& flag_overrides) {
  ScenarioConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open config file: " + config_path);
    apply_kv(cfg, kv::parse(in));
  }
  apply_kv(cfg, env_overrides());
  apply_kv(cfg, flag_overrides);
  cfg.validate();
  return cfg;
}

void ScenarioConfig::validate() const {
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (lp < 1) throw ConfigError("lp must be >= 1");
  if (!(theta > 1)) throw ConfigError("theta must be > 1");
  if (delta < 0) throw ConfigError("delta must be >= 0");
  if (prob < 0 || prob > 1) throw ConfigError("prob must be in [0,1]");
  if (gen_prob < 0 || gen_prob > 1)
    throw ConfigError("gen_prob must be in [0,1]");
  if (stim_prob < 0 || stim_prob > 1)
    throw ConfigError("stim_prob must be in [0,1]");
  if (alpha < 0) throw ConfigError("alpha must be >= 0");
  if (ttl != kTtlAuto && ttl < 0) throw ConfigError("ttl must be >= 0");
  if (recv_window < 1) throw ConfigError("recv_window must be >= 1");
  if (window < 1) throw ConfigError("window must be >= 1");
  if (mig_period < 1) throw ConfigError("mig_period must be >= 1");
  if (verbosity < 0 || verbosity > 2)
    throw ConfigError("verbosity must be 0, 1 or 2");
}

kv::Map ScenarioConfig::to_kv() const {
  kv::Map m;
  kv::set(m, "protocol", protocol_name(protocol));
  kv::set(m, "prob", std::to_string(prob));
  kv::set(m, "gen_prob", std::to_string(gen_prob));
  kv::set(m, "ttl", ttl == kTtlAuto ? "auto" : std::to_string(ttl));
  kv::set(m, "alpha", std::to_string(alpha));
  kv::set(m, "stim_prob", std::to_string(stim_prob));
  kv::set(m, "stim_duration", std::to_string(stim_duration));
  kv::set(m, "recv_window", std::to_string(recv_window));
  kv::set(m, "stim_preboost", stim_preboost ? "on" : "off");
  kv::set(m, "steps", std::to_string(steps));
  kv::set(m, "lp", std::to_string(lp));
  kv::set(m, "gaia", gaia ? "on" : "off");
  kv::set(m, "delta", std::to_string(delta));
  kv::set(m, "theta", std::to_string(theta));
  kv::set(m, "window", std::to_string(window));
  kv::set(m, "mig_period", std::to_string(mig_period));
  kv::set(m, "seed", std::to_string(seed));
  return m;
}

}  // namespace lunes
