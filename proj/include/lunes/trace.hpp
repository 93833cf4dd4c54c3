#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "lunes/envelope.hpp"
#include "lunes/keyvalue.hpp"

namespace lunes::trace {

// Body line grammar (bit-exact):
//   G <t> <node> <origin>:<seq>
//   R <t> <node> <origin>:<seq> <hops>
//   D <t> <node> <origin>:<seq>
//   S <t> <node> <origin>:<seq> <dest>
//   M <t> <entity> <from_lp> <to_lp>
// Header and trailing metadata lines are `# key=value`.

enum class EventKind : char {
  kGenerate = 'G',
  kReceive = 'R',
  kDuplicate = 'D',
  kSend = 'S',
  kMigrate = 'M',
};

struct TraceEvent {
  EventKind kind = EventKind::kGenerate;
  Timestep t = 0;
  std::uint32_t node = 0;  // node for G/R/D/S, entity for M
  NodeId origin = 0;       // G/R/D/S
  Seq seq = 0;             // G/R/D/S
  std::uint32_t a = 0;     // R: hops; S: dest; M: from_lp
  std::uint32_t b = 0;     // M: to_lp

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

// Emission order inside one timestep; files are non-decreasing in t.
struct CanonicalEventOrder {
  bool operator()(const TraceEvent& x, const TraceEvent& y) const;
};

void append_line(std::string& out, const TraceEvent& ev);
std::string format_line(const TraceEvent& ev);

// Order-insensitive multiset fingerprint over formatted body lines.
struct Fingerprint {
  std::uint64_t sum = 0;
  std::uint64_t xored = 0;
  std::uint64_t count = 0;

  void add_line(std::string_view line);
  void merge(const Fingerprint& other) {
    sum += other.sum;
    xored ^= other.xored;
    count += other.count;
  }
  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

// Receives a run's trace. Callbacks arrive in file order: header pairs,
// events with non-decreasing t, then trailing metadata pairs.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_header(std::string_view /*key*/, std::string_view /*value*/) {}
  virtual void on_event(const TraceEvent& ev) = 0;
  virtual void on_metadata(std::string_view /*key*/, std::string_view /*value*/) {}
};

// verbosity: 1 = G/R/D/M, 2 = + S
class FileTraceSink final : public TraceSink {
 public:
  FileTraceSink(const std::string& path, int verbosity);
  void on_header(std::string_view key, std::string_view value) override;
  void on_event(const TraceEvent& ev) override;
  void on_metadata(std::string_view key, std::string_view value) override;
  ~FileTraceSink() override;

 private:
  std::ofstream out_;
  std::string buf_;
  int verbosity_;
};

// Fingerprints the formatted lines of the selected kinds (default G/R/D:
// the protocol-level events that must be invariant across partitions).
class FingerprintSink final : public TraceSink {
 public:
  explicit FingerprintSink(std::string_view kinds = "GRD") : kinds_(kinds) {}
  void on_event(const TraceEvent& ev) override;
  const Fingerprint& fingerprint() const { return fp_; }

 private:
  std::string kinds_;
  Fingerprint fp_;
  std::string scratch_;
};

class CollectSink final : public TraceSink {
 public:
  void on_event(const TraceEvent& ev) override { events.push_back(ev); }
  std::vector<TraceEvent> events;
};

// Streaming parse: constant work per line; `# key=value` lines anywhere are
// surfaced into the returned metadata map (header and trailing counters).
kv::Map parse_trace(std::istream& in,
                    const std::function<void(const TraceEvent&)>& on_event);

// Multiset fingerprint of a trace file's body lines of the given kinds.
Fingerprint fingerprint_file(const std::string& path,
                             std::string_view kinds = "GRD");

struct DisseminationReport {
  NodeId node_count = 0;
  std::uint64_t messages = 0;        // G count
  std::uint64_t delivered = 0;       // R count
  std::uint64_t duplicates = 0;      // D count
  std::uint64_t control_messages = 0;
  double mean_coverage = 0.0;        // mean over messages of recv/(n-1)
  std::vector<std::uint64_t> hop_histogram;  // index = hops of R events

  struct Message {
    NodeId origin = 0;
    Seq seq = 0;
    Timestep gen_t = 0;
    std::uint32_t receivers = 0;
    std::uint32_t duplicates = 0;
  };
  std::vector<Message> per_message;  // in G order
};

DisseminationReport dissemination_report(std::istream& in, NodeId node_count);

// Trace self-checks: referential integrity, single R per (node, message),
// non-decreasing t, causality (R.t >= G.t + hops, hops >= 1), hop <= ttl
// when the header carries one, receiver bound, and send conservation when S
// lines are present (sends at the final timestep are never delivered and are
// excluded). Returns human-readable violations, empty when clean.
std::vector<std::string> verify_trace(std::istream& in);

struct SpeedupReport {
  struct Row {
    std::string label;
    std::uint32_t lp = 0;
    bool gaia = false;
    double wct_seconds = 0.0;
    double speedup = 0.0;
  };
  std::vector<Row> rows;
};

struct StatsInput {
  std::string label;
  kv::Map values;
};

// Requires exactly one sequential baseline (lp=1, gaia=off).
SpeedupReport speedup_report(const std::vector<StatsInput>& runs);

// Deterministic text renderings: same inputs, same bytes.
std::string format_dissemination(const DisseminationReport& rep);
std::string format_speedup_csv(const SpeedupReport& rep);

}  // namespace lunes::trace
