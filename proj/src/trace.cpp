#include "lunes/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "lunes/errors.hpp"
#include "lunes/rng.hpp"

namespace lunes::trace {

namespace {

int kind_rank(EventKind k) {
  switch (k) {
    case EventKind::kGenerate: return 0;
    case EventKind::kReceive: return 1;
    case EventKind::kDuplicate: return 2;
    case EventKind::kSend: return 3;
    case EventKind::kMigrate: return 4;
  }
  return 5;
}

void append_u32(std::string& out, std::uint32_t v) {
  char buf[12];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

constexpr std::uint64_t pack_msg(NodeId origin, Seq seq) {
  return (static_cast<std::uint64_t>(origin) << 32) | seq;
}

}  // namespace

bool CanonicalEventOrder::operator()(const TraceEvent& x,
                                     const TraceEvent& y) const {
  return std::tuple(x.t, kind_rank(x.kind), x.node, x.origin, x.seq, x.a,
                    x.b) <
         std::tuple(y.t, kind_rank(y.kind), y.node, y.origin, y.seq, y.a,
                    y.b);
}

void append_line(std::string& out, const TraceEvent& ev) {
  out.push_back(static_cast<char>(ev.kind));
  out.push_back(' ');
  append_u32(out, ev.t);
  out.push_back(' ');
  append_u32(out, ev.node);
  out.push_back(' ');
  if (ev.kind == EventKind::kMigrate) {
    append_u32(out, ev.a);
    out.push_back(' ');
    append_u32(out, ev.b);
  } else {
    append_u32(out, ev.origin);
    out.push_back(':');
    append_u32(out, ev.seq);
    if (ev.kind == EventKind::kReceive || ev.kind == EventKind::kSend) {
      out.push_back(' ');
      append_u32(out, ev.a);
    }
  }
  out.push_back('\n');
}

std::string format_line(const TraceEvent& ev) {
  std::string s;
  append_line(s, ev);
  return s;
}

void Fingerprint::add_line(std::string_view line) {
  std::uint64_t h = 0x5f3759df9e3779b9ULL;
  std::size_t i = 0;
  for (; i + 8 <= line.size(); i += 8) {
    std::uint64_t w;
    std::memcpy(&w, line.data() + i, 8);
    h = rng::mix64(h ^ w);
  }
  std::uint64_t tail = 0;
  if (i < line.size()) std::memcpy(&tail, line.data() + i, line.size() - i);
  h = rng::mix64(h ^ tail ^ (static_cast<std::uint64_t>(line.size()) << 56));
  sum += h;
  xored ^= h;
  ++count;
}

FileTraceSink::FileTraceSink(const std::string& path, int verbosity)
    : out_(path, std::ios::binary), verbosity_(verbosity) {
  if (!out_) throw IoError("cannot open trace file for writing: " + path);
  buf_.reserve(1 << 20);
}

void FileTraceSink::on_header(std::string_view key, std::string_view value) {
  buf_.append("# ");
  buf_.append(key);
  buf_.push_back('=');
  buf_.append(value);
  buf_.push_back('\n');
}

void FileTraceSink::on_event(const TraceEvent& ev) {
  if (ev.kind == EventKind::kSend && verbosity_ < 2) return;
  append_line(buf_, ev);
  if (buf_.size() > (1 << 20) - 128) {
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
  }
}

void FileTraceSink::on_metadata(std::string_view key, std::string_view value) {
  on_header(key, value);
}

FileTraceSink::~FileTraceSink() {
  if (!buf_.empty())
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
}

void FingerprintSink::on_event(const TraceEvent& ev) {
  if (kinds_.find(static_cast<char>(ev.kind)) == std::string::npos) return;
  scratch_.clear();
  append_line(scratch_, ev);
  fp_.add_line(scratch_);
}

namespace {

struct LineCursor {
  const char* p;
  const char* end;
  std::size_t lineno;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, lineno);
  }

  void skip_spaces() {
    while (p != end && *p == ' ') ++p;
  }

  std::uint32_t read_u32(const char* what) {
    skip_spaces();
    std::uint32_t v = 0;
    auto [np, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || np == p)
      fail(std::string("expected ") + what);
    p = np;
    return v;
  }

  void expect(char c, const char* what) {
    if (p == end || *p != c) fail(std::string("expected ") + what);
    ++p;
  }

  void expect_end() {
    skip_spaces();
    if (p != end) fail("trailing characters");
  }
};

using MetaCallback =
    std::function<void(std::string_view, std::string_view)>;

kv::Map parse_trace_impl(std::istream& in,
                         const std::function<void(const TraceEvent&)>& on_event,
                         const MetaCallback* on_meta) {
  kv::Map metadata;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view v{line};
      v.remove_prefix(1);
      while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
      auto eq = v.find('=');
      if (eq == std::string_view::npos)
        throw ParseError("metadata line without '='", lineno);
      std::string_view key = v.substr(0, eq);
      std::string_view val = v.substr(eq + 1);
      kv::set(metadata, key, val);
      if (on_meta) (*on_meta)(key, val);
      continue;
    }
    TraceEvent ev;
    char kind = line.front();
    switch (kind) {
      case 'G': ev.kind = EventKind::kGenerate; break;
      case 'R': ev.kind = EventKind::kReceive; break;
      case 'D': ev.kind = EventKind::kDuplicate; break;
      case 'S': ev.kind = EventKind::kSend; break;
      case 'M': ev.kind = EventKind::kMigrate; break;
      default:
        throw ParseError(std::string("unknown event kind '") + kind + "'",
                         lineno);
    }
    LineCursor c{line.data() + 1, line.data() + line.size(), lineno};
    ev.t = c.read_u32("timestep");
    ev.node = c.read_u32("node id");
    if (ev.kind == EventKind::kMigrate) {
      ev.a = c.read_u32("source LP");
      ev.b = c.read_u32("target LP");
    } else {
      ev.origin = c.read_u32("origin");
      c.expect(':', "':' between origin and seq");
      ev.seq = c.read_u32("sequence number");
      if (ev.kind == EventKind::kReceive)
        ev.a = c.read_u32("hop count");
      else if (ev.kind == EventKind::kSend)
        ev.a = c.read_u32("destination");
    }
    c.expect_end();
    on_event(ev);
  }
  return metadata;
}

}  // namespace

kv::Map parse_trace(std::istream& in,
                    const std::function<void(const TraceEvent&)>& on_event) {
  return parse_trace_impl(in, on_event, nullptr);
}

Fingerprint fingerprint_file(const std::string& path, std::string_view kinds) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace file: " + path);
  Fingerprint fp;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (kinds.find(line.front()) == std::string_view::npos) continue;
    line.push_back('\n');
    fp.add_line(line);
  }
  return fp;
}

DisseminationReport dissemination_report(std::istream& in,
                                         NodeId node_count) {
  DisseminationReport rep;
  rep.node_count = node_count;
  std::unordered_map<std::uint64_t, std::size_t> index;

  kv::Map meta = parse_trace(in, [&](const TraceEvent& ev) {
    switch (ev.kind) {
      case EventKind::kGenerate: {
        auto [it, fresh] =
            index.emplace(pack_msg(ev.origin, ev.seq), rep.per_message.size());
        if (!fresh)
          throw IntegrityError("duplicate G event for message " +
                               std::to_string(ev.origin) + ":" +
                               std::to_string(ev.seq));
        rep.per_message.push_back({ev.origin, ev.seq, ev.t, 0, 0});
        ++rep.messages;
        break;
      }
      case EventKind::kReceive: {
        auto it = index.find(pack_msg(ev.origin, ev.seq));
        if (it == index.end())
          throw IntegrityError("R event references unknown message " +
                               std::to_string(ev.origin) + ":" +
                               std::to_string(ev.seq));
        if (ev.a > 0xffff)
          throw IntegrityError("R event with absurd hop count " +
                               std::to_string(ev.a));
        ++rep.per_message[it->second].receivers;
        ++rep.delivered;
        if (rep.hop_histogram.size() <= ev.a)
          rep.hop_histogram.resize(ev.a + 1);
        ++rep.hop_histogram[ev.a];
        break;
      }
      case EventKind::kDuplicate: {
        auto it = index.find(pack_msg(ev.origin, ev.seq));
        if (it == index.end())
          throw IntegrityError("D event references unknown message " +
                               std::to_string(ev.origin) + ":" +
                               std::to_string(ev.seq));
        ++rep.per_message[it->second].duplicates;
        ++rep.duplicates;
        break;
      }
      case EventKind::kSend:
      case EventKind::kMigrate:
        break;
    }
  });

  if (auto n = kv::try_get(meta, "n"); n && rep.node_count == 0)
    rep.node_count = static_cast<NodeId>(std::stoull(*n));
  if (auto c = kv::try_get(meta, "stimuli_sent"))
    rep.control_messages = std::stoull(*c);

  if (rep.node_count > 1 && !rep.per_message.empty()) {
    double acc = 0.0;
    for (const auto& m : rep.per_message)
      acc += static_cast<double>(m.receivers) / (rep.node_count - 1);
    rep.mean_coverage = acc / static_cast<double>(rep.per_message.size());
  }
  return rep;
}

std::vector<std::string> verify_trace(std::istream& in) {
  std::vector<std::string> violations;
  auto flag = [&](std::string msg) {
    if (violations.size() < 50) violations.push_back(std::move(msg));
  };

  struct MsgInfo {
    Timestep gen_t = 0;
    std::uint64_t r = 0, d = 0, s = 0, s_horizon = 0;
  };
  std::unordered_map<std::uint64_t, std::uint32_t> index;  // msg -> dense id
  std::vector<MsgInfo> msgs;
  std::unordered_set<std::uint64_t> received;  // (dense msg id << 32) | node
  bool have_prev_t = false;
  Timestep prev_t = 0;
  bool saw_send_events = false;
  long long ttl = -1;
  long long steps = -1;
  long long n_nodes = -1;

  auto msg_name = [](NodeId origin, Seq seq) {
    return std::to_string(origin) + ":" + std::to_string(seq);
  };

  MetaCallback on_meta = [&](std::string_view key, std::string_view value) {
    if (key == "ttl")
      ttl = std::stoll(std::string(value));
    else if (key == "steps")
      steps = std::stoll(std::string(value));
    else if (key == "n")
      n_nodes = std::stoll(std::string(value));
  };

  parse_trace_impl(
      in,
      [&](const TraceEvent& ev) {
        if (have_prev_t && ev.t < prev_t)
          flag("event at t=" + std::to_string(ev.t) + " after t=" +
               std::to_string(prev_t));
        prev_t = ev.t;
        have_prev_t = true;
        if (n_nodes >= 0 && ev.kind != EventKind::kMigrate &&
            ev.node >= n_nodes)
          flag("node id " + std::to_string(ev.node) + " out of range");

        std::uint64_t key = pack_msg(ev.origin, ev.seq);
        switch (ev.kind) {
          case EventKind::kGenerate: {
            auto [it, fresh] = index.emplace(
                key, static_cast<std::uint32_t>(msgs.size()));
            if (!fresh) {
              flag("duplicate G for " + msg_name(ev.origin, ev.seq));
            } else {
              msgs.push_back(MsgInfo{ev.t, 0, 0, 0, 0});
            }
            break;
          }
          case EventKind::kReceive: {
            auto it = index.find(key);
            if (it == index.end()) {
              flag("R without G for " + msg_name(ev.origin, ev.seq));
              break;
            }
            MsgInfo& info = msgs[it->second];
            ++info.r;
            std::uint64_t rk =
                (static_cast<std::uint64_t>(it->second) << 32) | ev.node;
            if (!received.insert(rk).second)
              flag("second R at node " + std::to_string(ev.node) + " for " +
                   msg_name(ev.origin, ev.seq));
            if (ev.a < 1)
              flag("R with hop count 0 for " + msg_name(ev.origin, ev.seq));
            if (ev.t < info.gen_t + ev.a)
              flag("R at t=" + std::to_string(ev.t) +
                   " violates causality for " + msg_name(ev.origin, ev.seq));
            if (ttl >= 0 && ev.a > ttl)
              flag("R with hops " + std::to_string(ev.a) + " > ttl for " +
                   msg_name(ev.origin, ev.seq));
            break;
          }
          case EventKind::kDuplicate: {
            auto it = index.find(key);
            if (it == index.end()) {
              flag("D without G for " + msg_name(ev.origin, ev.seq));
              break;
            }
            ++msgs[it->second].d;
            break;
          }
          case EventKind::kSend: {
            saw_send_events = true;
            auto it = index.find(key);
            if (it == index.end()) {
              flag("S without G for " + msg_name(ev.origin, ev.seq));
              break;
            }
            MsgInfo& info = msgs[it->second];
            ++info.s;
            if (steps >= 0 && ev.t + 1 >= steps) ++info.s_horizon;
            break;
          }
          case EventKind::kMigrate:
            break;
        }
      },
      &on_meta);

  // conservation needs the horizon (steps) to tell which sends delivered
  const bool check_conservation = saw_send_events && steps >= 0;
  for (const auto& [key, id] : index) {
    const MsgInfo& info = msgs[id];
    NodeId origin = static_cast<NodeId>(key >> 32);
    Seq seq = static_cast<Seq>(key);
    if (n_nodes > 0 && info.r > static_cast<std::uint64_t>(n_nodes) - 1)
      flag("message " + msg_name(origin, seq) + " has " +
           std::to_string(info.r) + " receivers on " +
           std::to_string(n_nodes) + " nodes");
    if (check_conservation) {
      std::uint64_t delivered_sends = info.s - info.s_horizon;
      if (info.r + info.d != delivered_sends)
        flag("conservation: " + msg_name(origin, seq) + " R+D=" +
             std::to_string(info.r + info.d) + " but delivered sends=" +
             std::to_string(delivered_sends));
    }
  }
  return violations;
}

SpeedupReport speedup_report(const std::vector<StatsInput>& runs) {
  SpeedupReport rep;
  int baseline = -1;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    SpeedupReport::Row row;
    row.label = runs[i].label;
    row.lp = static_cast<std::uint32_t>(kv::get_u64(runs[i].values, "lp"));
    row.gaia = kv::get(runs[i].values, "gaia") == "on";
    row.wct_seconds = kv::get_double(runs[i].values, "wct_seconds");
    if (row.lp == 1 && !row.gaia) {
      if (baseline >= 0)
        throw ParameterError("speedup: multiple sequential baselines");
      baseline = static_cast<int>(i);
    }
    rep.rows.push_back(row);
  }
  if (baseline < 0)
    throw ParameterError(
        "speedup: no sequential baseline (lp=1, gaia=off) among inputs");
  double base = rep.rows[baseline].wct_seconds;
  for (auto& row : rep.rows)
    row.speedup = row.wct_seconds > 0 ? base / row.wct_seconds : 0.0;
  return rep;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  out += buf;
}

}  // namespace

std::string format_dissemination(const DisseminationReport& rep) {
  std::string out;
  out += "n=" + std::to_string(rep.node_count) + "\n";
  out += "messages=" + std::to_string(rep.messages) + "\n";
  out += "delivered=" + std::to_string(rep.delivered) + "\n";
  out += "duplicates=" + std::to_string(rep.duplicates) + "\n";
  out += "control_messages=" + std::to_string(rep.control_messages) + "\n";
  out += "mean_coverage=";
  append_double(out, rep.mean_coverage);
  out += "\nhops,count\n";
  for (std::size_t h = 0; h < rep.hop_histogram.size(); ++h) {
    out += std::to_string(h) + "," + std::to_string(rep.hop_histogram[h]) +
           "\n";
  }
  return out;
}

std::string format_speedup_csv(const SpeedupReport& rep) {
  std::string out = "label,lp,gaia,wct_seconds,speedup\n";
  for (const auto& row : rep.rows) {
    out += row.label + "," + std::to_string(row.lp) + "," +
           (row.gaia ? "on" : "off") + ",";
    append_double(out, row.wct_seconds);
    out += ",";
    append_double(out, row.speedup);
    out += "\n";
  }
  return out;
}

}  // namespace lunes::trace
