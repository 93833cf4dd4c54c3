#include "lunes/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "lunes/errors.hpp"
#include "lunes/keyvalue.hpp"
#include "lunes/rng.hpp"

namespace lunes {

namespace {

constexpr std::uint64_t pack_edge(NodeId u, NodeId v) {
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

Edge canonical(NodeId u, NodeId v) {
  return u < v ? Edge{u, v} : Edge{v, u};
}

}  // namespace

Graph::Graph(NodeId node_count, std::vector<Edge> edges)
    : node_count_(node_count), edges_(std::move(edges)) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges_.size());
  for (auto& [u, v] : edges_) {
    if (u == v) throw ParameterError("self-loop on node " + std::to_string(u));
    if (u > v) std::swap(u, v);
    if (v >= node_count_)
      throw ParameterError("edge endpoint " + std::to_string(v) +
                           " out of range [0, " + std::to_string(node_count_) +
                           ")");
    if (!seen.insert(pack_edge(u, v)).second)
      throw ParameterError("duplicate edge " + std::to_string(u) + "--" +
                           std::to_string(v));
  }
  std::sort(edges_.begin(), edges_.end());
  build_adjacency();
}

void Graph::build_adjacency() {
  adj_off_.assign(node_count_ + 1, 0);
  for (const auto& [u, v] : edges_) {
    ++adj_off_[u + 1];
    ++adj_off_[v + 1];
  }
  for (NodeId i = 0; i < node_count_; ++i) adj_off_[i + 1] += adj_off_[i];
  adj_.resize(edges_.size() * 2);
  std::vector<std::uint32_t> cursor(adj_off_.begin(), adj_off_.end() - 1);
  for (const auto& [u, v] : edges_) {
    adj_[cursor[u]++] = v;
    adj_[cursor[v]++] = u;
  }
  for (NodeId i = 0; i < node_count_; ++i)
    std::sort(adj_.begin() + adj_off_[i], adj_.begin() + adj_off_[i + 1]);
}

std::span<const NodeId> Graph::neighbors(NodeId u) const {
  return {adj_.data() + adj_off_[u], adj_off_[u + 1] - adj_off_[u]};
}

NodeId Graph::degree(NodeId u) const { return adj_off_[u + 1] - adj_off_[u]; }

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

Graph Graph::erdos_renyi(NodeId n, std::uint64_t m, std::uint64_t seed) {
  if (n == 0) throw ParameterError("erdos_renyi: n must be >= 1");
  std::uint64_t max_edges =
      static_cast<std::uint64_t>(n) * (n - 1) / 2;
  if (m > max_edges)
    throw ParameterError("erdos_renyi: m=" + std::to_string(m) +
                         " exceeds n(n-1)/2=" + std::to_string(max_edges));
  // rejection sampling of uniform unordered pairs until m distinct edges
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(m * 2);
  std::vector<Edge> edges;
  edges.reserve(m);
  std::uint64_t ctr = 0;
  while (edges.size() < m) {
    NodeId u = rng::bounded(
        rng::keyed_bits(seed, 0, rng::tag::kGraphGen, ctr++), n);
    NodeId v = rng::bounded(
        rng::keyed_bits(seed, 0, rng::tag::kGraphGen, ctr++), n);
    if (u == v) continue;
    auto [a, b] = canonical(u, v);
    if (chosen.insert(pack_edge(a, b)).second) edges.emplace_back(a, b);
  }
  return Graph(n, std::move(edges));
}

Graph Graph::barabasi_albert(NodeId n, NodeId m0, NodeId m_attach,
                             std::uint64_t seed) {
  if (!(m_attach >= 1 && m_attach <= m0 && m0 <= n))
    throw ParameterError("barabasi_albert: need 1 <= m_attach <= m0 <= n");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m0) * (m0 - 1) / 2 +
                static_cast<std::size_t>(m_attach) * (n - m0));
  for (NodeId u = 0; u < m0; ++u)
    for (NodeId v = u + 1; v < m0; ++v) edges.emplace_back(u, v);

  // one entry per degree unit; sampling an index is preferential attachment
  std::vector<NodeId> degree_units;
  degree_units.reserve(edges.capacity() * 2);
  for (const auto& [u, v] : edges) {
    degree_units.push_back(u);
    degree_units.push_back(v);
  }
  if (m0 == 1) degree_units.push_back(0);  // lone seed node, degree 0

  std::unordered_set<std::uint64_t> present;
  present.reserve(edges.capacity() * 2);
  for (const auto& [u, v] : edges) present.insert(pack_edge(u, v));

  std::uint64_t ctr = 0;
  for (NodeId k = m0; k < n; ++k) {
    std::vector<NodeId> targets;
    targets.reserve(m_attach);
    while (targets.size() < m_attach) {
      NodeId t = degree_units[rng::bounded(
          rng::keyed_bits(seed, 0, rng::tag::kGraphGen, ctr++),
          static_cast<std::uint32_t>(degree_units.size()))];
      auto [a, b] = canonical(k, t);
      if (present.insert(pack_edge(a, b)).second) {
        targets.push_back(t);
        edges.emplace_back(a, b);
      }
    }
    for (NodeId t : targets) {
      degree_units.push_back(k);
      degree_units.push_back(t);
    }
  }
  return Graph(n, std::move(edges));
}

DegreeSummary degree_summary(const Graph& g) {
  if (g.node_count() == 0)
    throw ParameterError("degree_summary: empty graph");
  DegreeSummary s;
  s.lambda_ttl = static_cast<double>(g.edge_count()) / g.node_count();
  s.mean_degree_std = 2.0 * s.lambda_ttl;
  s.min_degree = g.degree(0);
  s.max_degree = g.degree(0);
  for (NodeId u = 1; u < g.node_count(); ++u) {
    s.min_degree = std::min(s.min_degree, g.degree(u));
    s.max_degree = std::max(s.max_degree, g.degree(u));
  }
  return s;
}

int ttl_estimate(NodeId n, double lambda) {
  if (n < 2) throw ParameterError("ttl_estimate: n must be >= 2");
  if (!(lambda > 1.0))
    throw ParameterError("ttl_estimate: lambda must be > 1");
  double q = std::log(static_cast<double>(n)) / std::log(lambda);
  double nearest = std::round(q);
  if (std::abs(q - nearest) < 1e-9) return static_cast<int>(nearest);
  return static_cast<int>(std::ceil(q));
}

int ttl_auto(NodeId n, std::uint64_t e) {
  struct Ref {
    NodeId n;
    std::uint64_t e;
    int ttl;
  };
  // pinned TTLs for the reference scenarios; these are chosen operating
  // points, not outputs of the estimate formula
  static constexpr Ref kRefs[] = {
      {200, 400, 8}, {300, 600, 8}, {400, 800, 8}, {500, 1000, 9}};
  for (const auto& r : kRefs)
    if (r.n == n && r.e == e) return r.ttl;
  if (n < 2) throw ParameterError("ttl auto: n must be >= 2");
  double lambda = static_cast<double>(e) / n;
  if (!(lambda > 1.0))
    throw ParameterError(
        "ttl auto: e/n must be > 1 (got " + std::to_string(lambda) +
        "); pass an explicit ttl");
  return ttl_estimate(n, lambda);
}

namespace {

struct DotParser {
  std::istream& in;
  std::size_t lineno = 0;
  bool saw_open = false;
  bool saw_close = false;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw_edges;
  std::vector<std::uint64_t> raw_isolated;

  static std::string_view strip_comment(std::string_view s) {
    auto pos = s.find("//");
    return pos == std::string_view::npos ? s : s.substr(0, pos);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, lineno);
  }

  std::uint64_t parse_id(std::string_view& s) {
    skip_ws(s);
    if (s.empty() || !std::isdigit(static_cast<unsigned char>(s.front())))
      fail("expected decimal node id");
    std::uint64_t v = 0;
    while (!s.empty() && std::isdigit(static_cast<unsigned char>(s.front()))) {
      v = v * 10 + (s.front() - '0');
      s.remove_prefix(1);
    }
    return v;
  }

  static void skip_ws(std::string_view& s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                          s.front() == '\r'))
      s.remove_prefix(1);
  }

  static bool consume(std::string_view& s, std::string_view tok) {
    skip_ws(s);
    if (s.substr(0, tok.size()) == tok) {
      s.remove_prefix(tok.size());
      return true;
    }
    return false;
  }

  void parse() {
    std::string line;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view s = strip_comment(line);
      skip_ws(s);
      if (s.empty()) continue;
      if (!saw_open) {
        if (consume(s, "digraph"))
          fail("directed graphs are not supported");
        if (!consume(s, "graph")) fail("expected 'graph <id> {'");
        skip_ws(s);
        while (!s.empty() && s.front() != '{' && s.front() != ' ' &&
               s.front() != '\t')
          s.remove_prefix(1);  // identifier, unused
        if (!consume(s, "{")) fail("expected '{'");
        saw_open = true;
        skip_ws(s);
        if (!s.empty()) parse_statements(s);
        continue;
      }
      if (saw_close) fail("content after closing '}'");
      parse_statements(s);
    }
    if (!saw_open) fail("missing 'graph <id> {' header");
    if (!saw_close) fail("missing closing '}'");
  }

  void parse_statements(std::string_view s) {
    while (true) {
      skip_ws(s);
      if (s.empty()) return;
      if (s.front() == '}') {
        saw_close = true;
        s.remove_prefix(1);
        skip_ws(s);
        if (!s.empty()) fail("content after closing '}'");
        return;
      }
      if (saw_close) fail("content after closing '}'");
      std::uint64_t u = parse_id(s);
      skip_ws(s);
      if (consume(s, "--")) {
        std::uint64_t v = parse_id(s);
        if (!consume(s, ";")) fail("expected ';' after edge statement");
        if (u == v) fail("self-loop " + std::to_string(u));
        raw_edges.emplace_back(u, v);
      } else if (consume(s, ";")) {
        raw_isolated.push_back(u);
      } else {
        fail("expected '--' or ';'");
      }
    }
  }
};

}  // namespace

DotImport import_dot(std::istream& in) {
  DotParser p{in};
  p.parse();

  // first-appearance order over edge endpoints, then isolated declarations
  std::vector<std::uint64_t> appearance;
  std::unordered_map<std::uint64_t, NodeId> remap;
  auto visit = [&](std::uint64_t raw) {
    if (remap.emplace(raw, static_cast<NodeId>(appearance.size())).second)
      appearance.push_back(raw);
  };
  for (const auto& [u, v] : p.raw_edges) {
    visit(u);
    visit(v);
  }
  for (std::uint64_t u : p.raw_isolated) visit(u);

  NodeId n = static_cast<NodeId>(appearance.size());
  // keep ids verbatim when they are already contiguous 0..n-1, so that
  // importing a canonical export is the identity
  bool contiguous = true;
  for (std::uint64_t raw : appearance)
    if (raw >= n) {
      contiguous = false;
      break;
    }
  DotImport result;
  if (contiguous) {
    result.original_ids.resize(n);
    for (NodeId i = 0; i < n; ++i) result.original_ids[i] = i;
    for (auto& [raw, id] : remap) id = static_cast<NodeId>(raw);
  } else {
    result.original_ids = appearance;
  }

  std::vector<Edge> edges;
  edges.reserve(p.raw_edges.size());
  std::unordered_set<std::uint64_t> dedup;
  dedup.reserve(p.raw_edges.size());
  for (const auto& [ru, rv] : p.raw_edges) {
    auto [a, b] = canonical(remap[ru], remap[rv]);
    if (dedup.insert(pack_edge(a, b)).second) edges.emplace_back(a, b);
  }
  result.graph = Graph(n, std::move(edges));
  return result;
}

DotImport import_dot_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return import_dot(in);
}

void export_dot(const Graph& g, std::ostream& out) {
  out << "graph G {\n";
  std::vector<bool> touched(g.node_count(), false);
  for (const auto& [u, v] : g.edges()) {
    out << u << " -- " << v << ";\n";
    touched[u] = true;
    touched[v] = true;
  }
  for (NodeId u = 0; u < g.node_count(); ++u)
    if (!touched[u]) out << u << ";\n";
  out << "}\n";
}

std::string export_dot_string(const Graph& g) {
  std::ostringstream out;
  export_dot(g, out);
  return out.str();
}

Graph corpus_member(const CorpusSpec& spec, std::uint32_t k) {
  std::uint64_t seed = rng::derive_seed(spec.master_seed, k);
  switch (spec.model) {
    case GraphModel::kErdosRenyi:
      return Graph::erdos_renyi(spec.n, spec.m, seed);
    case GraphModel::kBarabasiAlbert:
      return Graph::barabasi_albert(spec.n, spec.m0, spec.m_attach, seed);
  }
  throw ParameterError("unknown graph model");
}

namespace {

std::string member_filename(std::uint32_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "graph_%03u.dot", k);
  return buf;
}

}  // namespace

void corpus_generate(const CorpusSpec& spec,
                     const std::filesystem::path& dir) {
  if (spec.count < 1) throw ParameterError("corpus: count must be >= 1");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  for (std::uint32_t k = 0; k < spec.count; ++k) {
    Graph g = corpus_member(spec, k);
    std::ofstream out(dir / member_filename(k), std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / member_filename(k)).string());
    export_dot(g, out);
    if (!out) throw IoError("write failed: " + (dir / member_filename(k)).string());
  }

  kv::Map manifest;
  kv::set(manifest, "format_version", "1");
  kv::set(manifest, "label",
          spec.label.empty() ? dir.filename().string() : spec.label);
  kv::set(manifest, "model",
          spec.model == GraphModel::kErdosRenyi ? "er" : "ba");
  kv::set(manifest, "n", std::to_string(spec.n));
  if (spec.model == GraphModel::kErdosRenyi) {
    kv::set(manifest, "m", std::to_string(spec.m));
  } else {
    kv::set(manifest, "m0", std::to_string(spec.m0));
    kv::set(manifest, "m_attach", std::to_string(spec.m_attach));
  }
  kv::set(manifest, "count", std::to_string(spec.count));
  kv::set(manifest, "master_seed", std::to_string(spec.master_seed));
  std::ofstream out(dir / "manifest.txt", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "manifest.txt").string());
  kv::write(out, manifest);
}

Corpus corpus_load(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.txt");
  if (!mf) throw IoError("cannot open " + (dir / "manifest.txt").string());
  kv::Map manifest = kv::parse(mf);

  Corpus c;
  std::string model = kv::get(manifest, "model");
  if (model == "er") {
    c.spec.model = GraphModel::kErdosRenyi;
    c.spec.m = kv::get_u64(manifest, "m");
  } else if (model == "ba") {
    c.spec.model = GraphModel::kBarabasiAlbert;
    c.spec.m0 = static_cast<NodeId>(kv::get_u64(manifest, "m0"));
    c.spec.m_attach = static_cast<NodeId>(kv::get_u64(manifest, "m_attach"));
    if (c.spec.m_attach < 1 || c.spec.m_attach > c.spec.m0)
      throw ConfigError("manifest: need 1 <= m_attach <= m0");
  } else {
    throw ConfigError("manifest: unknown model " + model);
  }
  c.spec.n = static_cast<NodeId>(kv::get_u64(manifest, "n"));
  c.spec.count = static_cast<std::uint32_t>(kv::get_u64(manifest, "count"));
  c.spec.master_seed = kv::get_u64(manifest, "master_seed");
  c.spec.label = kv::try_get(manifest, "label").value_or(dir.filename().string());

  std::uint64_t expected_edges =
      c.spec.model == GraphModel::kErdosRenyi
          ? c.spec.m
          : static_cast<std::uint64_t>(c.spec.m0) * (c.spec.m0 - 1) / 2 +
                static_cast<std::uint64_t>(c.spec.m_attach) *
                    (c.spec.n - c.spec.m0);
  c.graphs.reserve(c.spec.count);
  for (std::uint32_t k = 0; k < c.spec.count; ++k) {
    std::ifstream in(dir / member_filename(k));
    if (!in) throw IoError("cannot open " + (dir / member_filename(k)).string());
    Graph g = import_dot(in).graph;
    // members must share the manifest's (n, e)
    if (g.node_count() != c.spec.n || g.edge_count() != expected_edges)
      throw ParameterError(member_filename(k) + ": graph (n=" +
                           std::to_string(g.node_count()) + ", e=" +
                           std::to_string(g.edge_count()) +
                           ") does not match the manifest");
    c.graphs.push_back(std::move(g));
  }
  return c;
}

}  // namespace lunes
