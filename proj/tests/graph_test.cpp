#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lunes/errors.hpp"
#include "lunes/graph.hpp"

using namespace lunes;
namespace fs = std::filesystem;

namespace {

bool is_simple(const Graph& g) {
  std::set<Edge> edges;
  for (const auto& [u, v] : g.edges()) {
    if (u >= v) return false;
    if (v >= g.node_count()) return false;
    if (!edges.insert({u, v}).second) return false;
  }
  return true;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("erdos-renyi: exact node and edge counts") {
  Graph g = Graph::erdos_renyi(200, 400, 42);
  CHECK(g.node_count() == 200);
  CHECK(g.edge_count() == 400);
  CHECK(is_simple(g));
}

TEST_CASE("erdos-renyi: forced triangle when m = n(n-1)/2") {
  Graph g = Graph::erdos_renyi(3, 3, 999);
  CHECK(g.edges() == std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}});
}

TEST_CASE("erdos-renyi: deterministic in seed") {
  Graph a = Graph::erdos_renyi(10, 20, 7);
  Graph b = Graph::erdos_renyi(10, 20, 7);
  CHECK(a == b);
  Graph c = Graph::erdos_renyi(10, 20, 8);
  CHECK(a.edges() != c.edges());
}

TEST_CASE("erdos-renyi: m out of range rejected") {
  CHECK_THROWS_AS(Graph::erdos_renyi(3, 4, 1), ParameterError);
  CHECK_THROWS_AS(Graph::erdos_renyi(0, 0, 1), ParameterError);
  CHECK_NOTHROW(Graph::erdos_renyi(3, 0, 1));
}

TEST_CASE("erdos-renyi: always simple across seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Graph g = Graph::erdos_renyi(30, 120, seed);
    CHECK(g.edge_count() == 120);
    CHECK(is_simple(g));
  }
}

TEST_CASE("barabasi-albert: no growth steps means the seed clique") {
  Graph g = Graph::barabasi_albert(4, 4, 2, 5);
  CHECK(g.node_count() == 4);
  CHECK(g.edge_count() == 6);  // complete graph on 4
}

TEST_CASE("barabasi-albert: forced edge count") {
  Graph g = Graph::barabasi_albert(100, 3, 2, 1);
  CHECK(g.edge_count() == 3 + 2 * 97);
  CHECK(is_simple(g));
}

TEST_CASE("barabasi-albert: edge count identity across seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Graph g = Graph::barabasi_albert(50, 5, 3, seed);
    CHECK(g.edge_count() == 5 * 4 / 2 + 3 * (50 - 5));
    CHECK(is_simple(g));
  }
}

TEST_CASE("barabasi-albert: parameter validation") {
  CHECK_THROWS_AS(Graph::barabasi_albert(10, 3, 4, 1), ParameterError);
  CHECK_THROWS_AS(Graph::barabasi_albert(2, 3, 1, 1), ParameterError);
  CHECK_THROWS_AS(Graph::barabasi_albert(10, 3, 0, 1), ParameterError);
}

TEST_CASE("barabasi-albert: heavier tail than erdos-renyi at equal size") {
  // preferential attachment must beat the uniform model's max degree
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Graph ba = Graph::barabasi_albert(1000, 5, 3, seed);
    Graph er = Graph::erdos_renyi(1000, ba.edge_count(), seed);
    CHECK(degree_summary(ba).max_degree > degree_summary(er).max_degree);
  }
}

TEST_CASE("import_dot: plain edge list") {
  auto res = import_dot_string("graph G { 0 -- 1; 1 -- 2; }");
  CHECK(res.graph.node_count() == 3);
  CHECK(res.graph.edge_count() == 2);
}

TEST_CASE("import_dot: empty graph") {
  auto res = import_dot_string("graph G { }");
  CHECK(res.graph.node_count() == 0);
  CHECK(res.graph.edge_count() == 0);
}

TEST_CASE("import_dot: comments, isolated nodes, loose whitespace") {
  auto res = import_dot_string(
      "graph corpus7 {\n"
      "  // a comment line\n"
      "\t0 -- 1;   // trailing comment\n"
      "  3;\n"
      "  1--2;\n"
      "}\n");
  CHECK(res.graph.node_count() == 4);
  CHECK(res.graph.edge_count() == 2);
  CHECK(res.graph.degree(3) == 0);
}

TEST_CASE("import_dot: non-contiguous ids are remapped by first appearance") {
  auto res = import_dot_string("graph G { 7 -- 3; 9; }");
  CHECK(res.graph.node_count() == 3);
  CHECK(res.graph.edges() == std::vector<Edge>{{0, 1}});
  CHECK(res.original_ids == std::vector<std::uint64_t>{7, 3, 9});
}

TEST_CASE("import_dot: contiguous ids are kept verbatim") {
  auto res = import_dot_string("graph G { 1 -- 2; 0 -- 5; 3; 4; }");
  CHECK(res.graph.node_count() == 6);
  CHECK(res.graph.has_edge(0, 5));
  CHECK(res.graph.has_edge(1, 2));
}

TEST_CASE("import_dot: errors carry line numbers") {
  try {
    import_dot_string("graph G {\n0 -- 1;\n0 ++ 2;\n}\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("import_dot: rejects directed graphs and malformed input") {
  CHECK_THROWS_AS(import_dot_string("digraph G { 0 -> 1; }"), ParseError);
  CHECK_THROWS_AS(import_dot_string("graph G { 0 -- 0; }"), ParseError);
  CHECK_THROWS_AS(import_dot_string("graph G { 0 -- 1 }"), ParseError);
  CHECK_THROWS_AS(import_dot_string("graph G { 0 -- 1;"), ParseError);
  CHECK_THROWS_AS(import_dot_string("0 -- 1;\n}"), ParseError);
}

TEST_CASE("export_dot: canonical bytes for the triangle") {
  Graph g(3, {{1, 2}, {0, 2}, {0, 1}});
  CHECK(export_dot_string(g) == "graph G {\n0 -- 1;\n0 -- 2;\n1 -- 2;\n}\n");
}

TEST_CASE("export_dot: empty graph") {
  CHECK(export_dot_string(Graph{}) == "graph G {\n}\n");
}

TEST_CASE("round trip is the identity on generated graphs") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Graph er = Graph::erdos_renyi(40, 60, seed);
    CHECK(import_dot_string(export_dot_string(er)).graph == er);
    Graph ba = Graph::barabasi_albert(40, 3, 2, seed);
    CHECK(import_dot_string(export_dot_string(ba)).graph == ba);
  }
  // graphs with isolated nodes and gappy edge patterns
  Graph g(6, {{1, 2}, {0, 5}});
  CHECK(import_dot_string(export_dot_string(g)).graph == g);
}

TEST_CASE("graph constructor validates invariants") {
  CHECK_THROWS_AS(Graph(3, {{0, 0}}), ParameterError);
  CHECK_THROWS_AS(Graph(3, {{0, 3}}), ParameterError);
  CHECK_THROWS_AS(Graph(3, {{0, 1}, {1, 0}}), ParameterError);
}

TEST_CASE("degree_summary examples") {
  Graph scenario4 = Graph::erdos_renyi(500, 1000, 3);
  DegreeSummary s = degree_summary(scenario4);
  CHECK(s.lambda_ttl == doctest::Approx(2.0));
  CHECK(s.mean_degree_std == 2.0 * s.lambda_ttl);

  Graph triangle(3, {{0, 1}, {0, 2}, {1, 2}});
  DegreeSummary t = degree_summary(triangle);
  CHECK(t.mean_degree_std == doctest::Approx(2.0));
  CHECK(t.lambda_ttl == doctest::Approx(1.0));

  Graph star(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  DegreeSummary u = degree_summary(star);
  CHECK(u.max_degree == 4);
  CHECK(u.min_degree == 1);
}

TEST_CASE("ttl_estimate formula") {
  CHECK(ttl_estimate(200, 2.0) == 8);
  CHECK(ttl_estimate(500, 2.0) == 9);
  CHECK(ttl_estimate(16, 4.0) == 2);  // exact power must not round up
  CHECK_THROWS_AS(ttl_estimate(100, 1.0), ParameterError);
  CHECK_THROWS_AS(ttl_estimate(100, 0.5), ParameterError);
  CHECK_THROWS_AS(ttl_estimate(1, 2.0), ParameterError);
}

TEST_CASE("ttl_estimate monotonicity") {
  for (NodeId n = 2; n < 400; n += 7) {
    CHECK(ttl_estimate(n + 13, 2.0) >= ttl_estimate(n, 2.0));
    CHECK(ttl_estimate(n, 2.5) <= ttl_estimate(n, 2.0));
  }
}

TEST_CASE("ttl_auto reproduces the reference scenarios") {
  CHECK(ttl_auto(200, 400) == 8);
  CHECK(ttl_auto(300, 600) == 8);
  CHECK(ttl_auto(400, 800) == 8);
  CHECK(ttl_auto(500, 1000) == 9);
  // outside the calibration table: the formula
  CHECK(ttl_auto(256, 1024) == ttl_estimate(256, 4.0));
  CHECK_THROWS_AS(ttl_auto(100, 100), ParameterError);  // lambda = 1
}

TEST_CASE("corpus: generation writes members plus manifest, reproducibly") {
  fs::path dir = fs::temp_directory_path() / "lunes_test_corpus_a";
  fs::path dir2 = fs::temp_directory_path() / "lunes_test_corpus_b";
  fs::remove_all(dir);
  fs::remove_all(dir2);

  CorpusSpec spec;
  spec.model = GraphModel::kErdosRenyi;
  spec.n = 20;
  spec.m = 40;
  spec.count = 10;
  spec.master_seed = 42;
  spec.label = "testbed";
  corpus_generate(spec, dir);

  CHECK(fs::exists(dir / "manifest.txt"));
  for (int k = 0; k < 10; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "graph_%03d.dot", k);
    CHECK(fs::exists(dir / name));
  }

  corpus_generate(spec, dir2);
  for (int k = 0; k < 10; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "graph_%03d.dot", k);
    CHECK(slurp(dir / name) == slurp(dir2 / name));
  }
  CHECK(slurp(dir / "manifest.txt") == slurp(dir2 / "manifest.txt"));

  Corpus loaded = corpus_load(dir);
  CHECK(loaded.spec.label == "testbed");
  CHECK(loaded.graphs.size() == 10);
  for (std::uint32_t k = 0; k < 10; ++k) {
    CHECK(loaded.graphs[k].node_count() == 20);
    CHECK(loaded.graphs[k].edge_count() == 40);
    CHECK(loaded.graphs[k] == corpus_member(spec, k));
  }
  // members differ from each other
  CHECK(loaded.graphs[0].edges() != loaded.graphs[1].edges());

  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("corpus: single-member corpus") {
  fs::path dir = fs::temp_directory_path() / "lunes_test_corpus_single";
  fs::remove_all(dir);
  CorpusSpec spec;
  spec.n = 5;
  spec.m = 4;
  spec.count = 1;
  spec.master_seed = 9;
  corpus_generate(spec, dir);
  Corpus loaded = corpus_load(dir);
  CHECK(loaded.graphs.size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("corpus: unwritable directory raises an io error") {
  fs::path blocker = fs::temp_directory_path() / "lunes_test_blocker";
  std::ofstream(blocker).put('x');
  CorpusSpec spec;
  spec.n = 3;
  spec.m = 1;
  spec.count = 1;
  CHECK_THROWS_AS(corpus_generate(spec, blocker / "sub"), IoError);
  fs::remove(blocker);
}
