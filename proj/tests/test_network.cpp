#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "attnshape/error.hpp"
#include "attnshape/network.hpp"
#include "attnshape/rng.hpp"

using namespace attnshape;

namespace {

EdgeListLoad load(const std::string& text, bool directed = true, bool reverse = false) {
  std::istringstream in(text);
  return load_edgelist(in, directed, reverse);
}

std::vector<NodeId> ids(std::span<const NodeId> s) { return {s.begin(), s.end()}; }

void check_duality(const FollowerGraph& g) {
  std::size_t leader_total = 0;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    leader_total += g.leaders(v).size();
    for (NodeId u : g.leaders(v)) {
      const auto f = g.followers(u);
      CHECK(std::binary_search(f.begin(), f.end(), v));
    }
    for (NodeId w : g.followers(v)) {
      const auto l = g.leaders(w);
      CHECK(std::binary_search(l.begin(), l.end(), v));
    }
    const auto l = g.leaders(v);
    CHECK(std::find(l.begin(), l.end(), v) == l.end());
  }
  CHECK(leader_total == g.edge_count());
}

std::size_t max_degree(const FollowerGraph& g) {
  std::size_t best = 0;
  for (NodeId v = 0; v < g.node_count(); ++v)
    best = std::max(best, g.leaders(v).size() + g.followers(v).size());
  return best;
}

// Same growth process with targets drawn uniformly instead of by degree.
std::size_t uniform_attachment_max_degree(std::size_t n, Rng& rng) {
  std::vector<std::size_t> degree(n, 0);
  degree[0] = degree[1] = 1;
  for (std::size_t v = 2; v < n; ++v) {
    ++degree[rng.below(v)];
    ++degree[v];
  }
  return *std::max_element(degree.begin(), degree.end());
}

}  // namespace

TEST_CASE("directed edge list") {
  const auto r = load("0 1\n1 2\n");
  const FollowerGraph& g = r.graph;
  CHECK(g.node_count() == 3);
  CHECK(ids(g.leaders(1)) == std::vector<NodeId>{0});
  CHECK(ids(g.leaders(2)) == std::vector<NodeId>{1});
  CHECK(ids(g.followers(0)) == std::vector<NodeId>{1});
  CHECK(g.leaders(0).empty());
  CHECK(r.warnings.empty());
}

TEST_CASE("duplicates collapse and self-loops are dropped with a warning") {
  const auto dup = load("0 1\n0 1\n");
  CHECK(dup.graph.edge_count() == 1);
  CHECK(dup.duplicates == 1);

  const auto loop = load("0 1\n3 3\n");
  CHECK(loop.graph.edge_count() == 1);
  CHECK(loop.graph.node_count() == 2);
  CHECK(loop.self_loops == 1);
  REQUIRE(loop.warnings.size() == 1);
  CHECK(loop.warnings[0].find("self-loop") != std::string::npos);
  CHECK(loop.warnings[0].find("line 2") != std::string::npos);
}

TEST_CASE("labels remap by first appearance; comments are skipped") {
  const auto r = load("# SNAP header\n# Nodes: 3\nalice 42\n\n42 bob\t# trailing\n");
  const FollowerGraph& g = r.graph;
  REQUIRE(g.node_count() == 3);
  CHECK(g.label(0) == "alice");
  CHECK(g.label(1) == "42");
  CHECK(g.label(2) == "bob");
  CHECK(ids(g.leaders(2)) == std::vector<NodeId>{1});
}

TEST_CASE("undirected and reversed input") {
  const auto u = load("0 1\n", false);
  CHECK(u.graph.edge_count() == 2);
  CHECK(ids(u.graph.leaders(0)) == std::vector<NodeId>{1});

  const auto rev = load("0 1\n1 2\n", true, true);
  // "0 1" read as 1 -> 0: node "1" gets id 0.
  CHECK(rev.graph.label(0) == "1");
  CHECK(ids(rev.graph.leaders(1)) == std::vector<NodeId>{0});
}

TEST_CASE("malformed lines report their number") {
  try {
    load("0 1\n2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load("0 1 2\n"), ParseError);
}

TEST_CASE("Barabasi-Albert generator") {
  SUBCASE("m = 1 gives a tree") {
    const FollowerGraph g = generate_ba(500, 1, 42);
    CHECK(g.node_count() == 500);
    CHECK(g.edge_count() == 499);
    CHECK(g.leaders(0).empty());
    for (NodeId v = 1; v < 500; ++v) {
      REQUIRE(g.leaders(v).size() == 1);
      CHECK(g.leaders(v)[0] < v);  // old -> new
    }
    check_duality(g);
  }
  SUBCASE("three nodes") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const FollowerGraph g = generate_ba(3, 1, seed);
      CHECK(g.edge_count() == 2);
      REQUIRE(g.leaders(2).size() == 1);
      CHECK(g.leaders(2)[0] <= 1);
    }
  }
  SUBCASE("edge count for m > 1") {
    for (std::size_t m : {2u, 3u, 5u}) {
      const std::size_t n = 300;
      const FollowerGraph g = generate_ba(n, m, 7);
      CHECK(g.edge_count() == m * (m + 1) / 2 + m * (n - m - 1));
      for (NodeId v = static_cast<NodeId>(m + 1); v < n; ++v)
        CHECK(g.leaders(v).size() == m);
      check_duality(g);
    }
  }
  SUBCASE("deterministic per seed") {
    CHECK(generate_ba(1000, 2, 9).edges() == generate_ba(1000, 2, 9).edges());
    CHECK(generate_ba(1000, 2, 9).edges() != generate_ba(1000, 2, 10).edges());
  }
  CHECK_THROWS_AS(generate_ba(3, 3, 0), ArgumentError);
  CHECK_THROWS_AS(generate_ba(2, 5, 0), ArgumentError);
  CHECK_THROWS_AS(generate_ba(10, 0, 0), ArgumentError);
}

TEST_CASE("preferential attachment has a heavier tail than uniform attachment") {
  Rng baseline_rng(555);
  int heavier = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t ba = max_degree(generate_ba(2000, 1, seed));
    if (ba > uniform_attachment_max_degree(2000, baseline_rng)) ++heavier;
  }
  CHECK(heavier >= 45);
}

TEST_CASE("property: loading a graph's own serialization reproduces it") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    std::ostringstream text;
    const std::size_t labels = 5 + rng.below(60);
    for (std::size_t e = 0; e < 3 * labels; ++e)
      text << "n" << rng.below(labels) * 7 << ' ' << "n" << rng.below(labels) * 7 << '\n';
    const FollowerGraph g = load(text.str(), trial % 2 == 0).graph;
    check_duality(g);

    std::ostringstream out;
    write_edgelist(out, g);
    const FollowerGraph again = load(out.str()).graph;
    REQUIRE(again.node_count() == g.node_count());
    CHECK(again.edges() == g.edges());
    for (NodeId v = 0; v < g.node_count(); ++v) CHECK(again.label(v) == g.label(v));
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FollowerGraph g = generate_ba(400, 1 + seed % 3, seed);
    std::ostringstream out;
    write_edgelist(out, g);
    CHECK(load(out.str()).graph.edges() == g.edges());
  }
}
