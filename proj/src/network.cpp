#include "attnshape/network.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "attnshape/error.hpp"
#include "attnshape/rng.hpp"

namespace attnshape {

namespace {

void build_csr(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges,
               bool by_first, std::vector<std::size_t>& offsets,
               std::vector<NodeId>& ids) {
  offsets.assign(n + 1, 0);
  for (const auto& [a, b] : edges) ++offsets[(by_first ? a : b) + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  ids.resize(edges.size());
  auto cursor = offsets;
  for (const auto& [a, b] : edges)
    ids[cursor[by_first ? a : b]++] = by_first ? b : a;
  for (std::size_t i = 0; i < n; ++i)
    std::sort(ids.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
              ids.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]));
}

}  // namespace

FollowerGraph FollowerGraph::from_edges(
    std::size_t node_count, std::vector<std::pair<NodeId, NodeId>> edges,
    std::vector<std::string> labels) {
  if (!labels.empty() && labels.size() != node_count)
    throw ArgumentError("label count does not match node count");
  for (const auto& [a, b] : edges)
    if (a >= node_count || b >= node_count)
      throw ArgumentError("edge endpoint out of range");
  std::erase_if(edges, [](const auto& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  FollowerGraph g;
  if (labels.empty()) {
    labels.reserve(node_count);
    for (std::size_t i = 0; i < node_count; ++i) labels.push_back(std::to_string(i));
  }
  g.labels_ = std::move(labels);
  build_csr(node_count, edges, true, g.follower_offsets_, g.follower_ids_);
  build_csr(node_count, edges, false, g.leader_offsets_, g.leader_ids_);
  return g;
}

std::vector<std::pair<NodeId, NodeId>> FollowerGraph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(edge_count());
  for (NodeId a = 0; a < node_count(); ++a)
    for (NodeId b : followers(a)) out.emplace_back(a, b);
  return out;
}

EdgeListLoad load_edgelist(std::istream& in, bool directed, bool reverse) {
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::string> labels;
  std::vector<std::pair<NodeId, NodeId>> edges;
  EdgeListLoad result;

  const auto intern = [&](const std::string& label) {
    auto [it, inserted] = ids.try_emplace(label, static_cast<NodeId>(labels.size()));
    if (inserted) labels.push_back(label);
    return it->second;
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#' || line[first] == '%')
      continue;
    std::istringstream fields(line);
    std::string src, dst, extra;
    if (!(fields >> src >> dst))
      throw ParseError(line_no, "expected 'src dst' pair");
    if (fields >> extra && extra.front() != '#')
      throw ParseError(line_no, "unexpected third field '" + extra + "'");
    if (reverse) std::swap(src, dst);
    if (src == dst) {
      ++result.self_loops;
      result.warnings.push_back("line " + std::to_string(line_no) +
                                ": self-loop on '" + src + "' dropped");
      continue;
    }
    const NodeId a = intern(src);
    const NodeId b = intern(dst);
    edges.emplace_back(a, b);
    if (!directed) edges.emplace_back(b, a);
  }

  const std::size_t raw = edges.size();
  const std::size_t nodes = labels.size();
  result.graph =
      FollowerGraph::from_edges(nodes, std::move(edges), std::move(labels));
  result.duplicates = raw - result.graph.edge_count();
  if (result.duplicates > 0)
    result.warnings.push_back(std::to_string(result.duplicates) +
                              " duplicate edge(s) collapsed");
  return result;
}

void write_edgelist(std::ostream& out, const FollowerGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<bool> seen(n, false);
  struct Line {
    NodeId src, dst;
  };
  std::vector<Line> batch;
  for (NodeId k = 0; k < n; ++k) {
    // Edges whose larger endpoint is k; only k can be new unless k - 1 has
    // not appeared yet, in which case an edge from it goes first.
    batch.clear();
    for (NodeId u : graph.leaders(k))
      if (u < k) batch.push_back({u, k});
    for (NodeId v : graph.followers(k))
      if (v < k) batch.push_back({k, v});
    std::stable_sort(batch.begin(), batch.end(), [&](const Line& a, const Line& b) {
      const bool a_intro = !seen[a.src] && a.src != k;
      const bool b_intro = !seen[b.src] && b.src != k;
      if (a_intro != b_intro) return a_intro;
      return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
    });
    for (const Line& l : batch) {
      out << graph.label(l.src) << ' ' << graph.label(l.dst) << '\n';
      seen[l.src] = seen[l.dst] = true;
    }
  }
}

FollowerGraph generate_ba(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw ArgumentError("BA generator needs m >= 1");
  if (n <= m)
    throw ArgumentError("BA generator needs n > m (n=" + std::to_string(n) +
                        ", m=" + std::to_string(m) + ")");
  Rng rng(seed);
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<NodeId> endpoints;  // each node once per incident edge
  for (NodeId a = 0; a <= m; ++a)
    for (NodeId b = a + 1; b <= m; ++b) {
      edges.emplace_back(a, b);
      endpoints.push_back(a);
      endpoints.push_back(b);
    }

  std::vector<NodeId> chosen;
  for (auto v = static_cast<NodeId>(m + 1); v < n; ++v) {
    chosen.clear();
    while (chosen.size() < m) {
      const NodeId t = endpoints[rng.below(endpoints.size())];
      if (std::find(chosen.begin(), chosen.end(), t) == chosen.end())
        chosen.push_back(t);
    }
    for (NodeId t : chosen) {
      edges.emplace_back(t, v);
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  return FollowerGraph::from_edges(n, std::move(edges));
}

}  // namespace attnshape
