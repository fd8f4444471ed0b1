#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace attnshape {

using NodeId = std::uint32_t;

// Directed follower graph. An edge a -> b means b follows a: posts made by a
// are visible to b, so a is one of b's leaders.
class FollowerGraph {
 public:
  FollowerGraph() = default;

  // Self-loops are dropped and parallel edges collapsed. `labels`, when given,
  // must have node_count entries; otherwise labels are the decimal ids.
  static FollowerGraph from_edges(std::size_t node_count,
                                  std::vector<std::pair<NodeId, NodeId>> edges,
                                  std::vector<std::string> labels = {});

  std::size_t node_count() const { return labels_.size(); }
  std::size_t edge_count() const { return follower_ids_.size(); }

  // Accounts whose posts `node` sees, sorted.
  std::span<const NodeId> leaders(NodeId node) const {
    return {leader_ids_.data() + leader_offsets_[node],
            leader_ids_.data() + leader_offsets_[node + 1]};
  }
  // Accounts that see posts of `node`, sorted.
  std::span<const NodeId> followers(NodeId node) const {
    return {follower_ids_.data() + follower_offsets_[node],
            follower_ids_.data() + follower_offsets_[node + 1]};
  }

  const std::string& label(NodeId node) const { return labels_[node]; }

  // All edges as (leader, follower), sorted.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

 private:
  std::vector<std::size_t> leader_offsets_{0};
  std::vector<NodeId> leader_ids_;
  std::vector<std::size_t> follower_offsets_{0};
  std::vector<NodeId> follower_ids_;
  std::vector<std::string> labels_;
};

struct EdgeListLoad {
  FollowerGraph graph;
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> warnings;
};

// One `src dst` pair per line; '#' lines are comments. Labels map to dense ids
// in order of first appearance. `reverse` swaps every pair; undirected input
// adds both directions.
EdgeListLoad load_edgelist(std::istream& in, bool directed = true,
                           bool reverse = false);

// Writes labels in an order that reloads to the same dense ids.
void write_edgelist(std::ostream& out, const FollowerGraph& graph);

// Barabási–Albert preferential attachment. Seed: complete graph on nodes
// 0..m (for m = 1 the single edge 0 -> 1). Each later node picks m distinct
// existing nodes with probability proportional to degree and follows them.
FollowerGraph generate_ba(std::size_t n, std::size_t m, std::uint64_t seed);

}  // namespace attnshape
