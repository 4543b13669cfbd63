#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace nedp {

using NodeId = std::uint32_t;

struct Neighbor {
  NodeId id;
  double weight;
};

struct WeightedEdge {
  NodeId src;
  NodeId dst;
  double weight = 1.0;
};

/// Unordered node pair, stored with u < v.
struct NodePair {
  NodeId u;
  NodeId v;

  static NodePair canonical(NodeId a, NodeId b) { return a < b ? NodePair{a, b} : NodePair{b, a}; }
  friend bool operator==(const NodePair&, const NodePair&) = default;
  friend auto operator<=>(const NodePair&, const NodePair&) = default;
};

struct NodePairHash {
  std::size_t operator()(const NodePair& p) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(p.u) << 32) | p.v);
  }
};

/// Immutable weighted network with dense node ids in [0, node_count()).
///
/// Adjacency is stored in CSR form with each row sorted by neighbor id.
/// Undirected graphs hold both orientations with equal weights. The degree of
/// a node counts incident edges: once per endpoint for undirected graphs, and
/// in-edges plus out-edges for directed ones.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph over `node_count` nodes. Duplicate edges (including both
  /// orientations of an undirected edge) collapse by summing weights. Self-loops
  /// are dropped with a warning. Throws ValidationError on out-of-range ids or
  /// negative/non-finite weights.
  static Graph from_edges(std::size_t node_count, std::span<const WeightedEdge> edges, bool directed,
                          std::vector<std::string> original_ids = {});

  std::size_t node_count() const noexcept { return degree_.size(); }
  /// Unordered pairs for undirected graphs, arcs for directed ones.
  std::size_t edge_count() const noexcept { return edge_count_; }
  bool directed() const noexcept { return directed_; }

  std::span<const Neighbor> neighbors(NodeId u) const;
  std::size_t degree(NodeId u) const { return degree_.at(u); }
  std::span<const std::size_t> degrees() const noexcept { return degree_; }

  bool has_edge(NodeId u, NodeId v) const { return weight(u, v).has_value(); }
  std::optional<double> weight(NodeId u, NodeId v) const;

  /// Each undirected edge once with src < dst; directed arcs as stored.
  std::vector<WeightedEdge> edges() const;

  /// Treats the graph as undirected.
  bool is_connected() const;

  const std::vector<std::string>& original_ids() const noexcept { return original_ids_; }
  const std::string& original_id(NodeId u) const { return original_ids_.at(u); }
  std::optional<NodeId> find(const std::string& original) const;

 private:
  bool directed_ = false;
  std::size_t edge_count_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<Neighbor> adjacency_;
  std::vector<std::size_t> degree_;
  std::vector<std::string> original_ids_;
  std::unordered_map<std::string, NodeId> id_lookup_;
};

/// Parses an edge list: one "src dst [weight]" per line, blank lines and lines
/// starting with '#' ignored. Tokens are arbitrary strings re-indexed densely in
/// order of first appearance. When `weighted` is false any weight column is
/// ignored and every edge has weight 1.
Graph parse_edge_list(std::istream& in, bool directed, bool weighted, const std::string& source = "<stream>");
Graph load_edge_list(const std::filesystem::path& path, bool directed, bool weighted);

/// Writes edges with original ids and a weight column.
void write_edge_list(const Graph& g, std::ostream& out);
void write_edge_list(const Graph& g, const std::filesystem::path& path);

struct EdgeSplit {
  Graph train_graph;
  std::vector<NodePair> test_positive;
  std::vector<NodePair> test_negative;
  double removal_fraction = 0.0;
};

struct EdgeRemoval {
  Graph train_graph;
  std::vector<NodePair> removed;
};

/// Removes round(fraction * |E|) edges while keeping the remaining graph
/// connected: the edges of a uniformly random spanning tree (Wilson's
/// algorithm) are never removed. Requires an undirected connected graph and
/// 0 < fraction < 1; throws ValidationError reporting the achievable maximum
/// when too few non-tree edges exist.
EdgeRemoval remove_edges_connected(const Graph& g, double fraction, std::uint64_t seed);

/// Link-prediction split: remove_edges_connected for the positives plus an
/// equal number of negatives drawn from the non-edges of `g`. Throws
/// ValidationError when `g` has too few non-edges to match the positives.
EdgeSplit split_edges(const Graph& g, double fraction, std::uint64_t seed);

/// Samples `count` distinct unordered non-adjacent pairs (no self-loops),
/// also avoiding every pair in `excluded`.
std::vector<NodePair> sample_negative_edges(const Graph& g, std::size_t count, std::uint64_t seed,
                                            std::span<const NodePair> excluded = {});

/// Number of unordered node pairs joined by at least one edge orientation.
std::size_t adjacent_pair_count(const Graph& g);

}  // namespace nedp
