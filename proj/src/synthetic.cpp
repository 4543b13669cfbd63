#include "nedp/synthetic.hpp"

#include <algorithm>

#include "nedp/error.hpp"
#include "nedp/rng.hpp"

namespace nedp {

LabeledGraph planted_partition(const std::vector<std::size_t>& block_sizes, double p_in, double p_out,
                               std::uint64_t seed) {
  if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1) throw ValidationError("planted_partition: bad probability");
  LabeledGraph out;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) out.block.insert(out.block.end(), block_sizes[b], static_cast<int>(b));
  const std::size_t n = out.block.size();
  Rng rng(mix_seed(seed, 0x5b));
  std::vector<WeightedEdge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double p = out.block[u] == out.block[v] ? p_in : p_out;
      if (rng.uniform() < p) edges.push_back({u, v, 1.0});
    }
  }
  out.graph = Graph::from_edges(n, edges, false);
  return out;
}

Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  return planted_partition({n}, p, p, seed).graph;
}

LabeledGraph add_hubs(const LabeledGraph& base, std::size_t hub_count, double p_hub_in, double p_hub_out,
                      std::uint64_t seed) {
  const int blocks = base.block.empty() ? 1 : *std::max_element(base.block.begin(), base.block.end()) + 1;
  const std::size_t n0 = base.graph.node_count();
  LabeledGraph out;
  out.block = base.block;
  std::vector<WeightedEdge> edges = base.graph.edges();
  Rng rng(mix_seed(seed, 0x4b));
  for (std::size_t h = 0; h < hub_count; ++h) {
    const auto hub = static_cast<NodeId>(n0 + h);
    const int hub_block = static_cast<int>(h % static_cast<std::size_t>(blocks));
    out.block.push_back(hub_block);
    for (NodeId v = 0; v < hub; ++v) {
      const double p = out.block[v] == hub_block ? p_hub_in : p_hub_out;
      if (rng.uniform() < p) edges.push_back({v, hub, 1.0});
    }
  }
  out.graph = Graph::from_edges(n0 + hub_count, edges, false);
  return out;
}

LabeledGraph connected_planted_partition(const std::vector<std::size_t>& block_sizes, double p_in, double p_out,
                                         std::uint64_t seed, int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    LabeledGraph lg = planted_partition(block_sizes, p_in, p_out, mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    if (lg.graph.is_connected()) return lg;
  }
  throw ValidationError("connected_planted_partition: no connected sample after " + std::to_string(max_attempts) +
                        " attempts");
}

Graph connected_erdos_renyi(std::size_t n, double p, std::uint64_t seed, int max_attempts) {
  return connected_planted_partition({n}, p, p, seed, max_attempts).graph;
}

}  // namespace nedp
