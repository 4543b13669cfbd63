#pragma once

#include <cstdint>
#include <vector>

#include "nedp/graph.hpp"

namespace nedp {

struct LabeledGraph {
  Graph graph;
  std::vector<int> block;  // ground-truth block of every node
};

/// Stochastic block model: nodes in blocks of the given sizes, each pair linked
/// independently with p_in inside a block and p_out across blocks.
LabeledGraph planted_partition(const std::vector<std::size_t>& block_sizes, double p_in, double p_out,
                               std::uint64_t seed);

/// Erdos-Renyi G(n, p).
Graph erdos_renyi(std::size_t n, double p, std::uint64_t seed);

/// Appends `hub_count` hub nodes to a planted partition. Hub h joins block
/// h % blocks, links to each node of its block with probability p_hub_in and
/// to every other node with p_hub_out. Produces a heterogeneous degree profile.
LabeledGraph add_hubs(const LabeledGraph& base, std::size_t hub_count, double p_hub_in, double p_hub_out,
                      std::uint64_t seed);

/// Re-draws (with derived seeds) until the sampled graph is connected. Throws
/// ValidationError after `max_attempts` failures.
LabeledGraph connected_planted_partition(const std::vector<std::size_t>& block_sizes, double p_in, double p_out,
                                         std::uint64_t seed, int max_attempts = 100);
Graph connected_erdos_renyi(std::size_t n, double p, std::uint64_t seed, int max_attempts = 100);

}  // namespace nedp
