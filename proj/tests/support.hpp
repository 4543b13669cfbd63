#pragma once

#include <queue>
#include <string>
#include <vector>

#include "nedp/graph.hpp"
#include "nedp/log.hpp"
#include "nedp/rng.hpp"

namespace nedp::testing {

// Collects warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture() {
    previous_ = set_warning_sink([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() { set_warning_sink(std::move(previous_)); }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  std::vector<std::string> messages;

 private:
  WarningSink previous_;
};

// BFS over undirected edges, independent of Graph::is_connected.
inline bool bfs_connected(std::size_t n, const std::vector<WeightedEdge>& edges) {
  if (n <= 1) return true;
  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& e : edges) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  std::vector<char> seen(n, 0);
  std::queue<NodeId> frontier;
  frontier.push(0);
  seen[0] = 1;
  std::size_t visited = 1;
  while (!frontier.empty()) {
    NodeId u = frontier.front();
    frontier.pop();
    for (NodeId v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++visited;
        frontier.push(v);
      }
    }
  }
  return visited == n;
}

// Random weighted undirected graph: a random spanning path plus extra edges.
inline Graph random_connected_graph(std::size_t n, std::size_t extra_edges, std::uint64_t seed, bool weighted = true) {
  Rng rng(seed);
  std::vector<NodeId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<NodeId>(i);
  rng.shuffle(order.begin(), order.end());
  std::vector<WeightedEdge> edges;
  auto weight = [&] { return weighted ? rng.uniform(0.1, 3.0) : 1.0; };
  for (std::size_t i = 1; i < n; ++i) edges.push_back({order[i - 1], order[i], weight()});
  for (std::size_t k = 0; k < extra_edges; ++k) {
    auto u = static_cast<NodeId>(rng.index(n));
    auto v = static_cast<NodeId>(rng.index(n));
    if (u == v) continue;
    bool duplicate = false;
    for (const auto& e : edges) duplicate |= (e.src == u && e.dst == v) || (e.src == v && e.dst == u);
    if (!duplicate) edges.push_back({u, v, weight()});
  }
  WarningCapture quiet;
  return Graph::from_edges(n, edges, false);
}

inline Graph complete_graph(std::size_t n) {
  std::vector<WeightedEdge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) edges.push_back({u, v, 1.0});
  return Graph::from_edges(n, edges, false);
}

inline Graph path_graph(std::size_t n, bool directed = false) {
  std::vector<WeightedEdge> edges;
  for (NodeId u = 0; u + 1 < n; ++u) edges.push_back({u, u + 1, 1.0});
  return Graph::from_edges(n, edges, directed);
}

}  // namespace nedp::testing

#include <boost/math/distributions/chi_squared.hpp>

namespace nedp::testing {

// Pearson chi-square goodness of fit. Returns true when the counts are
// consistent with `expected_probs` at significance `alpha`. Cells with zero
// expected mass must have zero counts.
inline bool chi_square_passes(const std::vector<std::size_t>& counts, const std::vector<double>& expected_probs,
                              double alpha, double* statistic = nullptr) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = expected_probs[i] * static_cast<double>(total);
    if (expected == 0.0) {
      if (counts[i] != 0) return false;
      continue;
    }
    const double diff = static_cast<double>(counts[i]) - expected;
    stat += diff * diff / expected;
    ++cells;
  }
  if (statistic) *statistic = stat;
  if (cells <= 1) return true;
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return stat <= boost::math::quantile(boost::math::complement(dist, alpha));
}

}  // namespace nedp::testing
