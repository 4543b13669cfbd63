#include "nedp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "nedp/error.hpp"
#include "nedp/format.hpp"
#include "nedp/log.hpp"
#include "nedp/rng.hpp"

namespace nedp {
namespace {

struct Arc {
  NodeId src;
  NodeId dst;
  double weight;
};

// Sorts arcs by (src, dst) and merges duplicates by summing weights.
std::vector<Arc> merge_arcs(std::vector<Arc> arcs) {
  std::sort(arcs.begin(), arcs.end(),
            [](const Arc& a, const Arc& b) { return a.src != b.src ? a.src < b.src : a.dst < b.dst; });
  std::vector<Arc> merged;
  merged.reserve(arcs.size());
  for (const Arc& a : arcs) {
    if (!merged.empty() && merged.back().src == a.src && merged.back().dst == a.dst) {
      merged.back().weight += a.weight;
    } else {
      merged.push_back(a);
    }
  }
  return merged;
}

}  // namespace

Graph Graph::from_edges(std::size_t node_count, std::span<const WeightedEdge> edges, bool directed,
                        std::vector<std::string> original_ids) {
  if (node_count > std::numeric_limits<NodeId>::max()) throw ValidationError("graph: too many nodes");
  if (original_ids.empty()) {
    original_ids.reserve(node_count);
    for (std::size_t i = 0; i < node_count; ++i) original_ids.push_back(std::to_string(i));
  }
  if (original_ids.size() != node_count) {
    throw ValidationError("graph: id table has " + std::to_string(original_ids.size()) + " entries for " +
                          std::to_string(node_count) + " nodes");
  }

  std::vector<Arc> arcs;
  arcs.reserve(edges.size());
  std::size_t self_loops = 0;
  for (const WeightedEdge& e : edges) {
    if (e.src >= node_count || e.dst >= node_count) {
      throw ValidationError("graph: edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                            ") references a node outside [0, " + std::to_string(node_count) + ")");
    }
    if (!std::isfinite(e.weight) || e.weight < 0.0) {
      throw ValidationError("graph: edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                            ") has invalid weight " + format_double(e.weight));
    }
    if (e.src == e.dst) {
      ++self_loops;
      continue;
    }
    if (directed) {
      arcs.push_back({e.src, e.dst, e.weight});
    } else {
      arcs.push_back({std::min(e.src, e.dst), std::max(e.src, e.dst), e.weight});
    }
  }
  if (self_loops > 0) warn("graph: dropped " + std::to_string(self_loops) + " self-loop(s)");

  std::vector<Arc> merged = merge_arcs(std::move(arcs));

  Graph g;
  g.directed_ = directed;
  g.edge_count_ = merged.size();
  if (!directed) {
    const std::size_t half = merged.size();
    for (std::size_t i = 0; i < half; ++i) merged.push_back({merged[i].dst, merged[i].src, merged[i].weight});
    merged = merge_arcs(std::move(merged));
  }

  g.degree_.assign(node_count, 0);
  g.offsets_.assign(node_count + 1, 0);
  g.adjacency_.reserve(merged.size());
  for (const Arc& a : merged) {
    ++g.offsets_[a.src + 1];
    g.adjacency_.push_back({a.dst, a.weight});
  }
  std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
  for (std::size_t u = 0; u < node_count; ++u) g.degree_[u] = g.offsets_[u + 1] - g.offsets_[u];
  if (directed) {
    for (const Arc& a : merged) ++g.degree_[a.dst];
  }

  g.original_ids_ = std::move(original_ids);
  g.id_lookup_.reserve(node_count);
  for (std::size_t i = 0; i < node_count; ++i) {
    if (!g.id_lookup_.emplace(g.original_ids_[i], static_cast<NodeId>(i)).second) {
      throw ValidationError("graph: duplicate original id '" + g.original_ids_[i] + "'");
    }
  }
  return g;
}

std::span<const Neighbor> Graph::neighbors(NodeId u) const {
  if (u >= node_count()) throw ValidationError("graph: node " + std::to_string(u) + " out of range");
  return {adjacency_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
}

std::optional<double> Graph::weight(NodeId u, NodeId v) const {
  auto row = neighbors(u);
  auto it = std::lower_bound(row.begin(), row.end(), v, [](const Neighbor& n, NodeId id) { return n.id < id; });
  if (it == row.end() || it->id != v) return std::nullopt;
  return it->weight;
}

std::vector<WeightedEdge> Graph::edges() const {
  std::vector<WeightedEdge> out;
  out.reserve(edge_count_);
  for (NodeId u = 0; u < node_count(); ++u) {
    for (const Neighbor& n : neighbors(u)) {
      if (directed_ || u < n.id) out.push_back({u, n.id, n.weight});
    }
  }
  return out;
}

bool Graph::is_connected() const {
  const std::size_t n = node_count();
  if (n <= 1) return true;
  // Union-find handles the directed case without building reverse adjacency.
  std::vector<NodeId> parent(n);
  std::iota(parent.begin(), parent.end(), NodeId{0});
  auto find = [&](NodeId x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = n;
  for (NodeId u = 0; u < n; ++u) {
    for (const Neighbor& nb : neighbors(u)) {
      NodeId a = find(u), b = find(nb.id);
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
  }
  return components == 1;
}

std::optional<NodeId> Graph::find(const std::string& original) const {
  auto it = id_lookup_.find(original);
  if (it == id_lookup_.end()) return std::nullopt;
  return it->second;
}

Graph parse_edge_list(std::istream& in, bool directed, bool weighted, const std::string& source) {
  std::vector<std::string> ids;
  std::unordered_map<std::string, NodeId> lookup;
  auto intern = [&](std::string_view token) {
    auto [it, inserted] = lookup.emplace(std::string(token), static_cast<NodeId>(ids.size()));
    if (inserted) ids.emplace_back(token);
    return it->second;
  };

  std::vector<WeightedEdge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_whitespace(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.size() < 2 || tokens.size() > 3) {
      throw ParseError(source, line_no, "expected 'src dst [weight]', got " + std::to_string(tokens.size()) + " token(s)");
    }
    double w = 1.0;
    if (weighted && tokens.size() == 3) {
      auto parsed = parse_double(tokens[2]);
      if (!parsed || !std::isfinite(*parsed)) {
        throw ParseError(source, line_no, "invalid weight '" + std::string(tokens[2]) + "'");
      }
      if (*parsed < 0.0) {
        throw ValidationError(source + ":" + std::to_string(line_no) + ": negative weight " + std::string(tokens[2]));
      }
      w = *parsed;
    }
    const NodeId src = intern(tokens[0]);
    const NodeId dst = intern(tokens[1]);
    edges.push_back({src, dst, w});
  }
  const std::size_t n = ids.size();
  return Graph::from_edges(n, edges, directed, std::move(ids));
}

Graph load_edge_list(const std::filesystem::path& path, bool directed, bool weighted) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path.string() + "'");
  return parse_edge_list(in, directed, weighted, path.string());
}

void write_edge_list(const Graph& g, std::ostream& out) {
  out << "# " << g.node_count() << " nodes, " << g.edge_count() << " edges, "
      << (g.directed() ? "directed" : "undirected") << '\n';
  for (const WeightedEdge& e : g.edges()) {
    out << g.original_id(e.src) << ' ' << g.original_id(e.dst) << ' ' << format_double(e.weight) << '\n';
  }
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edge list '" + path.string() + "'");
  write_edge_list(g, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::size_t adjacent_pair_count(const Graph& g) {
  if (!g.directed()) return g.edge_count();
  std::size_t count = 0;
  for (const WeightedEdge& e : g.edges()) {
    // Count u->v once; a reciprocal v->u is counted only from its smaller end.
    if (e.src < e.dst || !g.has_edge(e.dst, e.src)) ++count;
  }
  return count;
}

namespace {

bool adjacent(const Graph& g, NodeId u, NodeId v) {
  return g.has_edge(u, v) || (g.directed() && g.has_edge(v, u));
}

// Wilson's algorithm: loop-erased random walks produce a spanning tree drawn
// uniformly from all spanning trees of the (unweighted) connected graph.
std::vector<NodePair> uniform_spanning_tree(const Graph& g, Rng& rng) {
  const std::size_t n = g.node_count();
  std::vector<char> in_tree(n, 0);
  std::vector<NodeId> next(n, 0);
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  rng.shuffle(order.begin(), order.end());
  in_tree[order.front()] = 1;

  std::vector<NodePair> tree;
  tree.reserve(n - 1);
  for (NodeId start : order) {
    NodeId u = start;
    while (!in_tree[u]) {
      auto nbrs = g.neighbors(u);
      next[u] = nbrs[rng.index(nbrs.size())].id;
      u = next[u];
    }
    u = start;
    while (!in_tree[u]) {
      in_tree[u] = 1;
      tree.push_back(NodePair::canonical(u, next[u]));
      u = next[u];
    }
  }
  return tree;
}

}  // namespace

EdgeRemoval remove_edges_connected(const Graph& g, double fraction, std::uint64_t seed) {
  if (g.directed()) throw ValidationError("split_edges: graph must be undirected");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ValidationError("split_edges: fraction must lie in (0, 1), got " + format_double(fraction));
  }
  if (g.node_count() == 0 || !g.is_connected()) throw ValidationError("split_edges: graph must be connected");

  const std::size_t edge_count = g.edge_count();
  const std::size_t target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(edge_count)));
  const std::size_t removable = edge_count - (g.node_count() - 1);
  if (target == 0 || target > removable) {
    throw ValidationError("split_edges: cannot remove " + std::to_string(target) + " of " + std::to_string(edge_count) +
                          " edges while keeping the graph connected; at most " + std::to_string(removable) +
                          " removable (fraction " + format_double(static_cast<double>(removable) / edge_count) + ")");
  }

  Rng rng(mix_seed(seed, 0));
  std::vector<NodePair> tree = uniform_spanning_tree(g, rng);
  std::unordered_set<NodePair, NodePairHash> protected_edges(tree.begin(), tree.end());

  std::vector<WeightedEdge> candidates;
  std::vector<WeightedEdge> kept;
  for (const WeightedEdge& e : g.edges()) {
    if (protected_edges.contains(NodePair::canonical(e.src, e.dst))) {
      kept.push_back(e);
    } else {
      candidates.push_back(e);
    }
  }
  rng.shuffle(candidates.begin(), candidates.end());

  EdgeRemoval out;
  out.removed.reserve(target);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i < target) {
      out.removed.push_back(NodePair::canonical(candidates[i].src, candidates[i].dst));
    } else {
      kept.push_back(candidates[i]);
    }
  }
  out.train_graph = Graph::from_edges(g.node_count(), kept, false, g.original_ids());
  return out;
}

EdgeSplit split_edges(const Graph& g, double fraction, std::uint64_t seed) {
  EdgeRemoval removal = remove_edges_connected(g, fraction, seed);
  EdgeSplit split;
  split.removal_fraction = fraction;
  split.test_negative = sample_negative_edges(g, removal.removed.size(), mix_seed(seed, 1));
  split.train_graph = std::move(removal.train_graph);
  split.test_positive = std::move(removal.removed);
  return split;
}

std::vector<NodePair> sample_negative_edges(const Graph& g, std::size_t count, std::uint64_t seed,
                                            std::span<const NodePair> excluded) {
  const std::size_t n = g.node_count();
  const std::size_t all_pairs = n < 2 ? 0 : n * (n - 1) / 2;

  std::unordered_set<NodePair, NodePairHash> blocked;
  for (const NodePair& p : excluded) {
    if (p.u != p.v && !adjacent(g, p.u, p.v)) blocked.insert(NodePair::canonical(p.u, p.v));
  }
  const std::size_t population = all_pairs - adjacent_pair_count(g) - blocked.size();
  if (count > population) {
    throw ValidationError("sample_negative_edges: requested " + std::to_string(count) + " negative pairs but only " +
                          std::to_string(population) + " non-edges are available");
  }

  Rng rng(mix_seed(seed, 2));
  std::vector<NodePair> out;
  out.reserve(count);
  constexpr std::size_t kEnumerateLimit = 4'000'000;
  if (all_pairs <= kEnumerateLimit || 2 * count > population) {
    std::vector<NodePair> pool;
    pool.reserve(population);
    for (NodeId u = 0; u < n; ++u) {
      for (NodeId v = u + 1; v < n; ++v) {
        if (!adjacent(g, u, v) && !blocked.contains({u, v})) pool.push_back({u, v});
      }
    }
    // Partial Fisher-Yates: the first `count` slots form a uniform sample.
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
      out.push_back(pool[i]);
    }
    return out;
  }

  std::unordered_set<NodePair, NodePairHash> chosen;
  while (out.size() < count) {
    const auto u = static_cast<NodeId>(rng.index(n));
    const auto v = static_cast<NodeId>(rng.index(n));
    if (u == v || adjacent(g, u, v)) continue;
    const NodePair p = NodePair::canonical(u, v);
    if (blocked.contains(p) || !chosen.insert(p).second) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace nedp
