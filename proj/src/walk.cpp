#include "nedp/walk.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "nedp/error.hpp"
#include "nedp/format.hpp"
#include "nedp/log.hpp"
#include "nedp/rng.hpp"

namespace nedp {

std::string_view to_string(WalkStrategy s) {
  switch (s) {
    case WalkStrategy::truncated: return "truncated";
    case WalkStrategy::biased: return "biased";
    case WalkStrategy::degree_weight: return "degree_weight";
  }
  return "?";
}

WalkStrategy parse_walk_strategy(std::string_view name) {
  if (name == "truncated") return WalkStrategy::truncated;
  if (name == "biased") return WalkStrategy::biased;
  if (name == "degree_weight" || name == "dw") return WalkStrategy::degree_weight;
  throw ValidationError("unknown walk strategy '" + std::string(name) + "' (truncated, biased, degree_weight)");
}

void WalkConfig::validate() const {
  if (walk_length < 2) throw ValidationError("walk config: walk length must be >= 2");
  if (walks_per_node < 1) throw ValidationError("walk config: walks per node must be >= 1");
  if (!(p > 0.0) || !(q > 0.0) || !std::isfinite(p) || !std::isfinite(q)) {
    throw ValidationError("walk config: p and q must be positive");
  }
  if (!(dw_alpha >= 0.0) || !std::isfinite(dw_alpha)) throw ValidationError("walk config: dw_alpha must be >= 0");
}

namespace {

// Normalizes in place; returns false when the total mass is zero.
bool normalize(std::vector<double>& mass) {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (!(total > 0.0)) return false;
  for (double& m : mass) m /= total;
  return true;
}

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n)); }

std::vector<double> weight_proportional(const Graph& g, NodeId u) {
  auto nbrs = g.neighbors(u);
  std::vector<double> mass;
  mass.reserve(nbrs.size());
  for (const Neighbor& n : nbrs) mass.push_back(n.weight);
  if (!normalize(mass)) return uniform(nbrs.size());
  return mass;
}

double proximity(double w, std::size_t di, std::size_t dj, double alpha) {
  const auto lo = static_cast<double>(std::min(di, dj));
  const auto hi = static_cast<double>(std::max(di, dj));
  return w * lo / (hi + alpha);
}

// Returns the distribution and whether the uniform fallback was taken.
std::pair<std::vector<double>, bool> dw_distribution(const Graph& g, NodeId u, double alpha) {
  auto nbrs = g.neighbors(u);
  std::vector<double> mass;
  mass.reserve(nbrs.size());
  for (const Neighbor& n : nbrs) mass.push_back(proximity(n.weight, g.degree(u), g.degree(n.id), alpha));
  if (nbrs.empty()) return {std::move(mass), false};
  if (!normalize(mass)) return {uniform(nbrs.size()), true};
  return {std::move(mass), false};
}

}  // namespace

std::vector<double> transition_probs_truncated(const Graph& g, NodeId u) { return uniform(g.neighbors(u).size()); }

std::vector<double> transition_probs_biased(const Graph& g, std::optional<NodeId> prev, NodeId u, double p, double q) {
  if (!(p > 0.0) || !(q > 0.0)) throw ValidationError("transition_probs_biased: p and q must be positive");
  if (!prev) return weight_proportional(g, u);
  auto nbrs = g.neighbors(u);
  std::vector<double> mass;
  mass.reserve(nbrs.size());
  for (const Neighbor& n : nbrs) {
    double bias = 1.0 / q;
    if (n.id == *prev) {
      bias = 1.0 / p;
    } else if (g.has_edge(*prev, n.id)) {
      bias = 1.0;
    }
    mass.push_back(bias * n.weight);
  }
  if (!normalize(mass)) return uniform(nbrs.size());
  return mass;
}

double dw_proximity(const Graph& g, NodeId i, NodeId j, double alpha) {
  auto w = g.weight(i, j);
  if (!w) throw ValidationError("dw_proximity: (" + std::to_string(i) + ", " + std::to_string(j) + ") is not an edge");
  return proximity(*w, g.degree(i), g.degree(j), alpha);
}

std::vector<double> transition_probs_dw(const Graph& g, NodeId u, double alpha) {
  auto [dist, fell_back] = dw_distribution(g, u, alpha);
  if (fell_back) warn("degree-weight walk: node " + g.original_id(u) + " has zero proximity to all neighbors; using uniform");
  return dist;
}

AliasTable::AliasTable(std::span<const double> dist) {
  const std::size_t n = dist.size();
  if (n == 0) throw ValidationError("alias table: empty distribution");
  double total = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("alias table: negative or non-finite probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("alias table: probabilities sum to " + format_double(total) + ", expected 1");
  }

  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = dist[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const std::uint32_t s = small.back();
    small.pop_back();
    const std::uint32_t l = large.back();
    large.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  // Leftovers are 1 up to rounding.
  for (std::uint32_t i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  for (std::uint32_t i : small) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

std::size_t AliasTable::sample(double u_column, double u_coin) const {
  const std::size_t n = prob_.size();
  auto column = static_cast<std::size_t>(u_column * static_cast<double>(n));
  if (column >= n) column = n - 1;
  return u_coin < prob_[column] ? column : alias_[column];
}

AliasTable build_alias_table(std::span<const double> dist) { return AliasTable(dist); }

double WalkCorpus::mean_length() const {
  if (walks.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& w : walks) total += w.size();
  return static_cast<double>(total) / static_cast<double>(walks.size());
}

std::vector<double> transition_probs(const Graph& g, const WalkConfig& cfg, std::optional<NodeId> prev, NodeId u) {
  switch (cfg.strategy) {
    case WalkStrategy::truncated: return transition_probs_truncated(g, u);
    case WalkStrategy::biased: return transition_probs_biased(g, prev, u, cfg.p, cfg.q);
    case WalkStrategy::degree_weight: return transition_probs_dw(g, u, cfg.dw_alpha);
  }
  return {};
}

WalkSampler::WalkSampler(const Graph& g, const WalkConfig& cfg) : g_(g), cfg_(cfg) {
  cfg_.validate();
  const std::size_t n = g.node_count();
  first_order_.resize(n);
  std::size_t fallbacks = 0;
  for (NodeId u = 0; u < n; ++u) {
    if (g.neighbors(u).empty()) continue;
    std::vector<double> dist;
    switch (cfg_.strategy) {
      case WalkStrategy::truncated: dist = transition_probs_truncated(g, u); break;
      case WalkStrategy::biased: dist = weight_proportional(g, u); break;
      case WalkStrategy::degree_weight: {
        auto [d, fell_back] = dw_distribution(g, u, cfg_.dw_alpha);
        fallbacks += fell_back ? 1 : 0;
        dist = std::move(d);
        break;
      }
    }
    first_order_[u] = AliasTable(dist);
  }
  if (fallbacks > 0) {
    warn("degree-weight walk: " + std::to_string(fallbacks) +
         " node(s) have zero proximity to all neighbors; using uniform transitions there");
  }
}

const AliasTable& WalkSampler::table(std::optional<NodeId> prev, NodeId u) {
  if (cfg_.strategy != WalkStrategy::biased || !prev) return first_order_[u];
  const std::uint64_t key = (static_cast<std::uint64_t>(*prev) << 32) | u;
  auto it = second_order_.find(key);
  if (it == second_order_.end()) {
    auto dist = transition_probs_biased(g_, prev, u, cfg_.p, cfg_.q);
    it = second_order_.emplace(key, AliasTable(dist)).first;
  }
  return it->second;
}

std::optional<NodeId> WalkSampler::step(std::optional<NodeId> prev, NodeId u, Rng& rng) {
  auto nbrs = g_.neighbors(u);
  if (nbrs.empty()) return std::nullopt;
  const AliasTable& t = table(prev, u);
  const double u_column = rng.uniform();
  const double u_coin = rng.uniform();
  return nbrs[t.sample(u_column, u_coin)].id;
}

std::vector<NodeId> WalkSampler::walk(NodeId start, Rng& rng) {
  std::vector<NodeId> out;
  out.reserve(cfg_.walk_length);
  out.push_back(start);
  while (out.size() < cfg_.walk_length) {
    std::optional<NodeId> prev;
    if (out.size() >= 2) prev = out[out.size() - 2];
    auto next = step(prev, out.back(), rng);
    if (!next) break;
    out.push_back(*next);
  }
  return out;
}

WalkCorpus generate_corpus(const Graph& g, const WalkConfig& cfg) {
  WalkSampler sampler(g, cfg);
  const std::size_t n = g.node_count();
  WalkCorpus corpus;
  corpus.walks.reserve(n * cfg.walks_per_node);
  for (NodeId start = 0; start < n; ++start) {
    for (std::size_t rep = 0; rep < cfg.walks_per_node; ++rep) {
      const std::uint64_t walk_index = static_cast<std::uint64_t>(start) * cfg.walks_per_node + rep;
      Rng rng(mix_seed(cfg.seed, walk_index));
      corpus.walks.push_back(sampler.walk(start, rng));
    }
  }
  return corpus;
}

void write_corpus(const WalkCorpus& corpus, const Graph& g, std::ostream& out) {
  for (const auto& walk : corpus.walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (i > 0) out << ' ';
      out << g.original_id(walk[i]);
    }
    out << '\n';
  }
}

void write_corpus(const WalkCorpus& corpus, const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus '" + path.string() + "'");
  write_corpus(corpus, g, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

WalkCorpus read_corpus(const Graph& g, std::istream& in, const std::string& source) {
  WalkCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = split_whitespace(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    std::vector<NodeId> walk;
    walk.reserve(tokens.size());
    for (auto token : tokens) {
      auto id = g.find(std::string(token));
      if (!id) throw ParseError(source, line_no, "unknown node id '" + std::string(token) + "'");
      walk.push_back(*id);
    }
    corpus.walks.push_back(std::move(walk));
  }
  return corpus;
}

WalkCorpus read_corpus(const Graph& g, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  return read_corpus(g, in, path.string());
}

}  // namespace nedp
