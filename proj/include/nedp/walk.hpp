#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nedp/graph.hpp"

namespace nedp {

enum class WalkStrategy { truncated, biased, degree_weight };

std::string_view to_string(WalkStrategy s);
WalkStrategy parse_walk_strategy(std::string_view name);

struct WalkConfig {
  WalkStrategy strategy = WalkStrategy::degree_weight;
  std::size_t walks_per_node = 10;  // gamma
  std::size_t walk_length = 40;     // nodes per walk, l >= 2
  double dw_alpha = 1.0;            // smoothing constant of the degree-weight proximity
  double p = 1.0;                   // return parameter (biased strategy)
  double q = 1.0;                   // in-out parameter (biased strategy)
  std::uint64_t seed = 1;

  void validate() const;
};

/// Uniform next-node distribution over N(u); empty for a dead end.
std::vector<double> transition_probs_truncated(const Graph& g, NodeId u);

/// Second-order (node2vec) distribution over N(u) given the previous node.
/// Unnormalized mass is w_ux / p when x == prev, w_ux when x is adjacent to
/// prev, and w_ux / q otherwise. Without a previous node the distribution is
/// weight-proportional.
std::vector<double> transition_probs_biased(const Graph& g, std::optional<NodeId> prev, NodeId u, double p, double q);

/// Degree-weight proximity s_ij = w_ij * min(d_i, d_j) / (max(d_i, d_j) + alpha).
/// Throws ValidationError when (i, j) is not an edge.
double dw_proximity(const Graph& g, NodeId i, NodeId j, double alpha);

/// First-order distribution over N(u) proportional to dw_proximity(u, x).
/// Falls back to the uniform distribution (with a warning) when every
/// proximity is zero.
std::vector<double> transition_probs_dw(const Graph& g, NodeId u, double alpha);

/// Vose alias table: O(n) construction, O(1) draws.
class AliasTable {
 public:
  AliasTable() = default;

  /// `dist` must be non-negative and sum to 1 within 1e-9.
  explicit AliasTable(std::span<const double> dist);

  std::size_t size() const noexcept { return prob_.size(); }
  bool empty() const noexcept { return prob_.empty(); }
  std::span<const double> prob() const noexcept { return prob_; }
  std::span<const std::uint32_t> alias() const noexcept { return alias_; }

  /// Draws an index from two uniforms in [0, 1).
  std::size_t sample(double u_column, double u_coin) const;

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

AliasTable build_alias_table(std::span<const double> dist);

struct WalkCorpus {
  std::vector<std::vector<NodeId>> walks;

  std::size_t size() const noexcept { return walks.size(); }
  double mean_length() const;
};

/// Generates walks_per_node walks from every node, ordered by (node, repetition).
/// Each walk is seeded independently from (seed, walk index), so the corpus is
/// reproducible regardless of scheduling.
WalkCorpus generate_corpus(const Graph& g, const WalkConfig& cfg);

class Rng;

/// Alias tables for one graph and walk configuration. First-order strategies
/// are precomputed per node; biased second-order tables are built on first use
/// and cached, so an instance must not be shared between threads.
class WalkSampler {
 public:
  WalkSampler(const Graph& g, const WalkConfig& cfg);

  /// One transition from u; nullopt on a dead end.
  std::optional<NodeId> step(std::optional<NodeId> prev, NodeId u, Rng& rng);

  /// Walk of at most walk_length nodes, shorter only at a dead end.
  std::vector<NodeId> walk(NodeId start, Rng& rng);

 private:
  const AliasTable& table(std::optional<NodeId> prev, NodeId u);

  const Graph& g_;
  WalkConfig cfg_;
  std::vector<AliasTable> first_order_;
  std::unordered_map<std::uint64_t, AliasTable> second_order_;
};

/// Distribution used by `cfg.strategy` at u.
std::vector<double> transition_probs(const Graph& g, const WalkConfig& cfg, std::optional<NodeId> prev, NodeId u);

/// One walk per line, space-separated original node ids.
void write_corpus(const WalkCorpus& corpus, const Graph& g, std::ostream& out);
void write_corpus(const WalkCorpus& corpus, const Graph& g, const std::filesystem::path& path);

/// Reads a corpus written with `g`'s id table. Unknown ids are a ParseError.
WalkCorpus read_corpus(const Graph& g, std::istream& in, const std::string& source = "<stream>");
WalkCorpus read_corpus(const Graph& g, const std::filesystem::path& path);

}  // namespace nedp
