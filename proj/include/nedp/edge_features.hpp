#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "nedp/embedding.hpp"

namespace nedp {

enum class EdgeOperator { cascade, average, hadamard, l1, l2 };

inline constexpr std::array<EdgeOperator, 5> all_edge_operators{
    EdgeOperator::cascade, EdgeOperator::average, EdgeOperator::hadamard, EdgeOperator::l1, EdgeOperator::l2};

std::string_view to_string(EdgeOperator op);
EdgeOperator parse_edge_operator(std::string_view name);

/// Parses "all" or a comma-separated list of operator names (duplicates dropped).
std::vector<EdgeOperator> parse_edge_operators(std::string_view names);

std::size_t edge_feature_dim(EdgeOperator op, std::size_t dim) noexcept;

/// Edge vector of (u, v); the edge need not exist.
Vector edge_features(const EmbeddingMatrix& emb, NodeId u, NodeId v, EdgeOperator op);

/// One row per pair. Cascade pairs are put in canonical order (smaller id first).
Matrix edge_feature_matrix(const EmbeddingMatrix& emb, std::span<const NodePair> pairs, EdgeOperator op);

}  // namespace nedp
