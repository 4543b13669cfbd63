#include "nedp/edge_features.hpp"

#include <algorithm>
#include <string>

#include "nedp/error.hpp"

namespace nedp {

std::string_view to_string(EdgeOperator op) {
  switch (op) {
    case EdgeOperator::cascade: return "cascade";
    case EdgeOperator::average: return "average";
    case EdgeOperator::hadamard: return "hadamard";
    case EdgeOperator::l1: return "l1";
    case EdgeOperator::l2: return "l2";
  }
  return "?";
}

EdgeOperator parse_edge_operator(std::string_view name) {
  for (EdgeOperator op : all_edge_operators)
    if (to_string(op) == name) return op;
  throw ValidationError("unknown edge operator '" + std::string(name) +
                        "' (cascade, average, hadamard, l1, l2, all)");
}

std::vector<EdgeOperator> parse_edge_operators(std::string_view names) {
  if (names == "all") return {all_edge_operators.begin(), all_edge_operators.end()};
  std::vector<EdgeOperator> ops;
  while (true) {
    const auto comma = names.find(',');
    const EdgeOperator op = parse_edge_operator(names.substr(0, comma));
    if (std::find(ops.begin(), ops.end(), op) == ops.end()) ops.push_back(op);
    if (comma == std::string_view::npos) break;
    names.remove_prefix(comma + 1);
  }
  return ops;
}

std::size_t edge_feature_dim(EdgeOperator op, std::size_t dim) noexcept {
  return op == EdgeOperator::cascade ? 2 * dim : dim;
}

Vector edge_features(const EmbeddingMatrix& emb, NodeId u, NodeId v, EdgeOperator op) {
  if (u >= emb.node_count() || v >= emb.node_count()) {
    throw ValidationError("edge_features: node id outside the " + std::to_string(emb.node_count()) +
                          "-row embedding");
  }
  const auto a = emb.values.row(u).transpose();
  const auto b = emb.values.row(v).transpose();
  switch (op) {
    case EdgeOperator::cascade: {
      Vector out(2 * a.size());
      out << a, b;
      return out;
    }
    case EdgeOperator::average: return 0.5 * (a + b);
    case EdgeOperator::hadamard: return a.cwiseProduct(b);
    case EdgeOperator::l1: return (a - b).cwiseAbs();
    case EdgeOperator::l2: return (a - b).array().square().matrix();
  }
  throw ValidationError("edge_features: invalid operator");
}

Matrix edge_feature_matrix(const EmbeddingMatrix& emb, std::span<const NodePair> pairs, EdgeOperator op) {
  Matrix out(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(edge_feature_dim(op, emb.dim())));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const NodePair p = NodePair::canonical(pairs[k].u, pairs[k].v);
    out.row(static_cast<Eigen::Index>(k)) = edge_features(emb, p.u, p.v, op).transpose();
  }
  return out;
}

}  // namespace nedp
