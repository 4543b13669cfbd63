#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nedp/graph.hpp"

namespace nedp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// |V| x d table of node representations; row i belongs to node i.
struct EmbeddingMatrix {
  Matrix values;

  std::size_t node_count() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values.cols()); }

  /// Uniform entries in [-0.5/d, 0.5/d]. Warns when d >= node_count.
  static EmbeddingMatrix random(std::size_t node_count, std::size_t dim, std::uint64_t seed);
};

/// Gathers the rows of `walk` as columns of a d x T matrix.
Matrix embed_lookup(const EmbeddingMatrix& emb, std::span<const NodeId> walk);

/// Adjoint of embed_lookup: adds column t of `input_grads` to row walk[t] of `emb_grads`.
void embed_scatter_add(const Matrix& input_grads, std::span<const NodeId> walk, Matrix& emb_grads);

struct LoadedEmbeddings {
  std::vector<std::string> ids;
  EmbeddingMatrix embedding;
};

/// Text format: first line "|V| d", then "original-id v1 ... vd" per node.
void write_embeddings(const EmbeddingMatrix& emb, std::span<const std::string> ids, std::ostream& out);
void write_embeddings(const EmbeddingMatrix& emb, std::span<const std::string> ids, const std::filesystem::path& path);
LoadedEmbeddings read_embeddings(std::istream& in, const std::string& source = "<stream>");
LoadedEmbeddings read_embeddings(const std::filesystem::path& path);

/// Reorders loaded rows to follow `g`'s dense ids. Every node of `g` must be present.
EmbeddingMatrix align_embeddings(const LoadedEmbeddings& loaded, const Graph& g);

}  // namespace nedp
