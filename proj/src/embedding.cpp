#include "nedp/embedding.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "nedp/error.hpp"
#include "nedp/format.hpp"
#include "nedp/log.hpp"
#include "nedp/rng.hpp"

namespace nedp {

EmbeddingMatrix EmbeddingMatrix::random(std::size_t node_count, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ValidationError("embedding: dimension must be positive");
  if (dim >= node_count && node_count > 0) {
    warn("embedding dimension " + std::to_string(dim) + " is not smaller than the node count " +
         std::to_string(node_count));
  }
  Rng rng(mix_seed(seed, 0xE3));
  const double bound = 0.5 / static_cast<double>(dim);
  EmbeddingMatrix emb;
  emb.values.resize(static_cast<Eigen::Index>(node_count), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < emb.values.rows(); ++i)
    for (Eigen::Index j = 0; j < emb.values.cols(); ++j) emb.values(i, j) = rng.uniform(-bound, bound);
  return emb;
}

Matrix embed_lookup(const EmbeddingMatrix& emb, std::span<const NodeId> walk) {
  Matrix out(emb.values.cols(), static_cast<Eigen::Index>(walk.size()));
  for (std::size_t t = 0; t < walk.size(); ++t) {
    if (walk[t] >= emb.node_count()) {
      throw ValidationError("embed_lookup: node " + std::to_string(walk[t]) + " outside the " +
                            std::to_string(emb.node_count()) + "-row embedding");
    }
    out.col(static_cast<Eigen::Index>(t)) = emb.values.row(walk[t]).transpose();
  }
  return out;
}

void embed_scatter_add(const Matrix& input_grads, std::span<const NodeId> walk, Matrix& emb_grads) {
  if (static_cast<std::size_t>(input_grads.cols()) != walk.size() || input_grads.rows() != emb_grads.cols()) {
    throw ValidationError("embed_scatter_add: gradient shape does not match the walk");
  }
  for (std::size_t t = 0; t < walk.size(); ++t) {
    emb_grads.row(walk[t]) += input_grads.col(static_cast<Eigen::Index>(t)).transpose();
  }
}

void write_embeddings(const EmbeddingMatrix& emb, std::span<const std::string> ids, std::ostream& out) {
  if (ids.size() != emb.node_count()) throw ValidationError("write_embeddings: id count does not match rows");
  out << emb.node_count() << ' ' << emb.dim() << '\n';
  for (std::size_t i = 0; i < emb.node_count(); ++i) {
    out << ids[i];
    for (std::size_t j = 0; j < emb.dim(); ++j) out << ' ' << format_double(emb.values(i, j));
    out << '\n';
  }
}

void write_embeddings(const EmbeddingMatrix& emb, std::span<const std::string> ids, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embeddings '" + path.string() + "'");
  write_embeddings(emb, ids, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

LoadedEmbeddings read_embeddings(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      auto tokens = split_whitespace(line);
      if (!tokens.empty() && tokens.front().front() != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(source, line_no, "missing '|V| d' header");
  auto header = split_whitespace(line);
  std::optional<std::size_t> rows, cols;
  if (header.size() == 2) {
    rows = parse_int<std::size_t>(header[0]);
    cols = parse_int<std::size_t>(header[1]);
  }
  if (!rows || !cols) throw ParseError(source, line_no, "header must be '|V| d'");

  LoadedEmbeddings out;
  out.ids.reserve(*rows);
  out.embedding.values.resize(static_cast<Eigen::Index>(*rows), static_cast<Eigen::Index>(*cols));
  for (std::size_t i = 0; i < *rows; ++i) {
    if (!next_line()) throw ParseError(source, line_no, "expected " + std::to_string(*rows) + " embedding rows");
    auto tokens = split_whitespace(line);
    if (tokens.size() != *cols + 1) {
      throw ParseError(source, line_no, "expected id plus " + std::to_string(*cols) + " values");
    }
    out.ids.emplace_back(tokens[0]);
    for (std::size_t j = 0; j < *cols; ++j) {
      auto v = parse_double(tokens[j + 1]);
      if (!v) throw ParseError(source, line_no, "invalid value '" + std::string(tokens[j + 1]) + "'");
      out.embedding.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
    }
  }
  return out;
}

LoadedEmbeddings read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings '" + path.string() + "'");
  return read_embeddings(in, path.string());
}

EmbeddingMatrix align_embeddings(const LoadedEmbeddings& loaded, const Graph& g) {
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < loaded.ids.size(); ++i) row_of.emplace(loaded.ids[i], i);
  EmbeddingMatrix out;
  out.values.resize(static_cast<Eigen::Index>(g.node_count()), loaded.embedding.values.cols());
  for (NodeId u = 0; u < g.node_count(); ++u) {
    auto it = row_of.find(g.original_id(u));
    if (it == row_of.end()) throw ValidationError("embeddings: no row for node '" + g.original_id(u) + "'");
    out.values.row(u) = loaded.embedding.values.row(static_cast<Eigen::Index>(it->second));
  }
  return out;
}

}  // namespace nedp
