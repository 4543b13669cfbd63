#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nedp/edge_features.hpp"
#include "nedp/embedding.hpp"
#include "nedp/graph.hpp"

namespace nedp {

// ---------------------------------------------------------------------------
// Labels

/// Per-node label lists. Labels are dense integers 0..class_count-1; an empty
/// list means the node is unlabeled.
struct LabelSet {
  std::vector<std::vector<int>> labels;
  std::vector<std::string> class_names;

  std::size_t node_count() const noexcept { return labels.size(); }
  std::size_t class_count() const noexcept { return class_names.size(); }
  bool multi_label() const;
  std::size_t labeled_count() const;

  /// One label per node (for tests and synthetic data); names are the decimal values.
  static LabelSet from_single(std::span<const int> labels);
};

/// Text format: "node-id label [label ...]" per line; '#' comments. Node ids
/// are resolved through the graph's original identifiers and label tokens are
/// mapped to dense integers in order of first appearance. Repeated lines for a
/// node append labels.
LabelSet parse_labels(std::istream& in, const Graph& g, const std::string& source = "<stream>");
LabelSet load_labels(const std::filesystem::path& path, const Graph& g);

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  std::string setting;  // e.g. "train_ratio=0.5" or "op=hadamard"; may be empty
  std::string metric;
  double value = 0.0;
};

struct EvalReport {
  std::string task;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<ReportRow> rows;

  void add(std::string setting, std::string metric, double value);
  void set_config(const std::string& key, const std::string& value);
  /// First row with this setting and metric; throws if absent.
  double value(std::string_view metric, std::string_view setting = "") const;
};

/// "# key=value" lines, then "task,setting,metric,value" rows.
void write_report_csv(const EvalReport& report, std::ostream& out);
/// Aligned plain-text table preceded by the configuration.
void write_report_text(const EvalReport& report, std::ostream& out);

// ---------------------------------------------------------------------------
// Clustering

struct KMeansOptions {
  int restarts = 20;
  int max_iterations = 300;
};

struct KMeansResult {
  std::vector<int> assignment;
  Matrix centers;  // k x d
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding; the restart with the lowest inertia wins.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, KMeansOptions options = {});

/// Mutual information over the arithmetic mean of the two entropies (natural
/// log). Returns 0 when both entropies vanish.
double nmi(std::span<const int> a, std::span<const int> b);

// ---------------------------------------------------------------------------
// Logistic regression

struct LogRegConfig {
  double l2 = 1.0;            // penalty on the weights (not the intercept), in standardized units
  int max_iterations = 100;   // Newton iterations
  double tolerance = 1e-6;    // gradient-norm stopping threshold
};

/// Binary logistic regression on standardized features, fitted with damped
/// Newton steps on  sum_i logloss_i + l2/2 * ||w||^2.
class BinaryLogReg {
 public:
  static BinaryLogReg fit(const Matrix& features, std::span<const int> targets, const LogRegConfig& cfg = {});

  /// P(y = 1 | x) for every row.
  Vector predict_proba(const Matrix& features) const;
  double decision(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  const Vector& weights() const noexcept { return weights_; }  // in standardized units
  double intercept() const noexcept { return intercept_; }
  bool constant() const noexcept { return constant_; }
  int iterations() const noexcept { return iterations_; }

 private:
  Vector mean_;
  Vector inv_scale_;
  Vector weights_;
  double intercept_ = 0.0;
  bool constant_ = false;
  int iterations_ = 0;
};

/// One binary model per class.
class OneVsRest {
 public:
  /// `labels[i]` lists the classes of row i; classes without any positive row are
  /// not fitted and score -infinity.
  static OneVsRest fit(const Matrix& features, const std::vector<std::vector<int>>& labels, std::size_t class_count,
                       const LogRegConfig& cfg = {});

  /// n x class_count matrix of per-class probabilities.
  Matrix predict_proba(const Matrix& features) const;
  std::size_t class_count() const noexcept { return models_.size(); }
  bool fitted(std::size_t c) const noexcept { return fitted_[c]; }

 private:
  std::vector<BinaryLogReg> models_;
  std::vector<bool> fitted_;
};

// ---------------------------------------------------------------------------
// Classification

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
};

/// Micro- and macro-F1 of predicted label sets. Macro averages the per-class F1
/// over `classes` that occur in the truth or the predictions; micro pools
/// counts over every class, including ones outside `classes`.
F1Scores f1_scores(const std::vector<std::vector<int>>& truth, const std::vector<std::vector<int>>& predicted,
                   std::span<const int> classes);

struct ClassifyOptions {
  LogRegConfig logreg;
};

/// Splits labeled nodes at `train_ratio`, fits one-vs-rest logistic regression on
/// the embedding rows and reports on the held-out nodes. Single-label data:
/// accuracy, micro_f1, macro_f1 of the argmax class. Multi-label data: each
/// node gets its k highest-scoring classes, k = its true label count, and
/// micro_f1, macro_f1 are reported. Classes absent from the training split are
/// dropped with a warning and excluded from the macro average.
EvalReport classify_eval(const EmbeddingMatrix& emb, const LabelSet& labels, std::span<const double> train_ratios,
                         std::uint64_t seed, const ClassifyOptions& options = {});

/// k-means on the labeled rows (first label per node) and NMI against the
/// labels. k = 0 means the number of classes.
EvalReport cluster_eval(const EmbeddingMatrix& emb, const LabelSet& labels, std::size_t k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reconstruction

enum class Similarity { inner_product, cosine };
std::string_view to_string(Similarity s);
Similarity parse_similarity(std::string_view name);

struct ReconstructionOptions {
  Similarity similarity = Similarity::inner_product;
  std::size_t max_nodes = 5000;  // larger graphs are evaluated on a seeded node sample
  std::uint64_t seed = 1;
};

struct ReconstructionResult {
  std::vector<std::pair<std::size_t, double>> precision_at_k;
  double map = 0.0;
  std::size_t edge_count = 0;       // true pairs among the candidates
  std::size_t candidate_count = 0;  // unordered pairs ranked
  std::size_t evaluated_nodes = 0;
};

/// Ranks unordered node pairs (i < j) by similarity. precision@K is the share
/// of true edges among the K best pairs; MAP is the mean over nodes with at
/// least one neighbor of the average precision of that node's ranking of all
/// other nodes. Ties keep the lower pair index first. K = 0 in `k_list` stands
/// for the number of true edges.
ReconstructionResult reconstruction_eval(const EmbeddingMatrix& emb, const Graph& g, std::span<const std::size_t> k_list,
                                         const ReconstructionOptions& options = {});

// ---------------------------------------------------------------------------
// Ranking and link prediction

struct RankMetrics {
  double auc = 0.0;
  double ap = 0.0;
};

/// AUC as the Mann-Whitney statistic with midranks for ties; AP as the sum of
/// recall increments times precision at each distinct score threshold.
RankMetrics rank_metrics(std::span<const double> scores, std::span<const int> labels);

/// Average precision of one ranked list: `relevant[r]` says whether rank r
/// (0-based, best first) is a hit; divided by `total_relevant`.
double average_precision_ranked(std::span<const char> relevant, std::size_t total_relevant);

struct LinkPredictionResult {
  EdgeOperator op = EdgeOperator::hadamard;
  RankMetrics metrics;
  std::size_t train_pairs = 0;
  std::size_t test_pairs = 0;
};

/// Featurizes every training edge plus as many sampled training non-edges
/// (disjoint from the test pairs), fits logistic regression and scores the
/// split's test positives and negatives.
LinkPredictionResult link_prediction_eval(const EmbeddingMatrix& emb, const EdgeSplit& split, EdgeOperator op,
                                          std::uint64_t seed, const LogRegConfig& cfg = {});

}  // namespace nedp
