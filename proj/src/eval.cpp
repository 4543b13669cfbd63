#include "nedp/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "nedp/error.hpp"
#include "nedp/format.hpp"
#include "nedp/log.hpp"
#include "nedp/rng.hpp"

namespace nedp {

// ---------------------------------------------------------------------------
// Labels

bool LabelSet::multi_label() const {
  return std::any_of(labels.begin(), labels.end(), [](const auto& l) { return l.size() > 1; });
}

std::size_t LabelSet::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](const auto& l) { return !l.empty(); }));
}

LabelSet LabelSet::from_single(std::span<const int> values) {
  LabelSet set;
  int max_label = -1;
  for (int v : values) {
    if (v < 0) throw ValidationError("labels must be non-negative");
    max_label = std::max(max_label, v);
  }
  for (int c = 0; c <= max_label; ++c) set.class_names.push_back(std::to_string(c));
  for (int v : values) set.labels.push_back({v});
  return set;
}

LabelSet parse_labels(std::istream& in, const Graph& g, const std::string& source) {
  LabelSet set;
  set.labels.resize(g.node_count());
  std::unordered_map<std::string, int> class_of;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_whitespace(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.size() < 2) throw ParseError(source, line_no, "expected 'node-id label [label ...]'");
    const auto node = g.find(std::string(tokens[0]));
    if (!node) throw ParseError(source, line_no, "node '" + std::string(tokens[0]) + "' is not in the graph");
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const std::string name(tokens[k]);
      auto [it, inserted] = class_of.emplace(name, static_cast<int>(set.class_names.size()));
      if (inserted) set.class_names.push_back(name);
      auto& list = set.labels[*node];
      if (std::find(list.begin(), list.end(), it->second) == list.end()) list.push_back(it->second);
    }
  }
  if (set.labeled_count() == 0) throw ValidationError(source + ": no labeled nodes");
  return set;
}

LabelSet load_labels(const std::filesystem::path& path, const Graph& g) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels '" + path.string() + "'");
  return parse_labels(in, g, path.string());
}

// ---------------------------------------------------------------------------
// Reports

void EvalReport::add(std::string setting, std::string metric, double value) {
  if (!std::isfinite(value)) throw ValidationError("report: metric '" + metric + "' is not finite");
  rows.push_back({std::move(setting), std::move(metric), value});
}

void EvalReport::set_config(const std::string& key, const std::string& value) {
  for (auto& [k, v] : config) {
    if (k == key) {
      v = value;
      return;
    }
  }
  config.emplace_back(key, value);
}

double EvalReport::value(std::string_view metric, std::string_view setting) const {
  for (const auto& row : rows)
    if (row.metric == metric && row.setting == setting) return row.value;
  throw ValidationError("report has no metric '" + std::string(metric) + "' for '" + std::string(setting) + "'");
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "# task=" << report.task << '\n';
  for (const auto& [k, v] : report.config) out << "# " << k << '=' << v << '\n';
  out << "task,setting,metric,value\n";
  for (const auto& row : report.rows) {
    out << report.task << ',' << row.setting << ',' << row.metric << ',' << format_double(row.value) << '\n';
  }
}

void write_report_text(const EvalReport& report, std::ostream& out) {
  out << "task: " << report.task << '\n';
  for (const auto& [k, v] : report.config) out << "  " << k << " = " << v << '\n';
  std::size_t ws = std::string_view("setting").size();
  std::size_t wm = std::string_view("metric").size();
  for (const auto& row : report.rows) {
    ws = std::max(ws, row.setting.size());
    wm = std::max(wm, row.metric.size());
  }
  out << '\n' << std::left << std::setw(static_cast<int>(ws)) << "setting" << "  " << std::setw(static_cast<int>(wm))
      << "metric" << "  value\n";
  out << std::string(ws, '-') << "  " << std::string(wm, '-') << "  " << std::string(8, '-') << '\n';
  for (const auto& row : report.rows) {
    std::ostringstream value;
    value << std::fixed << std::setprecision(4) << row.value;
    out << std::setw(static_cast<int>(ws)) << row.setting << "  " << std::setw(static_cast<int>(wm)) << row.metric
        << "  " << value.str() << '\n';
  }
  out << std::right;
}

// ---------------------------------------------------------------------------
// Classification

F1Scores f1_scores(const std::vector<std::vector<int>>& truth, const std::vector<std::vector<int>>& predicted,
                   std::span<const int> classes) {
  if (truth.size() != predicted.size()) throw ValidationError("f1: truth and prediction counts differ");
  std::unordered_map<int, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::set<int> t(truth[i].begin(), truth[i].end());
    const std::set<int> p(predicted[i].begin(), predicted[i].end());
    for (int c : p) ++counts[c][t.count(c) ? 0 : 1];
    for (int c : t)
      if (!p.count(c)) ++counts[c][2];
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [c, v] : counts) {
    tp += v[0];
    fp += v[1];
    fn += v[2];
  }
  F1Scores out;
  out.micro = tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  double sum = 0.0;
  std::size_t used = 0;
  for (int c : classes) {
    auto it = counts.find(c);
    if (it == counts.end()) continue;
    const auto& v = it->second;
    sum += v[0] == 0 ? 0.0 : 2.0 * static_cast<double>(v[0]) / static_cast<double>(2 * v[0] + v[1] + v[2]);
    ++used;
  }
  out.macro = used == 0 ? 0.0 : sum / static_cast<double>(used);
  return out;
}

namespace {

Matrix gather_rows(const Matrix& m, std::span<const NodeId> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

std::string join_doubles(std::span<const double> values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? "," : "") + format_double(values[i]);
  return s;
}

}  // namespace

EvalReport classify_eval(const EmbeddingMatrix& emb, const LabelSet& labels, std::span<const double> train_ratios,
                         std::uint64_t seed, const ClassifyOptions& options) {
  if (labels.node_count() != emb.node_count()) throw ValidationError("classify: labels and embedding differ in size");
  if (train_ratios.empty()) throw ValidationError("classify: no train ratio given");
  std::vector<NodeId> labeled;
  for (NodeId u = 0; u < labels.node_count(); ++u)
    if (!labels.labels[u].empty()) labeled.push_back(u);
  if (labeled.size() < 2) throw ValidationError("classify: need at least two labeled nodes");

  const bool multi = labels.multi_label();
  EvalReport report;
  report.task = "classify";
  report.set_config("seed", std::to_string(seed));
  report.set_config("train_ratios", join_doubles(train_ratios));
  report.set_config("labeled_nodes", std::to_string(labeled.size()));
  report.set_config("classes", std::to_string(labels.class_count()));
  report.set_config("multi_label", multi ? "true" : "false");
  report.set_config("l2", format_double(options.logreg.l2));

  for (std::size_t r = 0; r < train_ratios.size(); ++r) {
    const double ratio = train_ratios[r];
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("classify: train ratio must lie in (0, 1)");
    std::vector<NodeId> order = labeled;
    Rng rng(mix_seed(seed, 0xC1A5 + r));
    rng.shuffle(order.begin(), order.end());
    auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(order.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
    std::span<const NodeId> train(order.data(), n_train);
    std::span<const NodeId> test(order.data() + n_train, order.size() - n_train);

    std::vector<std::vector<int>> train_labels, test_labels;
    std::set<int> train_classes, test_classes;
    for (NodeId u : train) {
      train_labels.push_back(labels.labels[u]);
      train_classes.insert(labels.labels[u].begin(), labels.labels[u].end());
    }
    for (NodeId u : test) {
      test_labels.push_back(labels.labels[u]);
      test_classes.insert(labels.labels[u].begin(), labels.labels[u].end());
    }
    std::vector<std::string> dropped;
    for (int c : test_classes)
      if (!train_classes.count(c)) dropped.push_back(labels.class_names[static_cast<std::size_t>(c)]);
    if (!dropped.empty()) {
      std::string names;
      for (const auto& d : dropped) names += (names.empty() ? "" : ", ") + d;
      warn("classify: classes absent from the training split are dropped: " + names);
    }

    const auto ovr = OneVsRest::fit(gather_rows(emb.values, train), train_labels, labels.class_count(), options.logreg);
    const Matrix proba = ovr.predict_proba(gather_rows(emb.values, test));

    std::vector<std::vector<int>> predicted(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      std::vector<int> ranked;
      for (int c : train_classes) ranked.push_back(c);
      const auto row = static_cast<Eigen::Index>(i);
      std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) { return proba(row, a) > proba(row, b); });
      const std::size_t k = multi ? test_labels[i].size() : 1;
      ranked.resize(std::min(k, ranked.size()));
      predicted[i] = std::move(ranked);
    }

    const std::vector<int> classes(train_classes.begin(), train_classes.end());
    const F1Scores f1 = f1_scores(test_labels, predicted, classes);
    const std::string setting = "train_ratio=" + format_double(ratio);
    if (!multi) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < test.size(); ++i) correct += predicted[i].front() == test_labels[i].front();
      report.add(setting, "accuracy", static_cast<double>(correct) / static_cast<double>(test.size()));
    }
    report.add(setting, "micro_f1", f1.micro);
    report.add(setting, "macro_f1", f1.macro);
  }
  return report;
}

EvalReport cluster_eval(const EmbeddingMatrix& emb, const LabelSet& labels, std::size_t k, std::uint64_t seed) {
  if (labels.node_count() != emb.node_count()) throw ValidationError("cluster: labels and embedding differ in size");
  std::vector<NodeId> labeled;
  std::vector<int> truth;
  for (NodeId u = 0; u < labels.node_count(); ++u) {
    if (labels.labels[u].empty()) continue;
    labeled.push_back(u);
    truth.push_back(labels.labels[u].front());
  }
  if (labeled.empty()) throw ValidationError("cluster: no labeled nodes");
  if (labels.multi_label()) warn("cluster: multi-label data, using the first label of each node");
  if (k == 0) k = std::set<int>(truth.begin(), truth.end()).size();
  const auto result = kmeans(gather_rows(emb.values, labeled), k, seed);
  EvalReport report;
  report.task = "cluster";
  report.set_config("seed", std::to_string(seed));
  report.set_config("k", std::to_string(k));
  report.set_config("labeled_nodes", std::to_string(labeled.size()));
  report.add("", "nmi", nmi(result.assignment, truth));
  report.add("", "inertia", result.inertia);
  return report;
}

// ---------------------------------------------------------------------------
// Reconstruction

std::string_view to_string(Similarity s) { return s == Similarity::inner_product ? "inner_product" : "cosine"; }

Similarity parse_similarity(std::string_view name) {
  if (name == "inner_product" || name == "inner" || name == "dot") return Similarity::inner_product;
  if (name == "cosine") return Similarity::cosine;
  throw ValidationError("unknown similarity '" + std::string(name) + "' (inner_product, cosine)");
}

double average_precision_ranked(std::span<const char> relevant, std::size_t total_relevant) {
  if (total_relevant == 0) return 0.0;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < relevant.size(); ++r) {
    if (!relevant[r]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return sum / static_cast<double>(total_relevant);
}

ReconstructionResult reconstruction_eval(const EmbeddingMatrix& emb, const Graph& g,
                                         std::span<const std::size_t> k_list, const ReconstructionOptions& options) {
  if (emb.node_count() != g.node_count()) throw ValidationError("reconstruction: embedding and graph differ in size");
  std::vector<NodeId> nodes(g.node_count());
  std::iota(nodes.begin(), nodes.end(), NodeId{0});
  if (nodes.size() > options.max_nodes) {
    Rng rng(mix_seed(options.seed, 0x5EC0));
    rng.shuffle(nodes.begin(), nodes.end());
    nodes.resize(options.max_nodes);
    std::sort(nodes.begin(), nodes.end());
    warn("reconstruction: evaluating a sample of " + std::to_string(nodes.size()) + " of " +
         std::to_string(g.node_count()) + " nodes");
  }
  const std::size_t m = nodes.size();
  if (m < 2) throw ValidationError("reconstruction: need at least two nodes");

  Matrix y = gather_rows(emb.values, nodes);
  if (options.similarity == Similarity::cosine) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double norm = y.row(i).norm();
      if (norm > 0.0) y.row(i) /= norm;
    }
  }
  const Matrix sim = y * y.transpose();
  auto adjacent = [&](std::size_t a, std::size_t b) { return g.has_edge(nodes[a], nodes[b]) || g.has_edge(nodes[b], nodes[a]); };

  struct Candidate {
    double score;
    std::uint32_t i, j;
  };
  std::vector<Candidate> pairs;
  pairs.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      pairs.push_back({sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), static_cast<std::uint32_t>(i),
                       static_cast<std::uint32_t>(j)});
  std::sort(pairs.begin(), pairs.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });

  ReconstructionResult result;
  result.candidate_count = pairs.size();
  result.evaluated_nodes = m;
  std::vector<std::size_t> hits_prefix(pairs.size() + 1, 0);
  for (std::size_t r = 0; r < pairs.size(); ++r) hits_prefix[r + 1] = hits_prefix[r] + adjacent(pairs[r].i, pairs[r].j);
  result.edge_count = hits_prefix.back();

  for (std::size_t k : k_list) {
    const std::size_t kk = k == 0 ? result.edge_count : k;
    if (kk == 0) throw ValidationError("reconstruction: K resolves to 0 (the graph has no edges)");
    if (kk > pairs.size()) {
      throw ValidationError("reconstruction: K = " + std::to_string(kk) + " exceeds the " +
                            std::to_string(pairs.size()) + " candidate pairs");
    }
    result.precision_at_k.emplace_back(kk, static_cast<double>(hits_prefix[kk]) / static_cast<double>(kk));
  }

  double ap_sum = 0.0;
  std::size_t ap_nodes = 0;
  std::vector<std::size_t> others;
  std::vector<char> relevant;
  for (std::size_t i = 0; i < m; ++i) {
    others.clear();
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) others.push_back(j);
    const auto row = static_cast<Eigen::Index>(i);
    std::stable_sort(others.begin(), others.end(), [&](std::size_t a, std::size_t b) {
      return sim(row, static_cast<Eigen::Index>(a)) > sim(row, static_cast<Eigen::Index>(b));
    });
    relevant.assign(others.size(), 0);
    std::size_t total = 0;
    for (std::size_t r = 0; r < others.size(); ++r) {
      relevant[r] = adjacent(i, others[r]);
      total += static_cast<std::size_t>(relevant[r]);
    }
    if (total == 0) continue;
    ap_sum += average_precision_ranked(relevant, total);
    ++ap_nodes;
  }
  result.map = ap_nodes == 0 ? 0.0 : ap_sum / static_cast<double>(ap_nodes);
  return result;
}

// ---------------------------------------------------------------------------
// Ranking

RankMetrics rank_metrics(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ValidationError("rank metrics: scores and labels differ in length");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw ValidationError("rank metrics: labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw ValidationError("rank metrics: non-finite score");
    pos += static_cast<std::size_t>(labels[i]);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw ValidationError("rank metrics: need at least one positive and one negative");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks, ascending.
  double rank_sum = 0.0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) ++end;
    const double midrank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k)
      if (labels[order[k]]) rank_sum += midrank;
    start = end;
  }
  const double p = static_cast<double>(pos);
  const double n = static_cast<double>(neg);
  RankMetrics out;
  out.auc = (rank_sum - p * (p + 1.0) / 2.0) / (p * n);

  // Descending thresholds.
  double tp = 0.0, fp = 0.0, prev_recall = 0.0;
  for (std::size_t end = order.size(); end > 0;) {
    std::size_t start = end;
    while (start > 0 && scores[order[start - 1]] == scores[order[end - 1]]) --start;
    for (std::size_t k = start; k < end; ++k) (labels[order[k]] ? tp : fp) += 1.0;
    const double recall = tp / p;
    out.ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    end = start;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Link prediction

LinkPredictionResult link_prediction_eval(const EmbeddingMatrix& emb, const EdgeSplit& split, EdgeOperator op,
                                          std::uint64_t seed, const LogRegConfig& cfg) {
  const Graph& train = split.train_graph;
  if (emb.node_count() != train.node_count()) throw ValidationError("link prediction: embedding and graph differ in size");
  if (split.test_positive.empty() || split.test_negative.empty()) {
    throw ValidationError("link prediction: the split has no test positives or negatives");
  }

  std::vector<NodePair> positives;
  for (const auto& e : train.edges()) positives.push_back(NodePair::canonical(e.src, e.dst));
  std::vector<NodePair> excluded;
  excluded.insert(excluded.end(), split.test_positive.begin(), split.test_positive.end());
  excluded.insert(excluded.end(), split.test_negative.begin(), split.test_negative.end());

  std::unordered_set<NodePair, NodePairHash> blocked;
  for (const auto& p : excluded) {
    const auto c = NodePair::canonical(p.u, p.v);
    if (c.u != c.v && !train.has_edge(c.u, c.v) && !train.has_edge(c.v, c.u)) blocked.insert(c);
  }
  const std::size_t n = train.node_count();
  const std::size_t population = n * (n - 1) / 2 - adjacent_pair_count(train) - blocked.size();
  std::size_t count = positives.size();
  if (count > population) {
    warn("link prediction: only " + std::to_string(population) + " training non-edges available for " +
         std::to_string(count) + " training edges");
    count = population;
  }
  const auto negatives = sample_negative_edges(train, count, mix_seed(seed, 0x11E6), excluded);

  std::vector<NodePair> train_pairs = positives;
  train_pairs.insert(train_pairs.end(), negatives.begin(), negatives.end());
  std::vector<int> targets(positives.size(), 1);
  targets.resize(train_pairs.size(), 0);
  const auto model = BinaryLogReg::fit(edge_feature_matrix(emb, train_pairs, op), targets, cfg);

  std::vector<NodePair> test_pairs = split.test_positive;
  test_pairs.insert(test_pairs.end(), split.test_negative.begin(), split.test_negative.end());
  std::vector<int> test_labels(split.test_positive.size(), 1);
  test_labels.resize(test_pairs.size(), 0);
  const Matrix features = edge_feature_matrix(emb, test_pairs, op);
  std::vector<double> scores(test_pairs.size());
  for (std::size_t i = 0; i < test_pairs.size(); ++i) scores[i] = model.decision(features.row(static_cast<Eigen::Index>(i)));

  LinkPredictionResult result;
  result.op = op;
  result.metrics = rank_metrics(scores, test_labels);
  result.train_pairs = train_pairs.size();
  result.test_pairs = test_pairs.size();
  return result;
}

}  // namespace nedp
