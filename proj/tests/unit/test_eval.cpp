#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nedp/error.hpp"
#include "nedp/eval.hpp"
#include "nedp/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace nedp;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

// Embedding whose Gram matrix is A + cI: the off-diagonal similarities are
// exactly the adjacency weights.
EmbeddingMatrix adjacency_embedding(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Matrix a = Matrix::Zero(n, n);
  for (NodeId u = 0; u < g.node_count(); ++u)
    for (const auto& nb : g.neighbors(u)) a(u, nb.id) = 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const double shift = std::max(0.0, -es.eigenvalues().minCoeff()) + 1.0;
  const Vector root = (es.eigenvalues().array() + shift).sqrt();
  return EmbeddingMatrix{es.eigenvectors() * root.asDiagonal()};
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("rank metrics hand cases") {
  std::vector<double> s{0.9, 0.8, 0.7, 0.6};
  std::vector<int> y{1, 0, 1, 0};
  auto m = rank_metrics(s, y);
  CHECK(m.auc == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(m.ap == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-15));

  std::vector<int> sorted{1, 1, 0, 0};
  auto perfect = rank_metrics(s, sorted);
  CHECK(perfect.auc == 1.0);
  CHECK(perfect.ap == 1.0);

  std::vector<double> flat(4, 0.3);
  CHECK(rank_metrics(flat, y).auc == 0.5);

  std::vector<int> single{1, 1, 1, 1};
  CHECK_THROWS_AS(rank_metrics(s, single), ValidationError);
}

TEST_CASE("rank metrics match brute force on random instances with ties") {
  Rng rng(123);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.index(199);
    std::vector<double> s(n);
    std::vector<int> y(n);
    const int levels = trial % 2 ? 5 : 1000000;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.index(static_cast<std::size_t>(levels)));
      y[i] = rng.uniform() < 0.4;
    }
    y[0] = 1;
    y[1] = 0;
    auto m = rank_metrics(s, y);
    worst = std::max({worst, std::abs(m.auc - oracle::auc(s, y)), std::abs(m.ap - oracle::average_precision(s, y))});
  }
  CHECK(worst < 1e-9);
}

// ---------------------------------------------------------------------------

TEST_CASE("nmi") {
  std::vector<int> a{0, 0, 1, 1, 2, 2};
  CHECK(nmi(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<int> one(6, 4);
  CHECK(nmi(a, one) == 0.0);
  CHECK(nmi(one, one) == 0.0);

  // 2x2 confusion tables [[50,0],[0,50]] and [[25,25],[25,25]].
  std::vector<int> truth, perfect, mixed;
  for (int i = 0; i < 100; ++i) {
    truth.push_back(i < 50 ? 0 : 1);
    perfect.push_back(i < 50 ? 0 : 1);
    mixed.push_back(i % 2);
  }
  CHECK(nmi(truth, perfect) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(nmi(truth, mixed)) < 1e-12);

  std::vector<int> short_one{0};
  CHECK_THROWS_AS(nmi(a, short_one), ValidationError);
}

TEST_CASE("nmi matches the contingency oracle, symmetric and rename-invariant") {
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.index(200);
    const std::size_t ka = 1 + rng.index(6), kb = 1 + rng.index(6);
    std::vector<int> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<int>(rng.index(ka));
      b[i] = rng.uniform() < 0.5 ? a[i] % static_cast<int>(kb) : static_cast<int>(rng.index(kb));
    }
    const double v = nmi(a, b);
    worst = std::max(worst, std::abs(v - oracle::nmi(a, b)));
    CHECK(std::abs(v - nmi(b, a)) < 1e-12);
    std::vector<int> renamed(n);
    for (std::size_t i = 0; i < n; ++i) renamed[i] = 10 - 3 * a[i];
    CHECK(std::abs(v - nmi(renamed, b)) < 1e-12);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("kmeans") {
  Rng rng(5);
  SUBCASE("two far clouds separate exactly") {
    Matrix pts(40, 2);
    for (int i = 0; i < 40; ++i) {
      const double base = i < 20 ? 0.0 : 100.0;
      pts(i, 0) = base + rng.uniform(-1, 1);
      pts(i, 1) = base + rng.uniform(-1, 1);
    }
    auto r = kmeans(pts, 2, 3);
    for (int i = 1; i < 20; ++i) CHECK(r.assignment[i] == r.assignment[0]);
    for (int i = 21; i < 40; ++i) CHECK(r.assignment[i] == r.assignment[20]);
    CHECK(r.assignment[0] != r.assignment[20]);
  }
  SUBCASE("k = n gives zero inertia") {
    Matrix pts = random_matrix(9, 3, rng);
    auto r = kmeans(pts, 9, 1);
    CHECK(r.inertia == 0.0);
    std::set<int> distinct(r.assignment.begin(), r.assignment.end());
    CHECK(distinct.size() == 9);
  }
  SUBCASE("three tight blobs are recovered") {
    Matrix pts(60, 2);
    std::vector<int> truth(60);
    const double cx[] = {0, 10, 0}, cy[] = {0, 0, 10};
    for (int i = 0; i < 60; ++i) {
      truth[i] = i % 3;
      pts(i, 0) = cx[i % 3] + rng.uniform(-0.5, 0.5);
      pts(i, 1) = cy[i % 3] + rng.uniform(-0.5, 0.5);
    }
    CHECK(nmi(kmeans(pts, 3, 11).assignment, truth) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("determinism and errors") {
    Matrix pts = random_matrix(30, 2, rng);
    CHECK(kmeans(pts, 4, 8).assignment == kmeans(pts, 4, 8).assignment);
    CHECK_THROWS_AS(kmeans(pts, 31, 1), ValidationError);
    CHECK_THROWS_AS(kmeans(pts, 0, 1), ValidationError);
  }
  SUBCASE("duplicate points") {
    Matrix pts = Matrix::Ones(5, 2);
    auto r = kmeans(pts, 3, 2);
    CHECK(r.inertia == 0.0);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("logistic regression") {
  Rng rng(21);
  SUBCASE("separable data is fitted perfectly") {
    Matrix x(80, 3);
    std::vector<int> y(80);
    for (int i = 0; i < 80; ++i) {
      y[i] = i % 2;
      x.row(i) = random_matrix(1, 3, rng);
      x(i, 0) += y[i] ? 2.0 : -2.0;
    }
    auto model = BinaryLogReg::fit(x, y);
    Vector p = model.predict_proba(x);
    for (int i = 0; i < 80; ++i) CHECK((p(i) > 0.5) == (y[i] == 1));
  }
  SUBCASE("constant features recover the prior") {
    Matrix x = Matrix::Constant(40, 2, 3.0);
    std::vector<int> y(40, 0);
    for (int i = 0; i < 10; ++i) y[i] = 1;
    auto model = BinaryLogReg::fit(x, y);
    CHECK((model.predict_proba(x).array() - 0.25).abs().maxCoeff() < 1e-9);
  }
  SUBCASE("duplicated column splits the weight") {
    Matrix x(50, 1);
    std::vector<int> y(50);
    for (int i = 0; i < 50; ++i) {
      x(i, 0) = rng.uniform(-1, 1);
      y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-3 * x(i, 0)));
    }
    Matrix dup(50, 2);
    dup << x, x;
    LogRegConfig cfg;
    cfg.l2 = 2.0;
    auto two = BinaryLogReg::fit(dup, y, cfg);
    CHECK(two.weights()(0) == doctest::Approx(two.weights()(1)).epsilon(1e-9));
    // Two copies with penalty l2 behave like one copy with penalty l2 / 2.
    LogRegConfig half = cfg;
    half.l2 = 1.0;
    auto one = BinaryLogReg::fit(x, y, half);
    CHECK((two.predict_proba(dup) - one.predict_proba(x)).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("single class gives a constant classifier with a warning") {
    testing::WarningCapture capture;
    std::vector<int> y(10, 1);
    auto model = BinaryLogReg::fit(random_matrix(10, 2, rng), y);
    CHECK(model.constant());
    CHECK(capture.messages.size() == 1);
    CHECK((model.predict_proba(random_matrix(3, 2, rng)).array() == 1.0).all());
  }
  SUBCASE("gradient at the optimum vanishes") {
    Matrix x = random_matrix(60, 4, rng);
    std::vector<int> y(60);
    for (int i = 0; i < 60; ++i) y[i] = rng.uniform() < 0.5;
    LogRegConfig cfg;
    cfg.l2 = 0.5;
    auto model = BinaryLogReg::fit(x, y, cfg);
    // Recompute the gradient in standardized units.
    const Vector mean = x.colwise().mean();
    Matrix z = x.rowwise() - mean.transpose();
    for (int j = 0; j < 4; ++j) z.col(j) /= std::sqrt(z.col(j).squaredNorm() / 60.0);
    Vector r = model.predict_proba(x);
    for (int i = 0; i < 60; ++i) r(i) -= y[i];
    const Vector grad = z.transpose() * r + cfg.l2 * model.weights();
    CHECK(grad.norm() < 1e-6);
    CHECK(std::abs(r.sum()) < 1e-6);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("f1 matches the membership oracle") {
  Rng rng(9);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.index(200);
    const int classes = 1 + static_cast<int>(rng.index(6));
    std::vector<std::vector<int>> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < classes; ++c) {
        if (rng.uniform() < 0.3) truth[i].push_back(c);
        if (rng.uniform() < 0.3) pred[i].push_back(c);
      }
    }
    std::vector<int> scored;
    for (int c = 0; c < classes; ++c)
      if (rng.uniform() < 0.8) scored.push_back(c);
    const auto f = f1_scores(truth, pred, scored);
    const auto [micro, macro] = oracle::f1(truth, pred, scored);
    worst = std::max({worst, std::abs(f.micro - micro), std::abs(f.macro - macro)});
  }
  CHECK(worst < 1e-9);
}

namespace {

// Points for class c sit around direction c with the given spread.
EmbeddingMatrix class_points(const std::vector<int>& labels, int classes, double spread, Rng& rng) {
  EmbeddingMatrix emb{Matrix(static_cast<Eigen::Index>(labels.size()), classes)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (int c = 0; c < classes; ++c) emb.values(static_cast<Eigen::Index>(i), c) = rng.uniform(-spread, spread);
    emb.values(static_cast<Eigen::Index>(i), labels[i]) += 3.0;
  }
  return emb;
}

}  // namespace

TEST_CASE("classify_eval") {
  Rng rng(31);
  std::vector<int> y(90);
  for (int i = 0; i < 90; ++i) y[i] = i % 3;
  const auto labels = LabelSet::from_single(y);

  SUBCASE("separated classes are classified perfectly at every ratio") {
    auto emb = class_points(y, 3, 0.5, rng);
    std::vector<double> ratios{0.3, 0.5, 0.9};
    auto report = classify_eval(emb, labels, ratios, 4);
    for (double r : ratios) {
      const std::string s = "train_ratio=" + std::to_string(r).substr(0, 3);
      CHECK(report.value("accuracy", s) == 1.0);
      CHECK(report.value("macro_f1", s) == 1.0);
    }
  }
  SUBCASE("micro-F1 equals accuracy on single-label data") {
    auto emb = class_points(y, 3, 3.0, rng);
    std::vector<double> ratios{0.3, 0.6};
    auto report = classify_eval(emb, labels, ratios, 5);
    for (const char* s : {"train_ratio=0.3", "train_ratio=0.6"}) {
      CHECK(report.value("micro_f1", s) == doctest::Approx(report.value("accuracy", s)).epsilon(1e-12));
    }
  }
  SUBCASE("rescaling the embedding leaves the metrics unchanged") {
    auto emb = class_points(y, 3, 3.0, rng);
    EmbeddingMatrix scaled{emb.values * 10.0};
    std::vector<double> ratios{0.5};
    auto a = classify_eval(emb, labels, ratios, 6);
    auto b = classify_eval(scaled, labels, ratios, 6);
    for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(std::abs(a.rows[i].value - b.rows[i].value) < 1e-6);
  }
  SUBCASE("shuffled labels sit at chance") {
    std::vector<int> two(200);
    for (int i = 0; i < 200; ++i) two[i] = i % 2;
    auto emb = class_points(two, 2, 0.5, rng);
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      std::vector<int> shuffled = two;
      Rng r(seed);
      r.shuffle(shuffled.begin(), shuffled.end());
      std::vector<double> ratio{0.5};
      mean += classify_eval(emb, LabelSet::from_single(shuffled), ratio, seed).value("accuracy", "train_ratio=0.5");
    }
    mean /= 10.0;
    CHECK(std::abs(mean - 0.5) < 0.1);
  }
  SUBCASE("multi-label with a perfect scorer") {
    LabelSet ml;
    ml.class_names = {"a", "b", "c"};
    EmbeddingMatrix emb{Matrix::Zero(60, 3)};
    for (int i = 0; i < 60; ++i) {
      std::vector<int> l{i % 3};
      if (i % 2) l.push_back((i + 1) % 3);
      ml.labels.push_back(l);
      for (int c : l) emb.values(i, c) = 1.0;
    }
    CHECK(ml.multi_label());
    std::vector<double> ratio{0.5};
    auto report = classify_eval(emb, ml, ratio, 2);
    CHECK(report.value("micro_f1", "train_ratio=0.5") == 1.0);
    CHECK(report.value("macro_f1", "train_ratio=0.5") == 1.0);
    CHECK_THROWS_AS(report.value("accuracy", "train_ratio=0.5"), ValidationError);
  }
  SUBCASE("class missing from training is dropped with a warning") {
    std::vector<int> skewed(40, 0);
    for (int i = 0; i < 20; ++i) skewed[i] = 1;
    skewed[39] = 2;  // a single node: lands in exactly one split
    auto emb = class_points(skewed, 3, 0.5, rng);
    bool warned = false;
    for (std::uint64_t seed = 1; seed <= 10 && !warned; ++seed) {
      testing::WarningCapture capture;
      std::vector<double> ratio{0.5};
      classify_eval(emb, LabelSet::from_single(skewed), ratio, seed);
      warned = !capture.messages.empty();
    }
    CHECK(warned);
  }
  SUBCASE("bad ratio") {
    auto emb = class_points(y, 3, 0.5, rng);
    std::vector<double> bad{1.0};
    CHECK_THROWS_AS(classify_eval(emb, labels, bad, 1), ValidationError);
  }
}

TEST_CASE("cluster_eval on separated points") {
  Rng rng(3);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) y[i] = i % 3;
  auto emb = class_points(y, 3, 0.3, rng);
  auto report = cluster_eval(emb, LabelSet::from_single(y), 0, 1);
  CHECK(report.value("nmi") == doctest::Approx(1.0).epsilon(1e-12));
}

// ---------------------------------------------------------------------------

TEST_CASE("reconstruction") {
  SUBCASE("adjacency-encoding embedding is perfect") {
    auto g = connected_erdos_renyi(30, 0.3, 4);
    auto emb = adjacency_embedding(g);
    std::vector<std::size_t> ks{0};
    auto r = reconstruction_eval(emb, g, ks);
    CHECK(r.precision_at_k[0].first == g.edge_count());
    CHECK(r.precision_at_k[0].second == 1.0);
    CHECK(r.map == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("single edge") {
    std::vector<WeightedEdge> edges{{0, 1, 1.0}};
    auto g = Graph::from_edges(4, edges, false);
    EmbeddingMatrix emb{Matrix::Zero(4, 2)};
    emb.values.row(0) << 1, 0;
    emb.values.row(1) << 1, 0;
    emb.values.row(2) << 0, 0.1;
    emb.values.row(3) << 0, -0.1;
    std::vector<std::size_t> ks{1};
    CHECK(reconstruction_eval(emb, g, ks).precision_at_k[0].second == 1.0);
  }
  SUBCASE("random embeddings sit at the density baseline") {
    auto g = erdos_renyi(50, 0.1, 8);
    const double density = static_cast<double>(g.edge_count()) / (50.0 * 49.0 / 2.0);
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed);
      EmbeddingMatrix emb{random_matrix(50, 8, rng)};
      std::vector<std::size_t> ks{0};
      mean += reconstruction_eval(emb, g, ks).precision_at_k[0].second;
    }
    CHECK(std::abs(mean / 10.0 - density) < 0.05);
  }
  SUBCASE("precision@K and MAP match the brute-force oracle") {
    double worst = 0.0;
    for (std::uint64_t trial = 0; trial < 50; ++trial) {
      Rng rng(trial + 500);
      const std::size_t n = 3 + rng.index(18);
      auto g = erdos_renyi(n, 0.3, trial);
      if (g.edge_count() == 0) continue;
      EmbeddingMatrix emb{random_matrix(static_cast<Eigen::Index>(n), 3, rng)};
      if (trial % 3 == 0) emb.values = (emb.values * 2).array().round() / 2;  // force ties
      const Matrix sim = emb.values * emb.values.transpose();
      std::vector<std::size_t> ks{1, 0, n * (n - 1) / 2};
      auto r = reconstruction_eval(emb, g, ks);
      for (const auto& [k, p] : r.precision_at_k) worst = std::max(worst, std::abs(p - oracle::precision_at_k(sim, g, k)));
      worst = std::max(worst, std::abs(r.map - oracle::mean_average_precision(sim, g)));
    }
    CHECK(worst < 1e-9);
  }
  SUBCASE("precision is non-increasing past |E|; cosine option; errors") {
    auto g = connected_erdos_renyi(25, 0.3, 2);
    Rng rng(2);
    EmbeddingMatrix emb{random_matrix(25, 4, rng)};
    std::vector<std::size_t> ks;
    for (std::size_t k = g.edge_count(); k <= 300; k += 10) ks.push_back(k);
    ReconstructionOptions opt;
    opt.similarity = Similarity::cosine;
    auto r = reconstruction_eval(emb, g, ks, opt);
    CHECK(r.map >= 0.0);
    CHECK(r.map <= 1.0);
    std::vector<std::size_t> too_big{301};
    CHECK_THROWS_AS(reconstruction_eval(emb, g, too_big), ValidationError);
  }
  SUBCASE("sampling cap") {
    auto g = connected_erdos_renyi(40, 0.2, 3);
    Rng rng(3);
    EmbeddingMatrix emb{random_matrix(40, 4, rng)};
    ReconstructionOptions opt;
    opt.max_nodes = 20;
    testing::WarningCapture capture;
    std::vector<std::size_t> ks{5};
    auto r = reconstruction_eval(emb, g, ks, opt);
    CHECK(r.evaluated_nodes == 20);
    CHECK(r.candidate_count == 190);
    CHECK(capture.messages.size() == 1);
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("link prediction") {
  auto lg = connected_planted_partition({50, 50}, 0.3, 0.02, 7);
  auto split = split_edges(lg.graph, 0.15, 3);

  SUBCASE("features that encode adjacency score highly") {
    auto emb = adjacency_embedding(lg.graph);
    auto r = link_prediction_eval(emb, split, EdgeOperator::hadamard, 1);
    CHECK(r.metrics.auc > 0.95);
  }
  SUBCASE("random embeddings are at chance") {
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      EmbeddingMatrix emb{random_matrix(100, 8, rng)};
      mean += link_prediction_eval(emb, split, EdgeOperator::hadamard, seed).metrics.auc;
    }
    CHECK(std::abs(mean / 5.0 - 0.5) < 0.1);
  }
  SUBCASE("identical embeddings with l2 give exactly 0.5") {
    EmbeddingMatrix emb{Matrix::Constant(100, 4, 0.25)};
    CHECK(link_prediction_eval(emb, split, EdgeOperator::l2, 1).metrics.auc == 0.5);
  }
  SUBCASE("every operator runs and counts pairs") {
    Rng rng(1);
    EmbeddingMatrix emb{random_matrix(100, 4, rng)};
    for (EdgeOperator op : all_edge_operators) {
      auto r = link_prediction_eval(emb, split, op, 2);
      CHECK(r.train_pairs == 2 * split.train_graph.edge_count());
      CHECK(r.test_pairs == split.test_positive.size() + split.test_negative.size());
    }
  }
}

// ---------------------------------------------------------------------------

TEST_CASE("labels file and reports") {
  std::vector<WeightedEdge> edges{{0, 1, 1}, {1, 2, 1}};
  auto g = Graph::from_edges(3, edges, false, {"a", "b", "c"});
  std::istringstream in("# comment\na x\nb y z\nb x\n");
  auto labels = parse_labels(in, g);
  CHECK(labels.class_count() == 3);
  CHECK(labels.labels[0] == std::vector<int>{0});
  CHECK(labels.labels[1] == std::vector<int>{1, 2, 0});
  CHECK(labels.labels[2].empty());
  CHECK(labels.multi_label());

  std::istringstream unknown("q x\n");
  CHECK_THROWS_AS(parse_labels(unknown, g), ParseError);
  std::istringstream bare("a\n");
  CHECK_THROWS_AS(parse_labels(bare, g), ParseError);

  EvalReport report;
  report.task = "demo";
  report.set_config("seed", "1");
  report.add("op=l1", "auc", 0.75);
  std::ostringstream csv, text;
  write_report_csv(report, csv);
  write_report_text(report, text);
  CHECK(csv.str() == "# task=demo\n# seed=1\ntask,setting,metric,value\ndemo,op=l1,auc,0.75\n");
  CHECK(text.str().find("0.7500") != std::string::npos);
  CHECK_THROWS_AS(report.add("", "nan", std::nan("")), ValidationError);
}
