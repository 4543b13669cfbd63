#include "nedp/lapeo.hpp"

#include <cmath>
#include <string>

#include "nedp/error.hpp"

namespace nedp {

LaplacianOperator::LaplacianOperator(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  const double scale = g.directed() ? 0.5 : 1.0;
  std::vector<Eigen::Triplet<double>> triplets;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    for (const Neighbor& nb : g.neighbors(u)) {
      triplets.emplace_back(u, nb.id, scale * nb.weight);
      if (g.directed()) triplets.emplace_back(nb.id, u, scale * nb.weight);
    }
  }
  adjacency_.resize(n, n);
  adjacency_.setFromTriplets(triplets.begin(), triplets.end());

  Vector degree = Vector::Zero(n);
  for (Eigen::Index k = 0; k < adjacency_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(adjacency_, k); it; ++it) degree(it.row()) += it.value();
  SparseMatrix diag(n, n);
  std::vector<Eigen::Triplet<double>> d;
  for (Eigen::Index i = 0; i < n; ++i) d.emplace_back(i, i, degree(i));
  diag.setFromTriplets(d.begin(), d.end());
  laplacian_ = diag - adjacency_;
}

double LaplacianOperator::loss(const Matrix& y) const {
  if (y.rows() != adjacency_.rows()) {
    throw ValidationError("laplacian loss: embedding has " + std::to_string(y.rows()) + " rows, graph has " +
                          std::to_string(adjacency_.rows()) + " nodes");
  }
  double total = 0.0;
  for (Eigen::Index k = 0; k < adjacency_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(adjacency_, k); it; ++it)
      total += it.value() * (y.row(it.row()) - y.row(it.col())).squaredNorm();
  return total;
}

Matrix LaplacianOperator::gradient(const Matrix& y) const {
  if (y.rows() != laplacian_.rows()) throw ValidationError("laplacian gradient: dimension mismatch");
  return 4.0 * (laplacian_ * y);
}

double laplacian_loss(const LaplacianOperator& lap, const EmbeddingMatrix& y) { return lap.loss(y.values); }

std::string_view to_string(LapSchedule s) {
  return s == LapSchedule::after_each_epoch ? "after_each_epoch" : "final_only";
}

LapSchedule parse_lap_schedule(std::string_view name) {
  if (name == "after_each_epoch") return LapSchedule::after_each_epoch;
  if (name == "final_only") return LapSchedule::final_only;
  throw ValidationError("unknown LapEO schedule '" + std::string(name) + "' (after_each_epoch, final_only)");
}

void LapConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("LapEO: eta must be positive");
}

LapStepResult lapeo_step(const LaplacianOperator& lap, EmbeddingMatrix& y, const LapConfig& cfg) {
  cfg.validate();
  LapStepResult result;
  double current = lap.loss(y.values);
  result.loss_before = current;
  for (std::size_t step = 0; step < cfg.steps_per_epoch; ++step) {
    const Matrix grad = lap.gradient(y.values);
    if (grad.isZero(0)) break;
    double eta = cfg.eta;
    std::size_t retries = 0;
    while (true) {
      Matrix candidate = y.values - eta * grad;
      const double next = lap.loss(candidate);
      if (next <= current) {
        y.values = std::move(candidate);
        current = next;
        break;
      }
      if (retries == cfg.max_halvings) {
        throw ValidationError("LapEO: loss still increases after halving eta " + std::to_string(retries) +
                              " times (eta " + std::to_string(cfg.eta) + ")");
      }
      eta *= 0.5;
      ++retries;
    }
    result.halvings += retries;
  }
  result.loss_after = current;
  return result;
}

namespace {

double relative_change(double before, double after) {
  const double denom = std::max(std::abs(before), 1e-300);
  return std::abs(after - before) / denom;
}

}  // namespace

AlternatingResult alternating_train(const Graph& g, const WalkCorpus& corpus, const TrainConfig& cfg,
                                    const LapConfig& lap_cfg, ConvergenceRule rule, const EpochCallback& on_epoch) {
  cfg.validate();
  lap_cfg.validate();
  for (const auto& walk : corpus.walks)
    for (NodeId u : walk)
      if (u >= g.node_count()) throw ValidationError("corpus node " + std::to_string(u) + " is not in the graph");

  const LaplacianOperator lap(g);
  AlternatingResult result{TrainingState::initialize(g.node_count(), cfg), {}, false};
  std::size_t stable = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.pred_loss = train_epoch(result.state, corpus, cfg);
    const bool run_lap = lap_cfg.schedule == LapSchedule::after_each_epoch || epoch == cfg.epochs;
    if (run_lap && lap_cfg.steps_per_epoch > 0) {
      rec.lap_loss = lapeo_step(lap, result.state.embedding, lap_cfg).loss_after;
    } else {
      rec.lap_loss = laplacian_loss(lap, result.state.embedding);
    }
    if (!result.history.empty()) {
      const EpochRecord& prev = result.history.back();
      const bool small = relative_change(prev.pred_loss, rec.pred_loss) < rule.tolerance &&
                         relative_change(prev.lap_loss, rec.lap_loss) < rule.tolerance;
      stable = small ? stable + 1 : 0;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rule.window > 0 && stable >= rule.window) {
      result.converged = true;
      if (lap_cfg.schedule == LapSchedule::final_only && lap_cfg.steps_per_epoch > 0 && epoch != cfg.epochs) {
        result.history.back().lap_loss = lapeo_step(lap, result.state.embedding, lap_cfg).loss_after;
      }
      break;
    }
  }
  return result;
}

}  // namespace nedp
