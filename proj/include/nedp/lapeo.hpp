#pragma once

#include <Eigen/Sparse>
#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

#include "nedp/embedding.hpp"
#include "nedp/graph.hpp"
#include "nedp/seq_model.hpp"

namespace nedp {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// L = D - A over the graph's nodes. Directed input is symmetrized as (A + A^T) / 2.
class LaplacianOperator {
 public:
  explicit LaplacianOperator(const Graph& g);

  std::size_t node_count() const noexcept { return static_cast<std::size_t>(laplacian_.rows()); }
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }
  const SparseMatrix& laplacian() const noexcept { return laplacian_; }

  /// sum_{i,j} A_ij ||y_i - y_j||^2, traversing stored edges in both orientations.
  double loss(const Matrix& y) const;
  /// 4 L Y.
  Matrix gradient(const Matrix& y) const;

 private:
  SparseMatrix adjacency_;
  SparseMatrix laplacian_;
};

double laplacian_loss(const LaplacianOperator& lap, const EmbeddingMatrix& y);

enum class LapSchedule { after_each_epoch, final_only };

std::string_view to_string(LapSchedule s);
LapSchedule parse_lap_schedule(std::string_view name);

struct LapConfig {
  double eta = 0.01;
  std::size_t steps_per_epoch = 5;
  LapSchedule schedule = LapSchedule::after_each_epoch;
  std::size_t max_halvings = 10;

  void validate() const;
};

struct LapStepResult {
  double loss_before = 0.0;
  double loss_after = 0.0;
  std::size_t halvings = 0;  // total over all steps
};

/// steps_per_epoch gradient-descent steps Y <- Y - eta * 4 L Y. Each step starts
/// from cfg.eta and halves it while the loss would increase; throws
/// ValidationError after max_halvings failed retries.
LapStepResult lapeo_step(const LaplacianOperator& lap, EmbeddingMatrix& y, const LapConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double pred_loss = 0.0;
  double lap_loss = 0.0;
};

struct AlternatingResult {
  TrainingState state;
  std::vector<EpochRecord> history;
  bool converged = false;
};

/// Convergence: both losses changed by less than `tolerance` (relative) in each
/// of the last `window` epochs.
struct ConvergenceRule {
  double tolerance = 1e-4;
  std::size_t window = 3;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Alternates train_epoch and lapeo_step on a shared embedding for up to
/// cfg.epochs epochs.
AlternatingResult alternating_train(const Graph& g, const WalkCorpus& corpus, const TrainConfig& cfg,
                                    const LapConfig& lap_cfg, ConvergenceRule rule = {},
                                    const EpochCallback& on_epoch = {});

}  // namespace nedp
