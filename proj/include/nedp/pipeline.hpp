#pragma once

#include "nedp/lapeo.hpp"
#include "nedp/walk.hpp"

namespace nedp {

struct PipelineConfig {
  WalkConfig walk;
  TrainConfig train;
  LapConfig lap;
  ConvergenceRule convergence;
};

struct PipelineResult {
  WalkCorpus corpus;
  AlternatingResult training;
};

/// Samples the walk corpus of `g` and runs alternating training on it.
PipelineResult run_pipeline(const Graph& g, const PipelineConfig& cfg, const EpochCallback& on_epoch = {});

/// Same, on a corpus supplied by the caller.
AlternatingResult run_training(const Graph& g, const WalkCorpus& corpus, const PipelineConfig& cfg,
                               const EpochCallback& on_epoch = {});

}  // namespace nedp
