#include "nedp/pipeline.hpp"

namespace nedp {

PipelineResult run_pipeline(const Graph& g, const PipelineConfig& cfg, const EpochCallback& on_epoch) {
  WalkCorpus corpus = generate_corpus(g, cfg.walk);
  AlternatingResult training = run_training(g, corpus, cfg, on_epoch);
  return {std::move(corpus), std::move(training)};
}

AlternatingResult run_training(const Graph& g, const WalkCorpus& corpus, const PipelineConfig& cfg,
                               const EpochCallback& on_epoch) {
  return alternating_train(g, corpus, cfg.train, cfg.lap, cfg.convergence, on_epoch);
}

}  // namespace nedp
