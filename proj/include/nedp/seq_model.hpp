#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nedp/adam.hpp"
#include "nedp/embedding.hpp"
#include "nedp/walk.hpp"

namespace nedp {

enum class CellKind { rnn, lstm };

std::string_view to_string(CellKind c);
CellKind parse_cell_kind(std::string_view name);

// ---------------------------------------------------------------------------
// Elman RNN
//   state_t  = tanh(input_weights * x_t + recurrent_weights * state_{t-1} + hidden_bias)
//   logits_t = output_weights * state_t + output_bias

struct RnnParams {
  Matrix input_weights;      // hidden x dim
  Matrix recurrent_weights;  // hidden x hidden
  Matrix output_weights;     // vocab x hidden
  Vector hidden_bias;
  Vector output_bias;

  static RnnParams zeros(std::size_t vocab, std::size_t dim, std::size_t hidden);
  std::size_t vocab() const { return static_cast<std::size_t>(output_weights.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(input_weights.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(input_weights.rows()); }
};

/// Cached activations of one sequence; columns are time steps.
struct RnnTrace {
  Matrix inputs;         // dim x T
  Vector initial_state;  // hidden
  Matrix states;         // hidden x T
  Matrix logits;         // vocab x T
};

RnnTrace rnn_forward(const RnnParams& params, const Matrix& inputs, const Vector& initial_state);

// ---------------------------------------------------------------------------
// LSTM. Every gate acts on the concatenation [h_{t-1}; x_t].
//   f = sigmoid(forget),  i = sigmoid(input),  g = tanh(candidate),  o = sigmoid(output)
//   c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t),  logits_t = output_weights * h_t + output_bias

struct LstmGate {
  Matrix weights;  // hidden x (hidden + dim)
  Vector bias;     // hidden
};

struct LstmParams {
  LstmGate forget_gate;
  LstmGate input_gate;
  LstmGate candidate;
  LstmGate output_gate;
  Matrix output_weights;  // vocab x hidden
  Vector output_bias;     // vocab

  static LstmParams zeros(std::size_t vocab, std::size_t dim, std::size_t hidden);
  std::size_t vocab() const { return static_cast<std::size_t>(output_weights.rows()); }
  std::size_t hidden() const { return static_cast<std::size_t>(forget_gate.weights.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(forget_gate.weights.cols()) - hidden(); }
};

struct LstmTrace {
  Matrix inputs;  // dim x T
  Vector initial_hidden;
  Vector initial_cell;
  Matrix forget_gate, input_gate, candidate, output_gate;  // activations, hidden x T
  Matrix cells;                              // hidden x T
  Matrix hidden;                             // hidden x T
  Matrix logits;                             // vocab x T
};

LstmTrace lstm_forward(const LstmParams& params, const Matrix& inputs, const Vector& initial_hidden,
                       const Vector& initial_cell);

// ---------------------------------------------------------------------------

struct LossResult {
  double loss = 0.0;     // mean over steps of -ln softmax(logits_t)[target_t]
  Matrix dlogits;        // (softmax - onehot) / T
};

/// Softmax is applied here and nowhere else.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const NodeId> targets);

/// Column-wise softmax.
Matrix softmax_columns(const Matrix& logits);

template <typename Params>
struct CellGradients {
  Params params;
  Matrix inputs;  // dim x T, gradient with respect to the looked-up embeddings
};

/// Full (untruncated) backpropagation through time from logit gradients.
CellGradients<RnnParams> backward_bptt(const RnnParams& params, const RnnTrace& trace, const Matrix& dlogits);
CellGradients<LstmParams> backward_bptt(const LstmParams& params, const LstmTrace& trace, const Matrix& dlogits);

/// Visits every parameter block as (name, flat values).
void for_each_block(RnnParams& p, const std::function<void(std::string_view, std::span<double>)>& fn);
void for_each_block(LstmParams& p, const std::function<void(std::string_view, std::span<double>)>& fn);

// ---------------------------------------------------------------------------

struct ModelOptions {
  bool use_bias = true;     // when false the recurrent biases stay at zero
  bool output_bias = true;  // output-layer bias, initialized to zero
  bool tie_output = false;  // output weights shared with the embedding table (needs hidden == dim)
};

/// Recurrent next-node predictor sitting on top of an embedding table.
class PredictionModel {
 public:
  using Params = std::variant<RnnParams, LstmParams>;

  PredictionModel(CellKind cell, std::size_t vocab, std::size_t dim, std::size_t hidden, ModelOptions options = {});

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  static PredictionModel random(CellKind cell, std::size_t vocab, std::size_t dim, std::size_t hidden,
                                ModelOptions options, std::uint64_t seed);

  CellKind cell() const noexcept { return cell_; }
  std::size_t vocab() const noexcept { return vocab_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t hidden() const noexcept { return hidden_; }
  const ModelOptions& options() const noexcept { return options_; }
  Params& params() noexcept { return params_; }
  const Params& params() const noexcept { return params_; }

  /// Trainable scalars (tied output weights and disabled biases excluded).
  std::size_t parameter_count() const;

  /// Loss of one walk (inputs walk[0..T-1], targets walk[1..T]) and the
  /// gradients of that loss with respect to every parameter and embedding row.
  struct Gradients {
    Params params;
    Matrix embedding;  // vocab x dim; rows of nodes absent from the walk stay zero
  };
  Gradients zero_gradients() const;
  double accumulate_gradients(const EmbeddingMatrix& emb, std::span<const NodeId> walk, Gradients& grads,
                              double scale = 1.0) const;

  /// Loss only.
  double loss(const EmbeddingMatrix& emb, std::span<const NodeId> walk) const;

  /// Mean hidden state per node over the positions where the node is the input.
  Matrix mean_hidden_states(const EmbeddingMatrix& emb, const WalkCorpus& corpus) const;

  /// Applies one Adam update to all trainable blocks and the embedding.
  void apply_adam(AdamState& adam, EmbeddingMatrix& emb, Gradients& grads);

 private:
  void sync_tied(const EmbeddingMatrix& emb) const;

  CellKind cell_;
  std::size_t vocab_;
  std::size_t dim_;
  std::size_t hidden_;
  ModelOptions options_;
  mutable Params params_;
};

struct TrainConfig {
  CellKind cell = CellKind::lstm;
  std::size_t dim = 16;
  std::size_t hidden = 0;  // 0 means "same as dim"
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  ModelOptions model;

  std::size_t hidden_dim() const noexcept { return hidden == 0 ? dim : hidden; }
  void validate() const;
};

/// Model, embedding and optimizer state evolving across epochs.
struct TrainingState {
  PredictionModel model;
  EmbeddingMatrix embedding;
  AdamState adam;
  std::size_t epochs_done = 0;

  /// Seeded initialization of model and embedding.
  static TrainingState initialize(std::size_t vocab, const TrainConfig& cfg);
};

/// One pass over the corpus in shuffled mini-batches of walks: forward, loss,
/// BPTT and one Adam step per batch on the cell, output layer and embedding.
/// Walks shorter than two nodes are skipped. Returns the mean per-step loss.
double train_epoch(TrainingState& state, const WalkCorpus& corpus, const TrainConfig& cfg);

/// Text checkpoint of all parameter blocks, the embedding and the Adam state.
void save_checkpoint(const TrainingState& state, const std::filesystem::path& path);
TrainingState load_checkpoint(const std::filesystem::path& path);

}  // namespace nedp
