#include "nedp/seq_model.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "nedp/error.hpp"
#include "nedp/format.hpp"
#include "nedp/rng.hpp"

namespace nedp {

std::string_view to_string(CellKind c) { return c == CellKind::rnn ? "rnn" : "lstm"; }

CellKind parse_cell_kind(std::string_view name) {
  if (name == "rnn") return CellKind::rnn;
  if (name == "lstm") return CellKind::lstm;
  throw ValidationError("unknown cell '" + std::string(name) + "' (rnn, lstm)");
}

namespace {

using Index = Eigen::Index;

Index idx(std::size_t n) { return static_cast<Index>(n); }

std::span<double> flat(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> flat(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

template <typename Params>
void for_each_block_const(const Params& p, const std::function<void(std::string_view, std::span<const double>)>& fn) {
  for_each_block(const_cast<Params&>(p), [&](std::string_view name, std::span<double> v) {
    fn(name, std::span<const double>(v.data(), v.size()));
  });
}

// dst += src block by block.
template <typename Params>
void add_blocks(Params& dst, const Params& src) {
  std::vector<std::span<const double>> from;
  for_each_block_const(src, [&](std::string_view, std::span<const double> v) { from.push_back(v); });
  std::size_t k = 0;
  for_each_block(dst, [&](std::string_view, std::span<double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += from[k][i];
    ++k;
  });
}

void check_columns(const Matrix& m, Index rows, const char* what) {
  if (m.rows() != rows) throw ValidationError(std::string("shape mismatch: ") + what);
}

}  // namespace

// ---------------------------------------------------------------------------

RnnParams RnnParams::zeros(std::size_t vocab, std::size_t dim, std::size_t hidden) {
  RnnParams p;
  p.input_weights = Matrix::Zero(idx(hidden), idx(dim));
  p.recurrent_weights = Matrix::Zero(idx(hidden), idx(hidden));
  p.output_weights = Matrix::Zero(idx(vocab), idx(hidden));
  p.hidden_bias = Vector::Zero(idx(hidden));
  p.output_bias = Vector::Zero(idx(vocab));
  return p;
}

void for_each_block(RnnParams& p, const std::function<void(std::string_view, std::span<double>)>& fn) {
  fn("input_weights", flat(p.input_weights));
  fn("recurrent_weights", flat(p.recurrent_weights));
  fn("hidden_bias", flat(p.hidden_bias));
  fn("output_weights", flat(p.output_weights));
  fn("output_bias", flat(p.output_bias));
}

RnnTrace rnn_forward(const RnnParams& params, const Matrix& inputs, const Vector& initial_state) {
  const Index hidden = params.input_weights.rows();
  check_columns(inputs, params.input_weights.cols(), "rnn input dimension");
  if (initial_state.size() != hidden || params.recurrent_weights.rows() != hidden ||
      params.recurrent_weights.cols() != hidden || params.output_weights.cols() != hidden ||
      params.hidden_bias.size() != hidden || params.output_bias.size() != params.output_weights.rows()) {
    throw ValidationError("shape mismatch: rnn parameters");
  }
  RnnTrace trace;
  trace.inputs = inputs;
  trace.initial_state = initial_state;
  trace.states.resize(hidden, inputs.cols());
  Vector prev = initial_state;
  for (Index t = 0; t < inputs.cols(); ++t) {
    Vector pre = params.input_weights * inputs.col(t) + params.recurrent_weights * prev + params.hidden_bias;
    trace.states.col(t) = pre.array().tanh().matrix();
    prev = trace.states.col(t);
  }
  trace.logits = (params.output_weights * trace.states).colwise() + params.output_bias;
  return trace;
}

CellGradients<RnnParams> backward_bptt(const RnnParams& params, const RnnTrace& trace, const Matrix& dlogits) {
  const Index steps = trace.states.cols();
  if (dlogits.cols() != steps || dlogits.rows() != params.output_weights.rows() || trace.inputs.cols() != steps) {
    throw ValidationError("backward_bptt: cache does not match the sequence");
  }
  CellGradients<RnnParams> g{RnnParams::zeros(params.vocab(), params.dim(), params.hidden()),
                             Matrix::Zero(trace.inputs.rows(), steps)};
  g.params.output_weights = dlogits * trace.states.transpose();
  g.params.output_bias = dlogits.rowwise().sum();

  Vector carry = Vector::Zero(idx(params.hidden()));
  for (Index t = steps - 1; t >= 0; --t) {
    const Vector dstate = params.output_weights.transpose() * dlogits.col(t) + carry;
    const Vector dpre = dstate.array() * (1.0 - trace.states.col(t).array().square());
    const auto prev = t > 0 ? Vector(trace.states.col(t - 1)) : trace.initial_state;
    g.params.input_weights.noalias() += dpre * trace.inputs.col(t).transpose();
    g.params.recurrent_weights.noalias() += dpre * prev.transpose();
    g.params.hidden_bias += dpre;
    g.inputs.col(t) = params.input_weights.transpose() * dpre;
    carry = params.recurrent_weights.transpose() * dpre;
  }
  return g;
}

// ---------------------------------------------------------------------------

LstmParams LstmParams::zeros(std::size_t vocab, std::size_t dim, std::size_t hidden) {
  LstmParams p;
  for (LstmGate* gate : {&p.forget_gate, &p.input_gate, &p.candidate, &p.output_gate}) {
    gate->weights = Matrix::Zero(idx(hidden), idx(hidden + dim));
    gate->bias = Vector::Zero(idx(hidden));
  }
  p.output_weights = Matrix::Zero(idx(vocab), idx(hidden));
  p.output_bias = Vector::Zero(idx(vocab));
  return p;
}

void for_each_block(LstmParams& p, const std::function<void(std::string_view, std::span<double>)>& fn) {
  fn("forget_gate.weights", flat(p.forget_gate.weights));
  fn("forget_gate.bias", flat(p.forget_gate.bias));
  fn("input_gate.weights", flat(p.input_gate.weights));
  fn("input_gate.bias", flat(p.input_gate.bias));
  fn("candidate.weights", flat(p.candidate.weights));
  fn("candidate.bias", flat(p.candidate.bias));
  fn("output_gate.weights", flat(p.output_gate.weights));
  fn("output_gate.bias", flat(p.output_gate.bias));
  fn("output_weights", flat(p.output_weights));
  fn("output_bias", flat(p.output_bias));
}

LstmTrace lstm_forward(const LstmParams& params, const Matrix& inputs, const Vector& initial_hidden,
                       const Vector& initial_cell) {
  const Index hidden = idx(params.hidden());
  const Index dim = params.forget_gate.weights.cols() - hidden;
  check_columns(inputs, dim, "lstm input dimension");
  for (const LstmGate* gate : {&params.forget_gate, &params.input_gate, &params.candidate, &params.output_gate}) {
    if (gate->weights.rows() != hidden || gate->weights.cols() != hidden + dim || gate->bias.size() != hidden) {
      throw ValidationError("shape mismatch: lstm gate");
    }
  }
  if (initial_hidden.size() != hidden || initial_cell.size() != hidden || params.output_weights.cols() != hidden ||
      params.output_bias.size() != params.output_weights.rows()) {
    throw ValidationError("shape mismatch: lstm state or output layer");
  }

  const Index steps = inputs.cols();
  LstmTrace tr;
  tr.inputs = inputs;
  tr.initial_hidden = initial_hidden;
  tr.initial_cell = initial_cell;
  for (Matrix* m : {&tr.forget_gate, &tr.input_gate, &tr.candidate, &tr.output_gate, &tr.cells, &tr.hidden}) {
    m->resize(hidden, steps);
  }

  Vector concat(hidden + dim);
  Vector h = initial_hidden;
  Vector c = initial_cell;
  for (Index t = 0; t < steps; ++t) {
    concat << h, inputs.col(t);
    tr.forget_gate.col(t) = sigmoid(params.forget_gate.weights * concat + params.forget_gate.bias);
    tr.input_gate.col(t) = sigmoid(params.input_gate.weights * concat + params.input_gate.bias);
    tr.candidate.col(t) = (params.candidate.weights * concat + params.candidate.bias).array().tanh().matrix();
    tr.output_gate.col(t) = sigmoid(params.output_gate.weights * concat + params.output_gate.bias);
    c = tr.forget_gate.col(t).cwiseProduct(c) + tr.input_gate.col(t).cwiseProduct(tr.candidate.col(t));
    h = tr.output_gate.col(t).cwiseProduct(Vector(c.array().tanh().matrix()));
    tr.cells.col(t) = c;
    tr.hidden.col(t) = h;
  }
  tr.logits = (params.output_weights * tr.hidden).colwise() + params.output_bias;
  return tr;
}

CellGradients<LstmParams> backward_bptt(const LstmParams& params, const LstmTrace& tr, const Matrix& dlogits) {
  const Index steps = tr.hidden.cols();
  const Index hidden = idx(params.hidden());
  const Index dim = params.forget_gate.weights.cols() - hidden;
  if (dlogits.cols() != steps || dlogits.rows() != params.output_weights.rows() || tr.inputs.cols() != steps) {
    throw ValidationError("backward_bptt: cache does not match the sequence");
  }
  CellGradients<LstmParams> g{LstmParams::zeros(params.vocab(), static_cast<std::size_t>(dim), params.hidden()),
                              Matrix::Zero(dim, steps)};
  g.params.output_weights = dlogits * tr.hidden.transpose();
  g.params.output_bias = dlogits.rowwise().sum();

  Vector dh_next = Vector::Zero(hidden);
  Vector dc_next = Vector::Zero(hidden);
  Vector concat(hidden + dim);
  for (Index t = steps - 1; t >= 0; --t) {
    const Vector h_prev = t > 0 ? Vector(tr.hidden.col(t - 1)) : tr.initial_hidden;
    const Vector c_prev = t > 0 ? Vector(tr.cells.col(t - 1)) : tr.initial_cell;
    concat << h_prev, tr.inputs.col(t);

    const auto f = tr.forget_gate.col(t).array();
    const auto i = tr.input_gate.col(t).array();
    const auto cand = tr.candidate.col(t).array();
    const auto o = tr.output_gate.col(t).array();
    const Eigen::ArrayXd tanh_c = tr.cells.col(t).array().tanh();

    const Eigen::ArrayXd dh = (params.output_weights.transpose() * dlogits.col(t) + dh_next).array();
    const Eigen::ArrayXd dc = dh * o * (1.0 - tanh_c.square()) + dc_next.array();

    const Vector d_output = (dh * tanh_c * o * (1.0 - o)).matrix();
    const Vector d_forget = (dc * c_prev.array() * f * (1.0 - f)).matrix();
    const Vector d_input = (dc * cand * i * (1.0 - i)).matrix();
    const Vector d_cand = (dc * i * (1.0 - cand.square())).matrix();

    Vector dconcat = Vector::Zero(hidden + dim);
    const std::pair<const LstmGate*, std::pair<LstmGate*, const Vector*>> gates[] = {
        {&params.forget_gate, {&g.params.forget_gate, &d_forget}},
        {&params.input_gate, {&g.params.input_gate, &d_input}},
        {&params.candidate, {&g.params.candidate, &d_cand}},
        {&params.output_gate, {&g.params.output_gate, &d_output}},
    };
    for (const auto& [gate, grad] : gates) {
      const Vector& dpre = *grad.second;
      grad.first->weights.noalias() += dpre * concat.transpose();
      grad.first->bias += dpre;
      dconcat.noalias() += gate->weights.transpose() * dpre;
    }
    dh_next = dconcat.head(hidden);
    g.inputs.col(t) = dconcat.tail(dim);
    dc_next = (dc * f).matrix();
  }
  return g;
}

// ---------------------------------------------------------------------------

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index t = 0; t < logits.cols(); ++t) {
    const double shift = logits.col(t).maxCoeff();
    Eigen::ArrayXd e = (logits.col(t).array() - shift).exp();
    out.col(t) = (e / e.sum()).matrix();
  }
  return out;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const NodeId> targets) {
  if (targets.empty() || logits.cols() == 0) throw ValidationError("softmax_cross_entropy: empty sequence");
  if (static_cast<std::size_t>(logits.cols()) != targets.size()) {
    throw ValidationError("softmax_cross_entropy: " + std::to_string(logits.cols()) + " logit columns for " +
                          std::to_string(targets.size()) + " targets");
  }
  const double steps = static_cast<double>(targets.size());
  LossResult out;
  out.dlogits.resize(logits.rows(), logits.cols());
  for (Index t = 0; t < logits.cols(); ++t) {
    const NodeId target = targets[static_cast<std::size_t>(t)];
    if (target >= logits.rows()) throw ValidationError("softmax_cross_entropy: target outside the vocabulary");
    const double shift = logits.col(t).maxCoeff();
    const Eigen::ArrayXd e = (logits.col(t).array() - shift).exp();
    const double z = e.sum();
    out.loss += std::log(z) - (logits(target, t) - shift);
    out.dlogits.col(t) = (e / z).matrix();
    out.dlogits(target, t) -= 1.0;
  }
  out.loss /= steps;
  out.dlogits /= steps;
  return out;
}

// ---------------------------------------------------------------------------

PredictionModel::PredictionModel(CellKind cell, std::size_t vocab, std::size_t dim, std::size_t hidden,
                                 ModelOptions options)
    : cell_(cell), vocab_(vocab), dim_(dim), hidden_(hidden), options_(options) {
  if (vocab == 0 || dim == 0 || hidden == 0) throw ValidationError("model: dimensions must be positive");
  if (options.tie_output && hidden != dim) {
    throw ValidationError("model: tied output weights need hidden size == embedding dimension");
  }
  if (cell == CellKind::rnn) {
    params_ = RnnParams::zeros(vocab, dim, hidden);
  } else {
    params_ = LstmParams::zeros(vocab, dim, hidden);
  }
}

PredictionModel PredictionModel::random(CellKind cell, std::size_t vocab, std::size_t dim, std::size_t hidden,
                                        ModelOptions options, std::uint64_t seed) {
  PredictionModel model(cell, vocab, dim, hidden, options);
  Rng rng(mix_seed(seed, 0x3D));
  auto fill = [&](Matrix& m) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
  };
  std::visit(
      [&](auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, RnnParams>) {
          fill(p.input_weights);
          fill(p.recurrent_weights);
        } else {
          for (LstmGate* gate : {&p.forget_gate, &p.input_gate, &p.candidate, &p.output_gate}) fill(gate->weights);
        }
        fill(p.output_weights);
      },
      model.params_);
  return model;
}

namespace {

bool is_bias(std::string_view name) { return name.ends_with("bias"); }

}  // namespace

std::size_t PredictionModel::parameter_count() const {
  std::size_t count = 0;
  std::visit(
      [&](const auto& p) {
        for_each_block_const(p, [&](std::string_view name, std::span<const double> v) {
          if (name == "output_weights" && options_.tie_output) return;
          if (name == "output_bias") {
            if (options_.output_bias) count += v.size();
            return;
          }
          if (is_bias(name) && !options_.use_bias) return;
          count += v.size();
        });
      },
      params_);
  return count;
}

PredictionModel::Gradients PredictionModel::zero_gradients() const {
  Gradients g;
  if (cell_ == CellKind::rnn) {
    g.params = RnnParams::zeros(vocab_, dim_, hidden_);
  } else {
    g.params = LstmParams::zeros(vocab_, dim_, hidden_);
  }
  g.embedding = Matrix::Zero(idx(vocab_), idx(dim_));
  return g;
}

void PredictionModel::sync_tied(const EmbeddingMatrix& emb) const {
  if (!options_.tie_output) return;
  std::visit([&](auto& p) { p.output_weights = emb.values; }, params_);
}

double PredictionModel::accumulate_gradients(const EmbeddingMatrix& emb, std::span<const NodeId> walk,
                                             Gradients& grads, double scale) const {
  if (walk.size() < 2) throw ValidationError("model: a training walk needs at least two nodes");
  if (emb.node_count() != vocab_ || emb.dim() != dim_) throw ValidationError("model: embedding shape mismatch");
  sync_tied(emb);
  const auto inputs_ids = walk.first(walk.size() - 1);
  const auto targets = walk.subspan(1);
  const Matrix inputs = embed_lookup(emb, inputs_ids);
  double loss = 0.0;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        auto& acc = std::get<P>(grads.params);
        const Vector zero = Vector::Zero(idx(hidden_));
        if constexpr (std::is_same_v<P, RnnParams>) {
          RnnTrace tr = rnn_forward(p, inputs, zero);
          LossResult lr = softmax_cross_entropy(tr.logits, targets);
          loss = lr.loss;
          auto g = backward_bptt(p, tr, lr.dlogits * scale);
          add_blocks(acc, g.params);
          embed_scatter_add(g.inputs, inputs_ids, grads.embedding);
        } else {
          LstmTrace tr = lstm_forward(p, inputs, zero, zero);
          LossResult lr = softmax_cross_entropy(tr.logits, targets);
          loss = lr.loss;
          auto g = backward_bptt(p, tr, lr.dlogits * scale);
          add_blocks(acc, g.params);
          embed_scatter_add(g.inputs, inputs_ids, grads.embedding);
        }
      },
      params_);
  return loss;
}

double PredictionModel::loss(const EmbeddingMatrix& emb, std::span<const NodeId> walk) const {
  if (walk.size() < 2) throw ValidationError("model: a training walk needs at least two nodes");
  sync_tied(emb);
  const Matrix inputs = embed_lookup(emb, walk.first(walk.size() - 1));
  const Vector zero = Vector::Zero(idx(hidden_));
  return std::visit(
      [&](const auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, RnnParams>) {
          return softmax_cross_entropy(rnn_forward(p, inputs, zero).logits, walk.subspan(1)).loss;
        } else {
          return softmax_cross_entropy(lstm_forward(p, inputs, zero, zero).logits, walk.subspan(1)).loss;
        }
      },
      params_);
}

Matrix PredictionModel::mean_hidden_states(const EmbeddingMatrix& emb, const WalkCorpus& corpus) const {
  sync_tied(emb);
  Matrix sums = Matrix::Zero(idx(vocab_), idx(hidden_));
  std::vector<std::size_t> counts(vocab_, 0);
  const Vector zero = Vector::Zero(idx(hidden_));
  for (const auto& walk : corpus.walks) {
    if (walk.empty()) continue;
    const Matrix inputs = embed_lookup(emb, walk);
    const Matrix states = std::visit(
        [&](const auto& p) -> Matrix {
          if constexpr (std::is_same_v<std::decay_t<decltype(p)>, RnnParams>) {
            return rnn_forward(p, inputs, zero).states;
          } else {
            return lstm_forward(p, inputs, zero, zero).hidden;
          }
        },
        params_);
    for (std::size_t t = 0; t < walk.size(); ++t) {
      sums.row(walk[t]) += states.col(idx(t)).transpose();
      ++counts[walk[t]];
    }
  }
  for (std::size_t u = 0; u < vocab_; ++u) {
    if (counts[u] > 0) sums.row(idx(u)) /= static_cast<double>(counts[u]);
  }
  return sums;
}

void PredictionModel::apply_adam(AdamState& adam, EmbeddingMatrix& emb, Gradients& grads) {
  std::vector<ParamRef> blocks;
  std::visit(
      [&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        auto& g = std::get<P>(grads.params);
        if (options_.tie_output) grads.embedding += g.output_weights;
        std::vector<std::pair<std::string_view, std::span<double>>> grad_blocks;
        for_each_block(g, [&](std::string_view name, std::span<double> v) { grad_blocks.emplace_back(name, v); });
        std::size_t k = 0;
        for_each_block(p, [&](std::string_view name, std::span<double> v) {
          const auto gv = grad_blocks[k++].second;
          if (name == "output_weights" && options_.tie_output) return;
          if (name == "output_bias" ? !options_.output_bias : (is_bias(name) && !options_.use_bias)) return;
          blocks.push_back({name, v, gv});
        });
      },
      params_);
  blocks.push_back({"embedding", flat(emb.values), flat(grads.embedding)});
  adam_step(adam, blocks);
  sync_tied(emb);
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (dim == 0) throw ValidationError("train config: embedding dimension must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("train config: learning rate must be >= 0");
  if (batch_size == 0) throw ValidationError("train config: batch size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
    throw ValidationError("train config: invalid Adam hyper-parameters");
  }
}

TrainingState TrainingState::initialize(std::size_t vocab, const TrainConfig& cfg) {
  cfg.validate();
  TrainingState state{PredictionModel::random(cfg.cell, vocab, cfg.dim, cfg.hidden_dim(), cfg.model, cfg.seed),
                      EmbeddingMatrix::random(vocab, cfg.dim, cfg.seed), AdamState{}, 0};
  state.adam.lr = cfg.lr;
  state.adam.beta1 = cfg.beta1;
  state.adam.beta2 = cfg.beta2;
  state.adam.eps = cfg.eps;
  return state;
}

double train_epoch(TrainingState& state, const WalkCorpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < corpus.walks.size(); ++i) {
    if (corpus.walks[i].size() >= 2) order.push_back(i);
  }
  if (order.empty()) throw ValidationError("train_epoch: corpus has no walk with at least two nodes");
  state.adam.lr = cfg.lr;

  Rng rng(mix_seed(cfg.seed, 0x7A000 + state.epochs_done));
  rng.shuffle(order.begin(), order.end());

  // Per-walk losses are summed in corpus order so the total does not depend on the shuffle.
  std::vector<double> walk_loss(corpus.walks.size(), 0.0);
  PredictionModel::Gradients grads = state.model.zero_gradients();
  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg.batch_size);
    const double scale = 1.0 / static_cast<double>(end - start);
    std::visit([](auto& p) { for_each_block(p, [](std::string_view, std::span<double> v) { std::fill(v.begin(), v.end(), 0.0); }); },
               grads.params);
    grads.embedding.setZero();
    for (std::size_t k = start; k < end; ++k) {
      const auto& walk = corpus.walks[order[k]];
      walk_loss[order[k]] = state.model.accumulate_gradients(state.embedding, walk, grads, scale);
    }
    state.model.apply_adam(state.adam, state.embedding, grads);
  }
  ++state.epochs_done;

  double total = 0.0;
  std::size_t steps = 0;
  for (std::size_t i = 0; i < corpus.walks.size(); ++i) {
    if (corpus.walks[i].size() < 2) continue;
    const std::size_t t = corpus.walks[i].size() - 1;
    total += walk_loss[i] * static_cast<double>(t);
    steps += t;
  }
  return total / static_cast<double>(steps);
}

// ---------------------------------------------------------------------------
// Checkpoint format (text, one token stream):
//   nedp-checkpoint 1
//   cell <rnn|lstm> vocab <n> dim <d> hidden <h>
//   options <use_bias> <output_bias> <tie_output>
//   epochs_done <k>
//   adam <lr> <beta1> <beta2> <eps> <t>
//   block <name> <size>            followed by <size> values (parameters, then "embedding")
//   moments <name> <size>          followed by <size> m values and <size> v values
//   end

namespace {

void write_values(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << format_double(values[i]);
  out << '\n';
}

std::string expect_token(std::istream& in, const std::string& path) {
  std::string token;
  if (!(in >> token)) throw ValidationError("checkpoint '" + path + "': unexpected end of file");
  return token;
}

void expect_keyword(std::istream& in, const std::string& path, std::string_view keyword) {
  const std::string token = expect_token(in, path);
  if (token != keyword) {
    throw ValidationError("checkpoint '" + path + "': expected '" + std::string(keyword) + "', found '" + token + "'");
  }
}

template <typename T>
T read_number(std::istream& in, const std::string& path) {
  const std::string token = expect_token(in, path);
  if constexpr (std::is_floating_point_v<T>) {
    auto v = parse_double(token);
    if (!v) throw ValidationError("checkpoint '" + path + "': bad number '" + token + "'");
    return *v;
  } else {
    auto v = parse_int<T>(token);
    if (!v) throw ValidationError("checkpoint '" + path + "': bad integer '" + token + "'");
    return *v;
  }
}

void read_values(std::istream& in, const std::string& path, std::span<double> out) {
  for (double& v : out) v = read_number<double>(in, path);
}

}  // namespace

void save_checkpoint(const TrainingState& state, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  const PredictionModel& m = state.model;
  out << "nedp-checkpoint 1\n";
  out << "cell " << to_string(m.cell()) << " vocab " << m.vocab() << " dim " << m.dim() << " hidden " << m.hidden()
      << '\n';
  out << "options " << m.options().use_bias << ' ' << m.options().output_bias << ' ' << m.options().tie_output << '\n';
  out << "epochs_done " << state.epochs_done << '\n';
  out << "adam " << format_double(state.adam.lr) << ' ' << format_double(state.adam.beta1) << ' '
      << format_double(state.adam.beta2) << ' ' << format_double(state.adam.eps) << ' ' << state.adam.t << '\n';
  std::visit(
      [&](const auto& p) {
        for_each_block_const(p, [&](std::string_view name, std::span<const double> v) {
          out << "block " << name << ' ' << v.size() << '\n';
          write_values(out, v);
        });
      },
      m.params());
  out << "block embedding " << state.embedding.values.size() << '\n';
  write_values(out, {state.embedding.values.data(), static_cast<std::size_t>(state.embedding.values.size())});
  for (std::size_t k = 0; k < state.adam.m.size(); ++k) {
    out << "moments " << state.adam.names[k] << ' ' << state.adam.m[k].size() << '\n';
    write_values(out, state.adam.m[k]);
    write_values(out, state.adam.v[k]);
  }
  out << "end\n";
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

TrainingState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::string p = path.string();
  expect_keyword(in, p, "nedp-checkpoint");
  if (read_number<int>(in, p) != 1) throw ValidationError("checkpoint '" + p + "': unsupported version");
  expect_keyword(in, p, "cell");
  const CellKind cell = parse_cell_kind(expect_token(in, p));
  expect_keyword(in, p, "vocab");
  const auto vocab = read_number<std::size_t>(in, p);
  expect_keyword(in, p, "dim");
  const auto dim = read_number<std::size_t>(in, p);
  expect_keyword(in, p, "hidden");
  const auto hidden = read_number<std::size_t>(in, p);
  expect_keyword(in, p, "options");
  ModelOptions options;
  options.use_bias = read_number<int>(in, p) != 0;
  options.output_bias = read_number<int>(in, p) != 0;
  options.tie_output = read_number<int>(in, p) != 0;

  TrainingState state{PredictionModel(cell, vocab, dim, hidden, options), EmbeddingMatrix{}, AdamState{}, 0};
  expect_keyword(in, p, "epochs_done");
  state.epochs_done = read_number<std::size_t>(in, p);
  expect_keyword(in, p, "adam");
  state.adam.lr = read_number<double>(in, p);
  state.adam.beta1 = read_number<double>(in, p);
  state.adam.beta2 = read_number<double>(in, p);
  state.adam.eps = read_number<double>(in, p);
  state.adam.t = read_number<std::size_t>(in, p);

  std::visit(
      [&](auto& params) {
        for_each_block(params, [&](std::string_view name, std::span<double> v) {
          expect_keyword(in, p, "block");
          expect_keyword(in, p, name);
          if (read_number<std::size_t>(in, p) != v.size()) {
            throw ValidationError("checkpoint '" + p + "': block '" + std::string(name) + "' has the wrong size");
          }
          read_values(in, p, v);
        });
      },
      state.model.params());
  expect_keyword(in, p, "block");
  expect_keyword(in, p, "embedding");
  if (read_number<std::size_t>(in, p) != vocab * dim) throw ValidationError("checkpoint '" + p + "': bad embedding size");
  state.embedding.values.resize(idx(vocab), idx(dim));
  read_values(in, p, flat(state.embedding.values));

  for (std::string token = expect_token(in, p); token != "end"; token = expect_token(in, p)) {
    if (token != "moments") throw ValidationError("checkpoint '" + p + "': unexpected '" + token + "'");
    state.adam.names.push_back(expect_token(in, p));
    const auto size = read_number<std::size_t>(in, p);
    state.adam.m.emplace_back(size);
    state.adam.v.emplace_back(size);
    read_values(in, p, state.adam.m.back());
    read_values(in, p, state.adam.v.back());
  }
  return state;
}

}  // namespace nedp
