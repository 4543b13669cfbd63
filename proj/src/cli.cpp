#include "nedp/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "nedp/error.hpp"
#include "nedp/eval.hpp"
#include "nedp/format.hpp"
#include "nedp/log.hpp"
#include "nedp/pipeline.hpp"
#include "nedp/rng.hpp"
#include "nedp/synthetic.hpp"

namespace nedp {

namespace {

namespace fs = std::filesystem;

struct Options {
  // common
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  bool paper_scale = false;

  // graph input
  std::string graph;
  bool directed = false;
  bool weighted = false;

  // walks
  std::string strategy = "degree_weight";
  std::size_t walks_per_node = 10;
  std::size_t walk_length = 40;
  double dw_alpha = 1.0;
  double p = 1.0;
  double q = 1.0;
  std::string output;

  // training
  std::string corpus;
  std::string cell = "lstm";
  std::size_t dim = 16;
  std::size_t hidden = 0;
  double lr = 0.001;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  bool tie_output = false;
  bool no_bias = false;
  bool no_output_bias = false;
  double lap_eta = 0.01;
  std::size_t lap_steps = 5;
  std::string lap_schedule = "after_each_epoch";
  double converge_tol = 1e-4;
  std::size_t converge_window = 3;
  std::string checkpoint;
  std::string export_hidden;

  // evaluation
  std::string task;
  std::string embeddings;
  std::string labels;
  std::size_t clusters = 0;
  std::vector<double> train_ratios{0.5};
  std::vector<std::size_t> k_list{0};
  std::string similarity = "inner_product";
  std::size_t max_nodes = 5000;
  std::string edge_op = "all";
  double removal = 0.15;
  double l2 = 1.0;

  // generation
  std::string model = "planted";
  std::vector<std::size_t> sizes{50, 50};
  double p_in = 0.15;
  double p_out = 0.01;
  std::size_t nodes = 50;
  double p_edge = 0.1;
  std::size_t hubs = 0;
  double hub_p_in = 0.5;
  double hub_p_out = 0.05;
  std::string labels_output;
};

using ConfigList = std::vector<std::pair<std::string, std::string>>;

std::string fmt(double v) { return format_double(v); }

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(values[i]);
    } else {
      s += std::to_string(values[i]);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Option registration

void add_common(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "Random seed shared by every stage")->capture_default_str();
  app->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
}

void add_graph(CLI::App* app, Options& o, bool required) {
  auto* opt = app->add_option("--graph", o.graph, "Edge list: 'u v [w]' per line, '#' comments");
  if (required) opt->required();
  app->add_flag("--directed", o.directed, "Treat edges as directed");
  app->add_flag("--weighted", o.weighted, "Read the third column as the edge weight");
}

void add_walk(CLI::App* app, Options& o) {
  app->add_flag("--paper-scale", o.paper_scale, "Preset d=128, walk length 100, 30 walks per node");
  app->add_option("--strategy", o.strategy, "truncated | biased | degree_weight")->capture_default_str();
  app->add_option("--walks-per-node,--gamma", o.walks_per_node, "Walks started from every node (gamma)")->capture_default_str();
  app->add_option("--walk-length", o.walk_length, "Nodes per walk (l)")->capture_default_str();
  app->add_option("--dw-alpha", o.dw_alpha, "Degree-weight smoothing alpha")->capture_default_str();
  app->add_option("--p", o.p, "Return parameter of the biased strategy")->capture_default_str();
  app->add_option("--q", o.q, "In-out parameter of the biased strategy")->capture_default_str();
}

void add_train(CLI::App* app, Options& o) {
  app->add_option("--cell", o.cell, "rnn | lstm")->capture_default_str();
  app->add_option("--dim", o.dim, "Embedding dimension d")->capture_default_str();
  app->add_option("--hidden", o.hidden, "Hidden size (0: same as --dim)")->capture_default_str();
  app->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  app->add_option("--epochs", o.epochs, "Epoch budget")->capture_default_str();
  app->add_option("--batch-size", o.batch_size, "Walks per mini-batch")->capture_default_str();
  app->add_flag("--tie-output", o.tie_output, "Share the output projection with the embedding table");
  app->add_flag("--no-bias", o.no_bias, "Disable recurrent-cell biases");
  app->add_flag("--no-output-bias", o.no_output_bias, "Disable the output-layer bias");
  app->add_option("--lap-eta", o.lap_eta, "LapEO step size")->capture_default_str();
  app->add_option("--lap-steps", o.lap_steps, "LapEO steps per epoch (0 disables)")->capture_default_str();
  app->add_option("--lap-schedule", o.lap_schedule, "after_each_epoch | final_only")->capture_default_str();
  app->add_option("--converge-tol", o.converge_tol, "Relative loss change treated as converged")->capture_default_str();
  app->add_option("--converge-window", o.converge_window, "Consecutive flat epochs to stop (0: never)")
      ->capture_default_str();
}

// ---------------------------------------------------------------------------
// Config file: key=value lines, keys are long option names without dashes.

ConfigList read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  ConfigList entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), line_no, "expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw ParseError(path.string(), line_no, "empty key");
    entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return entries;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(), [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

// Config entries become "--key=value" arguments placed right after the
// subcommand, skipping keys already given explicitly.
std::vector<std::string> merge_config(CLI::App& app, std::vector<std::string> args, const fs::path& config) {
  const auto entries = read_config_file(config);
  auto sub_it = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
    return a.rfind("-", 0) != 0 && app.get_subcommand_no_throw(a) != nullptr;
  });
  if (sub_it == args.end()) throw ValidationError("a config file needs a subcommand");
  CLI::App* sub = app.get_subcommand(*sub_it);
  std::vector<std::string> injected;
  for (const auto& [key, value] : entries) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw ValidationError("config key '" + key + "' is not an option of '" + sub->get_name() + "'");
    }
    const auto names = opt->get_lnames();
    const bool given = std::any_of(names.begin(), names.end(), [&](const std::string& n) { return given_on_command_line(args, n); });
    if (!given) injected.push_back("--" + key + "=" + value);
  }
  args.insert(sub_it + 1, injected.begin(), injected.end());
  return args;
}

std::optional<std::string> extract_config_path(std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size();) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ValidationError("--config needs a file name");
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  return path;
}

// ---------------------------------------------------------------------------
// Conversions

void apply_paper_scale(CLI::App* sub, Options& o) {
  if (!o.paper_scale) return;
  if (auto* opt = sub->get_option_no_throw("--dim"); opt && opt->count() == 0) o.dim = 128;
  if (sub->get_option("--walk-length")->count() == 0) o.walk_length = 100;
  if (sub->get_option("--walks-per-node")->count() == 0) o.walks_per_node = 30;
}

WalkConfig walk_config(const Options& o) {
  WalkConfig wc;
  wc.strategy = parse_walk_strategy(o.strategy);
  wc.walks_per_node = o.walks_per_node;
  wc.walk_length = o.walk_length;
  wc.dw_alpha = o.dw_alpha;
  wc.p = o.p;
  wc.q = o.q;
  wc.seed = o.seed;
  wc.validate();
  return wc;
}

PipelineConfig pipeline_config(const Options& o) {
  PipelineConfig cfg;
  cfg.walk = walk_config(o);
  cfg.train.cell = parse_cell_kind(o.cell);
  cfg.train.dim = o.dim;
  cfg.train.hidden = o.hidden;
  cfg.train.lr = o.lr;
  cfg.train.epochs = o.epochs;
  cfg.train.batch_size = o.batch_size;
  cfg.train.seed = o.seed;
  cfg.train.model.tie_output = o.tie_output;
  cfg.train.model.use_bias = !o.no_bias;
  cfg.train.model.output_bias = !o.no_output_bias;
  cfg.train.validate();
  cfg.lap.eta = o.lap_eta;
  cfg.lap.steps_per_epoch = o.lap_steps;
  cfg.lap.schedule = parse_lap_schedule(o.lap_schedule);
  cfg.lap.validate();
  if (!(o.converge_tol >= 0.0)) throw ValidationError("--converge-tol must be >= 0");
  cfg.convergence.tolerance = o.converge_tol;
  cfg.convergence.window = o.converge_window;
  return cfg;
}

ConfigList walk_entries(const Options& o) {
  return {{"strategy", o.strategy},          {"walks-per-node", std::to_string(o.walks_per_node)},
          {"walk-length", std::to_string(o.walk_length)}, {"dw-alpha", fmt(o.dw_alpha)},
          {"p", fmt(o.p)},                   {"q", fmt(o.q)}};
}

ConfigList train_entries(const Options& o) {
  return {{"cell", o.cell},
          {"dim", std::to_string(o.dim)},
          {"hidden", std::to_string(o.hidden == 0 ? o.dim : o.hidden)},
          {"lr", fmt(o.lr)},
          {"epochs", std::to_string(o.epochs)},
          {"batch-size", std::to_string(o.batch_size)},
          {"tie-output", o.tie_output ? "true" : "false"},
          {"no-bias", o.no_bias ? "true" : "false"},
          {"no-output-bias", o.no_output_bias ? "true" : "false"},
          {"lap-eta", fmt(o.lap_eta)},
          {"lap-steps", std::to_string(o.lap_steps)},
          {"lap-schedule", o.lap_schedule},
          {"converge-tol", fmt(o.converge_tol)},
          {"converge-window", std::to_string(o.converge_window)}};
}

ConfigList graph_entries(const Options& o) {
  return {{"graph", o.graph}, {"directed", o.directed ? "true" : "false"}, {"weighted", o.weighted ? "true" : "false"}};
}

void append(ConfigList& to, const ConfigList& from) { to.insert(to.end(), from.begin(), from.end()); }

void write_config_header(std::ostream& out, const ConfigList& config) {
  for (const auto& [k, v] : config) out << "# " << k << '=' << v << '\n';
}

fs::path output_path(const Options& o, const std::string& name) {
  fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir / name;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

Graph load_graph(const Options& o) { return load_edge_list(o.graph, o.directed, o.weighted); }

// ---------------------------------------------------------------------------
// Commands

int cmd_generate(const Options& o, std::ostream& out) {
  LabeledGraph lg;
  if (o.model == "planted") {
    lg = connected_planted_partition(o.sizes, o.p_in, o.p_out, o.seed);
    if (o.hubs > 0) lg = add_hubs(lg, o.hubs, o.hub_p_in, o.hub_p_out, mix_seed(o.seed, 0x4B));
  } else if (o.model == "er") {
    lg.graph = connected_erdos_renyi(o.nodes, o.p_edge, o.seed);
    lg.block.assign(lg.graph.node_count(), 0);
  } else {
    throw ValidationError("unknown --model '" + o.model + "' (planted, er)");
  }
  const fs::path edges = o.output.empty() ? output_path(o, "graph.txt") : fs::path(o.output);
  write_edge_list(lg.graph, edges);
  out << "wrote " << lg.graph.node_count() << " nodes, " << lg.graph.edge_count() << " edges to " << edges.string()
      << '\n';
  if (!o.labels_output.empty()) {
    auto f = open_output(o.labels_output);
    for (NodeId u = 0; u < lg.graph.node_count(); ++u) f << lg.graph.original_id(u) << ' ' << lg.block[u] << '\n';
    if (!f) throw IoError("write failed for '" + o.labels_output + "'");
    out << "wrote labels to " << o.labels_output << '\n';
  }
  return 0;
}

int cmd_walk(const Options& o, std::ostream& out) {
  const WalkConfig wc = walk_config(o);
  const Graph g = load_graph(o);
  const WalkCorpus corpus = generate_corpus(g, wc);
  const fs::path path = o.output.empty() ? output_path(o, "corpus.txt") : fs::path(o.output);
  write_corpus(corpus, g, path);
  out << "walks: " << corpus.size() << ", mean length: " << fmt(corpus.mean_length()) << ", written to "
      << path.string() << '\n';
  return 0;
}

void write_loss_csv(const fs::path& path, const ConfigList& config, const std::vector<EpochRecord>& history) {
  auto f = open_output(path);
  write_config_header(f, config);
  f << "epoch,pred_loss,lap_loss\n";
  for (const auto& r : history) f << r.epoch << ',' << fmt(r.pred_loss) << ',' << fmt(r.lap_loss) << '\n';
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

int cmd_train(const Options& o, std::ostream& out) {
  const PipelineConfig cfg = pipeline_config(o);
  const Graph g = load_graph(o);
  ConfigList config{{"command", "train"}, {"seed", std::to_string(o.seed)}};
  append(config, graph_entries(o));
  if (o.corpus.empty()) {
    append(config, walk_entries(o));
  } else {
    config.emplace_back("corpus", o.corpus);
  }
  append(config, train_entries(o));

  const WalkCorpus corpus = o.corpus.empty() ? generate_corpus(g, cfg.walk) : read_corpus(g, fs::path(o.corpus));
  const AlternatingResult result = run_training(g, corpus, cfg);

  const fs::path emb_path = output_path(o, "embeddings.txt");
  write_embeddings(result.state.embedding, g.original_ids(), emb_path);
  write_loss_csv(output_path(o, "loss.csv"), config, result.history);
  {
    auto f = open_output(output_path(o, "run_config.txt"));
    for (const auto& [k, v] : config) f << k << '=' << v << '\n';
  }
  if (!o.checkpoint.empty()) save_checkpoint(result.state, o.checkpoint);
  if (!o.export_hidden.empty()) {
    EmbeddingMatrix hidden{result.state.model.mean_hidden_states(result.state.embedding, corpus)};
    write_embeddings(hidden, g.original_ids(), fs::path(o.export_hidden));
  }

  out << "trained " << result.history.size() << " epoch(s) on " << corpus.size() << " walks";
  if (!result.history.empty()) {
    out << "; final pred_loss " << fmt(result.history.back().pred_loss) << ", lap_loss "
        << fmt(result.history.back().lap_loss);
  }
  out << (result.converged ? " (converged)" : "") << "\nembeddings: " << emb_path.string() << '\n';
  return 0;
}

EmbeddingMatrix load_aligned_embeddings(const Options& o, std::optional<Graph>& graph) {
  if (o.embeddings.empty()) throw ValidationError("--embeddings is required for this task");
  LoadedEmbeddings loaded = read_embeddings(fs::path(o.embeddings));
  if (!graph) {
    graph = Graph::from_edges(loaded.ids.size(), {}, false, loaded.ids);
    return loaded.embedding;
  }
  return align_embeddings(loaded, *graph);
}

void write_report(const Options& o, const EvalReport& report, std::ostream& out) {
  {
    auto f = open_output(output_path(o, report.task + "_report.csv"));
    write_report_csv(report, f);
  }
  {
    auto f = open_output(output_path(o, report.task + "_report.txt"));
    write_report_text(report, f);
  }
  write_report_text(report, out);
}

int cmd_eval(const Options& o, std::ostream& out) {
  std::optional<Graph> graph;
  if (!o.graph.empty()) graph = load_graph(o);
  ConfigList config{{"seed", std::to_string(o.seed)}};
  if (graph) append(config, graph_entries(o));

  EvalReport report;
  if (o.task == "cluster" || o.task == "classify") {
    if (o.labels.empty()) throw ValidationError("task '" + o.task + "' needs --labels");
    const EmbeddingMatrix emb = load_aligned_embeddings(o, graph);
    const LabelSet labels = load_labels(o.labels, *graph);
    config.emplace_back("embeddings", o.embeddings);
    config.emplace_back("labels", o.labels);
    if (o.task == "cluster") {
      report = cluster_eval(emb, labels, o.clusters, o.seed);
    } else {
      ClassifyOptions opts;
      opts.logreg.l2 = o.l2;
      report = classify_eval(emb, labels, o.train_ratios, o.seed, opts);
    }
  } else if (o.task == "reconstruct") {
    if (!graph) throw ValidationError("task 'reconstruct' needs --graph");
    const EmbeddingMatrix emb = load_aligned_embeddings(o, graph);
    ReconstructionOptions opts;
    opts.similarity = parse_similarity(o.similarity);
    opts.max_nodes = o.max_nodes;
    opts.seed = o.seed;
    const auto r = reconstruction_eval(emb, *graph, o.k_list, opts);
    report.task = "reconstruct";
    config.emplace_back("embeddings", o.embeddings);
    config.emplace_back("similarity", o.similarity);
    config.emplace_back("k-list", join(o.k_list));
    config.emplace_back("max-nodes", std::to_string(o.max_nodes));
    config.emplace_back("evaluated_nodes", std::to_string(r.evaluated_nodes));
    config.emplace_back("true_edges", std::to_string(r.edge_count));
    for (const auto& [k, p] : r.precision_at_k) report.add("k=" + std::to_string(k), "precision", p);
    report.add("", "map", r.map);
    auto f = open_output(output_path(o, "precision_at_k.csv"));
    write_config_header(f, config);
    f << "k,precision\n";
    for (const auto& [k, p] : r.precision_at_k) f << k << ',' << fmt(p) << '\n';
  } else if (o.task == "linkpred") {
    if (!graph) throw ValidationError("task 'linkpred' needs --graph");
    if (!o.embeddings.empty()) {
      throw ValidationError("task 'linkpred' retrains on the training graph; drop --embeddings");
    }
    const auto ops = parse_edge_operators(o.edge_op);
    const PipelineConfig cfg = pipeline_config(o);
    const EdgeSplit split = split_edges(*graph, o.removal, o.seed);
    const auto trained = run_pipeline(split.train_graph, cfg);
    append(config, walk_entries(o));
    append(config, train_entries(o));
    config.emplace_back("removal", fmt(o.removal));
    config.emplace_back("edge-op", o.edge_op);
    config.emplace_back("l2", fmt(o.l2));
    config.emplace_back("test_positive", std::to_string(split.test_positive.size()));
    config.emplace_back("test_negative", std::to_string(split.test_negative.size()));
    report.task = "linkpred";
    LogRegConfig lr;
    lr.l2 = o.l2;
    std::vector<LinkPredictionResult> results;
    for (EdgeOperator op : ops) {
      results.push_back(link_prediction_eval(trained.training.state.embedding, split, op, o.seed, lr));
      const std::string setting = "op=" + std::string(to_string(op));
      report.add(setting, "auc", results.back().metrics.auc);
      report.add(setting, "ap", results.back().metrics.ap);
    }
    auto f = open_output(output_path(o, "linkpred.csv"));
    write_config_header(f, config);
    f << "op,auc,ap\n";
    for (const auto& r : results) f << to_string(r.op) << ',' << fmt(r.metrics.auc) << ',' << fmt(r.metrics.ap) << '\n';
  } else {
    throw ValidationError("unknown --task '" + o.task + "' (cluster, classify, reconstruct, linkpred)");
  }
  for (const auto& [k, v] : config) report.set_config(k, v);
  write_report(o, report, out);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& input_args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Network embedding with degree-weight walks, recurrent prediction and Laplacian refinement", "nedp"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  app.footer("Every subcommand also accepts --config FILE with key=value lines (keys are long option names); "
             "flags given on the command line win.");

  auto* gen = app.add_subcommand("generate", "Write a synthetic graph (planted partition or Erdos-Renyi)");
  add_common(gen, o);
  gen->add_option("--model", o.model, "planted | er")->capture_default_str();
  gen->add_option("--sizes", o.sizes, "Block sizes of the planted partition")->delimiter(',')->capture_default_str();
  gen->add_option("--p-in", o.p_in, "Edge probability inside a block")->capture_default_str();
  gen->add_option("--p-out", o.p_out, "Edge probability across blocks")->capture_default_str();
  gen->add_option("--nodes", o.nodes, "Node count of the Erdos-Renyi model")->capture_default_str();
  gen->add_option("--p-edge", o.p_edge, "Edge probability of the Erdos-Renyi model")->capture_default_str();
  gen->add_option("--hubs", o.hubs, "Hub nodes appended to the planted partition")->capture_default_str();
  gen->add_option("--hub-p-in", o.hub_p_in, "Hub edge probability inside its block")->capture_default_str();
  gen->add_option("--hub-p-out", o.hub_p_out, "Hub edge probability to other blocks")->capture_default_str();
  gen->add_option("--output", o.output, "Edge list path (default OUT/graph.txt)");
  gen->add_option("--labels-output", o.labels_output, "Also write 'node block' labels here");

  auto* walk = app.add_subcommand("walk", "Sample a walk corpus from a graph");
  add_common(walk, o);
  add_graph(walk, o, true);
  add_walk(walk, o);
  walk->add_option("--output", o.output, "Corpus path (default OUT/corpus.txt)");

  auto* train = app.add_subcommand("train", "Train embeddings: prediction model alternated with LapEO");
  add_common(train, o);
  add_graph(train, o, true);
  add_walk(train, o);
  add_train(train, o);
  train->add_option("--corpus", o.corpus, "Use this corpus instead of sampling walks");
  train->add_option("--checkpoint", o.checkpoint, "Write the final model, embedding and optimizer state here");
  train->add_option("--export-hidden", o.export_hidden, "Write mean hidden states per node (debugging aid)");

  auto* eval = app.add_subcommand("eval", "Evaluate embeddings on a downstream task");
  add_common(eval, o);
  add_graph(eval, o, false);
  add_walk(eval, o);
  add_train(eval, o);
  eval->add_option("--task", o.task, "cluster | classify | reconstruct | linkpred")->required();
  eval->add_option("--embeddings", o.embeddings, "Embedding file written by 'train'");
  eval->add_option("--labels", o.labels, "Label file: 'node label [label ...]' per line");
  eval->add_option("--clusters", o.clusters, "k for k-means (0: number of classes)")->capture_default_str();
  eval->add_option("--train-ratio", o.train_ratios, "Training share(s), comma separated")->delimiter(',')
      ->capture_default_str();
  eval->add_option("--k-list", o.k_list, "K values for precision@K (0: number of edges)")->delimiter(',')
      ->capture_default_str();
  eval->add_option("--similarity", o.similarity, "inner_product | cosine")->capture_default_str();
  eval->add_option("--max-nodes", o.max_nodes, "Reconstruction sample cap")->capture_default_str();
  eval->add_option("--edge-op", o.edge_op, "cascade | average | hadamard | l1 | l2 | all")->capture_default_str();
  eval->add_option("--removal", o.removal, "Edge share removed for link prediction")->capture_default_str();
  eval->add_option("--l2", o.l2, "Logistic-regression penalty")->capture_default_str();

  try {
    std::vector<std::string> args = input_args;
    if (auto config = extract_config_path(args)) args = merge_config(app, args, *config);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  WarningSink previous = set_warning_sink([&err](const std::string& m) { err << "warning: " << m << '\n'; });
  int code = 1;
  try {
    if (gen->parsed()) {
      code = cmd_generate(o, out);
    } else if (walk->parsed()) {
      apply_paper_scale(walk, o);
      code = cmd_walk(o, out);
    } else if (train->parsed()) {
      apply_paper_scale(train, o);
      code = cmd_train(o, out);
    } else {
      apply_paper_scale(eval, o);
      code = cmd_eval(o, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    code = 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = 1;
  }
  set_warning_sink(std::move(previous));
  return code;
}

}  // namespace nedp
