#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nedp/cli.hpp"
#include "nedp/embedding.hpp"
#include "nedp/graph.hpp"
#include "nedp/seq_model.hpp"
#include "nedp/walk.hpp"
#include "support.hpp"

using namespace nedp;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Fresh scratch directory per test case.
class Scratch {
 public:
  explicit Scratch(const std::string& name) : dir_(fs::temp_directory_path() / ("nedp_cli_" + name)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  std::string operator/(const std::string& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

const char* triangle = "a b\nb c\nc a\n";

// Two 6-cliques joined by one edge.
std::string two_cliques() {
  std::string s;
  for (int block = 0; block < 2; ++block)
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j) s += std::to_string(block * 6 + i) + " " + std::to_string(block * 6 + j) + "\n";
  return s + "0 6\n";
}

std::string clique_labels() {
  std::string s;
  for (int i = 0; i < 12; ++i) s += std::to_string(i) + (i < 6 ? " left\n" : " right\n");
  return s;
}

}  // namespace

TEST_CASE("walk on a triangle writes gamma * n walks of length l") {
  Scratch tmp("walk");
  spit(tmp / "g.txt", triangle);
  auto r = cli({"walk", "--graph", tmp / "g.txt", "--walks-per-node", "2", "--walk-length", "4", "--out", tmp / "o"});
  REQUIRE(r.code == 0);
  auto g = load_edge_list(tmp / "g.txt", false, false);
  auto corpus = read_corpus(g, fs::path(tmp / "o/corpus.txt"));
  CHECK(corpus.size() == 6);
  for (const auto& w : corpus.walks) {
    CHECK(w.size() == 4);
    for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i] != w[i - 1]);
  }
}

TEST_CASE("same seed gives byte-identical outputs, different seed differs") {
  Scratch tmp("determinism");
  spit(tmp / "g.txt", two_cliques());
  auto train = [&](const std::string& dir, const std::string& seed) {
    return cli({"train", "--graph", tmp / "g.txt", "--epochs", "2", "--dim", "4", "--walks-per-node", "2",
                "--walk-length", "6", "--seed", seed, "--out", tmp / dir});
  };
  REQUIRE(train("a", "5").code == 0);
  REQUIRE(train("b", "5").code == 0);
  REQUIRE(train("c", "6").code == 0);
  for (const char* f : {"embeddings.txt", "loss.csv", "run_config.txt"}) {
    CHECK(slurp(tmp / (std::string("a/") + f)) == slurp(tmp / (std::string("b/") + f)));
  }
  CHECK(slurp(tmp / "a/embeddings.txt") != slurp(tmp / "c/embeddings.txt"));
}

TEST_CASE("zero epochs exports the seeded initialization") {
  Scratch tmp("init");
  spit(tmp / "g.txt", triangle);
  auto r = cli({"train", "--graph", tmp / "g.txt", "--epochs", "0", "--dim", "3", "--seed", "9", "--out", tmp / "o"});
  REQUIRE(r.code == 0);
  auto loaded = read_embeddings(fs::path(tmp / "o/embeddings.txt"));
  auto g = load_edge_list(tmp / "g.txt", false, false);
  TrainConfig cfg;
  cfg.dim = 3;
  cfg.seed = 9;
  testing::WarningCapture quiet;
  auto init = TrainingState::initialize(3, cfg);
  CHECK(align_embeddings(loaded, g).values == init.embedding.values);
  // header plus column names only
  auto loss = slurp(tmp / "o/loss.csv");
  CHECK(loss.substr(loss.size() - std::string("epoch,pred_loss,lap_loss\n").size()) == "epoch,pred_loss,lap_loss\n");
}

TEST_CASE("both cells train and export hidden states of the requested size") {
  Scratch tmp("cells");
  spit(tmp / "g.txt", two_cliques());
  for (const std::string cell : {"rnn", "lstm"}) {
    auto r = cli({"train", "--graph", tmp / "g.txt", "--cell", cell, "--epochs", "2", "--dim", "4", "--hidden", "5",
                  "--walks-per-node", "2", "--walk-length", "5", "--out", tmp / cell, "--export-hidden",
                  tmp / (cell + "_hidden.txt"), "--checkpoint", tmp / (cell + ".ckpt")});
    REQUIRE(r.code == 0);
    auto emb = read_embeddings(fs::path(tmp / (cell + "/embeddings.txt")));
    CHECK(emb.ids.size() == 12);
    CHECK(emb.embedding.values.cols() == 4);
    auto hidden = read_embeddings(fs::path(tmp / (cell + "_hidden.txt")));
    CHECK(hidden.embedding.values.cols() == 5);
    auto state = load_checkpoint(fs::path(tmp / (cell + ".ckpt")));
    CHECK(state.epochs_done == 2);
    CHECK(state.embedding.values == align_embeddings(emb, load_edge_list(tmp / "g.txt", false, false)).values);

    std::istringstream lines(slurp(tmp / (cell + "/loss.csv")));
    std::string line;
    int rows = 0;
    while (std::getline(lines, line)) rows += !line.empty() && line[0] != '#' && line[0] != 'e';
    CHECK(rows == 2);
  }
}

TEST_CASE("exit codes") {
  Scratch tmp("codes");
  spit(tmp / "g.txt", triangle);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"train", "--help"}).code == 0);
  CHECK(cli({}).code == 1);
  CHECK(cli({"explode"}).code == 1);
  CHECK(cli({"walk"}).code == 1);  // missing --graph
  CHECK(cli({"walk", "--graph", tmp / "missing.txt"}).code == 2);
  CHECK(cli({"walk", "--graph", tmp / "g.txt", "--strategy", "levy", "--out", tmp / "o"}).code == 1);
  CHECK(cli({"walk", "--graph", tmp / "g.txt", "--walk-length", "1", "--out", tmp / "o"}).code == 1);
  CHECK(cli({"walk", "--graph", tmp / "g.txt", "--walk-length", "x"}).code == 1);
  CHECK(cli({"train", "--graph", tmp / "g.txt", "--cell", "gru", "--out", tmp / "o"}).code == 1);
  CHECK(cli({"train", "--graph", tmp / "g.txt", "--lr", "-1", "--out", tmp / "o"}).code == 1);
  CHECK(cli({"eval", "--task", "dance", "--out", tmp / "o"}).code == 1);
  CHECK(cli({"eval", "--task", "classify", "--embeddings", tmp / "none.txt", "--labels", tmp / "none.txt"}).code == 2);

  spit(tmp / "bad.txt", "a b\nb\n");
  auto r = cli({"walk", "--graph", tmp / "bad.txt"});
  CHECK(r.code == 1);
  CHECK(r.err.find(":2") != std::string::npos);
}

TEST_CASE("config file fills options not given on the command line") {
  Scratch tmp("config");
  spit(tmp / "g.txt", triangle);
  spit(tmp / "run.cfg", "# comment\nwalks-per-node = 3\nwalk-length=7\nseed=4\n");
  auto r = cli({"walk", "--config", tmp / "run.cfg", "--graph", tmp / "g.txt", "--walk-length", "5", "--out",
                tmp / "o"});
  REQUIRE(r.code == 0);
  auto g = load_edge_list(tmp / "g.txt", false, false);
  auto corpus = read_corpus(g, fs::path(tmp / "o/corpus.txt"));
  CHECK(corpus.size() == 9);
  CHECK(corpus.walks.front().size() == 5);

  // same as spelling everything out
  REQUIRE(cli({"walk", "--graph", tmp / "g.txt", "--walks-per-node", "3", "--walk-length", "5", "--seed", "4", "--out",
               tmp / "p"})
              .code == 0);
  CHECK(slurp(tmp / "o/corpus.txt") == slurp(tmp / "p/corpus.txt"));

  // an alias on the command line still wins over the config key
  REQUIRE(cli({"walk", "--config", tmp / "run.cfg", "--graph", tmp / "g.txt", "--gamma", "1", "--out", tmp / "q"}).code == 0);
  CHECK(read_corpus(g, fs::path(tmp / "q/corpus.txt")).size() == 3);

  spit(tmp / "unknown.cfg", "dim=4\n");
  CHECK(cli({"walk", "--config", tmp / "unknown.cfg", "--graph", tmp / "g.txt"}).code == 1);
  spit(tmp / "broken.cfg", "dim 4\n");
  CHECK(cli({"train", "--config", tmp / "broken.cfg", "--graph", tmp / "g.txt"}).code == 1);
  CHECK(cli({"walk", "--config", tmp / "absent.cfg", "--graph", tmp / "g.txt"}).code == 2);
}

TEST_CASE("paper-scale preset only fills options left at their defaults") {
  Scratch tmp("preset");
  spit(tmp / "g.txt", triangle);
  REQUIRE(cli({"walk", "--graph", tmp / "g.txt", "--paper-scale", "--walk-length", "3", "--out", tmp / "o"}).code == 0);
  auto corpus = read_corpus(load_edge_list(tmp / "g.txt", false, false), fs::path(tmp / "o/corpus.txt"));
  CHECK(corpus.size() == 90);
  CHECK(corpus.walks.front().size() == 3);
}

TEST_CASE("eval tasks write reports") {
  Scratch tmp("eval");
  spit(tmp / "g.txt", two_cliques());
  spit(tmp / "labels.txt", clique_labels());
  // Hand embedding: one-hot of the clique.
  std::string emb = "12 2\n";
  for (int i = 0; i < 12; ++i) emb += std::to_string(i) + (i < 6 ? " 1 0\n" : " 0 1\n");
  spit(tmp / "emb.txt", emb);
  const std::string out = tmp / "o";

  auto r = cli({"eval", "--task", "cluster", "--embeddings", tmp / "emb.txt", "--labels", tmp / "labels.txt", "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("nmi") != std::string::npos);
  CHECK(slurp(out + "/cluster_report.csv").find("cluster,,nmi,1\n") != std::string::npos);

  r = cli({"eval", "--task", "classify", "--graph", tmp / "g.txt", "--embeddings", tmp / "emb.txt", "--labels",
           tmp / "labels.txt", "--train-ratio", "0.5,0.75", "--out", out});
  REQUIRE(r.code == 0);
  auto report = slurp(out + "/classify_report.csv");
  CHECK(report.find("classify,train_ratio=0.5,accuracy,1\n") != std::string::npos);
  CHECK(report.find("classify,train_ratio=0.75,macro_f1,1\n") != std::string::npos);
  CHECK(fs::exists(out + "/classify_report.txt"));

  r = cli({"eval", "--task", "reconstruct", "--graph", tmp / "g.txt", "--embeddings", tmp / "emb.txt", "--k-list",
           "0,5", "--out", out});
  REQUIRE(r.code == 0);
  auto pk = slurp(out + "/precision_at_k.csv");
  CHECK(pk.find("k,precision\n") != std::string::npos);
  CHECK(pk.find("\n31,") != std::string::npos);
  CHECK(pk.find("\n5,1\n") != std::string::npos);

  r = cli({"eval", "--task", "linkpred", "--graph", tmp / "g.txt", "--epochs", "1", "--dim", "4", "--walks-per-node",
           "2", "--walk-length", "5", "--removal", "0.2", "--edge-op", "hadamard,l2", "--out", out});
  INFO(r.err);
  REQUIRE(r.code == 0);
  auto lp = slurp(out + "/linkpred.csv");
  CHECK(lp.find("op,auc,ap\nhadamard,") != std::string::npos);
  CHECK(lp.find("\nl2,") != std::string::npos);

  CHECK(cli({"eval", "--task", "linkpred", "--graph", tmp / "g.txt", "--embeddings", tmp / "emb.txt", "--out", out})
            .code == 1);
  CHECK(cli({"eval", "--task", "reconstruct", "--embeddings", tmp / "emb.txt", "--out", out}).code == 1);
}

TEST_CASE("generate writes a graph and labels the other commands accept") {
  Scratch tmp("generate");
  auto r = cli({"generate", "--sizes", "8,8", "--p-in", "0.6", "--p-out", "0.05", "--hubs", "2", "--output",
                tmp / "g.txt", "--labels-output", tmp / "l.txt", "--seed", "3"});
  REQUIRE(r.code == 0);
  auto g = load_edge_list(tmp / "g.txt", false, false);
  CHECK(g.node_count() == 18);
  CHECK(g.is_connected());
  std::istringstream labels(slurp(tmp / "l.txt"));
  std::string id, block;
  int count = 0;
  while (labels >> id >> block) ++count;
  CHECK(count == 18);
  CHECK(cli({"generate", "--model", "er", "--nodes", "10", "--p-edge", "0.3", "--out", tmp / "er"}).code == 0);
  CHECK(load_edge_list(tmp / "er/graph.txt", false, false).node_count() == 10);
  CHECK(cli({"generate", "--model", "lattice", "--out", tmp / "x"}).code == 1);
}

TEST_CASE("truncated and degree-weight walks coincide on a regular graph") {
  Scratch tmp("regular");
  std::string ring;
  for (int i = 0; i < 8; ++i) ring += std::to_string(i) + " " + std::to_string((i + 1) % 8) + "\n";
  spit(tmp / "g.txt", ring);
  for (const std::string s : {"truncated", "degree_weight"}) {
    REQUIRE(cli({"walk", "--graph", tmp / "g.txt", "--strategy", s, "--walk-length", "12", "--out", tmp / s}).code == 0);
  }
  CHECK(slurp(tmp / "truncated/corpus.txt") == slurp(tmp / "degree_weight/corpus.txt"));
}

TEST_CASE("default training lowers the prediction loss on a planted graph") {
  Scratch tmp("planted");
  REQUIRE(cli({"generate", "--sizes", "15,15", "--p-in", "0.4", "--p-out", "0.05", "--out", tmp / "g"}).code == 0);
  REQUIRE(cli({"train", "--graph", tmp / "g/graph.txt", "--out", tmp / "t"}).code == 0);
  std::istringstream lines(slurp(tmp / "t/loss.csv"));
  std::string line;
  std::vector<double> losses;
  while (std::getline(lines, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'e') continue;
    const auto a = line.find(','), b = line.find(',', a + 1);
    losses.push_back(std::stod(line.substr(a + 1, b - a - 1)));
  }
  REQUIRE(losses.size() >= 2);
  CHECK(losses.back() < losses.front());
}
