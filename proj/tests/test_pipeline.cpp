#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "walkbench/pipeline.hpp"

using namespace walkbench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("walkbench_pipe_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Ring of n labelled nodes with chords every third node.
fs::path write_ring(const fs::path& dir, const std::string& name, int n) {
  const auto path = dir / (name + ".edges");
  std::ofstream out(path);
  out << "# ring with chords\n";
  for (int i = 0; i < n; ++i) out << "n" << i << ' ' << "n" << (i + 1) % n << '\n';
  for (int i = 0; i < n; i += 3) out << "n" << i << ' ' << "n" << (i + n / 2) % n << '\n';
  return path;
}

ExperimentConfig tiny_config(const fs::path& data, const fs::path& out) {
  std::istringstream in("walks = RW; N2V(1, 1); TSAW; DG\n"
                        "beta = 3\nalpha = 12\ndim = 8\nwindow = 3\nnegatives = 2\nepochs = 2\nseed = 5\n");
  ExperimentConfig cfg = read_config(in);
  cfg.graphs = {(data / "alpha.edges").string(), (data / "beta.edges").string()};
  cfg.output_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in(
      "# comment line\n"
      "graphs = a.edges b.edges   # trailing comment\n"
      "walks = RW N2V(0.5, 2) TSAW\n"
      "beta = 10\n"
      "alpha = 50\n"
      "dim = 32\n"
      "mode = async\n"
      "train_threads = 2\n"
      "seed = 99\n"
      "\n");
  const auto cfg = read_config(in);
  CHECK(cfg.graphs == std::vector<std::string>{"a.edges", "b.edges"});
  REQUIRE(cfg.walks.size() == 3);
  CHECK(cfg.walks[1].name() == "N2V(0.5, 2)");
  CHECK(cfg.walks_per_node == 10);
  CHECK(cfg.walk_length == 50);
  CHECK(cfg.train.dim == 32);
  CHECK(cfg.train.mode == TrainMode::kAsync);
  CHECK(cfg.train.threads == 2);
  CHECK(cfg.master_seed == 99);
  CHECK_NOTHROW(cfg.validate());

  const ExperimentConfig defaults;
  CHECK(defaults.walks.size() == 9);
  CHECK(defaults.walks_per_node == 40);
  CHECK(defaults.walk_length == 200);
  CHECK(defaults.train.dim == 128);
  CHECK(defaults.split_fraction == 0.25);
}

TEST_CASE("config errors surface before any work") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_config(in);
  };
  CHECK_THROWS_AS(parse("bogus_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("walks = RW XYZ\n"), ConfigError);
  CHECK_THROWS_AS(parse("beta = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse("no equals sign\n"), ConfigError);

  TempDir dir("cfgerr");
  auto cfg = parse("walks = RW RW\n");
  cfg.graphs = {"missing.edges"};
  cfg.output_dir = dir.path / "out";
  CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
  CHECK_FALSE(fs::exists(cfg.output_dir));

  auto frac = parse("split_fraction = 1.5\n");
  frac.graphs = {"x"};
  CHECK_THROWS_AS(frac.validate(), ConfigError);

  // A graph that is neither a file nor in a manifest is a config problem.
  auto unknown = parse("");
  unknown.graphs = {"no_such_graph"};
  unknown.output_dir = dir.path / "out2";
  CHECK_THROWS_AS(run_pipeline(unknown), ConfigError);
}

TEST_CASE("seed derivation is keyed by name") {
  const auto walks = default_walks();
  CHECK(split_seed(1, "a") == split_seed(1, "a"));
  CHECK(split_seed(1, "a") != split_seed(1, "b"));
  CHECK(split_seed(1, "a") != split_seed(2, "a"));
  CHECK(walk_seed(1, "a", walks[0]) != walk_seed(1, "a", walks[1]));
  CHECK(walk_seed(1, "a", walks[0]) != train_seed(1, "a", walks[0]));
  // The walk seed on the config itself does not feed back into the derivation.
  WalkConfig seeded = walks[0];
  seeded.seed = 12345;
  CHECK(walk_seed(1, "a", seeded) == walk_seed(1, "a", walks[0]));
}

TEST_CASE("prepared graph round trip") {
  TempDir dir("prep");
  const auto path = write_ring(dir.path, "ring", 24);
  const auto p = prepare_graph(path, "ring", 0.25, 7);
  // 24 ring edges plus 4 distinct chords (i and i + 12 pair up).
  CHECK(p.original_edges == 28);
  CHECK(p.labels.num_positive() == 7);
  CHECK(p.labels.num_negative() == 7);
  CHECK(p.residual.num_edges() == 21);
  CHECK(p.node_labels.size() == 24);

  write_prepared(dir.path / "prep", p);
  const auto q = read_prepared(dir.path / "prep");
  CHECK(q.name == "ring");
  CHECK(q.residual == p.residual);
  CHECK(q.labels == p.labels);
  CHECK(q.node_labels == p.node_labels);
  CHECK(q.original_edges == p.original_edges);

  // Same seed, same split.
  CHECK(prepare_graph(path, "ring", 0.25, 7).labels == p.labels);
}

TEST_CASE("score file round trip keeps exact doubles") {
  const LabeledEdgeSet labels({{0, 1, EdgeLabel::kPositive},
                               {1, 2, EdgeLabel::kPositive},
                               {0, 3, EdgeLabel::kNegative},
                               {2, 3, EdgeLabel::kNegative}});
  ScoreVector s;
  s.walk_id = "N2V(1, 1)";
  s.scores = {0.1 + 0.2, -1.0 / 3.0, 5e-324, 1.0};
  s.undefined = 1;
  const auto walk = WalkConfig::parse("N2V(1, 1)");
  std::stringstream buf;
  write_scores(buf, "g", walk, 4, labels, s);
  const auto f = read_scores(buf);
  CHECK(f.graph == "g");
  CHECK(f.walk_slug == walk.slug());
  CHECK(f.order == 4);
  CHECK(f.labels == labels);
  CHECK(f.scores.scores == s.scores);
  CHECK(f.scores.undefined == 1);
  CHECK(f.scores.walk_id == "N2V(1, 1)");
}

TEST_CASE("report stage with no scores writes nothing") {
  TempDir dir("empty");
  CHECK_THROWS(report_stage(dir.path, dir.path / "report"));
  CHECK_FALSE(fs::exists(dir.path / "report" / "report.json"));
}

TEST_CASE("small pipeline run: layout, determinism, composition") {
  TempDir dir("run");
  write_ring(dir.path, "alpha", 30);
  write_ring(dir.path, "beta", 40);

  auto cfg = tiny_config(dir.path, dir.path / "run1");
  const auto result = run_pipeline(cfg);
  CHECK(result.failures.empty());
  REQUIRE(result.report.graphs.size() == 2);
  for (const auto& g : result.report.graphs) {
    REQUIRE(g.metrics.size() == 4);
    CHECK(g.metrics[0].walk == "RW");
    CHECK(g.metrics[1].walk == "N2V(1, 1)");
    CHECK(g.correlation.size() == 4);
  }
  for (const auto& name : {"alpha", "beta"}) {
    for (const auto& w : cfg.walks) {
      CHECK(fs::exists(corpus_path(cfg.output_dir, name, w)));
      CHECK(fs::exists(embedding_path(cfg.output_dir, name, w)));
      CHECK(fs::exists(scores_path(cfg.output_dir, name, w)));
    }
    CHECK(fs::exists(cfg.output_dir / ("corr_" + std::string(name) + ".csv")));
    CHECK(fs::exists(cfg.output_dir / "plotdata" / ("scatter_" + std::string(name) + ".csv")));
  }
  for (const auto* f : {"report.json", "corr_median.csv", "manifest.json", "timings.tsv",
                        "plotdata/heatmap_median_correlation.csv", "plotdata/auc_by_graph.csv",
                        "plotdata/auc_pairs.csv", "plotdata/extreme_pairs.csv"}) {
    CHECK_MESSAGE(fs::exists(cfg.output_dir / f), f);
  }
  const std::string report1 = slurp(cfg.output_dir / "report.json");

  SUBCASE("rerun and worker count do not change the report") {
    auto again = tiny_config(dir.path, dir.path / "run2");
    again.threads = 3;
    run_pipeline(again);
    CHECK(slurp(again.output_dir / "report.json") == report1);
    CHECK(slurp(again.output_dir / "corr_median.csv") == slurp(cfg.output_dir / "corr_median.csv"));
  }

  SUBCASE("stage functions compose to the same report") {
    const fs::path root = dir.path / "staged";
    for (const auto& name : {"alpha", "beta"}) {
      const auto prep = prepare_graph(dir.path / (std::string(name) + ".edges"), name, cfg.split_fraction,
                                      split_seed(cfg.master_seed, name));
      write_prepared(prepared_dir(root, name), prep);
      const auto reread = read_prepared(prepared_dir(root, name));
      for (std::size_t i = 0; i < cfg.walks.size(); ++i) {
        WalkConfig w = cfg.walks[i];
        w.walks_per_node = cfg.walks_per_node;
        w.max_length = cfg.walk_length;
        w.seed = walk_seed(cfg.master_seed, name, w);
        std::stringstream corpus_buf;
        write_corpus(corpus_buf, generate_corpus(reread.residual, w), w);
        const auto corpus = read_corpus(corpus_buf);
        TrainConfig t = cfg.train;
        t.seed = train_seed(cfg.master_seed, name, w);
        std::stringstream emb_buf;
        write_embedding_binary(emb_buf, train_sgns(corpus, t, reread.residual.num_nodes()).embedding);
        const auto emb = read_embedding(emb_buf);
        fs::create_directories(scores_path(root, name, w).parent_path());
        std::ofstream out(scores_path(root, name, w));
        write_scores(out, name, w, i, reread.labels, score_edges(emb, reread.labels, w.name()));
      }
    }
    report_stage(root, root);
    CHECK(slurp(root / "report.json") == report1);
  }
}

TEST_CASE("failed graph is reported and the rest still run") {
  TempDir dir("partial");
  write_ring(dir.path, "alpha", 30);
  {
    std::ofstream(dir.path / "tiny.edges") << "a b\nb c\n";
  }
  auto cfg = tiny_config(dir.path, dir.path / "out");
  cfg.graphs = {(dir.path / "alpha.edges").string(), (dir.path / "tiny.edges").string()};
  const auto result = run_pipeline(cfg);
  REQUIRE(result.failures.size() == 1);
  CHECK(result.failures[0].graph == "tiny");
  CHECK(result.report.graphs.size() == 1);
  const std::string report = slurp(cfg.output_dir / "report.json");
  CHECK(report.find("\"failures\"") != std::string::npos);
  CHECK(report.find("tiny") != std::string::npos);
}
