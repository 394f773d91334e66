// walkbench: biased random-walk embedding benchmark.
//
//   walkbench run --config desk.conf
//   walkbench prepare --input g.edges --output out/g/prepare
//   walkbench walk --prepared out/g/prepare --walk tsaw --output out/g/corpus/tsaw.walks
//   walkbench embed --corpus out/g/corpus/tsaw.walks --graph g --output out/g/embedding/tsaw.emb
//   walkbench score --prepared out/g/prepare --embedding out/g/embedding/tsaw.emb
//       --walk tsaw --output out/g/scores/tsaw.csv
//   walkbench report --input out
//
// Exit status: 0 success, 1 failure (partial for `run`), 2 configuration error.

#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "walkbench/dataset.hpp"
#include "walkbench/pipeline.hpp"

namespace wb = walkbench;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;

// Config-file keys exposed as --flags; dashes map to underscores.
const std::vector<std::string> kRunKeys = {
    "graphs", "walks", "split_fraction", "beta", "alpha", "dim", "window", "negatives", "epochs",
    "lr_start", "lr_end", "noise_power", "mode", "train_threads", "seed", "output_dir", "threads",
    "manifest", "cache_dir"};
const std::vector<std::string> kTrainKeys = {"dim",    "window", "negatives",   "epochs",       "lr_start",
                                             "lr_end", "noise_power", "mode", "train_threads"};

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

void bind_keys(CLI::App* cmd, const std::vector<std::string>& keys,
               std::map<std::string, std::optional<std::string>>& values) {
  for (const auto& key : keys) {
    cmd->add_option(flag_name(key), values[key], "overrides config key '" + key + "'");
  }
}

void apply_keys(wb::ExperimentConfig& cfg, const std::map<std::string, std::optional<std::string>>& values) {
  for (const auto& [key, value] : values) {
    if (value) cfg.set(key, *value);
  }
}

std::uint64_t pick_seed(std::optional<std::uint64_t> explicit_seed, std::uint64_t derived) {
  return explicit_seed ? *explicit_seed : derived;
}

std::ofstream open_output(const std::string& path, bool binary = false) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark biased random walks as corpora for skip-gram node embeddings"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

  // run
  auto* run = app.add_subcommand("run", "full pipeline over all configured graphs and walks");
  std::string config_path;
  std::map<std::string, std::optional<std::string>> run_values;
  run->add_option("-c,--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  bind_keys(run, kRunKeys, run_values);

  // prepare
  auto* prepare = app.add_subcommand("prepare", "largest component and labeled edge split");
  std::string prep_input, prep_output, prep_name;
  double prep_fraction = 0.25;
  std::optional<std::uint64_t> prep_seed;
  std::uint64_t prep_master = 1;
  prepare->add_option("-i,--input", prep_input, "edge list")->required()->check(CLI::ExistingFile);
  prepare->add_option("-o,--output", prep_output, "output directory")->required();
  prepare->add_option("-n,--name", prep_name, "graph name (default: input file stem)");
  prepare->add_option("--fraction", prep_fraction, "share of edges held out");
  prepare->add_option("--seed", prep_seed, "split seed (default: derived from --master-seed)");
  prepare->add_option("--master-seed", prep_master, "master seed");

  // walk
  auto* walk = app.add_subcommand("walk", "generate a walk corpus on a prepared graph");
  std::string walk_prepared, walk_spec, walk_output;
  std::uint32_t walk_beta = 40, walk_alpha = 200;
  unsigned walk_threads = 1;
  std::optional<std::uint64_t> walk_seed_opt;
  std::uint64_t walk_master = 1;
  walk->add_option("-p,--prepared", walk_prepared, "prepare-stage directory")->required();
  walk->add_option("-w,--walk", walk_spec, "rw | dg | id | tsaw[:lambda=X] | n2v:p=X,q=Y")->required();
  walk->add_option("-o,--output", walk_output, "corpus file")->required();
  walk->add_option("--beta", walk_beta, "walks per node");
  walk->add_option("--alpha", walk_alpha, "maximum walk length");
  walk->add_option("--threads", walk_threads, "generator threads");
  walk->add_option("--seed", walk_seed_opt, "walk seed (default: derived from --master-seed)");
  walk->add_option("--master-seed", walk_master, "master seed");

  // embed
  auto* embed = app.add_subcommand("embed", "train skip-gram embeddings on a corpus");
  std::string embed_corpus, embed_output, embed_graph;
  bool embed_text = false;
  std::optional<std::uint64_t> embed_seed;
  std::uint64_t embed_master = 1;
  std::map<std::string, std::optional<std::string>> embed_values;
  embed->add_option("-c,--corpus", embed_corpus, "corpus file")->required()->check(CLI::ExistingFile);
  embed->add_option("-o,--output", embed_output, "embedding file")->required();
  embed->add_option("-g,--graph", embed_graph, "graph name, for seed derivation");
  embed->add_flag("--text", embed_text, "write the text format instead of binary");
  embed->add_option("--seed", embed_seed, "training seed (default: derived from --master-seed and --graph)");
  embed->add_option("--master-seed", embed_master, "master seed");
  bind_keys(embed, kTrainKeys, embed_values);

  // score
  auto* score = app.add_subcommand("score", "cosine scores for the labeled edges");
  std::string score_prepared, score_embedding, score_walk, score_output;
  std::size_t score_order = 0;
  score->add_option("-p,--prepared", score_prepared, "prepare-stage directory")->required();
  score->add_option("-e,--embedding", score_embedding, "embedding file")->required()->check(CLI::ExistingFile);
  score->add_option("-w,--walk", score_walk, "walk that produced the embedding")->required();
  score->add_option("--order", score_order, "column position of this walk in reports");
  score->add_option("-o,--output", score_output, "score file")->required();

  // report
  auto* report = app.add_subcommand("report", "metrics, correlations and plot data from score files");
  std::string report_input, report_output;
  report->add_option("-i,--input", report_input, "run directory holding <graph>/scores/")->required();
  report->add_option("-o,--output", report_output, "output directory (default: --input)");

  // fetch
  auto* fetch = app.add_subcommand("fetch", "download manifest datasets into the cache");
  std::string fetch_manifest;
  std::vector<std::string> fetch_names;
  std::string fetch_cache = wb::default_cache_dir().string();
  fetch->add_option("-m,--manifest", fetch_manifest, "manifest file")->required()->check(CLI::ExistingFile);
  fetch->add_option("-n,--name", fetch_names, "datasets to fetch (default: all)");
  fetch->add_option("--cache", fetch_cache, "cache directory");

  // validate
  auto* validate = app.add_subcommand("validate", "check a graph against the selection rules");
  std::string validate_input;
  validate->add_option("-i,--input", validate_input, "edge list")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  try {
    if (*run) {
      wb::ExperimentConfig cfg = config_path.empty() ? wb::ExperimentConfig{} : wb::read_config(config_path);
      apply_keys(cfg, run_values);
      cfg.validate();
      const auto result = wb::run_pipeline(cfg);
      for (const auto& w : result.report.summary.walks) {
        std::cout << w.walk << "\tAUC " << w.median_auc << "\tAUC-PR " << w.median_auc_pr << '\n';
      }
      if (!result.failures.empty()) {
        std::cerr << result.failures.size() << " stage failure(s); see report.json\n";
        return kFailure;
      }
    } else if (*prepare) {
      const std::string name = prep_name.empty() ? std::filesystem::path(prep_input).stem().string() : prep_name;
      const auto seed = pick_seed(prep_seed, wb::split_seed(prep_master, name));
      const auto p = wb::prepare_graph(prep_input, name, prep_fraction, seed);
      wb::write_prepared(prep_output, p);
      spdlog::info("{}: {} nodes, {} edges, {} held out", name, p.residual.num_nodes(), p.original_edges,
                   p.labels.num_positive());
    } else if (*walk) {
      const auto p = wb::read_prepared(walk_prepared);
      wb::WalkConfig cfg = wb::WalkConfig::parse(walk_spec);
      cfg.walks_per_node = walk_beta;
      cfg.max_length = walk_alpha;
      cfg.validate();
      cfg.seed = pick_seed(walk_seed_opt, wb::walk_seed(walk_master, p.name, cfg));
      const auto corpus = wb::generate_corpus(p.residual, cfg, walk_threads);
      auto out = open_output(walk_output);
      wb::write_corpus(out, corpus, cfg);
    } else if (*embed) {
      wb::WalkConfig walk_cfg;
      wb::WalkCorpus corpus;
      {
        auto in = open_input(embed_corpus);
        corpus = wb::read_corpus(in, &walk_cfg);
      }
      wb::ExperimentConfig cfg;
      apply_keys(cfg, embed_values);
      wb::TrainConfig train = cfg.train;
      if (!embed_seed && embed_graph.empty()) {
        throw wb::ConfigError("embed needs --seed or --graph to derive the training seed");
      }
      train.seed = pick_seed(embed_seed, wb::train_seed(embed_master, embed_graph, walk_cfg));
      const auto result = wb::train_sgns(corpus, train, corpus.num_nodes());
      auto out = open_output(embed_output, !embed_text);
      if (embed_text) wb::write_embedding_text(out, result.embedding);
      else wb::write_embedding_binary(out, result.embedding);
      spdlog::info("trained {} x {}; epoch losses first {:.4f} last {:.4f}", result.embedding.rows,
                   result.embedding.dim, result.epoch_loss.front(), result.epoch_loss.back());
    } else if (*score) {
      const auto p = wb::read_prepared(score_prepared);
      const auto walk_cfg = wb::WalkConfig::parse(score_walk);
      wb::Embedding emb;
      {
        auto in = open_input(score_embedding, true);
        emb = wb::read_embedding(in);
      }
      const auto scores = wb::score_edges(emb, p.labels, walk_cfg.name());
      if (scores.undefined) spdlog::warn("{} labeled edges with undefined cosine", scores.undefined);
      auto out = open_output(score_output);
      wb::write_scores(out, p.name, walk_cfg, score_order, p.labels, scores);
    } else if (*report) {
      const auto out_dir = report_output.empty() ? report_input : report_output;
      const auto result = wb::report_stage(report_input, out_dir);
      for (const auto& w : result.summary.walks) {
        std::cout << w.walk << "\tAUC " << w.median_auc << "\tAUC-PR " << w.median_auc_pr << '\n';
      }
    } else if (*fetch) {
      int failed = 0;
      for (const auto& d : wb::read_manifest(fetch_manifest)) {
        if (!fetch_names.empty() && std::find(fetch_names.begin(), fetch_names.end(), d.name) == fetch_names.end()) {
          continue;
        }
        try {
          std::cout << wb::fetch_remote(d, fetch_cache).string() << '\n';
        } catch (const std::exception& e) {
          spdlog::error("{}", e.what());
          ++failed;
        }
      }
      if (failed) return kFailure;
    } else if (*validate) {
      const auto g = wb::largest_component(wb::build_graph(wb::load_edge_list(validate_input))).graph;
      const auto r = wb::validate_selection(g);
      std::cout << "nodes " << g.num_nodes() << " edges " << g.num_edges() << '\n';
      for (const auto& w : r.warnings) std::cout << "warning: " << w << '\n';
      for (const auto& f : r.failures) std::cout << "failure: " << f << '\n';
      std::cout << (r.pass ? "pass" : "fail") << '\n';
      if (!r.pass) return kFailure;
    }
  } catch (const wb::ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return kOk;
}
