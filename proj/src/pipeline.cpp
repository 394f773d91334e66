#include "walkbench/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace walkbench {

namespace {

using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::string cur;
  int depth = 0;  // "N2V(1, 1)" stays one item
  for (char c : value) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ';' || ((c == ' ' || c == '\t') && depth <= 0)) {
      if (!cur.empty()) items.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) items.push_back(cur);
  return items;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("bad value '" + value + "' for " + key);
  }
  return out;
}

std::string format_double(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json matrix_json(const CorrelationMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (const auto& c = m.at(i, j)) row.push_back(*c);
      else row.push_back(nullptr);
    }
    rows.push_back(std::move(row));
  }
  return {{"walks", m.walks}, {"matrix", std::move(rows)}};
}

std::string display_name(const std::string& slug) { return WalkConfig::parse(slug).name(); }

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "graphs") {
    graphs = split_list(value);
  } else if (key == "walks") {
    walks.clear();
    for (const auto& w : split_list(value)) walks.push_back(WalkConfig::parse(w));
  } else if (key == "split_fraction") {
    split_fraction = parse_number<double>(key, value);
  } else if (key == "beta" || key == "walks_per_node") {
    walks_per_node = parse_number<std::uint32_t>(key, value);
  } else if (key == "alpha" || key == "walk_length") {
    walk_length = parse_number<std::uint32_t>(key, value);
  } else if (key == "dim") {
    train.dim = parse_number<std::size_t>(key, value);
  } else if (key == "window") {
    train.window = parse_number<std::size_t>(key, value);
  } else if (key == "negatives") {
    train.negatives = parse_number<std::size_t>(key, value);
  } else if (key == "epochs") {
    train.epochs = parse_number<std::size_t>(key, value);
  } else if (key == "lr_start") {
    train.lr_start = parse_number<double>(key, value);
  } else if (key == "lr_end") {
    train.lr_end = parse_number<double>(key, value);
  } else if (key == "noise_power") {
    train.noise_power = parse_number<double>(key, value);
  } else if (key == "mode") {
    if (value == "deterministic") train.mode = TrainMode::kDeterministic;
    else if (value == "async") train.mode = TrainMode::kAsync;
    else throw ConfigError("mode must be 'deterministic' or 'async'");
  } else if (key == "train_threads") {
    train.threads = parse_number<unsigned>(key, value);
  } else if (key == "seed" || key == "master_seed") {
    master_seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "output_dir") {
    output_dir = value;
  } else if (key == "threads") {
    threads = parse_number<unsigned>(key, value);
  } else if (key == "manifest") {
    manifest = value;
  } else if (key == "cache_dir") {
    cache_dir = value;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  if (graphs.empty()) throw ConfigError("no graphs configured");
  if (walks.empty()) throw ConfigError("no walks configured");
  if (!(split_fraction > 0 && split_fraction < 1)) throw ConfigError("split_fraction must lie in (0, 1)");
  for (auto w : walks) {
    w.walks_per_node = walks_per_node;
    w.max_length = walk_length;
    w.validate();
  }
  std::vector<std::string> slugs;
  for (const auto& w : walks) slugs.push_back(w.slug());
  std::sort(slugs.begin(), slugs.end());
  if (std::adjacent_find(slugs.begin(), slugs.end()) != slugs.end()) throw ConfigError("duplicate walk in config");
  train.validate();
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

ExperimentConfig read_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return read_config(in);
}

std::uint64_t split_seed(std::uint64_t master, const std::string& graph) {
  return stream_key(master, hash_name("split"), hash_name(graph));
}

std::uint64_t walk_seed(std::uint64_t master, const std::string& graph, const WalkConfig& walk) {
  return stream_key(master, hash_name(graph), hash_name("walk:" + walk.slug()));
}

std::uint64_t train_seed(std::uint64_t master, const std::string& graph, const WalkConfig& walk) {
  return stream_key(master, hash_name(graph), hash_name("train:" + walk.slug()));
}

PreparedGraph prepare_graph(const std::filesystem::path& edge_list, const std::string& name, double fraction,
                            std::uint64_t seed) {
  const RawEdges raw = load_edge_list(edge_list);
  const Graph full = build_graph(raw);
  Subgraph lcc = largest_component(full);
  PreparedGraph out;
  out.name = name;
  out.original_edges = lcc.graph.num_edges();
  for (NodeId u : lcc.original) out.node_labels.push_back(raw.labels[u]);
  Split split = split_labeled(lcc.graph, fraction, seed);
  out.residual = std::move(split.residual);
  out.labels = std::move(split.labels);
  return out;
}

void write_prepared(const std::filesystem::path& dir, const PreparedGraph& p) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "graph.edges");
    write_graph(out, p.residual,
                "walkbench-prepare v1 graph=" + p.name + " nodes=" + std::to_string(p.residual.num_nodes()) +
                    " edges=" + std::to_string(p.residual.num_edges()) +
                    " original_edges=" + std::to_string(p.original_edges));
  }
  {
    auto out = open_out(dir / "labels.csv");
    write_labeled_edges(out, p.labels);
  }
  {
    auto out = open_out(dir / "nodes.tsv");
    write_node_map(out, p.node_labels);
  }
}

PreparedGraph read_prepared(const std::filesystem::path& dir) {
  PreparedGraph p;
  std::string header;
  {
    auto in = open_in(dir / "graph.edges");
    p.residual = read_graph(in, &header);
  }
  std::istringstream h(header);
  std::string magic, version;
  h >> magic >> version;
  if (magic != "walkbench-prepare") throw ParseError(1, (dir / "graph.edges").string() + " is not prepare-stage output");
  if (version != "v1") throw ParseError(1, "prepare-stage format " + version + " is not supported");
  std::string tok;
  while (h >> tok) {
    if (tok.rfind("graph=", 0) == 0) p.name = tok.substr(6);
    if (tok.rfind("original_edges=", 0) == 0) p.original_edges = std::stoull(tok.substr(15));
  }
  {
    auto in = open_in(dir / "labels.csv");
    p.labels = read_labeled_edges(in);
  }
  {
    auto in = open_in(dir / "nodes.tsv");
    p.node_labels = read_node_map(in);
  }
  return p;
}

void write_scores(std::ostream& out, const std::string& graph, const WalkConfig& walk, std::size_t order,
                  const LabeledEdgeSet& labels, const ScoreVector& scores) {
  if (scores.scores.size() != labels.size()) throw EvalError("scores are not aligned with labels");
  out << "# walkbench-scores v1 graph=" << graph << " walk=" << walk.slug() << " order=" << order
      << " undefined=" << scores.undefined << '\n';
  out << "u,v,label,score\n";
  const auto edges = labels.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    out << edges[i].u << ',' << edges[i].v << ',' << (edges[i].label == EdgeLabel::kPositive ? 1 : 0) << ','
        << format_double(scores.scores[i]) << '\n';
  }
}

ScoreFile read_scores(std::istream& in) {
  ScoreFile f;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty score file");
  std::istringstream h(line);
  std::string hash, magic, version;
  h >> hash >> magic >> version;
  if (hash != "#" || magic != "walkbench-scores") throw ParseError(1, "not score-stage output");
  if (version != "v1") throw ParseError(1, "score-stage format " + version + " is not supported");
  std::string tok;
  while (h >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const auto key = tok.substr(0, eq);
    const auto value = tok.substr(eq + 1);
    if (key == "graph") f.graph = value;
    else if (key == "walk") f.walk_slug = value;
    else if (key == "order") f.order = std::stoull(value);
    else if (key == "undefined") f.scores.undefined = std::stoull(value);
  }
  if (f.graph.empty() || f.walk_slug.empty()) throw ParseError(1, "score header lacks graph= or walk=");
  f.scores.walk_id = display_name(f.walk_slug);

  if (!std::getline(in, line) || line != "u,v,label,score") throw ParseError(2, "expected 'u,v,label,score'");
  std::vector<LabeledEdge> edges;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    NodeId u = 0, v = 0;
    int label = 0;
    double score = 0;
    auto r1 = std::from_chars(p, end, u);
    if (r1.ec != std::errc() || r1.ptr == end || *r1.ptr != ',') throw ParseError(lineno, "bad score row");
    auto r2 = std::from_chars(r1.ptr + 1, end, v);
    if (r2.ec != std::errc() || r2.ptr == end || *r2.ptr != ',') throw ParseError(lineno, "bad score row");
    auto r3 = std::from_chars(r2.ptr + 1, end, label);
    if (r3.ec != std::errc() || r3.ptr == end || *r3.ptr != ',' || (label != 0 && label != 1)) {
      throw ParseError(lineno, "bad score row");
    }
    auto r4 = std::from_chars(r3.ptr + 1, end, score);
    if (r4.ec != std::errc() || r4.ptr != end) throw ParseError(lineno, "bad score row");
    edges.push_back({u, v, label ? EdgeLabel::kPositive : EdgeLabel::kNegative});
    f.scores.scores.push_back(score);
  }
  f.labels = LabeledEdgeSet(std::move(edges));
  return f;
}

std::filesystem::path prepared_dir(const std::filesystem::path& root, const std::string& graph) {
  return root / graph / "prepare";
}

std::filesystem::path corpus_path(const std::filesystem::path& root, const std::string& graph,
                                  const WalkConfig& walk) {
  return root / graph / "corpus" / (walk.slug() + ".walks");
}

std::filesystem::path embedding_path(const std::filesystem::path& root, const std::string& graph,
                                     const WalkConfig& walk) {
  return root / graph / "embedding" / (walk.slug() + ".emb");
}

std::filesystem::path scores_path(const std::filesystem::path& root, const std::string& graph,
                                  const WalkConfig& walk) {
  return root / graph / "scores" / (walk.slug() + ".csv");
}

ReportOutput report_stage(const std::filesystem::path& root, const std::filesystem::path& out_dir,
                          const std::vector<StageFailure>& failures) {
  // graph -> (order, file); std::map keeps graphs in name order.
  std::map<std::string, std::vector<ScoreFile>> by_graph;
  if (std::filesystem::is_directory(root)) {
    for (const auto& graph_dir : std::filesystem::directory_iterator(root)) {
      const auto scores_dir = graph_dir.path() / "scores";
      if (!std::filesystem::is_directory(scores_dir)) continue;
      for (const auto& entry : std::filesystem::directory_iterator(scores_dir)) {
        if (entry.path().extension() != ".csv") continue;
        auto in = open_in(entry.path());
        ScoreFile f = read_scores(in);
        by_graph[f.graph].push_back(std::move(f));
      }
    }
  }
  if (by_graph.empty()) throw std::runtime_error("no score files found under " + root.string());

  ReportOutput result;
  std::vector<std::vector<ScoreVector>> raw_by_graph;
  for (auto& [graph, files] : by_graph) {
    std::sort(files.begin(), files.end(), [](const ScoreFile& a, const ScoreFile& b) {
      return a.order != b.order ? a.order < b.order : a.walk_slug < b.walk_slug;
    });
    for (const auto& f : files) {
      if (!(f.labels == files.front().labels)) {
        throw EvalError("graph " + graph + ": walks were scored on different labeled edge sets");
      }
    }
    std::vector<ScoreVector> raw;
    for (const auto& f : files) raw.push_back(f.scores);
    result.graphs.push_back(evaluate_graph(graph, files.front().labels, raw));
    raw_by_graph.push_back(std::move(raw));
  }
  result.summary = aggregate_medians(result.graphs);

  json report;
  report["format"] = "walkbench-report v1";
  json graphs = json::object();
  json correlations = json::object();
  json quality = json::object();
  for (const auto& g : result.graphs) {
    json walks = json::object();
    for (const auto& m : g.metrics) walks[m.walk] = {{"auc", m.auc}, {"auc_pr", m.auc_pr}};
    graphs[g.graph] = std::move(walks);
    correlations[g.graph] = matrix_json(g.correlation);
    quality[g.graph] = {{"undefined_scores", g.undefined_scores}};
  }
  report["graphs"] = std::move(graphs);
  report["correlation"] = std::move(correlations);
  json summary_walks = json::array();
  for (const auto& w : result.summary.walks) {
    summary_walks.push_back({{"walk", w.walk}, {"median_auc", w.median_auc}, {"median_auc_pr", w.median_auc_pr}});
  }
  report["summary"] = {{"graphs", result.graphs.size()},
                       {"walks", std::move(summary_walks)},
                       {"median_correlation", matrix_json(result.summary.median_correlation)}};
  report["data_quality"] = std::move(quality);
  json fails = json::array();
  for (const auto& f : failures) fails.push_back({{"graph", f.graph}, {"walk", f.walk}, {"error", f.message}});
  report["failures"] = std::move(fails);

  std::filesystem::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "report.json");
    out << report.dump(2) << '\n';
  }
  for (const auto& g : result.graphs) {
    auto out = open_out(out_dir / ("corr_" + g.graph + ".csv"));
    write_correlation_csv(out, g.correlation);
  }
  {
    auto out = open_out(out_dir / "corr_median.csv");
    write_correlation_csv(out, result.summary.median_correlation);
  }

  // Plot inputs: per-graph metrics (box plots), normalized score scatter per
  // graph with its least and most correlated walk pairs, median heatmap, and
  // paired AUCs colored by correlation.
  const auto plot = out_dir / "plotdata";
  std::filesystem::create_directories(plot);
  {
    auto out = open_out(plot / "heatmap_median_correlation.csv");
    write_correlation_csv(out, result.summary.median_correlation);
  }
  auto metrics_out = open_out(plot / "auc_by_graph.csv");
  metrics_out << "graph,walk,auc,auc_pr\n";
  auto pairs_out = open_out(plot / "auc_pairs.csv");
  pairs_out << "graph,walk_x,walk_y,auc_x,auc_y,pearson\n";
  auto extremes_out = open_out(plot / "extreme_pairs.csv");
  extremes_out << "graph,kind,walk_x,walk_y,pearson\n";

  std::size_t gi = 0;
  for (const auto& [graph, files] : by_graph) {
    const auto& rep = result.graphs[gi];
    const auto& raw = raw_by_graph[gi];
    ++gi;
    for (const auto& m : rep.metrics) {
      metrics_out << graph << ",\"" << m.walk << "\"," << format_double(m.auc) << ',' << format_double(m.auc_pr)
                  << '\n';
    }
    const auto& c = rep.correlation;
    std::optional<std::pair<std::size_t, std::size_t>> lo, hi;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        const auto& r = c.at(i, j);
        pairs_out << graph << ",\"" << c.walks[i] << "\",\"" << c.walks[j] << "\","
                  << format_double(rep.metrics[i].auc) << ',' << format_double(rep.metrics[j].auc) << ','
                  << (r ? format_double(*r) : "NA") << '\n';
        if (!r) continue;
        if (!lo || *r < *c.at(lo->first, lo->second)) lo = {i, j};
        if (!hi || *r > *c.at(hi->first, hi->second)) hi = {i, j};
      }
    }
    for (const auto& [kind, pair] : {std::pair{"min", lo}, std::pair{"max", hi}}) {
      if (!pair) continue;
      extremes_out << graph << ',' << kind << ",\"" << c.walks[pair->first] << "\",\"" << c.walks[pair->second]
                   << "\"," << format_double(*c.at(pair->first, pair->second)) << '\n';
    }

    auto scatter = open_out(plot / ("scatter_" + graph + ".csv"));
    scatter << "u,v,label";
    std::vector<ScoreVector> normalized;
    for (const auto& s : raw) {
      scatter << ",\"" << s.walk_id << '"';
      normalized.push_back(minmax_normalize(s));
    }
    scatter << '\n';
    const auto edges = files.front().labels.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
      scatter << edges[e].u << ',' << edges[e].v << ',' << (edges[e].label == EdgeLabel::kPositive ? 1 : 0);
      for (const auto& s : normalized) scatter << ',' << format_double(s.scores[e]);
      scatter << '\n';
    }
  }
  return result;
}

std::pair<std::filesystem::path, std::string> resolve_graph(const ExperimentConfig& cfg, const std::string& entry) {
  const std::filesystem::path as_path(entry);
  if (std::filesystem::is_regular_file(as_path)) return {as_path, as_path.stem().string()};
  if (cfg.manifest.empty()) throw ConfigError("graph '" + entry + "' is not a file and no manifest is configured");
  for (const auto& d : read_manifest(cfg.manifest)) {
    if (d.name == entry) return {fetch_remote(d, cfg.cache_dir), d.name};
  }
  throw ConfigError("graph '" + entry + "' is neither a file nor listed in " + cfg.manifest.string());
}

PipelineResult run_pipeline(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& root = cfg.output_dir;
  std::filesystem::create_directories(root);

  std::vector<WalkConfig> walks = cfg.walks;
  for (auto& w : walks) {
    w.walks_per_node = cfg.walks_per_node;
    w.max_length = cfg.walk_length;
  }

  PipelineResult result;
  std::mutex mu;
  std::vector<std::string> timings;
  auto record_time = [&](const std::string& stage, const std::string& graph, const std::string& walk, double s) {
    std::lock_guard lock(mu);
    timings.push_back(stage + '\t' + graph + '\t' + walk + '\t' + format_double(s));
  };

  json manifest;
  manifest["master_seed"] = cfg.master_seed;
  manifest["split_fraction"] = cfg.split_fraction;
  manifest["walks_per_node"] = cfg.walks_per_node;
  manifest["walk_length"] = cfg.walk_length;
  manifest["train"] = {{"dim", cfg.train.dim},
                       {"window", cfg.train.window},
                       {"negatives", cfg.train.negatives},
                       {"epochs", cfg.train.epochs},
                       {"lr_start", cfg.train.lr_start},
                       {"lr_end", cfg.train.lr_end},
                       {"noise_power", cfg.train.noise_power},
                       {"mode", cfg.train.mode == TrainMode::kAsync ? "async" : "deterministic"}};
  json manifest_graphs = json::array();

  // Stage 1: one split per graph, shared by every walk.
  std::vector<PreparedGraph> prepared;
  for (const auto& entry : cfg.graphs) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string name = entry;
    try {
      auto [path, resolved_name] = resolve_graph(cfg, entry);
      name = resolved_name;
      const auto seed = split_seed(cfg.master_seed, name);
      PreparedGraph p = prepare_graph(path, name, cfg.split_fraction, seed);
      write_prepared(prepared_dir(root, name), p);
      json seeds = json::object();
      for (const auto& w : walks) {
        seeds[w.slug()] = {{"walk", walk_seed(cfg.master_seed, name, w)},
                           {"train", train_seed(cfg.master_seed, name, w)}};
      }
      manifest_graphs.push_back({{"name", name},
                                 {"source", path.string()},
                                 {"nodes", p.residual.num_nodes()},
                                 {"edges", p.original_edges},
                                 {"held_out", p.labels.num_positive()},
                                 {"split_seed", seed},
                                 {"seeds", std::move(seeds)}});
      spdlog::info("prepare {}: {} nodes, {} edges, {} held out", name, p.residual.num_nodes(), p.original_edges,
                   p.labels.num_positive());
      prepared.push_back(std::move(p));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      spdlog::error("prepare {} failed: {}", name, e.what());
      result.failures.push_back({name, "*", e.what()});
    }
    record_time("prepare", name, "*", seconds_since(t0));
  }
  manifest["graphs"] = std::move(manifest_graphs);
  {
    std::ofstream out(root / "manifest.json");
    out << manifest.dump(2) << '\n';
  }

  // Stage 2-4 per (graph, walk). Jobs are independent, so the schedule does
  // not affect any artifact.
  struct Job {
    std::size_t graph;
    std::size_t walk;
  };
  std::vector<Job> jobs;
  for (std::size_t g = 0; g < prepared.size(); ++g) {
    for (std::size_t w = 0; w < walks.size(); ++w) jobs.push_back({g, w});
  }
  std::vector<std::optional<StageFailure>> job_failures(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto& p = prepared[jobs[j].graph];
      WalkConfig walk = walks[jobs[j].walk];
      walk.seed = walk_seed(cfg.master_seed, p.name, walk);
      try {
        auto t0 = std::chrono::steady_clock::now();
        const WalkCorpus corpus = generate_corpus(p.residual, walk);
        {
          auto out = open_out(corpus_path(root, p.name, walk));
          write_corpus(out, corpus, walk);
        }
        record_time("walk", p.name, walk.slug(), seconds_since(t0));

        t0 = std::chrono::steady_clock::now();
        TrainConfig train = cfg.train;
        train.seed = train_seed(cfg.master_seed, p.name, walk);
        const TrainResult trained = train_sgns(corpus, train, p.residual.num_nodes());
        {
          auto out = open_out(embedding_path(root, p.name, walk), true);
          write_embedding_binary(out, trained.embedding);
        }
        const double train_s = seconds_since(t0);
        record_time("embed", p.name, walk.slug(), train_s);

        t0 = std::chrono::steady_clock::now();
        const ScoreVector scores = score_edges(trained.embedding, p.labels, walk.name());
        {
          auto out = open_out(scores_path(root, p.name, walk));
          write_scores(out, p.name, walk, jobs[j].walk, p.labels, scores);
        }
        record_time("score", p.name, walk.slug(), seconds_since(t0));
        if (scores.undefined) {
          spdlog::warn("{} / {}: {} labeled edges with undefined cosine", p.name, walk.name(), scores.undefined);
        }
        spdlog::info("{} / {}: {} tokens, {} pairs, final epoch loss {:.4f}, trained in {:.1f}s", p.name,
                     walk.name(), corpus.num_tokens(), trained.pairs, trained.epoch_loss.back(), train_s);
      } catch (const std::exception& e) {
        spdlog::error("{} / {} failed: {}", p.name, walk.name(), e.what());
        job_failures[j] = StageFailure{p.name, walk.name(), e.what()};
        std::error_code ec;
        std::filesystem::remove(scores_path(root, p.name, walk), ec);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const unsigned n = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(jobs.size())));
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  for (auto& f : job_failures) {
    if (f) result.failures.push_back(std::move(*f));
  }

  const auto t0 = std::chrono::steady_clock::now();
  result.report = report_stage(root, root, result.failures);
  record_time("report", "*", "*", seconds_since(t0));

  std::sort(timings.begin(), timings.end());
  std::ofstream tout(root / "timings.tsv");
  tout << "stage\tgraph\twalk\tseconds\n";
  for (const auto& t : timings) tout << t << '\n';
  return result;
}

}  // namespace walkbench
