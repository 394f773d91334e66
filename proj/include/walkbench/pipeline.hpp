#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "walkbench/dataset.hpp"
#include "walkbench/eval.hpp"
#include "walkbench/graph.hpp"
#include "walkbench/sgns.hpp"
#include "walkbench/walk.hpp"

namespace walkbench {

struct ExperimentConfig {
  /// Edge-list paths, or dataset names resolved through `manifest`.
  std::vector<std::string> graphs;
  std::vector<WalkConfig> walks = default_walks();
  double split_fraction = 0.25;
  std::uint32_t walks_per_node = 40;
  std::uint32_t walk_length = 200;
  TrainConfig train;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  std::filesystem::path manifest;
  std::filesystem::path cache_dir = default_cache_dir();

  /// Sets one field from its config-file key. Throws ConfigError on unknown
  /// keys and malformed values.
  void set(const std::string& key, const std::string& value);
  /// Throws ConfigError if any field is out of bounds.
  void validate() const;
};

/// Plain-text config: one "key = value" per line, '#' comments. List values
/// (graphs, walks) are separated by whitespace or ';'.
ExperimentConfig read_config(std::istream& in);
ExperimentConfig read_config(const std::filesystem::path& path);

// Seed derivation, keyed by names so adding graphs or walks leaves the
// others' streams unchanged.
std::uint64_t split_seed(std::uint64_t master, const std::string& graph);
std::uint64_t walk_seed(std::uint64_t master, const std::string& graph, const WalkConfig& walk);
std::uint64_t train_seed(std::uint64_t master, const std::string& graph, const WalkConfig& walk);

/// Output of the prepare stage.
struct PreparedGraph {
  std::string name;
  Graph residual;
  LabeledEdgeSet labels;
  std::vector<std::string> node_labels;  // dense index -> input label
  std::size_t original_edges = 0;
};

/// Parse, canonicalize, keep the largest component, split.
PreparedGraph prepare_graph(const std::filesystem::path& edge_list, const std::string& name, double fraction,
                            std::uint64_t seed);

/// Writes graph.edges, labels.csv and nodes.tsv under `dir`.
void write_prepared(const std::filesystem::path& dir, const PreparedGraph& prepared);
PreparedGraph read_prepared(const std::filesystem::path& dir);

/// Score file: "# walkbench-scores v1 graph=G walk=<slug> order=I" followed
/// by "u,v,label,score" rows.
void write_scores(std::ostream& out, const std::string& graph, const WalkConfig& walk, std::size_t order,
                  const LabeledEdgeSet& labels, const ScoreVector& scores);

struct ScoreFile {
  std::string graph;
  std::string walk_slug;
  std::size_t order = 0;
  LabeledEdgeSet labels;
  ScoreVector scores;
};
ScoreFile read_scores(std::istream& in);

// Layout of a run directory.
std::filesystem::path prepared_dir(const std::filesystem::path& root, const std::string& graph);
std::filesystem::path corpus_path(const std::filesystem::path& root, const std::string& graph,
                                  const WalkConfig& walk);
std::filesystem::path embedding_path(const std::filesystem::path& root, const std::string& graph,
                                     const WalkConfig& walk);
std::filesystem::path scores_path(const std::filesystem::path& root, const std::string& graph,
                                  const WalkConfig& walk);

struct StageFailure {
  std::string graph;
  std::string walk;
  std::string message;
};

struct ReportOutput {
  std::vector<GraphReport> graphs;
  Summary summary;
};

/// Reads every <root>/<graph>/scores/*.csv, evaluates and writes report.json,
/// corr_<graph>.csv, corr_median.csv and plotdata/ under `out_dir`. Throws
/// when no score file exists; nothing is written in that case.
ReportOutput report_stage(const std::filesystem::path& root, const std::filesystem::path& out_dir,
                          const std::vector<StageFailure>& failures = {});

struct PipelineResult {
  ReportOutput report;
  std::vector<StageFailure> failures;
};

/// Full run: per graph one shared split, then corpus, embedding and scores
/// per walk, then the report. Every artifact lands under cfg.output_dir.
PipelineResult run_pipeline(const ExperimentConfig& cfg);

/// Resolves a graph entry to an edge-list path and a display name.
std::pair<std::filesystem::path, std::string> resolve_graph(const ExperimentConfig& cfg, const std::string& entry);

}  // namespace walkbench
