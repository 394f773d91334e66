#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "walkbench/graph.hpp"
#include "walkbench/sgns.hpp"

namespace walkbench {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Similarity scores aligned with a LabeledEdgeSet.
struct ScoreVector {
  std::string walk_id;
  std::vector<double> scores;
  bool normalized = false;
  /// Edges whose cosine was undefined (an endpoint with a zero vector).
  std::size_t undefined = 0;
};

/// a.b / (|a||b|), accumulated in double. Throws EvalError on a zero vector.
double cosine(std::span<const float> a, std::span<const float> b);

/// Raw cosine per labeled edge, in edge order. Undefined cosines are set to
/// the smallest defined score (so they normalize to 0) and counted.
ScoreVector score_edges(const Embedding& emb, const LabeledEdgeSet& labels, std::string walk_id = {});

/// (x - min) / (max - min); an all-equal vector maps to 0.5.
ScoreVector minmax_normalize(const ScoreVector& s);

/// Mann-Whitney AUC with half credit for ties. labels are 0/1.
double auc_roc(std::span<const std::uint8_t> labels, std::span<const double> scores);

/// Average precision: mean over positives of the precision at their rank.
/// Items are ranked by descending score; ties keep their input order.
double auc_pr(std::span<const std::uint8_t> labels, std::span<const double> scores);

/// Sample Pearson correlation. Throws EvalError when an input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Symmetric walk-by-walk matrix; a cell is empty when r is undefined.
struct CorrelationMatrix {
  std::vector<std::string> walks;
  std::vector<std::optional<double>> cells;  // row-major, walks.size()^2

  std::size_t size() const noexcept { return walks.size(); }
  const std::optional<double>& at(std::size_t i, std::size_t j) const { return cells[i * walks.size() + j]; }
  std::optional<double>& at(std::size_t i, std::size_t j) { return cells[i * walks.size() + j]; }
};

CorrelationMatrix correlation_matrix(std::span<const ScoreVector> table);

struct WalkMetrics {
  std::string walk;
  double auc = 0;
  double auc_pr = 0;
};

struct GraphReport {
  std::string graph;
  std::vector<WalkMetrics> metrics;  // one per walk, in configuration order
  CorrelationMatrix correlation;
  std::size_t undefined_scores = 0;
};

/// Metrics and correlations for one graph from its per-walk raw scores.
GraphReport evaluate_graph(const std::string& graph, const LabeledEdgeSet& labels,
                           std::span<const ScoreVector> raw_scores);

struct WalkSummary {
  std::string walk;
  double median_auc = 0;
  double median_auc_pr = 0;
};

struct Summary {
  std::vector<WalkSummary> walks;  // sorted by descending median AUC
  CorrelationMatrix median_correlation;
};

double median(std::vector<double> values);

/// Per-walk median metrics and per-cell median correlation across graphs.
/// Walks are matched by name; the first report fixes the walk order.
Summary aggregate_medians(std::span<const GraphReport> reports);

// Emission.

/// CSV with a header row and column of walk names; empty cells are "NA".
void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m);

}  // namespace walkbench
