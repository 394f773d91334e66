#include "walkbench/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace walkbench {

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw EvalError("cosine of vectors with different dimensions");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0 || bb == 0) throw EvalError("cosine of a zero vector is undefined");
  return std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

ScoreVector score_edges(const Embedding& emb, const LabeledEdgeSet& labels, std::string walk_id) {
  ScoreVector out;
  out.walk_id = std::move(walk_id);
  out.scores.reserve(labels.size());
  std::vector<std::size_t> undefined;
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& e : labels.edges()) {
    if (e.u >= emb.rows || e.v >= emb.rows) {
      throw EvalError("labeled edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                      ") has no embedding row");
    }
    try {
      const double s = cosine(emb.row(e.u), emb.row(e.v));
      lowest = std::min(lowest, s);
      out.scores.push_back(s);
    } catch (const EvalError&) {
      undefined.push_back(out.scores.size());
      out.scores.push_back(0.0);
    }
  }
  if (!std::isfinite(lowest)) lowest = 0.0;
  for (std::size_t i : undefined) out.scores[i] = lowest;
  out.undefined = undefined.size();
  return out;
}

ScoreVector minmax_normalize(const ScoreVector& s) {
  if (s.scores.empty()) throw EvalError("cannot normalize an empty score vector");
  ScoreVector out = s;
  const auto [lo, hi] = std::minmax_element(s.scores.begin(), s.scores.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& x : out.scores) x = range > 0 ? (x - min) / range : 0.5;
  out.normalized = true;
  return out;
}

double auc_roc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw EvalError("labels and scores differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks (1-based) over tie groups; the positive rank sum gives U.
  double positive_rank_sum = 0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]]) {
        positive_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw EvalError("AUC needs both positive and negative labels");
  const double np = static_cast<double>(n_pos);
  const double u = positive_rank_sum - np * (np + 1) / 2;
  return u / (np * static_cast<double>(n_neg));
}

double auc_pr(std::span<const std::uint8_t> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw EvalError("labels and scores differ in length");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::size_t hits = 0;
  double precision_sum = 0;
  for (std::size_t rank = 0; rank < idx.size(); ++rank) {
    if (labels[idx[rank]]) {
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  if (hits == 0) throw EvalError("average precision needs at least one positive label");
  return precision_sum / static_cast<double>(hits);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw EvalError("pearson inputs differ in length");
  if (x.size() < 2) throw EvalError("pearson needs at least two observations");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw EvalError("correlation undefined for a constant input");
  // sqrt(fl(s * s)) == s under correct rounding, so identical inputs give 1 exactly.
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(std::span<const ScoreVector> table) {
  CorrelationMatrix m;
  const std::size_t k = table.size();
  for (const auto& s : table) m.walks.push_back(s.walk_id);
  m.cells.assign(k * k, std::nullopt);
  for (std::size_t i = 0; i < k; ++i) {
    if (table[i].scores.size() != table[0].scores.size()) {
      throw EvalError("score vectors are not aligned to the same labeled set");
    }
    m.at(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      try {
        const double r = pearson(table[i].scores, table[j].scores);
        m.at(i, j) = r;
        m.at(j, i) = r;
      } catch (const EvalError&) {
        // left empty: undefined correlation
      }
    }
  }
  return m;
}

GraphReport evaluate_graph(const std::string& graph, const LabeledEdgeSet& labels,
                           std::span<const ScoreVector> raw_scores) {
  GraphReport report;
  report.graph = graph;
  const auto y = labels.label_vector();
  for (const auto& raw : raw_scores) {
    if (raw.scores.size() != labels.size()) {
      throw EvalError("walk " + raw.walk_id + " has " + std::to_string(raw.scores.size()) + " scores for " +
                      std::to_string(labels.size()) + " labeled edges");
    }
    const ScoreVector norm = minmax_normalize(raw);
    report.metrics.push_back({raw.walk_id, auc_roc(y, norm.scores), auc_pr(y, norm.scores)});
    report.undefined_scores += raw.undefined;
  }
  report.correlation = correlation_matrix(raw_scores);
  return report;
}

double median(std::vector<double> values) {
  if (values.empty()) throw EvalError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Summary aggregate_medians(std::span<const GraphReport> reports) {
  if (reports.empty()) throw EvalError("no reports to aggregate");
  Summary summary;
  std::vector<std::string> walks;
  for (const auto& m : reports.front().metrics) walks.push_back(m.walk);

  for (const auto& walk : walks) {
    std::vector<double> aucs, aps;
    for (const auto& r : reports) {
      for (const auto& m : r.metrics) {
        if (m.walk == walk) {
          aucs.push_back(m.auc);
          aps.push_back(m.auc_pr);
        }
      }
    }
    summary.walks.push_back({walk, median(aucs), median(aps)});
  }
  std::stable_sort(summary.walks.begin(), summary.walks.end(),
                   [](const WalkSummary& a, const WalkSummary& b) { return a.median_auc > b.median_auc; });

  auto& mc = summary.median_correlation;
  mc.walks = walks;
  mc.cells.assign(walks.size() * walks.size(), std::nullopt);
  for (std::size_t i = 0; i < walks.size(); ++i) {
    for (std::size_t j = 0; j < walks.size(); ++j) {
      std::vector<double> values;
      for (const auto& r : reports) {
        const auto& c = r.correlation;
        const auto wi = std::find(c.walks.begin(), c.walks.end(), walks[i]);
        const auto wj = std::find(c.walks.begin(), c.walks.end(), walks[j]);
        if (wi == c.walks.end() || wj == c.walks.end()) continue;
        const auto& cell = c.at(static_cast<std::size_t>(wi - c.walks.begin()),
                                static_cast<std::size_t>(wj - c.walks.begin()));
        if (cell) values.push_back(*cell);
      }
      if (!values.empty()) mc.at(i, j) = median(values);
    }
  }
  return summary;
}

namespace {
// Quotes a CSV field only when it holds a separator or a quote.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}
}  // namespace

void write_correlation_csv(std::ostream& out, const CorrelationMatrix& m) {
  out << "walk";
  for (const auto& w : m.walks) out << ',' << csv_field(w);
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << csv_field(m.walks[i]);
    for (std::size_t j = 0; j < m.size(); ++j) {
      out << ',';
      if (const auto& c = m.at(i, j)) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *c);
        out.write(buf, end - buf);
      } else {
        out << "NA";
      }
    }
    out << '\n';
  }
}

}  // namespace walkbench
