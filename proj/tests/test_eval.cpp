#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "walkbench/eval.hpp"

using namespace walkbench;
using doctest::Approx;

namespace {

std::vector<double> span_vec(std::initializer_list<double> xs) { return xs; }

LabeledEdgeSet labeled(std::vector<LabeledEdge> e) { return LabeledEdgeSet(std::move(e)); }

}  // namespace

TEST_CASE("cosine") {
  const std::vector<float> a = {1, 2, 3}, neg = {-1, -2, -3}, b = {3, 0, -1}, z = {0, 0, 0};
  CHECK(cosine(a, a) == Approx(1.0).epsilon(1e-15));
  CHECK(cosine(a, neg) == Approx(-1.0).epsilon(1e-15));
  CHECK(cosine(a, b) == Approx(0.0));
  CHECK_THROWS_AS(cosine(a, z), EvalError);
}

TEST_CASE("score_edges") {
  // Hand-built 2-d embedding.
  Embedding e{4, 2, {1, 0, 0, 1, 1, 1, -1, 0}};
  const auto set = labeled({{0, 2, EdgeLabel::kPositive}, {0, 1, EdgeLabel::kNegative}});
  const auto s = score_edges(e, set, "X");
  CHECK(s.walk_id == "X");
  REQUIRE(s.scores.size() == 2);
  CHECK(s.scores[0] == Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.scores[1] == Approx(0.0));

  const auto set3 = labeled({{0, 3, EdgeLabel::kPositive}, {1, 2, EdgeLabel::kPositive},
                             {0, 1, EdgeLabel::kNegative}, {2, 3, EdgeLabel::kNegative}});
  const auto s3 = score_edges(e, set3);
  CHECK(s3.scores[0] == Approx(-1.0));
  CHECK(s3.scores[1] == Approx(1 / std::sqrt(2.0)));
  CHECK(s3.scores[3] == Approx(-1 / std::sqrt(2.0)));

  // Positives whose endpoints share a vector score exactly 1.
  Embedding dup{4, 3, {0.3f, -1, 2, 0.3f, -1, 2, 5, 1, 0, 5, 1, 0}};
  const auto sd = score_edges(dup, labeled({{0, 1, EdgeLabel::kPositive}, {2, 3, EdgeLabel::kPositive},
                                            {0, 2, EdgeLabel::kNegative}, {1, 3, EdgeLabel::kNegative}}));
  CHECK(sd.scores[0] == Approx(1.0).epsilon(1e-15));
  CHECK(sd.scores[1] == Approx(1.0).epsilon(1e-15));

  // A zero row gives an undefined cosine: forced to the minimum, and counted.
  Embedding zero{3, 2, {1, 0, 0, 0, 1, 1}};
  const auto sz = score_edges(zero, labeled({{0, 1, EdgeLabel::kPositive}, {0, 2, EdgeLabel::kNegative}}));
  CHECK(sz.undefined == 1);
  CHECK(sz.scores[0] == sz.scores[1]);

  const auto far = labeled({{0, 9, EdgeLabel::kPositive}, {0, 1, EdgeLabel::kNegative}});
  CHECK_THROWS(score_edges(e, far));
}

TEST_CASE("minmax_normalize") {
  ScoreVector s{"w", {2, 4, 6}, false, 0};
  const auto n = minmax_normalize(s);
  CHECK(n.normalized);
  CHECK(n.scores == std::vector<double>{0, 0.5, 1});
  const auto c = minmax_normalize(ScoreVector{"w", {3, 3, 3}, false, 0});
  CHECK(c.scores == std::vector<double>{0.5, 0.5, 0.5});
}

TEST_CASE("auc examples") {
  const std::vector<std::uint8_t> l2 = {1, 0};
  CHECK(auc_roc(l2, span_vec({0.9, 0.1})) == 1.0);
  CHECK(auc_pr(l2, span_vec({0.9, 0.1})) == 1.0);
  const std::vector<std::uint8_t> l4 = {1, 1, 0, 0};
  CHECK(auc_roc(l4, span_vec({0.5, 0.5, 0.5, 0.5})) == 0.5);
  CHECK(auc_roc(l4, span_vec({0.8, 0.3, 0.5, 0.1})) == 0.75);

  // Ranked order 1,0,1,0: precision 1 at the first positive, 2/3 at the second.
  const std::vector<std::uint8_t> alt = {1, 0, 1, 0};
  CHECK(auc_pr(alt, span_vec({0.9, 0.8, 0.7, 0.6})) == Approx(5.0 / 6).epsilon(1e-15));

  // All positives last: precision 1/4, 2/5, 3/6 at the positives.
  const std::vector<std::uint8_t> last = {0, 0, 0, 1, 1, 1};
  const std::vector<double> desc = {6, 5, 4, 3, 2, 1};
  CHECK(auc_pr(last, desc) == Approx(oracles::average_precision(last, desc)).epsilon(1e-15));
  CHECK(auc_pr(last, desc) == Approx((1.0 / 4 + 2.0 / 5 + 3.0 / 6) / 3).epsilon(1e-15));
  CHECK(auc_roc(last, desc) == 0.0);

  const std::vector<std::uint8_t> one_class = {1, 1};
  CHECK_THROWS_AS(auc_roc(one_class, span_vec({0.1, 0.2})), EvalError);
  const std::vector<std::uint8_t> no_pos = {0, 0};
  CHECK_THROWS_AS(auc_pr(no_pos, span_vec({0.1, 0.2})), EvalError);
  CHECK_THROWS(auc_roc(l2, span_vec({0.1})));
}

TEST_CASE("auc_roc and auc_pr match brute-force oracles on random instances") {
  SplitMix64 rng(2718);
  for (int inst = 0; inst < 1000; ++inst) {
    const auto [labels, scores] = oracles::random_instance(rng, 2 + rng.below(199));
    CHECK(std::abs(auc_roc(labels, scores) - oracles::pair_counting_auc(labels, scores)) <= 1e-12);
    CHECK(std::abs(auc_pr(labels, scores) - oracles::average_precision(labels, scores)) <= 1e-12);
  }
}

TEST_CASE("AUCs are invariant under strictly increasing transforms") {
  SplitMix64 rng(99);
  for (int inst = 0; inst < 200; ++inst) {
    auto [labels, scores] = oracles::random_instance(rng, 2 + rng.below(150));
    std::vector<double> cubed(scores.size());
    std::transform(scores.begin(), scores.end(), cubed.begin(), [](double x) { return x * x * x; });
    const auto norm = minmax_normalize(ScoreVector{"", scores, false, 0}).scores;
    const double roc = auc_roc(labels, scores);
    const double pr = auc_pr(labels, scores);
    CHECK(auc_roc(labels, cubed) == roc);
    CHECK(auc_pr(labels, cubed) == pr);
    CHECK(auc_roc(labels, norm) == roc);
    CHECK(auc_pr(labels, norm) == pr);
  }
}

TEST_CASE("pearson") {
  const std::vector<double> x = {1, 2, 3};
  CHECK(pearson(x, x) == 1.0);
  CHECK(pearson(x, span_vec({-1, -2, -3})) == -1.0);
  CHECK(pearson(x, span_vec({1, 2, 4})) == Approx(3 / (std::sqrt(2.0) * std::sqrt(42.0 / 9))).epsilon(1e-14));
  CHECK(pearson(x, span_vec({1, 2, 4})) == Approx(0.98198).epsilon(1e-5));
  CHECK_THROWS_AS(pearson(x, span_vec({2, 2, 2})), EvalError);
  CHECK_THROWS(pearson(x, span_vec({1, 2})));

  SplitMix64 rng(5);
  for (int inst = 0; inst < 300; ++inst) {
    const std::size_t n = 3 + rng.below(100);
    std::vector<double> a(n), b(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform();
      b[i] = a[i] * 0.5 + rng.uniform();
    }
    const double scale = 0.01 + 100 * rng.uniform();
    const double shift = 50 * (rng.uniform() - 0.5);
    for (std::size_t i = 0; i < n; ++i) t[i] = scale * a[i] + shift;
    const double r = pearson(a, b);
    CHECK(std::abs(pearson(t, b) - r) <= 1e-12);
    CHECK(std::abs(r - oracles::pearson_long(a, b)) <= 1e-12);
    CHECK(std::abs(r) <= 1.0);
  }
}

TEST_CASE("correlation_matrix") {
  std::vector<ScoreVector> table = {{"A", {1, 2, 3, 4}, false, 0},
                                    {"B", {1, 2, 3, 4}, false, 0},
                                    {"C", {4, 1, 3, 2}, false, 0},
                                    {"D", {7, 7, 7, 7}, false, 0}};
  const auto m = correlation_matrix(table);
  CHECK(m.walks == std::vector<std::string>{"A", "B", "C", "D"});
  CHECK(*m.at(0, 1) == 1.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(*m.at(i, i) == 1.0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(m.at(i, j) == m.at(j, i));
  }
  CHECK_FALSE(m.at(0, 3).has_value());
  CHECK(*m.at(3, 3) == 1.0);

  std::ostringstream csv;
  write_correlation_csv(csv, m);
  std::istringstream lines(csv.str());
  std::string header, row;
  std::getline(lines, header);
  CHECK(header == "walk,A,B,C,D");
  std::getline(lines, row);
  CHECK(row.rfind("A,1,1,", 0) == 0);
  CHECK(row.substr(row.size() - 3) == ",NA");

  std::vector<ScoreVector> named = {{"N2V(1, 1)", {1, 2, 3}, false, 0}, {"RW", {1, 2, 3}, false, 0}};
  std::ostringstream quoted;
  write_correlation_csv(quoted, correlation_matrix(named));
  CHECK(quoted.str().rfind("walk,\"N2V(1, 1)\",RW\n", 0) == 0);

  std::vector<ScoreVector> misaligned = {{"A", {1, 2, 3}, false, 0}, {"B", {1, 2}, false, 0}};
  CHECK_THROWS(correlation_matrix(misaligned));
}

TEST_CASE("evaluate_graph and medians") {
  const auto set = labeled({{0, 1, EdgeLabel::kPositive}, {1, 2, EdgeLabel::kPositive},
                            {0, 2, EdgeLabel::kNegative}, {2, 3, EdgeLabel::kNegative}});
  std::vector<ScoreVector> raw = {{"A", {0.9, 0.8, 0.1, 0.2}, false, 0}, {"B", {0.3, 0.8, 0.5, 0.1}, false, 1}};
  const auto r = evaluate_graph("g", set, raw);
  CHECK(r.graph == "g");
  REQUIRE(r.metrics.size() == 2);
  CHECK(r.metrics[0].walk == "A");
  CHECK(r.metrics[0].auc == 1.0);
  CHECK(r.metrics[1].auc == 0.75);
  CHECK(r.undefined_scores == 1);
  // Correlation uses raw scores.
  CHECK(*r.correlation.at(0, 1) == Approx(pearson(raw[0].scores, raw[1].scores)).epsilon(1e-15));

  CHECK(median({0.8, 1.0, 0.9}) == 0.9);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK_THROWS(median({}));

  const auto single = aggregate_medians(std::span<const GraphReport>(&r, 1));
  REQUIRE(single.walks.size() == 2);
  CHECK(single.walks[0].walk == "A");
  CHECK(single.walks[0].median_auc == 1.0);
  CHECK(single.walks[1].median_auc == 0.75);
  CHECK(single.median_correlation.at(0, 1) == r.correlation.at(0, 1));

  // Three graphs: per-walk and per-cell medians; sort is by descending AUC.
  std::vector<GraphReport> reps(3, r);
  const double aucs_a[] = {0.8, 0.9, 1.0};
  const double aucs_b[] = {0.95, 0.97, 0.2};
  for (int i = 0; i < 3; ++i) {
    reps[i].metrics[0].auc = aucs_a[i];
    reps[i].metrics[1].auc = aucs_b[i];
    reps[i].correlation.at(0, 1) = reps[i].correlation.at(1, 0) = 0.1 * (i + 1);
  }
  const auto s = aggregate_medians(reps);
  CHECK(s.walks[0].walk == "B");
  CHECK(s.walks[0].median_auc == 0.95);
  CHECK(s.walks[1].median_auc == 0.9);
  CHECK(*s.median_correlation.at(0, 1) == Approx(0.2));
  CHECK(*s.median_correlation.at(0, 0) == 1.0);
}
