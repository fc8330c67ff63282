#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "trollscore/metrics.hpp"
#include "trollscore/rng.hpp"

using namespace trollscore;

namespace {

// Exhaustive concordant-pair count: sum over (positive, negative) pairs of
// 1 for a higher positive score, 0.5 for a tie.
double pair_count_auc(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  double concordant = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    ++n_pos;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j]) {
        concordant += 1.0;
      } else if (scores[i] == scores[j]) {
        concordant += 0.5;
      }
    }
  }
  for (int y : labels) n_neg += y == 0;
  return concordant / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

TEST_CASE("auc is 1 for perfectly separated scores") {
  CHECK(roc_auc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}) == 1.0);
}

TEST_CASE("auc is about one half for random scores") {
  Rng rng(11);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 20000; ++i) {
    scores.push_back(rng.next_double());
    labels.push_back(static_cast<int>(rng.next_below(2)));
  }
  CHECK_THAT(roc_auc(scores, labels), Catch::Matchers::WithinAbs(0.5, 0.02));
}

TEST_CASE("auc matches exhaustive pair counting, ties included") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.next_below(300);
    std::vector<double> scores;
    std::vector<int> labels;
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grid so ties actually occur
      scores.push_back(static_cast<double>(rng.next_below(20)) / 19.0);
      labels.push_back(static_cast<int>(rng.next_below(2)));
      (labels.back() ? has_pos : has_neg) = true;
    }
    if (!has_pos) labels[0] = 1;
    if (!has_neg) labels[labels.size() - 1] = 0;
    const double expect = pair_count_auc(scores, labels);
    CHECK_THAT(roc_auc(scores, labels), Catch::Matchers::WithinAbs(expect, 1e-12));
  }
}

TEST_CASE("auc rejects single-class input and mismatched lengths") {
  REQUIRE_THROWS_AS(roc_auc({0.5, 0.6}, {1, 1}), DataError);
  REQUIRE_THROWS_AS(roc_auc({0.5}, {1, 0}), DataError);
}

TEST_CASE("auc is invariant under strictly monotone score transforms") {
  Rng rng(13);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 500; ++i) {
    scores.push_back(rng.next_double());
    labels.push_back(static_cast<int>(rng.next_below(2)));
  }
  labels[0] = 1;
  labels[1] = 0;
  std::vector<double> warped;
  for (double s : scores) warped.push_back(std::exp(3.0 * s) - 7.0);
  CHECK_THAT(roc_auc(scores, labels),
             Catch::Matchers::WithinAbs(roc_auc(warped, labels), 1e-12));
}

TEST_CASE("auc of flipped labels is the complement") {
  Rng rng(14);
  std::vector<double> scores;
  std::vector<int> labels, flipped;
  for (int i = 0; i < 300; ++i) {
    scores.push_back(static_cast<double>(rng.next_below(50)));
    labels.push_back(static_cast<int>(rng.next_below(2)));
    flipped.push_back(1 - labels.back());
  }
  labels[0] = 1;
  flipped[0] = 0;
  labels[1] = 0;
  flipped[1] = 1;
  CHECK_THAT(roc_auc(scores, labels) + roc_auc(scores, flipped),
             Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("classification report arithmetic") {
  EvalReport r = classification_report(ConfusionCounts{9, 1, 9, 1});
  CHECK_THAT(r.precision, Catch::Matchers::WithinAbs(0.9, 1e-15));
  CHECK_THAT(r.recall, Catch::Matchers::WithinAbs(0.9, 1e-15));
  CHECK_THAT(r.f1, Catch::Matchers::WithinAbs(0.9, 1e-15));
  CHECK_THAT(r.accuracy, Catch::Matchers::WithinAbs(0.9, 1e-15));
  CHECK_THAT(r.tnr, Catch::Matchers::WithinAbs(0.9, 1e-15));
}

TEST_CASE("no predicted positives flags precision as undefined") {
  const EvalReport r = classification_report({0, 0, 0, 0}, {1, 1, 0, 0});
  CHECK(r.precision == 0.0);
  CHECK(r.precision_undefined);
  CHECK(r.recall == 0.0);
  CHECK_FALSE(r.recall_undefined);
}

TEST_CASE("all-correct predictions score 1 everywhere") {
  const EvalReport r = classification_report({1, 0, 1, 0}, {1, 0, 1, 0});
  CHECK(r.accuracy == 1.0);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
  CHECK(r.tnr == 1.0);
}

TEST_CASE("report rejects mismatched or empty inputs") {
  REQUIRE_THROWS_AS(classification_report({1}, {1, 0}), DataError);
  REQUIRE_THROWS_AS(classification_report(std::vector<int>{}, std::vector<int>{}),
                    DataError);
}

TEST_CASE("empirical cdf counts duplicates") {
  const auto cdf = empirical_cdf({0.0, 0.0, 1.0});
  REQUIRE(cdf.size() == 2);
  CHECK(cdf[0].first == 0.0);
  CHECK_THAT(cdf[0].second, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-15));
  CHECK(cdf[1].first == 1.0);
  CHECK(cdf[1].second == 1.0);
}

TEST_CASE("empirical cdf of identical values is a single step") {
  const auto cdf = empirical_cdf({3.5, 3.5, 3.5});
  REQUIRE(cdf.size() == 1);
  CHECK(cdf[0] == std::pair<double, double>{3.5, 1.0});
}

TEST_CASE("empirical cdf is non-decreasing and ends at one") {
  Rng rng(15);
  std::vector<double> values;
  for (int i = 0; i < 400; ++i) values.push_back(rng.next_double() * 10.0);
  const auto cdf = empirical_cdf(values);
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    CHECK(cdf[i].first > cdf[i - 1].first);
    CHECK(cdf[i].second >= cdf[i - 1].second);
  }
  CHECK(cdf.back().second == 1.0);
  REQUIRE_THROWS_AS(empirical_cdf({}), DataError);
}

TEST_CASE("uniform samples stay within the DKW band") {
  Rng rng(16);
  std::vector<double> values;
  for (int i = 0; i < 1000; ++i) values.push_back(rng.next_double());
  const auto cdf = empirical_cdf(values);
  double worst = 0.0;
  double prev_f = 0.0;
  for (const auto& [x, f] : cdf) {
    worst = std::max(worst, std::fabs(f - x));
    worst = std::max(worst, std::fabs(prev_f - x));
    prev_f = f;
  }
  CHECK(worst < 0.06);
}

TEST_CASE("roc points are monotone and anchored") {
  Rng rng(17);
  std::vector<double> scores;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    scores.push_back(static_cast<double>(rng.next_below(30)));
    labels.push_back(static_cast<int>(rng.next_below(2)));
  }
  labels[0] = 1;
  labels[1] = 0;
  const auto pts = roc_points(scores, labels);
  CHECK(pts.front().fpr == 0.0);
  CHECK(pts.front().tpr == 0.0);
  CHECK(pts.back().fpr == 1.0);
  CHECK(pts.back().tpr == 1.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    CHECK(pts[i].fpr >= pts[i - 1].fpr);
    CHECK(pts[i].tpr >= pts[i - 1].tpr);
    CHECK(pts[i].threshold < pts[i - 1].threshold);
  }
}
