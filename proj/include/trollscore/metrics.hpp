#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "trollscore/common.hpp"

namespace trollscore {

// Rank-based (Mann-Whitney) AUC with ties counted half. Equivalent to the
// trapezoidal area under the ROC curve.
inline double roc_auc(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw DataError("roc_auc: scores and labels differ in length");
  }
  std::size_t n_pos = 0, n_neg = 0;
  for (int y : labels) (y ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("roc_auc: both classes must be present");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // average ranks over tie groups, 1-based
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) pos_rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

// Confusion-matrix metric family. Undefined ratios (0/0) are reported as 0
// with the matching flag set.
struct EvalReport {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double auc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double tnr = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  bool tnr_undefined = false;
  bool auc_set = false;
};

inline ConfusionCounts confusion(const std::vector<int>& predictions,
                                 const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) {
    throw DataError("confusion: predictions and labels differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      (predictions[i] ? c.tp : c.fn)++;
    } else {
      (predictions[i] ? c.fp : c.tn)++;
    }
  }
  return c;
}

inline EvalReport classification_report(const ConfusionCounts& c) {
  if (c.total() == 0) throw DataError("classification_report: empty input");
  EvalReport r;
  r.counts = c;
  r.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp > 0) {
    r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  } else {
    r.precision_undefined = true;
  }
  if (c.tp + c.fn > 0) {
    r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  } else {
    r.recall_undefined = true;
  }
  if (c.tn + c.fp > 0) {
    r.tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  } else {
    r.tnr_undefined = true;
  }
  if (r.precision_undefined || r.recall_undefined || r.precision + r.recall == 0.0) {
    r.f1 = 0.0;
    r.f1_undefined = r.precision_undefined || r.recall_undefined;
  } else {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

inline EvalReport classification_report(const std::vector<int>& predictions,
                                        const std::vector<int>& labels) {
  if (predictions.empty()) throw DataError("classification_report: empty input");
  return classification_report(confusion(predictions, labels));
}

// Right-continuous empirical CDF sampled at the sorted unique values.
inline std::vector<std::pair<double, double>> empirical_cdf(
    const std::vector<double>& values) {
  if (values.empty()) throw DataError("empirical_cdf: empty input");
  std::vector<double> v = values;
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> points;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 == v.size() || v[i + 1] != v[i]) {
      points.emplace_back(v[i], static_cast<double>(i + 1) / n);
    }
  }
  return points;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// ROC polyline: one point per distinct score threshold, descending, with a
// leading (0,0) at threshold +inf.
inline std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                        const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw DataError("roc_points: scores and labels differ in length");
  }
  std::size_t n_pos = 0, n_neg = 0;
  for (int y : labels) (y ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("roc_points: both classes must be present");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> pts;
  pts.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]]) {
        ++tp;
      } else {
        ++fp;
      }
      ++j;
    }
    pts.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                   static_cast<double>(tp) / static_cast<double>(n_pos),
                   scores[order[i]]});
    i = j;
  }
  return pts;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd ms;
  if (xs.empty()) return ms;
  for (double x : xs) ms.mean += x;
  ms.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - ms.mean) * (x - ms.mean);
    ms.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return ms;
}

}  // namespace trollscore
