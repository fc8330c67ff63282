#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "trollscore/common.hpp"
#include "trollscore/metrics.hpp"
#include "trollscore/rng.hpp"
#include "trollscore/sequence.hpp"

namespace trollscore {

// 11 binary features per account: bit b set iff the sequence visits the
// state-action pair with code b.
struct IndicatorVector {
  std::string account_id;
  std::array<double, kPairAlphabetSize> bits{};
};

inline std::vector<IndicatorVector> indicator_features(
    const std::vector<AccountSequence>& sequences) {
  std::vector<IndicatorVector> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences) {
    IndicatorVector v;
    v.account_id = seq.account_id;
    for (const auto& p : seq.pairs) v.bits[encode_pair(p)] = 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

struct PcaResult {
  std::vector<std::vector<double>> projections;  // n x k
  std::vector<std::vector<double>> components;   // k x dim, orthonormal rows
  std::vector<double> eigenvalues;               // descending
  std::vector<double> explained_variance_ratio;
  std::vector<double> mean;                      // column means
};

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues on the diagonal of `a` and eigenvectors as columns of `v`.
inline void jacobi_eigen(std::vector<std::vector<double>>& a,
                         std::vector<std::vector<double>>& v,
                         double tol = 1e-12, int max_sweeps = 100) {
  const std::size_t n = a.size();
  v.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    }
    if (std::sqrt(off) < tol) return;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a[i][p], aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a[p][i], aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v[i][p], viq = v[i][q];
          v[i][p] = c * vip - s * viq;
          v[i][q] = s * vip + c * viq;
        }
      }
    }
  }
}

}  // namespace detail

// Mean-centred PCA via Jacobi rotations on the covariance matrix. Sign
// convention: each component's largest-magnitude entry is positive, so
// projections are stable across runs.
inline PcaResult pca_project(const std::vector<std::vector<double>>& data,
                             std::size_t n_components = 2) {
  if (data.size() < 2) throw DataError("pca_project: need at least 2 vectors");
  const std::size_t n = data.size();
  const std::size_t dim = data[0].size();
  for (const auto& row : data) {
    if (row.size() != dim) throw DataError("pca_project: ragged input");
  }
  if (n_components == 0 || n_components > dim) {
    throw DataError("pca_project: component count out of range");
  }

  PcaResult res;
  res.mean.assign(dim, 0.0);
  for (const auto& row : data) {
    for (std::size_t j = 0; j < dim; ++j) res.mean[j] += row[j];
  }
  for (auto& m : res.mean) m /= static_cast<double>(n);

  std::vector<std::vector<double>> cov(dim, std::vector<double>(dim, 0.0));
  for (const auto& row : data) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double di = row[i] - res.mean[i];
      for (std::size_t j = i; j < dim; ++j) {
        cov[i][j] += di * (row[j] - res.mean[j]);
      }
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) {
      cov[i][j] /= static_cast<double>(n - 1);
      cov[j][i] = cov[i][j];
    }
  }

  std::vector<std::vector<double>> vecs;
  detail::jacobi_eigen(cov, vecs);

  std::vector<std::size_t> order(dim);
  for (std::size_t i = 0; i < dim; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return cov[a][a] > cov[b][b]; });

  double total_var = 0.0;
  for (std::size_t i = 0; i < dim; ++i) total_var += std::max(0.0, cov[i][i]);

  for (std::size_t k = 0; k < n_components; ++k) {
    const std::size_t col = order[k];
    std::vector<double> comp(dim);
    for (std::size_t i = 0; i < dim; ++i) comp[i] = vecs[i][col];
    std::size_t arg = 0;
    for (std::size_t i = 1; i < dim; ++i) {
      if (std::fabs(comp[i]) > std::fabs(comp[arg])) arg = i;
    }
    if (comp[arg] < 0.0) {
      for (auto& c : comp) c = -c;
    }
    res.components.push_back(std::move(comp));
    res.eigenvalues.push_back(cov[col][col]);
    res.explained_variance_ratio.push_back(
        total_var > 0.0 ? std::max(0.0, cov[col][col]) / total_var : 0.0);
  }

  res.projections.assign(n, std::vector<double>(n_components, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k < n_components; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        s += (data[r][j] - res.mean[j]) * res.components[k][j];
      }
      res.projections[r][k] = s;
    }
  }
  return res;
}

struct KmeansResult {
  std::vector<std::size_t> assignment;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;  // within-cluster sum of squared distances
  std::size_t iterations = 0;
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding, deterministic given the seed.
inline KmeansResult kmeans(const std::vector<std::vector<double>>& points,
                           std::size_t k, std::uint64_t rng_seed,
                           std::size_t max_iters = 100) {
  if (k == 0 || k > points.size()) {
    throw DataError("kmeans: k must be in [1, #points]");
  }
  Rng rng(rng_seed);
  KmeansResult res;

  // k-means++ seeding
  res.centroids.push_back(points[rng.next_below(points.size())]);
  std::vector<double> d2(points.size());
  while (res.centroids.size() < k) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : res.centroids) {
        best = std::min(best, detail::sq_dist(points[i], c));
      }
      d2[i] = best;
    }
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t chosen;
    if (total > 0.0) {
      chosen = rng.categorical(d2);
    } else {
      chosen = rng.next_below(points.size());  // all points coincide
    }
    res.centroids.push_back(points[chosen]);
  }

  res.assignment.assign(points.size(), 0);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      std::size_t best = 0;
      double best_d = detail::sq_dist(points[i], res.centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = detail::sq_dist(points[i], res.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (res.assignment[i] != best) {
        res.assignment[i] = best;
        changed = true;
      }
    }
    res.iterations = iter + 1;
    std::vector<std::vector<double>> sums(k, std::vector<double>(points[0].size(), 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++counts[res.assignment[i]];
      for (std::size_t j = 0; j < points[i].size(); ++j) {
        sums[res.assignment[i]][j] += points[i][j];
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t j = 0; j < sums[c].size(); ++j) {
        res.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
      }
    }
    if (!changed && iter > 0) break;
  }
  res.inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    res.inertia += detail::sq_dist(points[i], res.centroids[res.assignment[i]]);
  }
  return res;
}

struct ClusterSummary {
  std::size_t cluster = 0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  // empirical CDF of member troll scores, when scores were provided
  std::vector<std::pair<double, double>> positive_score_cdf;
  std::vector<std::pair<double, double>> negative_score_cdf;
};

struct ClusterReport {
  std::vector<ClusterSummary> clusters;
};

// Per-cluster class counts and troll-score CDFs. `troll_scores` may be
// empty; entries align with `assignment` and `labels`.
inline ClusterReport cluster_report(const std::vector<std::size_t>& assignment,
                                    const std::vector<Label>& labels,
                                    const std::vector<double>& troll_scores = {}) {
  if (assignment.size() != labels.size()) {
    throw DataError("cluster_report: assignment and labels differ in length");
  }
  if (!troll_scores.empty() && troll_scores.size() != assignment.size()) {
    throw DataError("cluster_report: troll scores differ in length");
  }
  std::size_t k = 0;
  for (std::size_t c : assignment) k = std::max(k, c + 1);
  ClusterReport report;
  for (std::size_t c = 0; c < k; ++c) {
    ClusterSummary s;
    s.cluster = c;
    std::vector<double> pos_scores, neg_scores;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (assignment[i] != c) continue;
      if (labels[i] == Label::positive) {
        ++s.n_positive;
        if (!troll_scores.empty()) pos_scores.push_back(troll_scores[i]);
      } else {
        ++s.n_negative;
        if (!troll_scores.empty()) neg_scores.push_back(troll_scores[i]);
      }
    }
    if (!pos_scores.empty()) s.positive_score_cdf = empirical_cdf(pos_scores);
    if (!neg_scores.empty()) s.negative_score_cdf = empirical_cdf(neg_scores);
    report.clusters.push_back(std::move(s));
  }
  return report;
}

}  // namespace trollscore
