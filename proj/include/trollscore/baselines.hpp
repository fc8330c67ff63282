#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "trollscore/common.hpp"
#include "trollscore/nn.hpp"
#include "trollscore/trajectory.hpp"
#include "trollscore/train.hpp"

namespace trollscore {

// Logistic regression over flattened one-hot trajectories (dim = alphabet
// size * L), trained by full-batch gradient descent on BCE.
struct LogRegParams {
  std::vector<double> weights;
  double bias = 0.0;
  int alphabet_size = kPairAlphabetSize;
  std::size_t window = 0;
};

struct LogRegConfig {
  double learning_rate = 0.5;
  std::size_t epochs = 200;
};

inline double logreg_predict(const LogRegParams& p, const Trajectory& t) {
  TS_CHECK(t.codes.size() == p.window, "logreg_predict: trajectory length mismatch");
  double z = p.bias;
  for (std::size_t i = 0; i < t.codes.size(); ++i) {
    z += p.weights[i * p.alphabet_size + t.codes[i]];
  }
  return sigmoid(z);
}

// Gradient of the mean BCE: for one-hot inputs this is a scatter of the
// per-sample residual p - y into the active feature slots.
inline void logreg_gradient(const LogRegParams& p, const TrajectoryDataset& ds,
                            const std::vector<int>& y, std::vector<double>* gw,
                            double* gb) {
  gw->assign(p.weights.size(), 0.0);
  *gb = 0.0;
  const double inv_n = 1.0 / static_cast<double>(ds.trajectories.size());
  for (std::size_t s = 0; s < ds.trajectories.size(); ++s) {
    const Trajectory& t = ds.trajectories[s];
    const double resid = (logreg_predict(p, t) - static_cast<double>(y[s])) * inv_n;
    for (std::size_t i = 0; i < t.codes.size(); ++i) {
      (*gw)[i * p.alphabet_size + t.codes[i]] += resid;
    }
    *gb += resid;
  }
}

inline double logreg_mean_loss(const LogRegParams& p, const TrajectoryDataset& ds,
                               const std::vector<int>& y) {
  double loss = 0.0;
  for (std::size_t s = 0; s < ds.trajectories.size(); ++s) {
    loss += loss_bce(logreg_predict(p, ds.trajectories[s]), y[s]);
  }
  return loss / static_cast<double>(ds.trajectories.size());
}

inline LogRegParams train_logreg(const TrajectoryDataset& ds,
                                 const LogRegConfig& config = {}) {
  if (ds.trajectories.empty()) throw DataError("train_logreg: empty dataset");
  LogRegParams p;
  p.alphabet_size = ds.alphabet_size;
  p.window = ds.window;
  p.weights.assign(static_cast<std::size_t>(ds.alphabet_size) * ds.window, 0.0);
  const std::vector<int> y = dataset_labels(ds);
  std::vector<double> gw;
  double gb = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    logreg_gradient(p, ds, y, &gw, &gb);
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      p.weights[i] -= config.learning_rate * gw[i];
    }
    p.bias -= config.learning_rate * gb;
  }
  return p;
}

// k-nearest neighbours under Hamming distance on the raw code arrays
// (rank-equivalent to Euclidean on the one-hot expansion). k must be odd so
// votes cannot tie; distance ties break toward the lower trajectory index.
struct KnnConfig {
  std::size_t k = 5;

  void validate() const {
    if (k == 0 || k % 2 == 0) throw DataError("knn: k must be a positive odd number");
  }
};

struct KnnVote {
  Label label = Label::negative;
  std::size_t positive_votes = 0;

  double positive_fraction(std::size_t k) const {
    return static_cast<double>(positive_votes) / static_cast<double>(k);
  }
};

inline std::size_t hamming(const std::vector<int>& a, const std::vector<int>& b) {
  TS_CHECK(a.size() == b.size(), "hamming: length mismatch");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

inline KnnVote knn_classify(const TrajectoryDataset& train, const Trajectory& query,
                            const KnnConfig& config = {}) {
  config.validate();
  if (train.trajectories.size() < config.k) {
    throw DataError("knn: training set smaller than k");
  }
  // (distance, index), partially sorted; index order breaks distance ties
  std::vector<std::pair<std::size_t, std::size_t>> dist;
  dist.reserve(train.trajectories.size());
  for (std::size_t i = 0; i < train.trajectories.size(); ++i) {
    dist.emplace_back(hamming(train.trajectories[i].codes, query.codes), i);
  }
  std::partial_sort(dist.begin(), dist.begin() + config.k, dist.end());
  KnnVote vote;
  for (std::size_t i = 0; i < config.k; ++i) {
    const auto& t = train.trajectories[dist[i].second];
    if (!t.label) throw DataError("knn: unlabeled training trajectory");
    if (*t.label == Label::positive) ++vote.positive_votes;
  }
  vote.label = 2 * vote.positive_votes > config.k ? Label::positive : Label::negative;
  return vote;
}

}  // namespace trollscore
