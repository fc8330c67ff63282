#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "trollscore/common.hpp"
#include "trollscore/ingest.hpp"
#include "trollscore/metrics.hpp"
#include "trollscore/nn.hpp"
#include "trollscore/rng.hpp"
#include "trollscore/trajectory.hpp"

namespace trollscore {

// Randomly drops majority-class trajectories (without replacement, seeded)
// down to the minority count. Minority instances are all preserved and the
// original order is kept.
inline TrajectoryDataset undersample(const TrajectoryDataset& ds,
                                     std::uint64_t rng_seed) {
  if (ds.n_positive == 0 || ds.n_negative == 0) {
    throw DataError("undersample: both classes must be non-empty");
  }
  const Label majority =
      ds.n_positive > ds.n_negative ? Label::positive : Label::negative;
  const std::size_t minority_count = std::min(ds.n_positive, ds.n_negative);

  std::vector<std::size_t> majority_idx;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    if (ds.trajectories[i].label == majority) majority_idx.push_back(i);
  }
  Rng rng(rng_seed);
  rng.shuffle(majority_idx);
  majority_idx.resize(minority_count);
  std::sort(majority_idx.begin(), majority_idx.end());

  TrajectoryDataset out;
  out.window = ds.window;
  out.alphabet_size = ds.alphabet_size;
  std::size_t next_kept = 0;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const bool is_majority = ds.trajectories[i].label == majority;
    if (is_majority) {
      if (next_kept < majority_idx.size() && majority_idx[next_kept] == i) {
        ++next_kept;
      } else {
        continue;
      }
    }
    const auto& t = ds.trajectories[i];
    if (t.label == Label::positive) {
      ++out.n_positive;
    } else {
      ++out.n_negative;
    }
    out.trajectories.push_back(t);
  }
  return out;
}

struct FoldPlan {
  std::size_t k = 0;
  std::map<std::string, std::size_t> assignment;  // account -> fold
  // [fold] -> {positives, negatives}
  std::vector<std::pair<std::size_t, std::size_t>> class_counts;

  std::vector<std::string> fold_accounts(std::size_t fold) const {
    std::vector<std::string> out;
    for (const auto& [id, f] : assignment) {
      if (f == fold) out.push_back(id);
    }
    return out;
  }
};

// Accounts shuffled per class (seeded) and dealt round-robin, so per-fold
// class counts differ by at most one.
inline FoldPlan stratified_kfold(const LabelMap& labels, std::size_t k,
                                 std::uint64_t rng_seed) {
  if (k < 2) throw DataError("stratified_kfold: k must be >= 2");
  std::vector<std::string> pos, neg;
  for (const auto& [id, label] : labels) {
    (label == Label::positive ? pos : neg).push_back(id);
  }
  if (pos.size() < k || neg.size() < k) {
    throw DataError("stratified_kfold: every class needs at least k accounts (k=" +
                    std::to_string(k) + ", positives=" + std::to_string(pos.size()) +
                    ", negatives=" + std::to_string(neg.size()) + ")");
  }
  FoldPlan plan;
  plan.k = k;
  plan.class_counts.assign(k, {0, 0});
  Rng rng(rng_seed);
  rng.shuffle(pos);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    plan.assignment[pos[i]] = i % k;
    plan.class_counts[i % k].first++;
  }
  rng.shuffle(neg);
  for (std::size_t i = 0; i < neg.size(); ++i) {
    plan.assignment[neg[i]] = i % k;
    plan.class_counts[i % k].second++;
  }
  return plan;
}

// Stratified account holdout (validation split for early stopping).
struct AccountSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> holdout_ids;
};

inline AccountSplit split_accounts(const LabelMap& labels, double holdout_frac,
                                   std::uint64_t rng_seed) {
  if (holdout_frac < 0.0 || holdout_frac >= 1.0) {
    throw DataError("split_accounts: holdout fraction must be in [0, 1)");
  }
  AccountSplit split;
  Rng rng(rng_seed);
  for (Label cls : {Label::positive, Label::negative}) {
    std::vector<std::string> ids;
    for (const auto& [id, label] : labels) {
      if (label == cls) ids.push_back(id);
    }
    rng.shuffle(ids);
    std::size_t n_hold = static_cast<std::size_t>(
        std::floor(holdout_frac * static_cast<double>(ids.size())));
    if (holdout_frac > 0.0 && n_hold == 0 && ids.size() >= 2) n_hold = 1;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      (i < n_hold ? split.holdout_ids : split.train_ids).push_back(ids[i]);
    }
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.holdout_ids.begin(), split.holdout_ids.end());
  return split;
}

inline std::vector<int> dataset_labels(const TrajectoryDataset& ds) {
  std::vector<int> y;
  y.reserve(ds.trajectories.size());
  for (const auto& t : ds.trajectories) {
    if (!t.label) throw DataError("trajectory without label for account '" +
                                  t.account_id + "'");
    y.push_back(*t.label == Label::positive ? 1 : 0);
  }
  return y;
}

inline std::vector<double> predict_probs(const LstmParams& params,
                                         const std::vector<Trajectory>& ts) {
  if (ts.empty()) return {};
  const std::size_t length = ts[0].codes.size();
  std::vector<const int*> windows;
  windows.reserve(ts.size());
  for (const auto& t : ts) {
    if (t.codes.size() != length) {
      throw DataError("predict_probs: trajectories differ in length");
    }
    windows.push_back(t.codes.data());
  }
  return infer_probs(params, windows, length);
}

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  double val_auc = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  LstmParams params;
  std::vector<EpochStats> log;
  std::size_t best_epoch = 0;  // 1-based; 0 when no validation was used
};

// Mini-batch training with seeded shuffling, global-norm clipping, Adam,
// and early stopping on validation loss. Returns the parameters from the
// best validation epoch (final parameters when `val` is empty).
inline TrainResult train_classifier(const TrajectoryDataset& train,
                                    const TrajectoryDataset& val,
                                    const TrainConfig& config) {
  config.validate();
  if (train.trajectories.empty()) throw DataError("train_classifier: empty dataset");
  for (const auto& t : train.trajectories) {
    if (t.codes.size() != config.window) {
      throw DataError("train_classifier: trajectory length does not match config L");
    }
  }

  const std::vector<int> y_train = dataset_labels(train);
  const std::vector<int> y_val = dataset_labels(val);
  const bool has_val = !val.trajectories.empty();
  std::size_t val_pos = 0;
  for (int y : y_val) val_pos += static_cast<std::size_t>(y);
  const bool val_both_classes = val_pos > 0 && val_pos < y_val.size();

  TrainResult result;
  result.params = init_params(config, config.rng_seed);
  AdamState adam(result.params.size());
  Rng shuffle_rng = Rng::derive(config.rng_seed, 0xd5);
  Rng dropout_rng = Rng::derive(config.rng_seed, 0xd0);

  LstmParams best = result.params;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs = 0;

  std::vector<std::size_t> order(train.trajectories.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  ForwardCache cache;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      LstmParams grads = result.params.zeros_like();
      for (std::size_t i = start; i < end; ++i) {
        const Trajectory& t = train.trajectories[order[i]];
        const double p = forward_train(result.params, t.codes, config.dropout_rate,
                                       dropout_rng, cache);
        epoch_loss += loss_bce(p, y_train[order[i]]);
        backward(result.params, cache, y_train[order[i]], grads, inv_batch);
      }
      clip_gradients(grads, config.grad_clip_norm);
      adam_step(result.params, grads, adam, config);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(order.size());
    if (has_val) {
      const auto probs = predict_probs(result.params, val.trajectories);
      double vloss = 0.0;
      for (std::size_t i = 0; i < probs.size(); ++i) {
        vloss += loss_bce(probs[i], y_val[i]);
      }
      stats.val_loss = vloss / static_cast<double>(probs.size());
      if (val_both_classes) stats.val_auc = roc_auc(probs, y_val);
    }
    result.log.push_back(stats);

    if (has_val) {
      if (stats.val_loss < best_val) {
        best_val = stats.val_loss;
        best = result.params;
        result.best_epoch = epoch;
        bad_epochs = 0;
      } else {
        ++bad_epochs;
        if (bad_epochs > config.early_stop_patience) break;
      }
    }
  }
  if (has_val) result.params = best;
  return result;
}

// Candidate ranges for the random hyper-parameter search.
struct SearchSpace {
  std::vector<int> hidden_widths = {16, 32, 64, 128};
  double dropout_lo = 0.1;
  double dropout_hi = 0.5;
  double lr_lo = 1e-4;   // log-uniform
  double lr_hi = 1e-2;
  std::vector<std::size_t> batch_sizes = {32, 64, 128};
  std::size_t budget = 10;
  std::uint64_t rng_seed = 1;
};

struct SearchTrial {
  std::size_t trial = 0;
  TrainConfig config;
  double val_auc = 0.0;
  double val_loss = 0.0;
  std::size_t best_epoch = 0;
};

struct SearchResult {
  TrainConfig best_config;
  std::size_t best_trial = 0;
  std::vector<SearchTrial> trials;
};

// Trial t's configuration depends only on (seed, t), so extending the
// budget keeps earlier trials identical.
inline TrainConfig sample_search_config(const SearchSpace& space,
                                        const TrainConfig& base, std::size_t trial) {
  Rng rng = Rng::derive(space.rng_seed, trial);
  TrainConfig c = base;
  const int width = space.hidden_widths[rng.next_below(space.hidden_widths.size())];
  c.hidden_sizes.assign(base.hidden_sizes.size(), width);
  c.dropout_rate = rng.uniform(space.dropout_lo, space.dropout_hi);
  c.learning_rate = std::exp(rng.uniform(std::log(space.lr_lo), std::log(space.lr_hi)));
  c.batch_size = space.batch_sizes[rng.next_below(space.batch_sizes.size())];
  c.rng_seed = splitmix64(space.rng_seed ^ (trial + 1));
  return c;
}

// Samples `budget` configurations, trains each on (train, val), and returns
// the one with the best validation AUC (ties to the lowest trial index).
inline SearchResult random_search(const TrajectoryDataset& train,
                                  const TrajectoryDataset& val,
                                  const TrainConfig& base, const SearchSpace& space) {
  if (space.budget < 1) throw DataError("random_search: budget must be >= 1");
  if (val.trajectories.empty()) {
    throw DataError("random_search: validation set must be non-empty");
  }
  SearchResult result;
  double best_auc = -1.0;
  for (std::size_t trial = 0; trial < space.budget; ++trial) {
    SearchTrial st;
    st.trial = trial;
    st.config = sample_search_config(space, base, trial);
    TrainResult tr = train_classifier(train, val, st.config);
    const auto probs = predict_probs(tr.params, val.trajectories);
    st.val_auc = roc_auc(probs, dataset_labels(val));
    double vloss = 0.0;
    const auto y_val = dataset_labels(val);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      vloss += loss_bce(probs[i], y_val[i]);
    }
    st.val_loss = vloss / static_cast<double>(probs.size());
    st.best_epoch = tr.best_epoch;
    if (st.val_auc > best_auc) {
      best_auc = st.val_auc;
      result.best_config = st.config;
      result.best_trial = trial;
    }
    result.trials.push_back(std::move(st));
  }
  return result;
}

}  // namespace trollscore
