#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "trollscore/baselines.hpp"
#include "trollscore/csv.hpp"
#include "trollscore/metrics.hpp"
#include "trollscore/score.hpp"
#include "trollscore/sequence.hpp"
#include "trollscore/synthgen.hpp"
#include "trollscore/train.hpp"
#include "trollscore/trajectory.hpp"

namespace trollscore {

inline constexpr const char* kToolVersion = "0.1.0";

struct CvOptions {
  std::size_t k_folds = 10;
  std::size_t window = 200;
  TrainConfig train;
  double decision_cutoff = 0.5;  // window-level probability cutoff
  double sweep_step = 0.02;
  double holdout_frac = 0.1;     // validation accounts for early stopping
  // troll scores for the threshold sweep come from this many train-fold
  // accounts per class (0 = use every train-fold account)
  std::size_t sweep_accounts_per_class = 0;
  bool actions_only = false;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct FoldOutcome {
  std::size_t fold = 0;
  double threshold = 0.0;
  double trajectory_auc = 0.0;
  double account_auc = 0.0;
  EvalReport account_report;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::size_t n_train_trajectories = 0;
  std::vector<EpochStats> log;
};

struct CvResult {
  FoldPlan plan;
  std::vector<FoldOutcome> folds;
  std::vector<TrollScoreEntry> account_scores;  // every scorable account, out-of-fold
  std::vector<std::string> unscorable;
  double pooled_account_auc = 0.0;
  double pooled_trajectory_auc = 0.0;
  MeanStd account_auc_folds, trajectory_auc_folds;
  MeanStd accuracy_folds, precision_folds, recall_folds, f1_folds, tnr_folds;
};

namespace detail {

inline LabelMap submap(const LabelMap& labels, const std::vector<std::string>& ids) {
  LabelMap out;
  for (const auto& id : ids) {
    auto it = labels.find(id);
    if (it == labels.end()) throw DataError("no label for account '" + id + "'");
    out.emplace(*it);
  }
  return out;
}

inline std::vector<int> entry_labels(const std::vector<TrollScoreEntry>& entries) {
  std::vector<int> y;
  y.reserve(entries.size());
  for (const auto& e : entries) {
    if (!e.true_label) throw DataError("score entry without true label");
    y.push_back(*e.true_label == Label::positive ? 1 : 0);
  }
  return y;
}

// Stratified seeded pick of up to n accounts per class.
inline std::vector<std::string> pick_per_class(const LabelMap& labels, std::size_t n,
                                               std::uint64_t seed) {
  std::vector<std::string> picked;
  Rng rng(seed);
  for (Label cls : {Label::positive, Label::negative}) {
    std::vector<std::string> ids;
    for (const auto& [id, label] : labels) {
      if (label == cls) ids.push_back(id);
    }
    rng.shuffle(ids);
    for (std::size_t i = 0; i < ids.size() && i < n; ++i) picked.push_back(ids[i]);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace detail

// Assembles labeled non-overlapping trajectory datasets from either pair
// codes or action-only codes.
inline TrajectoryDataset make_dataset(const std::vector<CodedSequence>& seqs,
                                      const LabelMap& labels, std::size_t window,
                                      int alphabet_size) {
  TrajectoryDataset ds;
  ds.window = window;
  ds.alphabet_size = alphabet_size;
  for (const auto& seq : seqs) {
    auto it = labels.find(seq.account_id);
    if (it == labels.end()) continue;
    for (auto& t : chunk_codes(seq.account_id, seq.codes, window)) {
      t.label = it->second;
      if (it->second == Label::positive) {
        ++ds.n_positive;
      } else {
        ++ds.n_negative;
      }
      ds.trajectories.push_back(std::move(t));
    }
  }
  return ds;
}

// Full cross-validation protocol: per fold, train on the remaining folds
// (undersampled, with a stratified account holdout for early stopping),
// pick the Troll Score threshold on train-fold accounts, then score and
// classify the held-out fold. Every account is scored exactly once,
// out-of-fold.
inline CvResult run_cv(const std::vector<AccountSequence>& sequences,
                       const LabelMap& labels, const CvOptions& opts) {
  const int alphabet =
      opts.actions_only ? kActionAlphabetSize : kPairAlphabetSize;
  std::vector<CodedSequence> coded_seqs;
  std::map<std::string, const CodedSequence*> by_id;
  for (const auto& s : sequences) {
    if (!labels.count(s.account_id)) {
      throw DataError("no label for account '" + s.account_id + "'");
    }
    coded_seqs.push_back(coded(s, opts.actions_only));
  }
  for (const auto& c : coded_seqs) by_id[c.account_id] = &c;

  CvResult result;
  result.plan = stratified_kfold(labels, opts.k_folds, Rng::derive(opts.seed, 1).next_u64());

  std::vector<double> pooled_traj_probs;
  std::vector<int> pooled_traj_labels;
  std::vector<double> acc_auc, traj_auc, accs, precs, recs, f1s, tnrs;

  for (std::size_t fold = 0; fold < opts.k_folds; ++fold) {
    const auto test_ids = result.plan.fold_accounts(fold);
    std::vector<std::string> train_ids;
    for (const auto& [id, f] : result.plan.assignment) {
      if (f != fold) train_ids.push_back(id);
    }
    const LabelMap train_labels = detail::submap(labels, train_ids);
    const LabelMap test_labels = detail::submap(labels, test_ids);

    // stratified account holdout inside the training folds
    const AccountSplit split = split_accounts(
        train_labels, opts.holdout_frac, Rng::derive(opts.seed, 100 + fold).next_u64());

    auto select = [&](const std::vector<std::string>& ids) {
      std::vector<CodedSequence> out;
      for (const auto& id : ids) out.push_back(*by_id.at(id));
      return out;
    };

    TrajectoryDataset train_ds = make_dataset(
        select(split.train_ids), train_labels, opts.window, alphabet);
    TrajectoryDataset val_ds = make_dataset(
        select(split.holdout_ids), train_labels, opts.window, alphabet);
    train_ds = undersample(train_ds, Rng::derive(opts.seed, 200 + fold).next_u64());

    TrainConfig config = opts.train;
    config.window = opts.window;
    config.input_size = alphabet;
    config.rng_seed = Rng::derive(opts.seed, 300 + fold).next_u64();
    const TrainResult trained = train_classifier(train_ds, val_ds, config);

    FoldOutcome outcome;
    outcome.fold = fold;
    outcome.epochs_run = trained.log.size();
    outcome.best_epoch = trained.best_epoch;
    outcome.n_train_trajectories = train_ds.trajectories.size();
    outcome.log = trained.log;

    // held-out trajectory classification
    TrajectoryDataset test_ds =
        make_dataset(select(test_ids), test_labels, opts.window, alphabet);
    const auto test_probs = predict_probs(trained.params, test_ds.trajectories);
    const auto test_y = dataset_labels(test_ds);
    outcome.trajectory_auc = roc_auc(test_probs, test_y);
    pooled_traj_probs.insert(pooled_traj_probs.end(), test_probs.begin(),
                             test_probs.end());
    pooled_traj_labels.insert(pooled_traj_labels.end(), test_y.begin(), test_y.end());

    // threshold sweep on train-fold troll scores
    std::vector<std::string> sweep_ids = train_ids;
    if (opts.sweep_accounts_per_class > 0) {
      sweep_ids = detail::pick_per_class(
          train_labels, opts.sweep_accounts_per_class,
          Rng::derive(opts.seed, 400 + fold).next_u64());
    }
    TrollScoreReport sweep_scores =
        score_accounts(trained.params, select(sweep_ids), opts.window,
                       opts.decision_cutoff, opts.threads);
    for (auto& e : sweep_scores.entries) e.true_label = train_labels.at(e.account_id);
    const ThresholdChoice choice =
        sweep_threshold(sweep_scores.entries, opts.sweep_step);
    outcome.threshold = choice.threshold;

    // score and classify the held-out fold
    TrollScoreReport test_scores =
        score_accounts(trained.params, select(test_ids), opts.window,
                       opts.decision_cutoff, opts.threads);
    for (auto& e : test_scores.entries) e.true_label = test_labels.at(e.account_id);
    test_scores.entries = classify_accounts(test_scores.entries, choice.threshold);

    std::vector<double> fold_scores;
    std::vector<int> fold_pred, fold_y;
    for (const auto& e : test_scores.entries) {
      fold_scores.push_back(e.troll_score);
      fold_pred.push_back(*e.predicted == Label::positive ? 1 : 0);
      fold_y.push_back(*e.true_label == Label::positive ? 1 : 0);
    }
    outcome.account_auc = roc_auc(fold_scores, fold_y);
    outcome.account_report = classification_report(fold_pred, fold_y);
    outcome.account_report.auc = outcome.account_auc;
    outcome.account_report.auc_set = true;

    acc_auc.push_back(outcome.account_auc);
    traj_auc.push_back(outcome.trajectory_auc);
    accs.push_back(outcome.account_report.accuracy);
    precs.push_back(outcome.account_report.precision);
    recs.push_back(outcome.account_report.recall);
    f1s.push_back(outcome.account_report.f1);
    tnrs.push_back(outcome.account_report.tnr);

    result.account_scores.insert(result.account_scores.end(),
                                 test_scores.entries.begin(),
                                 test_scores.entries.end());
    result.unscorable.insert(result.unscorable.end(), test_scores.unscorable.begin(),
                             test_scores.unscorable.end());
    result.folds.push_back(std::move(outcome));
  }

  std::sort(result.account_scores.begin(), result.account_scores.end(),
            [](const TrollScoreEntry& a, const TrollScoreEntry& b) {
              return a.account_id < b.account_id;
            });
  std::sort(result.unscorable.begin(), result.unscorable.end());

  std::vector<double> pooled_scores;
  std::vector<int> pooled_y;
  for (const auto& e : result.account_scores) {
    pooled_scores.push_back(e.troll_score);
    pooled_y.push_back(*e.true_label == Label::positive ? 1 : 0);
  }
  result.pooled_account_auc = roc_auc(pooled_scores, pooled_y);
  result.pooled_trajectory_auc = roc_auc(pooled_traj_probs, pooled_traj_labels);
  result.account_auc_folds = mean_std(acc_auc);
  result.trajectory_auc_folds = mean_std(traj_auc);
  result.accuracy_folds = mean_std(accs);
  result.precision_folds = mean_std(precs);
  result.recall_folds = mean_std(recs);
  result.f1_folds = mean_std(f1s);
  result.tnr_folds = mean_std(tnrs);
  return result;
}

// ---- trajectory-level cross-validation --------------------------------------
//
// Alternative fold unit for the trajectory-classification experiment. A
// trajectory-level split leaks account identity between train and test
// folds (the account-level split above is the honest default); it exists
// to quantify exactly that difference. Troll Score account classification
// is inherently account-scoped, so this mode evaluates trajectory
// classification only.

struct TrajectoryFoldOutcome {
  std::size_t fold = 0;
  double auc = 0.0;
  std::size_t n_train_trajectories = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::vector<EpochStats> log;
};

struct TrajectoryCvResult {
  std::vector<TrajectoryFoldOutcome> folds;
  double pooled_auc = 0.0;
  MeanStd auc_folds;
};

inline TrajectoryCvResult run_trajectory_cv(
    const std::vector<AccountSequence>& sequences, const LabelMap& labels,
    const CvOptions& opts) {
  const int alphabet =
      opts.actions_only ? kActionAlphabetSize : kPairAlphabetSize;
  const TrajectoryDataset all = make_dataset(
      coded_all(sequences, opts.actions_only), labels, opts.window, alphabet);
  if (all.n_positive < opts.k_folds || all.n_negative < opts.k_folds) {
    throw DataError("trajectory cv: every class needs at least k trajectories");
  }

  // stratified fold assignment over trajectory indices
  std::vector<std::size_t> fold_of(all.trajectories.size());
  {
    Rng rng = Rng::derive(opts.seed, 2);
    for (Label cls : {Label::positive, Label::negative}) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < all.trajectories.size(); ++i) {
        if (*all.trajectories[i].label == cls) idx.push_back(i);
      }
      rng.shuffle(idx);
      for (std::size_t i = 0; i < idx.size(); ++i) fold_of[idx[i]] = i % opts.k_folds;
    }
  }

  auto subset = [&](auto&& keep) {
    TrajectoryDataset ds;
    ds.window = all.window;
    ds.alphabet_size = all.alphabet_size;
    for (std::size_t i = 0; i < all.trajectories.size(); ++i) {
      if (!keep(i)) continue;
      ds.trajectories.push_back(all.trajectories[i]);
      if (*all.trajectories[i].label == Label::positive) {
        ++ds.n_positive;
      } else {
        ++ds.n_negative;
      }
    }
    return ds;
  };

  TrajectoryCvResult result;
  std::vector<double> pooled_probs, fold_aucs;
  std::vector<int> pooled_labels;
  for (std::size_t fold = 0; fold < opts.k_folds; ++fold) {
    TrajectoryDataset train_pool =
        subset([&](std::size_t i) { return fold_of[i] != fold; });
    const TrajectoryDataset test =
        subset([&](std::size_t i) { return fold_of[i] == fold; });
    train_pool = undersample(train_pool, Rng::derive(opts.seed, 200 + fold).next_u64());

    // stratified trajectory holdout for early stopping
    std::vector<char> is_val(train_pool.trajectories.size(), 0);
    {
      Rng rng = Rng::derive(opts.seed, 100 + fold);
      for (Label cls : {Label::positive, Label::negative}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < train_pool.trajectories.size(); ++i) {
          if (*train_pool.trajectories[i].label == cls) idx.push_back(i);
        }
        rng.shuffle(idx);
        std::size_t n_hold = static_cast<std::size_t>(
            std::floor(opts.holdout_frac * static_cast<double>(idx.size())));
        if (opts.holdout_frac > 0.0 && n_hold == 0 && idx.size() >= 2) n_hold = 1;
        for (std::size_t i = 0; i < n_hold; ++i) is_val[idx[i]] = 1;
      }
    }
    TrajectoryDataset train_ds, val_ds;
    train_ds.window = val_ds.window = train_pool.window;
    train_ds.alphabet_size = val_ds.alphabet_size = train_pool.alphabet_size;
    for (std::size_t i = 0; i < train_pool.trajectories.size(); ++i) {
      TrajectoryDataset& dst = is_val[i] ? val_ds : train_ds;
      dst.trajectories.push_back(train_pool.trajectories[i]);
      if (*train_pool.trajectories[i].label == Label::positive) {
        ++dst.n_positive;
      } else {
        ++dst.n_negative;
      }
    }

    TrainConfig config = opts.train;
    config.window = opts.window;
    config.input_size = alphabet;
    config.rng_seed = Rng::derive(opts.seed, 300 + fold).next_u64();
    const TrainResult trained = train_classifier(train_ds, val_ds, config);

    const auto probs = predict_probs(trained.params, test.trajectories);
    const auto y = dataset_labels(test);
    TrajectoryFoldOutcome outcome;
    outcome.fold = fold;
    outcome.auc = roc_auc(probs, y);
    outcome.n_train_trajectories = train_ds.trajectories.size();
    outcome.epochs_run = trained.log.size();
    outcome.best_epoch = trained.best_epoch;
    outcome.log = trained.log;
    fold_aucs.push_back(outcome.auc);
    pooled_probs.insert(pooled_probs.end(), probs.begin(), probs.end());
    pooled_labels.insert(pooled_labels.end(), y.begin(), y.end());
    result.folds.push_back(std::move(outcome));
  }
  result.pooled_auc = roc_auc(pooled_probs, pooled_labels);
  result.auc_folds = mean_std(fold_aucs);
  return result;
}

// ---- report files ---------------------------------------------------------

inline std::string label_cell(const std::optional<Label>& l) {
  return l ? label_name(*l) : "";
}

// 0/0 ratios are reported as 0; this cell says which ones, e.g. "precision|f1".
inline std::string undefined_flags(const EvalReport& r) {
  std::string out;
  auto add = [&](bool flag, const char* name) {
    if (!flag) return;
    if (!out.empty()) out += '|';
    out += name;
  };
  add(r.precision_undefined, "precision");
  add(r.recall_undefined, "recall");
  add(r.f1_undefined, "f1");
  add(r.tnr_undefined, "tnr");
  return out;
}

inline void write_score_csv(const std::vector<TrollScoreEntry>& entries,
                            const std::string& path) {
  CsvWriter w(path);
  w.row({"account_id", "n_windows", "troll_score", "true_label", "predicted"});
  for (const auto& e : entries) {
    w.row({e.account_id, std::to_string(e.n_windows), fmt_double(e.troll_score),
           label_cell(e.true_label), label_cell(e.predicted)});
  }
}

inline void write_unscorable_csv(const std::vector<std::string>& ids,
                                 const std::string& path) {
  CsvWriter w(path);
  w.row({"account_id"});
  for (const auto& id : ids) w.row({id});
}

inline void write_sweep_csv(const ThresholdChoice& choice, const std::string& path) {
  CsvWriter w(path);
  w.row({"threshold", "balanced_accuracy", "accuracy", "precision", "recall", "f1"});
  for (const auto& r : choice.table) {
    w.row({fmt_double(r.threshold), fmt_double(r.balanced_accuracy),
           fmt_double(r.accuracy), fmt_double(r.precision), fmt_double(r.recall),
           fmt_double(r.f1)});
  }
}

inline void write_cdf_csv(const std::vector<std::pair<double, double>>& cdf,
                          const std::string& path) {
  CsvWriter w(path);
  w.row({"x", "cdf"});
  for (const auto& [x, f] : cdf) w.row({fmt_double(x), fmt_double(f)});
}

inline void write_roc_csv(const std::vector<RocPoint>& pts, const std::string& path) {
  CsvWriter w(path);
  w.row({"fpr", "tpr", "threshold"});
  for (const auto& p : pts) {
    w.row({fmt_double(p.fpr), fmt_double(p.tpr), fmt_double(p.threshold)});
  }
}

inline void write_training_log_csv(const std::vector<EpochStats>& log,
                                   const std::string& path) {
  CsvWriter w(path);
  w.row({"epoch", "train_loss", "val_loss", "val_auc"});
  for (const auto& e : log) {
    w.row({std::to_string(e.epoch), fmt_double(e.train_loss),
           fmt_double(e.val_loss), fmt_double(e.val_auc)});
  }
}

inline void write_cv_reports(const CvResult& cv, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto p = [&](const std::string& name) { return out_dir + "/" + name; };

  {
    CsvWriter w(p("account_eval.csv"));
    w.row({"fold", "threshold", "auc", "accuracy", "precision", "recall", "f1",
           "tnr", "tp", "fp", "tn", "fn", "undefined"});
    for (const auto& f : cv.folds) {
      const auto& r = f.account_report;
      w.row({std::to_string(f.fold), fmt_double(f.threshold), fmt_double(f.account_auc),
             fmt_double(r.accuracy), fmt_double(r.precision), fmt_double(r.recall),
             fmt_double(r.f1), fmt_double(r.tnr), std::to_string(r.counts.tp),
             std::to_string(r.counts.fp), std::to_string(r.counts.tn),
             std::to_string(r.counts.fn), undefined_flags(r)});
    }
    w.row({"mean", "", fmt_double(cv.account_auc_folds.mean),
           fmt_double(cv.accuracy_folds.mean), fmt_double(cv.precision_folds.mean),
           fmt_double(cv.recall_folds.mean), fmt_double(cv.f1_folds.mean),
           fmt_double(cv.tnr_folds.mean), "", "", "", "", ""});
    w.row({"std", "", fmt_double(cv.account_auc_folds.std),
           fmt_double(cv.accuracy_folds.std), fmt_double(cv.precision_folds.std),
           fmt_double(cv.recall_folds.std), fmt_double(cv.f1_folds.std),
           fmt_double(cv.tnr_folds.std), "", "", "", "", ""});
    w.row({"pooled", "", fmt_double(cv.pooled_account_auc), "", "", "", "", "", "",
           "", "", "", ""});
  }
  {
    CsvWriter w(p("trajectory_eval.csv"));
    w.row({"fold", "auc", "n_train_trajectories", "epochs_run", "best_epoch"});
    for (const auto& f : cv.folds) {
      w.row({std::to_string(f.fold), fmt_double(f.trajectory_auc),
             std::to_string(f.n_train_trajectories), std::to_string(f.epochs_run),
             std::to_string(f.best_epoch)});
    }
    w.row({"mean", fmt_double(cv.trajectory_auc_folds.mean), "", "", ""});
    w.row({"std", fmt_double(cv.trajectory_auc_folds.std), "", "", ""});
    w.row({"pooled", fmt_double(cv.pooled_trajectory_auc), "", "", ""});
  }
  {
    CsvWriter w(p("fold_log.csv"));
    w.row({"fold", "epoch", "train_loss", "val_loss", "val_auc"});
    for (const auto& f : cv.folds) {
      for (const auto& e : f.log) {
        w.row({std::to_string(f.fold), std::to_string(e.epoch),
               fmt_double(e.train_loss), fmt_double(e.val_loss),
               fmt_double(e.val_auc)});
      }
    }
  }
  write_score_csv(cv.account_scores, p("scores.csv"));
  write_unscorable_csv(cv.unscorable, p("unscorable.csv"));

  std::vector<double> pos, neg, scores;
  std::vector<int> y;
  for (const auto& e : cv.account_scores) {
    scores.push_back(e.troll_score);
    y.push_back(*e.true_label == Label::positive ? 1 : 0);
    (*e.true_label == Label::positive ? pos : neg).push_back(e.troll_score);
  }
  if (!pos.empty()) write_cdf_csv(empirical_cdf(pos), p("cdf_positive.csv"));
  if (!neg.empty()) write_cdf_csv(empirical_cdf(neg), p("cdf_negative.csv"));
  write_roc_csv(roc_points(scores, y), p("roc_accounts.csv"));
}

inline void write_trajectory_cv_reports(const TrajectoryCvResult& cv,
                                        const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto p = [&](const std::string& name) { return out_dir + "/" + name; };
  {
    CsvWriter w(p("trajectory_eval.csv"));
    w.row({"fold", "auc", "n_train_trajectories", "epochs_run", "best_epoch"});
    for (const auto& f : cv.folds) {
      w.row({std::to_string(f.fold), fmt_double(f.auc),
             std::to_string(f.n_train_trajectories), std::to_string(f.epochs_run),
             std::to_string(f.best_epoch)});
    }
    w.row({"mean", fmt_double(cv.auc_folds.mean), "", "", ""});
    w.row({"std", fmt_double(cv.auc_folds.std), "", "", ""});
    w.row({"pooled", fmt_double(cv.pooled_auc), "", "", ""});
  }
  {
    CsvWriter w(p("fold_log.csv"));
    w.row({"fold", "epoch", "train_loss", "val_loss", "val_auc"});
    for (const auto& f : cv.folds) {
      for (const auto& e : f.log) {
        w.row({std::to_string(f.fold), std::to_string(e.epoch),
               fmt_double(e.train_loss), fmt_double(e.val_loss),
               fmt_double(e.val_auc)});
      }
    }
  }
}

// ---- run manifest ----------------------------------------------------------

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for digest: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

// Reproducibility record: config echo, seed, input digests, versions.
// Deliberately carries no timestamps so reruns are byte-identical.
inline void write_manifest(const std::string& path, const std::string& subcommand,
                           const nlohmann::json& config_echo,
                           const std::map<std::string, std::string>& inputs,
                           const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["tool"] = "trollscore";
  m["tool_version"] = kToolVersion;
  m["model_format_version"] = kModelFormatVersion;
  m["pair_table_version"] = kPairTableVersion;
  m["subcommand"] = subcommand;
  m["config"] = config_echo;
  nlohmann::json digests = nlohmann::json::object();
  for (const auto& [in_path, digest] : inputs) digests[in_path] = digest;
  m["input_digests"] = digests;
  m["outputs"] = outputs;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << m.dump(2) << '\n';
}

// ---- baseline comparison ----------------------------------------------------

struct BaselineRow {
  std::string model;
  double auc = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct BaselineOptions {
  std::size_t window = 100;
  double test_frac = 0.3;
  double val_frac = 0.1;
  TrainConfig train;
  LogRegConfig logreg;
  KnnConfig knn;
  bool actions_only = false;
  std::uint64_t seed = 1;
};

struct BaselineResult {
  std::vector<BaselineRow> rows;  // lstm, logreg, knn
};

// One stratified account-level train/test split; all three classifiers see
// the same balanced training trajectories and the same test trajectories.
inline BaselineResult run_baseline_comparison(
    const std::vector<AccountSequence>& sequences, const LabelMap& labels,
    const BaselineOptions& opts) {
  const int alphabet =
      opts.actions_only ? kActionAlphabetSize : kPairAlphabetSize;
  const auto coded_seqs = coded_all(sequences, opts.actions_only);

  const AccountSplit test_split =
      split_accounts(labels, opts.test_frac, Rng::derive(opts.seed, 11).next_u64());
  const LabelMap train_labels = detail::submap(labels, test_split.train_ids);
  const LabelMap test_labels = detail::submap(labels, test_split.holdout_ids);
  const AccountSplit val_split = split_accounts(
      train_labels, opts.val_frac, Rng::derive(opts.seed, 12).next_u64());

  auto select = [&](const std::vector<std::string>& ids) {
    std::set<std::string> want(ids.begin(), ids.end());
    std::vector<CodedSequence> out;
    for (const auto& c : coded_seqs) {
      if (want.count(c.account_id)) out.push_back(c);
    }
    return out;
  };

  TrajectoryDataset train_ds = make_dataset(select(val_split.train_ids),
                                            train_labels, opts.window, alphabet);
  TrajectoryDataset val_ds = make_dataset(select(val_split.holdout_ids),
                                          train_labels, opts.window, alphabet);
  train_ds = undersample(train_ds, Rng::derive(opts.seed, 13).next_u64());
  TrajectoryDataset test_ds = make_dataset(select(test_split.holdout_ids),
                                           test_labels, opts.window, alphabet);
  const std::vector<int> y_test = dataset_labels(test_ds);

  auto evaluate = [&](const std::string& name,
                      const std::vector<double>& probs) -> BaselineRow {
    std::vector<int> pred;
    pred.reserve(probs.size());
    for (double p : probs) pred.push_back(p >= 0.5 ? 1 : 0);
    const EvalReport r = classification_report(pred, y_test);
    BaselineRow row;
    row.model = name;
    row.auc = roc_auc(probs, y_test);
    row.accuracy = r.accuracy;
    row.precision = r.precision;
    row.recall = r.recall;
    row.f1 = r.f1;
    return row;
  };

  BaselineResult result;
  {
    TrainConfig config = opts.train;
    config.window = opts.window;
    config.input_size = alphabet;
    config.rng_seed = Rng::derive(opts.seed, 14).next_u64();
    const TrainResult trained = train_classifier(train_ds, val_ds, config);
    result.rows.push_back(
        evaluate("lstm", predict_probs(trained.params, test_ds.trajectories)));
  }
  {
    const LogRegParams lr = train_logreg(train_ds, opts.logreg);
    std::vector<double> probs;
    probs.reserve(test_ds.trajectories.size());
    for (const auto& t : test_ds.trajectories) probs.push_back(logreg_predict(lr, t));
    result.rows.push_back(evaluate("logreg", probs));
  }
  {
    std::vector<double> probs;
    probs.reserve(test_ds.trajectories.size());
    for (const auto& t : test_ds.trajectories) {
      probs.push_back(
          knn_classify(train_ds, t, opts.knn).positive_fraction(opts.knn.k));
    }
    result.rows.push_back(evaluate("knn", probs));
  }
  return result;
}

inline void write_baseline_csv(const BaselineResult& r, const std::string& path) {
  CsvWriter w(path);
  w.row({"model", "auc", "accuracy", "precision", "recall", "f1"});
  for (const auto& row : r.rows) {
    w.row({row.model, fmt_double(row.auc), fmt_double(row.accuracy),
           fmt_double(row.precision), fmt_double(row.recall), fmt_double(row.f1)});
  }
}

}  // namespace trollscore
