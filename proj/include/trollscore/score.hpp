#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "trollscore/common.hpp"
#include "trollscore/metrics.hpp"
#include "trollscore/nn.hpp"
#include "trollscore/sequence.hpp"
#include "trollscore/trajectory.hpp"

namespace trollscore {

// An account's code sequence, either the 11-symbol pair encoding or the
// 3-symbol action-only encoding.
struct CodedSequence {
  std::string account_id;
  std::vector<int> codes;
};

inline CodedSequence coded(const AccountSequence& seq, bool actions = false) {
  return {seq.account_id, actions ? action_codes(seq) : seq.codes()};
}

inline std::vector<CodedSequence> coded_all(const std::vector<AccountSequence>& seqs,
                                            bool actions = false) {
  std::vector<CodedSequence> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(coded(s, actions));
  return out;
}

// Per-account decision output: fraction of sliding-window trajectories the
// classifier calls positive.
struct TrollScoreEntry {
  std::string account_id;
  double troll_score = 0.0;
  std::size_t n_windows = 0;
  std::optional<Label> true_label;
  std::optional<Label> predicted;
};

struct TrollScoreReport {
  std::vector<TrollScoreEntry> entries;
  // accounts with |sequence| < L, listed rather than silently dropped
  std::vector<std::string> unscorable;
};

// Scores one account: every stride-1 window of length L is classified
// (positive iff probability >= decision_cutoff); the score is the positive
// fraction. Windows are views into the code array and run through the
// batched forward pass. Returns nullopt when the sequence is shorter than L.
inline std::optional<TrollScoreEntry> troll_score(const LstmParams& params,
                                                  const CodedSequence& seq,
                                                  std::size_t window,
                                                  double decision_cutoff = 0.5,
                                                  BatchInferWorkspace* ws = nullptr) {
  if (window == 0) throw DataError("troll_score: window length must be >= 1");
  if (seq.codes.size() < window) return std::nullopt;
  BatchInferWorkspace local;
  BatchInferWorkspace& w = ws ? *ws : local;
  TrollScoreEntry entry;
  entry.account_id = seq.account_id;
  entry.n_windows = seq.codes.size() - window + 1;

  std::vector<const int*> windows(entry.n_windows);
  for (std::size_t off = 0; off < entry.n_windows; ++off) {
    windows[off] = seq.codes.data() + off;
  }
  std::vector<double> probs(entry.n_windows);
  for (std::size_t start = 0; start < windows.size(); start += kInferBatch) {
    const std::size_t batch = std::min(kInferBatch, windows.size() - start);
    forward_infer_batch(params, windows.data() + start, batch, window,
                        probs.data() + start, w);
  }
  std::size_t positive = 0;
  for (double p : probs) positive += p >= decision_cutoff;
  entry.troll_score =
      static_cast<double>(positive) / static_cast<double>(entry.n_windows);
  return entry;
}

inline std::optional<TrollScoreEntry> troll_score(const LstmParams& params,
                                                  const AccountSequence& seq,
                                                  std::size_t window,
                                                  double decision_cutoff = 0.5,
                                                  BatchInferWorkspace* ws = nullptr) {
  const CodedSequence cs = coded(seq);
  return troll_score(params, cs, window, decision_cutoff, ws);
}

// Scores many accounts; embarrassingly parallel over accounts (the model is
// immutable and inference draws no randomness). threads == 1 runs inline.
inline TrollScoreReport score_accounts(const LstmParams& params,
                                       const std::vector<CodedSequence>& seqs,
                                       std::size_t window,
                                       double decision_cutoff = 0.5,
                                       std::size_t threads = 1) {
  std::vector<std::optional<TrollScoreEntry>> slots(seqs.size());
  if (threads <= 1) {
    BatchInferWorkspace ws;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      slots[i] = troll_score(params, seqs[i], window, decision_cutoff, &ws);
    }
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        BatchInferWorkspace ws;
        for (std::size_t i = w; i < seqs.size(); i += threads) {
          slots[i] = troll_score(params, seqs[i], window, decision_cutoff, &ws);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  TrollScoreReport report;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (slots[i]) {
      report.entries.push_back(std::move(*slots[i]));
    } else {
      report.unscorable.push_back(seqs[i].account_id);
    }
  }
  return report;
}

struct SweepRow {
  double threshold = 0.0;
  double balanced_accuracy = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ThresholdChoice {
  double threshold = 0.0;
  double objective = 0.0;  // balanced accuracy at the chosen threshold
  std::vector<SweepRow> table;
};

inline std::size_t sweep_steps(double step) {
  const auto n = static_cast<std::size_t>(std::llround(1.0 / step));
  if (n == 0 || std::abs(static_cast<double>(n) * step - 1.0) > 1e-9) {
    throw DataError("sweep step must divide 1.0");
  }
  return n;
}

// Sweeps candidate thresholds {0, step, ..., 1}; accounts with score >= t
// are called positive. The objective is balanced accuracy, (TPR + TNR) / 2 —
// what AUC reduces to for a single fixed threshold. Ties break toward the
// smallest threshold (the more sensitive detector).
inline ThresholdChoice sweep_threshold(const std::vector<TrollScoreEntry>& scores,
                                       double step = 0.02) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& e : scores) {
    if (!e.true_label) {
      throw DataError("sweep_threshold: entry for '" + e.account_id +
                      "' has no true label");
    }
    (*e.true_label == Label::positive ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("sweep_threshold: both classes must be present");
  }
  const std::size_t n = sweep_steps(step);
  ThresholdChoice choice;
  choice.objective = -1.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    ConfusionCounts c;
    for (const auto& e : scores) {
      const bool pred = e.troll_score >= t;
      if (*e.true_label == Label::positive) {
        (pred ? c.tp : c.fn)++;
      } else {
        (pred ? c.fp : c.tn)++;
      }
    }
    const double tpr = static_cast<double>(c.tp) / static_cast<double>(n_pos);
    const double tnr = static_cast<double>(c.tn) / static_cast<double>(n_neg);
    EvalReport r = classification_report(c);
    SweepRow row;
    row.threshold = t;
    row.balanced_accuracy = 0.5 * (tpr + tnr);
    row.accuracy = r.accuracy;
    row.precision = r.precision;
    row.recall = r.recall;
    row.f1 = r.f1;
    choice.table.push_back(row);
    if (row.balanced_accuracy > choice.objective) {
      choice.objective = row.balanced_accuracy;
      choice.threshold = t;
    }
  }
  return choice;
}

// predicted = positive iff troll_score >= threshold.
inline std::vector<TrollScoreEntry> classify_accounts(
    std::vector<TrollScoreEntry> scores, double threshold) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw DataError("classify_accounts: threshold must be in [0, 1]");
  }
  for (auto& e : scores) {
    e.predicted =
        e.troll_score >= threshold ? Label::positive : Label::negative;
  }
  return scores;
}

}  // namespace trollscore
