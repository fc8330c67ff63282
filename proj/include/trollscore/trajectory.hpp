#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trollscore/common.hpp"
#include "trollscore/ingest.hpp"
#include "trollscore/sequence.hpp"

namespace trollscore {

// Fixed-length window of integer pair codes; the classifier's input unit.
struct Trajectory {
  std::vector<int> codes;
  std::string account_id;
  std::size_t offset = 0;  // start index in the source sequence
  std::optional<Label> label;
};

struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;
  std::size_t window = 0;        // L
  int alphabet_size = kPairAlphabetSize;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

namespace detail {

inline std::vector<Trajectory> windows(const std::string& account_id,
                                       const std::vector<int>& codes,
                                       std::size_t window, std::size_t stride) {
  if (window == 0) throw DataError("window length L must be >= 1");
  std::vector<Trajectory> out;
  if (codes.size() < window) return out;
  for (std::size_t off = 0; off + window <= codes.size(); off += stride) {
    Trajectory t;
    t.codes.assign(codes.begin() + off, codes.begin() + off + window);
    t.account_id = account_id;
    t.offset = off;
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace detail

// floor(|seq| / L) windows at offsets 0, L, 2L, ...; the trailing remainder
// is discarded, never padded.
inline std::vector<Trajectory> chunk_nonoverlapping(const AccountSequence& seq,
                                                    std::size_t window) {
  return detail::windows(seq.account_id, seq.codes(), window, window);
}

// max(0, |seq| - L + 1) windows at stride 1; consecutive windows share L-1
// positions, so each pair contributes to several trajectories.
inline std::vector<Trajectory> sliding_windows(const AccountSequence& seq,
                                               std::size_t window) {
  return detail::windows(seq.account_id, seq.codes(), window, 1);
}

inline std::vector<Trajectory> chunk_codes(const std::string& account_id,
                                           const std::vector<int>& codes,
                                           std::size_t window) {
  return detail::windows(account_id, codes, window, window);
}

inline std::vector<Trajectory> sliding_codes(const std::string& account_id,
                                             const std::vector<int>& codes,
                                             std::size_t window) {
  return detail::windows(account_id, codes, window, 1);
}

// Non-overlapping segmentation of every sequence; each trajectory inherits
// its account's label. Errors on accounts missing from `labels`.
inline TrajectoryDataset assemble_dataset(const std::vector<AccountSequence>& sequences,
                                          const LabelMap& labels, std::size_t window) {
  TrajectoryDataset ds;
  ds.window = window;
  for (const auto& seq : sequences) {
    auto it = labels.find(seq.account_id);
    if (it == labels.end()) {
      throw DataError("no label for account '" + seq.account_id + "'");
    }
    for (auto& t : chunk_nonoverlapping(seq, window)) {
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

// Same assembly over action-only code sequences (3-symbol alphabet).
inline TrajectoryDataset assemble_action_dataset(
    const std::vector<AccountSequence>& sequences, const LabelMap& labels,
    std::size_t window) {
  TrajectoryDataset ds;
  ds.window = window;
  ds.alphabet_size = kActionAlphabetSize;
  for (const auto& seq : sequences) {
    auto it = labels.find(seq.account_id);
    if (it == labels.end()) {
      throw DataError("no label for account '" + seq.account_id + "'");
    }
    for (auto& t : chunk_codes(seq.account_id, action_codes(seq), window)) {
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

}  // namespace trollscore
