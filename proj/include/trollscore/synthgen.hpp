#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trollscore/common.hpp"
#include "trollscore/ingest.hpp"
#include "trollscore/rng.hpp"
#include "trollscore/sequence.hpp"

namespace trollscore {

using PairDistribution = std::array<double, kPairAlphabetSize>;
using TransitionMatrix = std::array<PairDistribution, kPairAlphabetSize>;

// Markov-chain behavioral profile over the 11 pair codes. Realizability: a
// silent pair (RT,no) or (IN,no) is produced by feedback that the *next*
// event displaces, so the successor pair can never be in state NO. Rows 6
// and 10 must therefore place zero mass on codes 0..2.
struct ArchetypeSpec {
  std::string name;
  PairDistribution initial{};
  TransitionMatrix transition{};
  std::size_t seq_len_min = 600;
  std::size_t seq_len_max = 1200;

  void validate() const {
    auto check_dist = [&](const PairDistribution& d, const std::string& what) {
      double sum = 0.0;
      for (double p : d) {
        if (p < 0.0) throw DataError("archetype '" + name + "': negative mass in " + what);
        sum += p;
      }
      if (std::fabs(sum - 1.0) > 1e-9) {
        throw DataError("archetype '" + name + "': " + what + " does not sum to 1");
      }
    };
    check_dist(initial, "initial distribution");
    for (int r = 0; r < kPairAlphabetSize; ++r) {
      check_dist(transition[r], "transition row " + std::to_string(r));
    }
    for (int r : {6, 10}) {
      for (int c = 0; c < 3; ++c) {
        if (transition[r][c] != 0.0) {
          throw DataError("archetype '" + name + "': transition " + pair_name(r) +
                          " -> " + pair_name(c) +
                          " is not realizable as an event stream");
        }
      }
    }
    if (seq_len_min == 0 || seq_len_min > seq_len_max) {
      throw DataError("archetype '" + name + "': bad sequence length range");
    }
  }
};

namespace detail {

inline void zero_unrealizable(TransitionMatrix& m) {
  for (int r : {6, 10}) {
    double removed = 0.0;
    for (int c = 0; c < 3; ++c) {
      removed += m[r][c];
      m[r][c] = 0.0;
    }
    const double rest = 1.0 - removed;
    TS_CHECK(rest > 0.0, "archetype row has all mass on unrealizable targets");
    for (int c = 3; c < kPairAlphabetSize; ++c) m[r][c] /= rest;
  }
}

}  // namespace detail

// Feedback-insensitive troll profile: mass concentrated on tweeting and
// retweeting from states NO and RT, with near-identical rows everywhere.
// Feedback-responsive user profile: strongly state-dependent rows (tweets
// after being retweeted, replies after being replied to, goes quiet when
// ignored).
inline std::pair<ArchetypeSpec, ArchetypeSpec> default_archetypes() {
  ArchetypeSpec troll;
  troll.name = "troll";
  const PairDistribution troll_row = {0.045, 0.035, 0.005, 0.42, 0.40, 0.02,
                                      0.02,  0.02,  0.02,  0.005, 0.01};
  for (auto& row : troll.transition) row = troll_row;
  detail::zero_unrealizable(troll.transition);
  troll.initial = {0.5, 0.3, 0.0, 0.12, 0.08, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};

  ArchetypeSpec user;
  user.name = "user";
  const PairDistribution after_no = {0.15, 0.05, 0.10, 0.02, 0.02, 0.02,
                                     0.30, 0.02, 0.02, 0.05, 0.25};
  const PairDistribution after_rt = {0.28, 0.05, 0.12, 0.18, 0.06, 0.04,
                                     0.08, 0.08, 0.02, 0.05, 0.04};
  const PairDistribution after_in = {0.08, 0.02, 0.25, 0.04, 0.02, 0.10,
                                     0.05, 0.10, 0.02, 0.24, 0.08};
  for (int r = 0; r < 3; ++r) user.transition[r] = after_no;
  for (int r = 3; r < 7; ++r) user.transition[r] = after_rt;
  for (int r = 7; r < kPairAlphabetSize; ++r) user.transition[r] = after_in;
  detail::zero_unrealizable(user.transition);
  user.initial = {0.30, 0.05, 0.15, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0, 0.10, 0.15};

  troll.validate();
  user.validate();
  return {troll, user};
}

// Uniform archetype restricted to a subset of pair codes (used to build
// accounts with a prescribed visited-pair support).
inline ArchetypeSpec restricted_archetype(const std::string& name,
                                          const std::vector<int>& support,
                                          std::size_t seq_len_min,
                                          std::size_t seq_len_max) {
  if (support.empty()) throw DataError("restricted_archetype: empty support");
  ArchetypeSpec spec;
  spec.name = name;
  spec.seq_len_min = seq_len_min;
  spec.seq_len_max = seq_len_max;
  for (int code : support) {
    if (code < 0 || code >= kPairAlphabetSize) {
      throw DataError("restricted_archetype: code out of range");
    }
    spec.initial[code] = 1.0 / static_cast<double>(support.size());
  }
  const bool silent_reachable =
      std::find(support.begin(), support.end(), 6) != support.end() ||
      std::find(support.begin(), support.end(), 10) != support.end();
  for (int r = 0; r < kPairAlphabetSize; ++r) {
    std::vector<int> targets;
    for (int code : support) {
      if ((r == 6 || r == 10) && code < 3) continue;
      targets.push_back(code);
    }
    if (targets.empty()) {
      // rows 6/10 with a NO-state-only support; unreachable, but they still
      // must be valid realizable distributions
      TS_CHECK(!silent_reachable && (r == 6 || r == 10),
               "restricted_archetype: reachable row without targets");
      for (int code = 3; code < kPairAlphabetSize; ++code) targets.push_back(code);
    }
    for (int code : targets) {
      spec.transition[r][code] = 1.0 / static_cast<double>(targets.size());
    }
  }
  spec.validate();
  return spec;
}

// Difficulty dial: moves both class profiles toward their common midpoint.
// blend = 0 leaves the profile untouched; blend = 1 makes the two classes
// draw from identical distributions (no signal left).
inline ArchetypeSpec blend_archetypes(const ArchetypeSpec& own,
                                      const ArchetypeSpec& other, double blend) {
  if (blend < 0.0 || blend > 1.0) {
    throw DataError("blend must be in [0, 1]");
  }
  const double w_other = 0.5 * blend;
  const double w_own = 1.0 - w_other;
  ArchetypeSpec out = own;
  for (int i = 0; i < kPairAlphabetSize; ++i) {
    out.initial[i] = w_own * own.initial[i] + w_other * other.initial[i];
    for (int j = 0; j < kPairAlphabetSize; ++j) {
      out.transition[i][j] =
          w_own * own.transition[i][j] + w_other * other.transition[i][j];
    }
  }
  out.validate();
  return out;
}

inline nlohmann::json archetype_to_json(const ArchetypeSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["initial"] = spec.initial;
  j["transition"] = spec.transition;
  j["seq_len_min"] = spec.seq_len_min;
  j["seq_len_max"] = spec.seq_len_max;
  return j;
}

inline ArchetypeSpec archetype_from_json(const nlohmann::json& j) {
  ArchetypeSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    spec.initial = j.at("initial").get<PairDistribution>();
    spec.transition = j.at("transition").get<TransitionMatrix>();
    spec.seq_len_min = j.at("seq_len_min").get<std::size_t>();
    spec.seq_len_max = j.at("seq_len_max").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad archetype JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline std::vector<int> sample_chain(const ArchetypeSpec& spec, Rng& rng) {
  const std::size_t span = spec.seq_len_max - spec.seq_len_min + 1;
  const std::size_t n = spec.seq_len_min + rng.next_below(span);
  std::vector<int> chain;
  chain.reserve(n);
  std::vector<double> weights(kPairAlphabetSize);
  for (int i = 0; i < kPairAlphabetSize; ++i) weights[i] = spec.initial[i];
  int code = static_cast<int>(rng.categorical(weights));
  chain.push_back(code);
  while (chain.size() < n) {
    for (int i = 0; i < kPairAlphabetSize; ++i) weights[i] = spec.transition[code][i];
    code = static_cast<int>(rng.categorical(weights));
    chain.push_back(code);
  }
  return chain;
}

struct GeneratedAccount {
  AccountSequence sequence;  // the sampled symbol chain
  std::vector<TimelineEvent> events;
};

// Samples a symbol chain, then emits an event stream whose pairing compiles
// back to exactly that chain:
//   (NO, a)       -> one active event
//   (S, a), a!=no -> the feedback event, then the active event
//   (S, no)       -> the feedback event only; the next pair's leading
//                    feedback (or end of stream) displaces it into (S, no)
inline GeneratedAccount generate_account(const std::string& account_id,
                                         const ArchetypeSpec& spec, Rng& rng) {
  spec.validate();
  GeneratedAccount out;
  out.sequence.account_id = account_id;
  const std::vector<int> chain = sample_chain(spec, rng);

  std::int64_t ts = 0;
  auto push = [&](EventKind kind) {
    TimelineEvent ev;
    ev.account_id = account_id;
    ev.timestamp = ts;
    ev.kind = kind;
    ev.seq_no = out.events.size();
    out.events.push_back(ev);
    ts += 60;
  };
  auto active_kind = [&](ActionSym a) {
    switch (a) {
      case ActionSym::tw: return EventKind::tweet;
      case ActionSym::rt: return EventKind::retweet;
      case ActionSym::in:
        return rng.bernoulli(0.5) ? EventKind::reply : EventKind::mention;
      default: throw InternalError("active_kind: no-action pair");
    }
  };
  auto passive_kind = [&](State s) {
    switch (s) {
      case State::RT: return EventKind::retweeted;
      case State::IN:
        return rng.bernoulli(0.5) ? EventKind::replied_to : EventKind::mentioned;
      default: throw InternalError("passive_kind: state NO has no feedback event");
    }
  };

  for (int code : chain) {
    const PairSymbol p = decode_pair(code);
    out.sequence.pairs.push_back(p);
    if (p.state != State::NO) push(passive_kind(p.state));
    if (p.action != ActionSym::no) push(active_kind(p.action));
  }
  return out;
}

struct SynthConfig {
  std::size_t n_per_class = 200;
  ArchetypeSpec troll = default_archetypes().first;
  ArchetypeSpec user = default_archetypes().second;
  double blend = 0.0;  // lambda
  std::uint64_t rng_seed = 1;
};

struct SynthCorpus {
  EventLog events;
  std::vector<AccountLabelRow> labels;
  std::vector<AccountSequence> chains;  // kept for round-trip verification
};

inline SynthCorpus generate_dataset(const SynthConfig& config) {
  const ArchetypeSpec troll = blend_archetypes(config.troll, config.user, config.blend);
  const ArchetypeSpec user = blend_archetypes(config.user, config.troll, config.blend);
  SynthCorpus corpus;
  char id[32];
  for (std::size_t i = 0; i < config.n_per_class; ++i) {
    std::snprintf(id, sizeof(id), "troll_%05zu", i);
    Rng rng = Rng::derive(config.rng_seed, i);
    GeneratedAccount acc = generate_account(id, troll, rng);
    corpus.events[id] = std::move(acc.events);
    corpus.labels.push_back({id, Label::positive});
    corpus.chains.push_back(std::move(acc.sequence));
  }
  for (std::size_t i = 0; i < config.n_per_class; ++i) {
    std::snprintf(id, sizeof(id), "user_%05zu", i);
    Rng rng = Rng::derive(config.rng_seed, config.n_per_class + i);
    GeneratedAccount acc = generate_account(id, user, rng);
    corpus.events[id] = std::move(acc.events);
    corpus.labels.push_back({id, Label::negative});
    corpus.chains.push_back(std::move(acc.sequence));
  }
  return corpus;
}

}  // namespace trollscore
