#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "trollscore/common.hpp"
#include "trollscore/ingest.hpp"

namespace trollscore {

// Feedback condition of an account: retweeted, interacted with, or none.
enum class State : int { NO = 0, RT = 1, IN = 2 };

// What the account does from a state. `no` means it stayed silent.
enum class ActionSym : int { tw = 0, rt = 1, in = 2, no = 3 };

inline const char* state_name(State s) {
  switch (s) {
    case State::NO: return "NO";
    case State::RT: return "RT";
    case State::IN: return "IN";
  }
  throw InternalError("state_name: bad enum value");
}

inline const char* action_name(ActionSym a) {
  switch (a) {
    case ActionSym::tw: return "tw";
    case ActionSym::rt: return "rt";
    case ActionSym::in: return "in";
    case ActionSym::no: return "no";
  }
  throw InternalError("action_name: bad enum value");
}

inline constexpr int kPairAlphabetSize = 11;
inline constexpr int kActionAlphabetSize = 3;  // tw/rt/in, `no` is dropped

// Canonical code table, frozen as table version 1 (states NO < RT < IN,
// actions tw < rt < in < no; (NO,no) has no code):
//   (NO,tw)=0 (NO,rt)=1 (NO,in)=2
//   (RT,tw)=3 (RT,rt)=4 (RT,in)=5 (RT,no)=6
//   (IN,tw)=7 (IN,rt)=8 (IN,in)=9 (IN,no)=10
struct PairSymbol {
  State state = State::NO;
  ActionSym action = ActionSym::tw;

  bool operator==(const PairSymbol&) const = default;
};

inline int encode_pair(State s, ActionSym a) {
  if (s == State::NO && a == ActionSym::no) {
    throw DataError("(NO,no) is not a valid state-action pair");
  }
  static constexpr std::array<std::array<int, 4>, 3> table = {{
      {0, 1, 2, -1},   // NO
      {3, 4, 5, 6},    // RT
      {7, 8, 9, 10},   // IN
  }};
  return table[static_cast<int>(s)][static_cast<int>(a)];
}

inline int encode_pair(const PairSymbol& p) { return encode_pair(p.state, p.action); }

inline PairSymbol decode_pair(int code) {
  if (code < 0 || code >= kPairAlphabetSize) {
    throw DataError("pair code out of range: " + std::to_string(code));
  }
  static constexpr std::array<PairSymbol, kPairAlphabetSize> table = {{
      {State::NO, ActionSym::tw},
      {State::NO, ActionSym::rt},
      {State::NO, ActionSym::in},
      {State::RT, ActionSym::tw},
      {State::RT, ActionSym::rt},
      {State::RT, ActionSym::in},
      {State::RT, ActionSym::no},
      {State::IN, ActionSym::tw},
      {State::IN, ActionSym::rt},
      {State::IN, ActionSym::in},
      {State::IN, ActionSym::no},
  }};
  return table[code];
}

inline std::string pair_name(int code) {
  PairSymbol p = decode_pair(code);
  return std::string("(") + state_name(p.state) + "," + action_name(p.action) + ")";
}

inline ActionSym action_of(EventKind k) {
  switch (k) {
    case EventKind::tweet: return ActionSym::tw;
    case EventKind::retweet: return ActionSym::rt;
    case EventKind::reply:
    case EventKind::mention: return ActionSym::in;
    default: throw InternalError("action_of: passive event kind");
  }
}

inline State state_of(EventKind k) {
  switch (k) {
    case EventKind::retweeted: return State::RT;
    case EventKind::replied_to:
    case EventKind::mentioned: return State::IN;
    default: throw InternalError("state_of: active event kind");
  }
}

struct AccountSequence {
  std::string account_id;
  std::vector<PairSymbol> pairs;

  std::vector<int> codes() const {
    std::vector<int> c;
    c.reserve(pairs.size());
    for (const auto& p : pairs) c.push_back(encode_pair(p));
    return c;
  }
};

// Compiles a chronological event stream into state-action pairs.
//
// The account holds at most one pending feedback state at a time:
//   * active event  -> emit (pending state, or NO if none; action), clear it
//   * passive event -> a still-pending state first emits (state, no), then
//                      the new feedback becomes the pending state
//   * end of stream -> a surviving pending state emits (state, no)
// Feedback the account answers before more feedback arrives never emits a
// silent pair; (NO,no) is unreachable because only passive events set the
// pending state.
inline AccountSequence build_pairs(const std::string& account_id,
                                   const std::vector<TimelineEvent>& events) {
  AccountSequence seq;
  seq.account_id = account_id;
  std::optional<State> pending;
  for (const auto& ev : events) {
    if (is_active(ev.kind)) {
      seq.pairs.push_back({pending.value_or(State::NO), action_of(ev.kind)});
      pending.reset();
    } else {
      if (pending) seq.pairs.push_back({*pending, ActionSym::no});
      pending = state_of(ev.kind);
    }
  }
  if (pending) seq.pairs.push_back({*pending, ActionSym::no});
  return seq;
}

inline std::vector<AccountSequence> build_all_sequences(const EventLog& log) {
  std::vector<AccountSequence> out;
  out.reserve(log.size());
  for (const auto& [id, events] : log) out.push_back(build_pairs(id, events));
  return out;
}

// Projects a pair sequence onto its sharing activities: actions only, with
// every `no` dropped (ablation input; alphabet tw=0, rt=1, in=2).
inline std::vector<ActionSym> actions_only(const AccountSequence& seq) {
  std::vector<ActionSym> out;
  for (const auto& p : seq.pairs) {
    if (p.action != ActionSym::no) out.push_back(p.action);
  }
  return out;
}

inline std::vector<int> action_codes(const AccountSequence& seq) {
  std::vector<int> out;
  for (ActionSym a : actions_only(seq)) out.push_back(static_cast<int>(a));
  return out;
}

}  // namespace trollscore
