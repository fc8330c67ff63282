#include <catch2/catch_amalgamated.hpp>

#include "trollscore/rng.hpp"
#include "trollscore/sequence.hpp"

using namespace trollscore;

namespace {

std::vector<TimelineEvent> events_of(const std::vector<EventKind>& kinds) {
  std::vector<TimelineEvent> events;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    events.push_back({"a", static_cast<std::int64_t>(i), kinds[i], i});
  }
  return events;
}

// Independent re-statement of the pairing rule, pair by pair:
//   * an active event emits one pair whose state is the immediately
//     preceding event's feedback (NO if the preceding event was active or
//     absent);
//   * a passive event emits (state, no) iff the next event is not active
//     (another passive event, or end of stream).
std::vector<PairSymbol> oracle_pairs(const std::vector<EventKind>& kinds) {
  std::vector<PairSymbol> out;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    if (is_active(kinds[i])) {
      State s = State::NO;
      if (i > 0 && !is_active(kinds[i - 1])) s = state_of(kinds[i - 1]);
      out.push_back({s, action_of(kinds[i])});
    } else {
      const bool answered = i + 1 < kinds.size() && is_active(kinds[i + 1]);
      if (!answered) out.push_back({state_of(kinds[i]), ActionSym::no});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("encode table is the frozen canonical order") {
  CHECK(encode_pair(State::NO, ActionSym::tw) == 0);
  CHECK(encode_pair(State::NO, ActionSym::rt) == 1);
  CHECK(encode_pair(State::NO, ActionSym::in) == 2);
  CHECK(encode_pair(State::RT, ActionSym::tw) == 3);
  CHECK(encode_pair(State::RT, ActionSym::rt) == 4);
  CHECK(encode_pair(State::RT, ActionSym::in) == 5);
  CHECK(encode_pair(State::RT, ActionSym::no) == 6);
  CHECK(encode_pair(State::IN, ActionSym::tw) == 7);
  CHECK(encode_pair(State::IN, ActionSym::rt) == 8);
  CHECK(encode_pair(State::IN, ActionSym::in) == 9);
  CHECK(encode_pair(State::IN, ActionSym::no) == 10);
}

TEST_CASE("(NO,no) is rejected and codes are range-checked") {
  REQUIRE_THROWS_AS(encode_pair(State::NO, ActionSym::no), DataError);
  REQUIRE_THROWS_AS(decode_pair(11), DataError);
  REQUIRE_THROWS_AS(decode_pair(-1), DataError);
}

TEST_CASE("encode and decode are inverse over all 11 symbols") {
  for (int code = 0; code < kPairAlphabetSize; ++code) {
    CHECK(encode_pair(decode_pair(code)) == code);
  }
}

TEST_CASE("single tweet yields (NO,tw)") {
  const auto seq = build_pairs("a", events_of({EventKind::tweet}));
  REQUIRE(seq.pairs.size() == 1);
  CHECK(seq.pairs[0] == PairSymbol{State::NO, ActionSym::tw});
}

TEST_CASE("hand trace: answered and displaced feedback") {
  const auto seq = build_pairs(
      "a", events_of({EventKind::tweet, EventKind::retweeted, EventKind::retweet,
                      EventKind::mentioned, EventKind::replied_to, EventKind::tweet}));
  const std::vector<PairSymbol> expected = {{State::NO, ActionSym::tw},
                                            {State::RT, ActionSym::rt},
                                            {State::IN, ActionSym::no},
                                            {State::IN, ActionSym::tw}};
  CHECK(seq.pairs == expected);
}

TEST_CASE("hand trace: consecutive unanswered feedback stays silent") {
  const auto seq =
      build_pairs("a", events_of({EventKind::retweeted, EventKind::retweeted}));
  const std::vector<PairSymbol> expected = {{State::RT, ActionSym::no},
                                            {State::RT, ActionSym::no}};
  CHECK(seq.pairs == expected);
}

TEST_CASE("empty input gives an empty sequence") {
  CHECK(build_pairs("a", {}).pairs.empty());
}

TEST_CASE("random event streams: never (NO,no), matches the oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = rng.next_below(30);
    std::vector<EventKind> kinds;
    for (std::size_t i = 0; i < n; ++i) {
      kinds.push_back(static_cast<EventKind>(rng.next_below(kEventKindCount)));
    }
    const auto seq = build_pairs("a", events_of(kinds));
    for (const auto& p : seq.pairs) {
      REQUIRE(!(p.state == State::NO && p.action == ActionSym::no));
    }
    REQUIRE(seq.pairs == oracle_pairs(kinds));
  }
}

TEST_CASE("every active event contributes exactly one pair with its mapped action") {
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.next_below(40);
    std::vector<EventKind> kinds;
    for (std::size_t i = 0; i < n; ++i) {
      kinds.push_back(static_cast<EventKind>(rng.next_below(kEventKindCount)));
    }
    const auto seq = build_pairs("a", events_of(kinds));
    std::vector<ActionSym> emitted;
    for (const auto& p : seq.pairs) {
      if (p.action != ActionSym::no) emitted.push_back(p.action);
    }
    std::vector<ActionSym> expected;
    for (EventKind k : kinds) {
      if (is_active(k)) expected.push_back(action_of(k));
    }
    REQUIRE(emitted == expected);
  }
}

TEST_CASE("actions_only drops silent pairs") {
  AccountSequence seq;
  seq.account_id = "a";
  seq.pairs = {{State::NO, ActionSym::tw},
               {State::RT, ActionSym::no},
               {State::RT, ActionSym::rt}};
  CHECK(actions_only(seq) == std::vector<ActionSym>{ActionSym::tw, ActionSym::rt});

  CHECK(actions_only({"a", {}}).empty());
  CHECK(actions_only({"a", {{State::IN, ActionSym::no}}}).empty());
}
