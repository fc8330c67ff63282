#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "trollscore/ingest.hpp"
#include "trollscore/rng.hpp"

using namespace trollscore;

namespace {

EventLog parse(const std::string& text) {
  std::istringstream in(text);
  return parse_events(in);
}

std::string line(const std::string& id, long ts, const std::string& kind) {
  return "{\"account_id\":\"" + id + "\",\"timestamp\":" + std::to_string(ts) +
         ",\"kind\":\"" + kind + "\"}\n";
}

}  // namespace

TEST_CASE("parse_events groups and sorts by timestamp") {
  const auto log =
      parse(line("a1", 30, "tweet") + line("a1", 10, "retweet") + line("a1", 20, "reply"));
  REQUIRE(log.size() == 1);
  const auto& events = log.at("a1");
  REQUIRE(events.size() == 3);
  CHECK(events[0].kind == EventKind::retweet);
  CHECK(events[1].kind == EventKind::reply);
  CHECK(events[2].kind == EventKind::tweet);
}

TEST_CASE("parse_events rejects unknown kinds with the line number") {
  const std::string text = line("a1", 1, "tweet") + line("a1", 2, "like");
  std::istringstream in(text);
  REQUIRE_THROWS_WITH(parse_events(in),
                      Catch::Matchers::ContainsSubstring("unknown event kind 'like'") &&
                          Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("parse_events reports malformed lines and negative timestamps") {
  std::istringstream bad("{not json\n");
  REQUIRE_THROWS_WITH(parse_events(bad), Catch::Matchers::ContainsSubstring("line 1"));
  std::istringstream neg(line("a1", -5, "tweet"));
  REQUIRE_THROWS_AS(parse_events(neg), DataError);
  std::istringstream missing("{\"account_id\":\"a\",\"timestamp\":1}\n");
  REQUIRE_THROWS_AS(parse_events(missing), DataError);
}

TEST_CASE("equal timestamps keep input order") {
  const auto log = parse(line("a1", 5, "tweet") + line("a1", 5, "retweet") +
                         line("a1", 5, "reply"));
  const auto& events = log.at("a1");
  CHECK(events[0].kind == EventKind::tweet);
  CHECK(events[1].kind == EventKind::retweet);
  CHECK(events[2].kind == EventKind::reply);
}

TEST_CASE("filter_accounts applies both minimums") {
  std::string text;
  for (int i = 0; i < 10; ++i) text += line("keep", i, "tweet");
  for (int i = 0; i < 10; ++i) text += line("keep", 100 + i, "retweeted");
  for (int i = 0; i < 9; ++i) text += line("drop", i, "tweet");
  for (int i = 0; i < 50; ++i) text += line("drop", 100 + i, "retweeted");
  const auto log = parse(text);

  const auto kept = filter_accounts(log, 10, 10);
  CHECK(kept.size() == 1);
  CHECK(kept.count("keep") == 1);

  CHECK(filter_accounts(log, 0, 0).size() == 2);
}

TEST_CASE("filtering is idempotent") {
  Rng rng(7);
  std::string text;
  const char* kinds[] = {"tweet",     "retweet",    "reply",    "mention",
                         "retweeted", "replied_to", "mentioned"};
  for (int acc = 0; acc < 20; ++acc) {
    const std::string id = "acc" + std::to_string(acc);
    const int n = 1 + static_cast<int>(rng.next_below(30));
    for (int i = 0; i < n; ++i) {
      text += line(id, static_cast<long>(rng.next_below(1000)),
                   kinds[rng.next_below(7)]);
    }
  }
  const auto log = parse(text);
  const auto once = filter_accounts(log, 5, 5);
  const auto twice = filter_accounts(once, 5, 5);
  CHECK(once == twice);
}

TEST_CASE("serialize then parse is the identity on well-formed logs") {
  Rng rng(13);
  std::string text;
  const char* kinds[] = {"tweet",     "retweet",    "reply",    "mention",
                         "retweeted", "replied_to", "mentioned"};
  for (int acc = 0; acc < 8; ++acc) {
    const std::string id = "acc" + std::to_string(acc);
    for (int i = 0; i < 25; ++i) {
      text += line(id, static_cast<long>(rng.next_below(500)), kinds[rng.next_below(7)]);
    }
  }
  const auto log = parse(text);
  std::ostringstream out;
  serialize_events(log, out);
  const auto round = parse(out.str());
  REQUIRE(round.size() == log.size());
  for (const auto& [id, events] : log) {
    const auto& other = round.at(id);
    REQUIRE(other.size() == events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      CHECK(other[i].timestamp == events[i].timestamp);
      CHECK(other[i].kind == events[i].kind);
    }
  }
}

TEST_CASE("per-account order is strictly increasing in (timestamp, seq_no)") {
  const auto log = parse(line("a", 5, "tweet") + line("a", 5, "reply") +
                         line("a", 3, "retweet") + line("b", 9, "mention"));
  for (const auto& [id, events] : log) {
    for (std::size_t i = 1; i < events.size(); ++i) {
      const bool increasing =
          events[i - 1].timestamp < events[i].timestamp ||
          (events[i - 1].timestamp == events[i].timestamp &&
           events[i - 1].seq_no < events[i].seq_no);
      CHECK(increasing);
    }
  }
}

TEST_CASE("load_labels maps troll and io_driver to positive") {
  std::istringstream in("account_id,class\na1,troll\na2,io_driver\na3,user\n");
  const auto rows = load_labels(in);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].label == Label::positive);
  CHECK(rows[1].label == Label::positive);
  CHECK(rows[2].label == Label::negative);
}

TEST_CASE("load_labels works without a header and dedupes identical rows") {
  std::istringstream in("a1,troll\na1,troll\na2,user\n");
  const auto rows = load_labels(in);
  REQUIRE(rows.size() == 2);
}

TEST_CASE("load_labels rejects conflicts and unknown classes") {
  std::istringstream conflict("a1,troll\na1,user\n");
  REQUIRE_THROWS_WITH(load_labels(conflict),
                      Catch::Matchers::ContainsSubstring("a1"));
  std::istringstream unknown("a1,bot\n");
  REQUIRE_THROWS_AS(load_labels(unknown), DataError);
}
