#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trollscore/common.hpp"
#include "trollscore/csv.hpp"

namespace trollscore {

// Raw sharing-activity taxonomy. The first four are actions the account
// performs, the last three are feedback it receives.
enum class EventKind : int {
  tweet = 0,
  retweet,
  reply,
  mention,
  retweeted,
  replied_to,
  mentioned,
};

inline constexpr int kEventKindCount = 7;

inline bool is_active(EventKind k) {
  return static_cast<int>(k) <= static_cast<int>(EventKind::mention);
}

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::tweet: return "tweet";
    case EventKind::retweet: return "retweet";
    case EventKind::reply: return "reply";
    case EventKind::mention: return "mention";
    case EventKind::retweeted: return "retweeted";
    case EventKind::replied_to: return "replied_to";
    case EventKind::mentioned: return "mentioned";
  }
  throw InternalError("event_kind_name: bad enum value");
}

inline bool parse_event_kind(const std::string& s, EventKind* out) {
  for (int i = 0; i < kEventKindCount; ++i) {
    auto k = static_cast<EventKind>(i);
    if (s == event_kind_name(k)) {
      *out = k;
      return true;
    }
  }
  return false;
}

struct TimelineEvent {
  std::string account_id;
  std::int64_t timestamp = 0;  // seconds since epoch
  EventKind kind = EventKind::tweet;
  std::uint64_t seq_no = 0;  // input-order index, tie-break for equal timestamps

  bool operator==(const TimelineEvent&) const = default;
};

// Events grouped per account, each group sorted by (timestamp, seq_no).
using EventLog = std::map<std::string, std::vector<TimelineEvent>>;

struct AccountLabelRow {
  std::string account_id;
  Label label = Label::negative;
};

using LabelMap = std::map<std::string, Label>;

// Parses newline-delimited JSON events:
//   {"account_id": "...", "timestamp": 123, "kind": "tweet"}
// Input order is recorded as seq_no; unsorted timestamps are repaired by
// sorting, with seq_no as the stable tie-break.
inline EventLog parse_events(std::istream& in) {
  EventLog log;
  std::string line;
  std::uint64_t line_no = 0;
  std::uint64_t seq_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed event at line " + std::to_string(line_no) +
                      ": " + e.what());
    }
    if (!j.is_object() || !j.contains("account_id") || !j.contains("timestamp") ||
        !j.contains("kind") || !j["account_id"].is_string() ||
        !j["timestamp"].is_number_integer() || !j["kind"].is_string()) {
      throw DataError("malformed event at line " + std::to_string(line_no) +
                      ": expected {account_id: string, timestamp: integer, kind: string}");
    }
    TimelineEvent ev;
    ev.account_id = j["account_id"].get<std::string>();
    ev.timestamp = j["timestamp"].get<std::int64_t>();
    if (ev.timestamp < 0) {
      throw DataError("negative timestamp at line " + std::to_string(line_no));
    }
    const std::string kind = j["kind"].get<std::string>();
    if (!parse_event_kind(kind, &ev.kind)) {
      throw DataError("unknown event kind '" + kind + "' at line " +
                      std::to_string(line_no));
    }
    ev.seq_no = seq_no++;
    log[ev.account_id].push_back(ev);
  }
  for (auto& [id, events] : log) {
    std::sort(events.begin(), events.end(),
              [](const TimelineEvent& a, const TimelineEvent& b) {
                if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                return a.seq_no < b.seq_no;
              });
  }
  return log;
}

inline void serialize_events(const EventLog& log, std::ostream& out) {
  for (const auto& [id, events] : log) {
    for (const auto& ev : events) {
      nlohmann::json j;
      j["account_id"] = ev.account_id;
      j["timestamp"] = ev.timestamp;
      j["kind"] = event_kind_name(ev.kind);
      out << j.dump() << '\n';
    }
  }
}

// Keeps accounts with at least min_active active events AND at least
// min_passive passive events. Defaults follow the ten-and-ten rule.
inline EventLog filter_accounts(const EventLog& log, std::size_t min_active = 10,
                                std::size_t min_passive = 10) {
  EventLog kept;
  for (const auto& [id, events] : log) {
    std::size_t active = 0, passive = 0;
    for (const auto& ev : events) {
      if (is_active(ev.kind)) {
        ++active;
      } else {
        ++passive;
      }
    }
    if (active >= min_active && passive >= min_passive) kept[id] = events;
  }
  return kept;
}

// Labels CSV: `account_id,class` with class in {troll, user, io_driver};
// troll and io_driver both map to the positive class. Header row optional.
inline std::vector<AccountLabelRow> load_labels(std::istream& in) {
  std::vector<AccountLabelRow> rows;
  LabelMap seen;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto cells = split_csv_line(line);
    if (cells.size() == 1 && cells[0].empty()) continue;
    if (cells.size() != 2) {
      throw DataError("malformed label row at line " + std::to_string(line_no));
    }
    if (line_no == 1 && cells[0] == "account_id" && cells[1] == "class") continue;
    Label label;
    if (cells[1] == "troll" || cells[1] == "io_driver") {
      label = Label::positive;
    } else if (cells[1] == "user") {
      label = Label::negative;
    } else {
      throw DataError("unknown class '" + cells[1] + "' at line " +
                      std::to_string(line_no));
    }
    auto it = seen.find(cells[0]);
    if (it != seen.end()) {
      if (it->second != label) {
        throw DataError("conflicting labels for account '" + cells[0] + "'");
      }
      continue;  // duplicate with identical class
    }
    seen.emplace(cells[0], label);
    rows.push_back({cells[0], label});
  }
  return rows;
}

inline LabelMap label_map(const std::vector<AccountLabelRow>& rows) {
  LabelMap m;
  for (const auto& r : rows) m[r.account_id] = r.label;
  return m;
}

}  // namespace trollscore
