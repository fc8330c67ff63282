#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "trollscore/rng.hpp"
#include "trollscore/score.hpp"

using namespace trollscore;

namespace {

// Single-unit, single-layer model over a binary alphabet whose output is
// high for code 1 and low for code 0; turns window classifications into a
// function of the input we control exactly.
LstmParams step_model() {
  TrainConfig config;
  config.window = 1;
  config.input_size = 2;
  config.hidden_sizes = {1};
  LstmParams p(config.input_size, config.hidden_sizes, false);
  MatView wg = p.w_x(0, kGateCell);
  wg.at(0, 0) = -4.0;
  wg.at(0, 1) = 4.0;
  p.dense_w()[0] = 50.0;
  return p;
}

std::vector<TrollScoreEntry> labeled_entries(const std::vector<double>& pos,
                                             const std::vector<double>& neg) {
  std::vector<TrollScoreEntry> entries;
  int i = 0;
  for (double s : pos) {
    entries.push_back({"p" + std::to_string(i++), s, 10, Label::positive, {}});
  }
  for (double s : neg) {
    entries.push_back({"n" + std::to_string(i++), s, 10, Label::negative, {}});
  }
  return entries;
}

// Exhaustive, independent sweep: evaluate balanced accuracy at all grid
// thresholds and keep the smallest argmax.
std::pair<double, double> brute_force_sweep(const std::vector<TrollScoreEntry>& entries,
                                            std::size_t steps) {
  double best_obj = -1.0, best_t = 0.0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(steps);
    double tp = 0, fn = 0, tn = 0, fp = 0;
    for (const auto& e : entries) {
      const bool pred = e.troll_score >= t;
      if (*e.true_label == Label::positive) {
        (pred ? tp : fn) += 1;
      } else {
        (pred ? fp : tn) += 1;
      }
    }
    const double obj = 0.5 * (tp / (tp + fn) + tn / (tn + fp));
    if (obj > best_obj) {
      best_obj = obj;
      best_t = t;
    }
  }
  return {best_t, best_obj};
}

}  // namespace

TEST_CASE("troll score is the positive window fraction") {
  const LstmParams model = step_model();
  CodedSequence seq{"a", {1, 1, 1, 0, 0, 1, 0, 1, 1, 1}};  // 7 ones
  const auto entry = troll_score(model, seq, 1, 0.5);
  REQUIRE(entry.has_value());
  CHECK(entry->n_windows == 10);
  CHECK_THAT(entry->troll_score, Catch::Matchers::WithinAbs(0.7, 1e-15));
}

TEST_CASE("all-positive and all-negative windows hit the bounds") {
  const LstmParams model = step_model();
  const auto ones = troll_score(model, {"a", std::vector<int>(8, 1)}, 1);
  const auto zeros = troll_score(model, {"b", std::vector<int>(8, 0)}, 1);
  CHECK(ones->troll_score == 1.0);
  CHECK(zeros->troll_score == 0.0);
}

TEST_CASE("a sequence of exactly L gives a single all-or-nothing window") {
  const LstmParams model = step_model();
  const auto entry = troll_score(model, {"a", {1, 0, 1}}, 3);
  REQUIRE(entry.has_value());
  CHECK(entry->n_windows == 1);
  CHECK((entry->troll_score == 0.0 || entry->troll_score == 1.0));
}

TEST_CASE("flipping one window moves the score by exactly 1/n") {
  const LstmParams model = step_model();
  std::vector<int> codes(12, 0);
  codes[4] = 1;
  const auto before = troll_score(model, {"a", codes}, 1);
  codes[7] = 1;
  const auto after = troll_score(model, {"a", codes}, 1);
  CHECK_THAT(after->troll_score - before->troll_score,
             Catch::Matchers::WithinAbs(1.0 / 12.0, 1e-15));
}

TEST_CASE("accounts shorter than L are reported unscorable") {
  const LstmParams model = step_model();
  std::vector<CodedSequence> seqs = {{"long", std::vector<int>(10, 1)},
                                     {"short", std::vector<int>(3, 1)}};
  const TrollScoreReport report = score_accounts(model, seqs, 5);
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].account_id == "long");
  REQUIRE(report.unscorable.size() == 1);
  CHECK(report.unscorable[0] == "short");
}

TEST_CASE("parallel scoring matches single-threaded scoring") {
  const LstmParams model = step_model();
  Rng rng(9);
  std::vector<CodedSequence> seqs;
  for (int i = 0; i < 12; ++i) {
    CodedSequence s;
    s.account_id = "acc" + std::to_string(i);
    s.codes.resize(30 + rng.next_below(20));
    for (auto& c : s.codes) c = static_cast<int>(rng.next_below(2));
    seqs.push_back(std::move(s));
  }
  const auto serial = score_accounts(model, seqs, 7, 0.5, 1);
  const auto parallel = score_accounts(model, seqs, 7, 0.5, 3);
  REQUIRE(serial.entries.size() == parallel.entries.size());
  for (std::size_t i = 0; i < serial.entries.size(); ++i) {
    CHECK(serial.entries[i].account_id == parallel.entries[i].account_id);
    CHECK(serial.entries[i].troll_score == parallel.entries[i].troll_score);
  }
}

TEST_CASE("sweep finds the smallest separating grid threshold") {
  const auto entries = labeled_entries({0.9, 0.8}, {0.1, 0.2});
  const ThresholdChoice choice = sweep_threshold(entries);
  CHECK_THAT(choice.threshold, Catch::Matchers::WithinAbs(0.22, 1e-12));
  CHECK(choice.objective == 1.0);
  REQUIRE(choice.table.size() == 51);
}

TEST_CASE("identical scores leave balanced accuracy at one half, threshold zero") {
  const auto entries = labeled_entries({0.4, 0.4}, {0.4, 0.4, 0.4});
  const ThresholdChoice choice = sweep_threshold(entries);
  CHECK(choice.threshold == 0.0);
  CHECK(choice.objective == 0.5);
  for (const auto& row : choice.table) {
    CHECK(row.balanced_accuracy == 0.5);
  }
}

TEST_CASE("inverted scores are handled like any other table") {
  const auto entries = labeled_entries({0.05, 0.1}, {0.9, 0.95});
  const ThresholdChoice choice = sweep_threshold(entries);
  const auto [t, obj] = brute_force_sweep(entries, 50);
  CHECK(choice.threshold == t);
  CHECK(choice.objective == obj);
}

TEST_CASE("sweep matches the exhaustive oracle on random score sets") {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> pos, neg;
    const std::size_t n_pos = 1 + rng.next_below(30);
    const std::size_t n_neg = 1 + rng.next_below(30);
    for (std::size_t i = 0; i < n_pos; ++i) {
      pos.push_back(static_cast<double>(rng.next_below(101)) / 100.0);
    }
    for (std::size_t i = 0; i < n_neg; ++i) {
      neg.push_back(static_cast<double>(rng.next_below(101)) / 100.0);
    }
    const auto entries = labeled_entries(pos, neg);
    const ThresholdChoice choice = sweep_threshold(entries);
    const auto [t, obj] = brute_force_sweep(entries, 50);
    REQUIRE(choice.objective == obj);
    REQUIRE(choice.threshold == t);
  }
}

TEST_CASE("sweep needs both classes and labels") {
  auto only_pos = labeled_entries({0.5, 0.6}, {});
  REQUIRE_THROWS_AS(sweep_threshold(only_pos), DataError);
  std::vector<TrollScoreEntry> unlabeled = {{"x", 0.5, 4, {}, {}}};
  REQUIRE_THROWS_AS(sweep_threshold(unlabeled), DataError);
}

TEST_CASE("classification is a >= comparison with the threshold") {
  auto entries = labeled_entries({0.7}, {0.5});
  entries = classify_accounts(entries, 0.5);
  CHECK(*entries[0].predicted == Label::positive);
  CHECK(*entries[1].predicted == Label::positive);  // exactly at threshold

  entries = classify_accounts(entries, 0.0);
  for (const auto& e : entries) CHECK(*e.predicted == Label::positive);

  REQUIRE_THROWS_AS(classify_accounts(entries, 1.5), DataError);
}

TEST_CASE("raising the threshold never adds predicted positives") {
  Rng rng(44);
  std::vector<double> pos, neg;
  for (int i = 0; i < 40; ++i) {
    pos.push_back(rng.next_double());
    neg.push_back(rng.next_double());
  }
  const auto entries = labeled_entries(pos, neg);
  std::size_t prev = entries.size() + 1;
  for (int i = 0; i <= 50; ++i) {
    const auto classified = classify_accounts(entries, i / 50.0);
    std::size_t positives = 0;
    for (const auto& e : classified) {
      positives += *e.predicted == Label::positive;
    }
    CHECK(positives <= prev);
    prev = positives;
  }
}
