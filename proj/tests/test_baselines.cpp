#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "trollscore/baselines.hpp"
#include "trollscore/rng.hpp"

using namespace trollscore;

namespace {

TrajectoryDataset toy_dataset(std::size_t n_per_class, std::size_t window,
                              std::uint64_t seed) {
  TrajectoryDataset ds;
  ds.window = window;
  Rng rng(seed);
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (Label label : {Label::positive, Label::negative}) {
      Trajectory t;
      t.account_id = std::string(label == Label::positive ? "p" : "n") +
                     std::to_string(i);
      t.label = label;
      t.codes.resize(window);
      for (auto& c : t.codes) {
        if (rng.bernoulli(0.2)) {
          c = static_cast<int>(rng.next_below(kPairAlphabetSize));
        } else {
          c = label == Label::positive ? 3 : 6;
        }
      }
      ds.trajectories.push_back(t);
      (label == Label::positive ? ds.n_positive : ds.n_negative)++;
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("logistic regression separates the toy set") {
  const auto ds = toy_dataset(40, 12, 1);
  const LogRegParams p = train_logreg(ds, {0.5, 300});
  const auto y = dataset_labels(ds);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    correct += (logreg_predict(p, ds.trajectories[i]) >= 0.5 ? 1 : 0) == y[i];
  }
  CHECK(static_cast<double>(correct) / static_cast<double>(y.size()) >= 0.95);
}

TEST_CASE("zero training epochs means probability one half everywhere") {
  const auto ds = toy_dataset(5, 8, 2);
  const LogRegParams p = train_logreg(ds, {0.5, 0});
  for (const auto& t : ds.trajectories) {
    CHECK(logreg_predict(p, t) == 0.5);
  }
}

TEST_CASE("logreg gradient matches central finite differences") {
  const auto ds = toy_dataset(6, 5, 3);
  const auto y = dataset_labels(ds);
  LogRegParams p = train_logreg(ds, {0.5, 7});  // start away from zero
  std::vector<double> gw;
  double gb = 0.0;
  logreg_gradient(p, ds, y, &gw, &gb);
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.weights.size(); i += 7) {
    const double orig = p.weights[i];
    p.weights[i] = orig + h;
    const double up = logreg_mean_loss(p, ds, y);
    p.weights[i] = orig - h;
    const double down = logreg_mean_loss(p, ds, y);
    p.weights[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    REQUIRE_THAT(gw[i], Catch::Matchers::WithinAbs(numeric, 1e-6));
  }
  const double orig = p.bias;
  p.bias = orig + h;
  const double up = logreg_mean_loss(p, ds, y);
  p.bias = orig - h;
  const double down = logreg_mean_loss(p, ds, y);
  p.bias = orig;
  CHECK_THAT(gb, Catch::Matchers::WithinAbs((up - down) / (2.0 * h), 1e-6));
}

TEST_CASE("full-batch loss never increases with a small learning rate") {
  const auto ds = toy_dataset(20, 10, 4);
  const auto y = dataset_labels(ds);
  LogRegParams p;
  p.alphabet_size = ds.alphabet_size;
  p.window = ds.window;
  p.weights.assign(static_cast<std::size_t>(ds.alphabet_size) * ds.window, 0.0);
  double prev = logreg_mean_loss(p, ds, y);
  std::vector<double> gw;
  double gb = 0.0;
  for (int step = 0; step < 50; ++step) {
    logreg_gradient(p, ds, y, &gw, &gb);
    for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] -= 1e-3 * gw[i];
    p.bias -= 1e-3 * gb;
    const double loss = logreg_mean_loss(p, ds, y);
    CHECK(loss <= prev);
    prev = loss;
  }
}

TEST_CASE("knn returns the label of an identical trajectory at k=1") {
  const auto ds = toy_dataset(10, 8, 5);
  const KnnVote vote = knn_classify(ds, ds.trajectories[3], {1});
  CHECK(vote.label == *ds.trajectories[3].label);
}

TEST_CASE("knn with k equal to the whole set votes the global majority") {
  auto ds = toy_dataset(8, 6, 6);
  // drop one negative so the set size is odd and positives are the majority
  ds.trajectories.pop_back();
  ds.n_negative--;
  const KnnVote vote = knn_classify(ds, ds.trajectories[0], {ds.trajectories.size()});
  CHECK(vote.label == Label::positive);
  CHECK(vote.positive_votes == 8);
}

TEST_CASE("knn matches an exhaustive-scan oracle") {
  const auto ds = toy_dataset(25, 9, 7);
  Rng rng(8);
  const KnnConfig config{5};
  for (int trial = 0; trial < 40; ++trial) {
    Trajectory query;
    query.codes.resize(9);
    for (auto& c : query.codes) c = static_cast<int>(rng.next_below(kPairAlphabetSize));

    std::vector<std::pair<std::size_t, std::size_t>> dist;
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
      dist.emplace_back(hamming(ds.trajectories[i].codes, query.codes), i);
    }
    std::sort(dist.begin(), dist.end());
    std::size_t expect_pos = 0;
    for (std::size_t i = 0; i < config.k; ++i) {
      expect_pos += *ds.trajectories[dist[i].second].label == Label::positive;
    }
    const KnnVote vote = knn_classify(ds, query, config);
    REQUIRE(vote.positive_votes == expect_pos);
  }
}

TEST_CASE("knn is permutation invariant when distances are unique") {
  TrajectoryDataset ds;
  ds.window = 10;
  // training points at distinct distances from the all-zero query
  for (int d = 1; d <= 9; ++d) {
    Trajectory t;
    t.account_id = "t" + std::to_string(d);
    t.label = d % 2 ? Label::positive : Label::negative;
    t.codes.assign(10, 0);
    for (int i = 0; i < d; ++i) t.codes[i] = 1 + d % 3;
    ds.trajectories.push_back(t);
    (d % 2 ? ds.n_positive : ds.n_negative)++;
  }
  Trajectory query;
  query.codes.assign(10, 0);
  const KnnVote base = knn_classify(ds, query, {3});

  TrajectoryDataset shuffled = ds;
  Rng rng(17);
  rng.shuffle(shuffled.trajectories);
  const KnnVote vote = knn_classify(shuffled, query, {3});
  CHECK(vote.label == base.label);
  CHECK(vote.positive_votes == base.positive_votes);
}

TEST_CASE("knn validates k and the training set size") {
  const auto ds = toy_dataset(2, 5, 9);
  REQUIRE_THROWS_AS(knn_classify(ds, ds.trajectories[0], {4}), DataError);  // even
  REQUIRE_THROWS_AS(knn_classify(ds, ds.trajectories[0], {0}), DataError);
  REQUIRE_THROWS_AS(knn_classify(ds, ds.trajectories[0], {5}), DataError);  // > |train|
}
