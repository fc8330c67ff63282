// trollscore: behavioral troll detection from activity sequences.
//
// Subcommand front end over the library. Option precedence, lowest to
// highest: built-in defaults, --config JSON (flat dotted keys),
// TROLLSCORE_SEED (seed only), command-line flags.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 internal invariant violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trollscore/cluster.hpp"
#include "trollscore/pipeline.hpp"

namespace fs = std::filesystem;
using namespace trollscore;
using nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::string events, labels, model, scores, out;
  std::string troll_archetype, user_archetype;
  std::size_t window = 200;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool actions_only = false;

  // train
  std::size_t layers = 4;
  int hidden = 64;
  double dropout = 0.2;
  bool all_sigmoid = false;
  double lr = 1e-3;
  std::size_t batch = 32;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  double clip = 5.0;
  double val_frac = 0.1;
  bool balance = true;
  std::size_t search_budget = 0;

  // score / sweep / evaluate
  double cutoff = 0.5;
  double threshold = 0.5;
  double step = 0.02;

  // cv
  std::size_t k_folds = 10;
  std::size_t sweep_accounts = 0;

  // synth; 0 = inherit the archetype's sequence-length bounds
  std::size_t n_per_class = 200;
  double blend = 0.0;
  std::size_t len_min = 0;
  std::size_t len_max = 0;

  // ingest
  std::size_t min_active = 10;
  std::size_t min_passive = 10;

  // cluster
  std::size_t k_clusters = 3;

  // gradcheck
  std::size_t gc_layers = 2;
  int gc_hidden = 8;
  std::size_t gc_window = 12;
  double gc_dropout = 0.0;
  std::size_t gc_batch = 4;
  double tolerance = 1e-4;

  TrainConfig train_config() const {
    TrainConfig c;
    c.window = window;
    c.input_size = actions_only ? kActionAlphabetSize : kPairAlphabetSize;
    c.hidden_sizes.assign(layers, hidden);
    c.dropout_rate = dropout;
    c.all_sigmoid_cell = all_sigmoid;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.max_epochs = max_epochs;
    c.early_stop_patience = patience;
    c.grad_clip_norm = clip;
    c.rng_seed = seed;
    return c;
  }
};

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("bad config JSON in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("config must be a JSON object: " + path);
  return j;
}

template <typename T>
void overlay(const json& config, const char* key, T& field) {
  auto it = config.find(key);
  if (it == config.end()) return;
  try {
    field = it->get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("config key '") + key + "' has the wrong type");
  }
}

// Flat dotted keys, one per flag.
void apply_config(const json& c, Options& o) {
  overlay(c, "events", o.events);
  overlay(c, "labels", o.labels);
  overlay(c, "model", o.model);
  overlay(c, "scores", o.scores);
  overlay(c, "out", o.out);
  overlay(c, "L", o.window);
  overlay(c, "seed", o.seed);
  overlay(c, "threads", o.threads);
  overlay(c, "actions_only", o.actions_only);
  overlay(c, "train.layers", o.layers);
  overlay(c, "train.hidden", o.hidden);
  overlay(c, "train.dropout", o.dropout);
  overlay(c, "train.all_sigmoid", o.all_sigmoid);
  overlay(c, "train.lr", o.lr);
  overlay(c, "train.batch", o.batch);
  overlay(c, "train.max_epochs", o.max_epochs);
  overlay(c, "train.patience", o.patience);
  overlay(c, "train.clip", o.clip);
  overlay(c, "train.val_frac", o.val_frac);
  overlay(c, "train.balance", o.balance);
  overlay(c, "train.search_budget", o.search_budget);
  overlay(c, "score.cutoff", o.cutoff);
  overlay(c, "score.threshold", o.threshold);
  overlay(c, "sweep.step", o.step);
  overlay(c, "cv.k_folds", o.k_folds);
  overlay(c, "cv.sweep_accounts", o.sweep_accounts);
  overlay(c, "synth.n_per_class", o.n_per_class);
  overlay(c, "synth.blend", o.blend);
  overlay(c, "synth.len_min", o.len_min);
  overlay(c, "synth.len_max", o.len_max);
  overlay(c, "synth.troll_archetype", o.troll_archetype);
  overlay(c, "synth.user_archetype", o.user_archetype);
  overlay(c, "ingest.min_active", o.min_active);
  overlay(c, "ingest.min_passive", o.min_passive);
  overlay(c, "cluster.k", o.k_clusters);
  overlay(c, "gradcheck.layers", o.gc_layers);
  overlay(c, "gradcheck.hidden", o.gc_hidden);
  overlay(c, "gradcheck.L", o.gc_window);
  overlay(c, "gradcheck.dropout", o.gc_dropout);
  overlay(c, "gradcheck.batch", o.gc_batch);
  overlay(c, "gradcheck.tolerance", o.tolerance);
}

EventLog read_events_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open events file: " + path);
  return parse_events(in);
}

LabelMap read_labels_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open labels file: " + path);
  return label_map(load_labels(in));
}

std::optional<Label> parse_label_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "positive") return Label::positive;
  if (s == "negative") return Label::negative;
  throw DataError("bad label cell '" + s + "' in scores file");
}

std::vector<TrollScoreEntry> read_scores_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open scores file: " + path);
  std::vector<TrollScoreEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (line_no == 1 && cells[0] == "account_id") continue;
    if (cells.size() != 5) {
      throw DataError("bad scores row at line " + std::to_string(line_no));
    }
    TrollScoreEntry e;
    e.account_id = cells[0];
    e.n_windows = std::stoull(cells[1]);
    e.troll_score = std::stod(cells[2]);
    e.true_label = parse_label_cell(cells[3]);
    e.predicted = parse_label_cell(cells[4]);
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string out_path(const Options& o, const std::string& name) {
  return o.out + "/" + name;
}

void require_out(Options& o) {
  if (o.out.empty()) throw DataError("--out directory is required");
  fs::create_directories(o.out);
}

std::map<std::string, std::string> digests(const std::vector<std::string>& paths) {
  std::map<std::string, std::string> out;
  for (const auto& p : paths) {
    if (!p.empty()) out[p] = file_digest(p);
  }
  return out;
}

// ---- subcommands -----------------------------------------------------------

int cmd_synth(Options& o) {
  require_out(o);
  SynthConfig config;
  config.n_per_class = o.n_per_class;
  config.blend = o.blend;
  config.rng_seed = o.seed;
  if (!o.troll_archetype.empty()) {
    config.troll = archetype_from_json(load_config_file(o.troll_archetype));
  }
  if (!o.user_archetype.empty()) {
    config.user = archetype_from_json(load_config_file(o.user_archetype));
  }
  if (o.len_min > 0) config.troll.seq_len_min = config.user.seq_len_min = o.len_min;
  if (o.len_max > 0) config.troll.seq_len_max = config.user.seq_len_max = o.len_max;

  const SynthCorpus corpus = generate_dataset(config);
  {
    std::ofstream out(out_path(o, "events.jsonl"), std::ios::binary);
    serialize_events(corpus.events, out);
  }
  {
    CsvWriter w(out_path(o, "labels.csv"));
    w.row({"account_id", "class"});
    for (const auto& l : corpus.labels) {
      w.row({l.account_id, l.label == Label::positive ? "troll" : "user"});
    }
  }
  {
    std::ofstream out(out_path(o, "archetype_troll.json"), std::ios::binary);
    out << archetype_to_json(config.troll).dump(2) << '\n';
    std::ofstream out2(out_path(o, "archetype_user.json"), std::ios::binary);
    out2 << archetype_to_json(config.user).dump(2) << '\n';
  }
  json echo{{"synth.n_per_class", o.n_per_class}, {"synth.blend", o.blend},
            {"synth.len_min", o.len_min},         {"synth.len_max", o.len_max},
            {"seed", o.seed}};
  write_manifest(out_path(o, "manifest.json"), "synth", echo,
                 digests({o.troll_archetype, o.user_archetype}),
                 {"events.jsonl", "labels.csv", "archetype_troll.json",
                  "archetype_user.json"});
  std::cout << "wrote " << corpus.events.size() << " accounts to " << o.out << "\n";
  return 0;
}

int cmd_ingest(Options& o) {
  require_out(o);
  const EventLog log = read_events_file(o.events);
  const EventLog kept = filter_accounts(log, o.min_active, o.min_passive);
  {
    std::ofstream out(out_path(o, "filtered_events.jsonl"), std::ios::binary);
    serialize_events(kept, out);
  }
  {
    CsvWriter w(out_path(o, "accounts.csv"));
    w.row({"account_id", "n_active", "n_passive", "retained"});
    for (const auto& [id, events] : log) {
      std::size_t active = 0, passive = 0;
      for (const auto& ev : events) (is_active(ev.kind) ? active : passive)++;
      w.row({id, std::to_string(active), std::to_string(passive),
             kept.count(id) ? "1" : "0"});
    }
  }
  json echo{{"events", o.events},
            {"ingest.min_active", o.min_active},
            {"ingest.min_passive", o.min_passive}};
  write_manifest(out_path(o, "manifest.json"), "ingest", echo, digests({o.events}),
                 {"filtered_events.jsonl", "accounts.csv"});
  std::cout << "retained " << kept.size() << " of " << log.size() << " accounts\n";
  return 0;
}

int cmd_sequences(Options& o) {
  require_out(o);
  const EventLog log = read_events_file(o.events);
  CsvWriter w(out_path(o, "sequences.csv"));
  w.row({"account_id", "offset", "code"});
  for (const auto& seq : build_all_sequences(log)) {
    const auto codes = o.actions_only ? action_codes(seq) : seq.codes();
    for (std::size_t i = 0; i < codes.size(); ++i) {
      w.row({seq.account_id, std::to_string(i), std::to_string(codes[i])});
    }
  }
  json echo{{"events", o.events}, {"actions_only", o.actions_only}};
  write_manifest(out_path(o, "manifest.json"), "sequences", echo, digests({o.events}),
                 {"sequences.csv"});
  return 0;
}

int cmd_trajectories(Options& o, const std::string& mode) {
  require_out(o);
  const EventLog log = read_events_file(o.events);
  const LabelMap labels = read_labels_file(o.labels);
  CsvWriter w(out_path(o, "trajectories.csv"));
  std::vector<std::string> header = {"account_id", "offset", "label"};
  for (std::size_t i = 0; i < o.window; ++i) header.push_back("c" + std::to_string(i));
  w.row(header);
  for (const auto& seq : build_all_sequences(log)) {
    auto it = labels.find(seq.account_id);
    if (it == labels.end()) {
      throw DataError("no label for account '" + seq.account_id + "'");
    }
    const auto codes = o.actions_only ? action_codes(seq) : seq.codes();
    const auto windows = mode == "sliding"
                             ? sliding_codes(seq.account_id, codes, o.window)
                             : chunk_codes(seq.account_id, codes, o.window);
    for (const auto& t : windows) {
      std::vector<std::string> row = {t.account_id, std::to_string(t.offset),
                                      label_name(it->second)};
      for (int c : t.codes) row.push_back(std::to_string(c));
      w.row(row);
    }
  }
  json echo{{"events", o.events}, {"labels", o.labels},        {"L", o.window},
            {"mode", mode},       {"actions_only", o.actions_only}};
  write_manifest(out_path(o, "manifest.json"), "trajectories", echo,
                 digests({o.events, o.labels}), {"trajectories.csv"});
  return 0;
}

int cmd_train(Options& o) {
  require_out(o);
  const EventLog log = read_events_file(o.events);
  const LabelMap labels = read_labels_file(o.labels);
  const auto sequences = build_all_sequences(log);
  const auto coded_seqs = coded_all(sequences, o.actions_only);
  const int alphabet = o.actions_only ? kActionAlphabetSize : kPairAlphabetSize;

  LabelMap present;
  for (const auto& s : coded_seqs) {
    auto it = labels.find(s.account_id);
    if (it == labels.end()) {
      throw DataError("no label for account '" + s.account_id + "'");
    }
    present.emplace(*it);
  }
  const AccountSplit split =
      split_accounts(present, o.val_frac, Rng::derive(o.seed, 1).next_u64());
  auto in_set = [&](const std::vector<std::string>& ids) {
    std::set<std::string> want(ids.begin(), ids.end());
    std::vector<CodedSequence> out;
    for (const auto& s : coded_seqs) {
      if (want.count(s.account_id)) out.push_back(s);
    }
    return out;
  };
  TrajectoryDataset train_ds =
      make_dataset(in_set(split.train_ids), present, o.window, alphabet);
  const TrajectoryDataset val_ds =
      make_dataset(in_set(split.holdout_ids), present, o.window, alphabet);
  if (o.balance) train_ds = undersample(train_ds, Rng::derive(o.seed, 2).next_u64());
  if (train_ds.trajectories.empty()) {
    throw DataError("no training trajectories (sequences shorter than L?)");
  }

  TrainConfig config = o.train_config();
  std::vector<std::string> outputs = {"model.bin", "training_log.csv"};
  if (o.search_budget > 0) {
    SearchSpace space;
    space.budget = o.search_budget;
    space.rng_seed = Rng::derive(o.seed, 3).next_u64();
    const SearchResult search = random_search(train_ds, val_ds, config, space);
    CsvWriter w(out_path(o, "trials.csv"));
    w.row({"trial", "hidden", "dropout", "learning_rate", "batch_size", "val_auc",
           "val_loss", "best_epoch"});
    for (const auto& t : search.trials) {
      w.row({std::to_string(t.trial), std::to_string(t.config.hidden_sizes[0]),
             fmt_double(t.config.dropout_rate), fmt_double(t.config.learning_rate),
             std::to_string(t.config.batch_size), fmt_double(t.val_auc),
             fmt_double(t.val_loss), std::to_string(t.best_epoch)});
    }
    outputs.push_back("trials.csv");
    config = search.best_config;
    std::cout << "random search: best trial " << search.best_trial << "\n";
  }

  const TrainResult result = train_classifier(train_ds, val_ds, config);
  save_params(result.params, out_path(o, "model.bin"));
  write_training_log_csv(result.log, out_path(o, "training_log.csv"));

  json echo{{"events", o.events},   {"labels", o.labels},
            {"L", o.window},        {"seed", o.seed},
            {"train.layers", o.layers}, {"train.hidden", o.hidden},
            {"train.dropout", o.dropout}, {"train.lr", o.lr},
            {"train.batch", o.batch}, {"train.max_epochs", o.max_epochs},
            {"train.patience", o.patience}, {"train.val_frac", o.val_frac},
            {"train.balance", o.balance},
            {"train.search_budget", o.search_budget},
            {"actions_only", o.actions_only}};
  write_manifest(out_path(o, "manifest.json"), "train", echo,
                 digests({o.events, o.labels}), outputs);
  std::cout << "trained on " << train_ds.trajectories.size() << " trajectories ("
            << result.log.size() << " epochs, best " << result.best_epoch << ")\n";
  return 0;
}

int cmd_gradcheck(Options& o) {
  TrainConfig config;
  config.window = o.gc_window;
  config.hidden_sizes.assign(o.gc_layers, o.gc_hidden);
  config.dropout_rate = o.gc_dropout;
  config.all_sigmoid_cell = o.all_sigmoid;
  config.rng_seed = o.seed;
  const GradCheckResult res = grad_check(config, o.gc_batch);
  const bool ok = res.max_rel_error < o.tolerance;
  std::cout << (ok ? "PASS" : "FAIL") << " gradcheck: max relative error "
            << fmt_double(res.max_rel_error) << " over " << res.n_params
            << " parameters (tolerance " << fmt_double(o.tolerance) << ")\n";
  if (!ok) throw InternalError("gradient check failed");
  return 0;
}

int cmd_score(Options& o) {
  require_out(o);
  const EventLog log = read_events_file(o.events);
  const auto sequences = build_all_sequences(log);
  const LstmParams params = load_params(o.model);
  LabelMap labels;
  if (!o.labels.empty()) labels = read_labels_file(o.labels);

  TrollScoreReport report =
      score_accounts(params, coded_all(sequences, o.actions_only), o.window,
                     o.cutoff, o.threads);
  for (auto& e : report.entries) {
    auto it = labels.find(e.account_id);
    if (it != labels.end()) e.true_label = it->second;
  }
  report.entries = classify_accounts(report.entries, o.threshold);
  write_score_csv(report.entries, out_path(o, "scores.csv"));
  write_unscorable_csv(report.unscorable, out_path(o, "unscorable.csv"));

  json echo{{"events", o.events},        {"labels", o.labels},
            {"model", o.model},          {"L", o.window},
            {"score.cutoff", o.cutoff},  {"score.threshold", o.threshold},
            {"threads", o.threads},      {"actions_only", o.actions_only}};
  write_manifest(out_path(o, "manifest.json"), "score", echo,
                 digests({o.events, o.labels, o.model}),
                 {"scores.csv", "unscorable.csv"});
  std::cout << "scored " << report.entries.size() << " accounts ("
            << report.unscorable.size() << " unscorable)\n";
  return 0;
}

int cmd_sweep(Options& o) {
  require_out(o);
  const auto entries = read_scores_file(o.scores);
  const ThresholdChoice choice = sweep_threshold(entries, o.step);
  write_sweep_csv(choice, out_path(o, "sweep.csv"));
  {
    std::ofstream out(out_path(o, "choice.json"), std::ios::binary);
    json j{{"threshold", choice.threshold}, {"balanced_accuracy", choice.objective}};
    out << j.dump(2) << '\n';
  }
  json echo{{"scores", o.scores}, {"sweep.step", o.step}};
  write_manifest(out_path(o, "manifest.json"), "sweep", echo, digests({o.scores}),
                 {"sweep.csv", "choice.json"});
  std::cout << "best threshold " << fmt_double(choice.threshold)
            << " (balanced accuracy " << fmt_double(choice.objective) << ")\n";
  return 0;
}

int cmd_evaluate(Options& o) {
  require_out(o);
  auto entries = read_scores_file(o.scores);
  entries = classify_accounts(entries, o.threshold);
  std::vector<double> scores;
  std::vector<int> pred, y;
  std::vector<double> pos, neg;
  for (const auto& e : entries) {
    if (!e.true_label) {
      throw DataError("evaluate: entry for '" + e.account_id + "' has no true label");
    }
    scores.push_back(e.troll_score);
    pred.push_back(*e.predicted == Label::positive ? 1 : 0);
    y.push_back(*e.true_label == Label::positive ? 1 : 0);
    (*e.true_label == Label::positive ? pos : neg).push_back(e.troll_score);
  }
  EvalReport report = classification_report(pred, y);
  report.auc = roc_auc(scores, y);
  report.auc_set = true;
  {
    CsvWriter w(out_path(o, "account_eval.csv"));
    w.row({"threshold", "auc", "accuracy", "precision", "recall", "f1", "tnr", "tp",
           "fp", "tn", "fn", "undefined"});
    w.row({fmt_double(o.threshold), fmt_double(report.auc), fmt_double(report.accuracy),
           fmt_double(report.precision), fmt_double(report.recall),
           fmt_double(report.f1), fmt_double(report.tnr),
           std::to_string(report.counts.tp), std::to_string(report.counts.fp),
           std::to_string(report.counts.tn), std::to_string(report.counts.fn),
           undefined_flags(report)});
  }
  write_roc_csv(roc_points(scores, y), out_path(o, "roc.csv"));
  if (!pos.empty()) write_cdf_csv(empirical_cdf(pos), out_path(o, "cdf_positive.csv"));
  if (!neg.empty()) write_cdf_csv(empirical_cdf(neg), out_path(o, "cdf_negative.csv"));
  json echo{{"scores", o.scores}, {"score.threshold", o.threshold}};
  write_manifest(out_path(o, "manifest.json"), "evaluate", echo, digests({o.scores}),
                 {"account_eval.csv", "roc.csv", "cdf_positive.csv",
                  "cdf_negative.csv"});
  std::cout << "account AUC " << fmt_double(report.auc) << ", accuracy "
            << fmt_double(report.accuracy) << "\n";
  return 0;
}

int cmd_cluster(Options& o) {
  require_out(o);
  const EventLog log = read_events_file(o.events);
  const LabelMap labels = read_labels_file(o.labels);
  const auto sequences = build_all_sequences(log);

  std::map<std::string, double> score_by_id;
  if (!o.scores.empty()) {
    for (const auto& e : read_scores_file(o.scores)) {
      score_by_id[e.account_id] = e.troll_score;
    }
  }

  const auto indicators = indicator_features(sequences);
  std::vector<std::vector<double>> features;
  std::vector<Label> row_labels;
  std::vector<double> row_scores;
  for (const auto& v : indicators) {
    auto it = labels.find(v.account_id);
    if (it == labels.end()) {
      throw DataError("no label for account '" + v.account_id + "'");
    }
    features.emplace_back(v.bits.begin(), v.bits.end());
    row_labels.push_back(it->second);
    auto sit = score_by_id.find(v.account_id);
    row_scores.push_back(sit == score_by_id.end() ? -1.0 : sit->second);
  }
  const PcaResult pca = pca_project(features, 2);
  const KmeansResult km =
      kmeans(pca.projections, o.k_clusters, Rng::derive(o.seed, 4).next_u64());
  const ClusterReport report =
      cluster_report(km.assignment, row_labels,
                     o.scores.empty() ? std::vector<double>{} : row_scores);

  {
    CsvWriter w(out_path(o, "projection.csv"));
    w.row({"account_id", "pc1", "pc2", "cluster", "label", "troll_score"});
    for (std::size_t i = 0; i < indicators.size(); ++i) {
      w.row({indicators[i].account_id, fmt_double(pca.projections[i][0]),
             fmt_double(pca.projections[i][1]), std::to_string(km.assignment[i]),
             label_name(row_labels[i]),
             row_scores[i] < 0.0 ? "" : fmt_double(row_scores[i])});
    }
  }
  std::vector<std::string> outputs = {"projection.csv", "cluster_counts.csv"};
  {
    CsvWriter w(out_path(o, "cluster_counts.csv"));
    w.row({"cluster", "n_negative", "pct_negative", "n_positive", "pct_positive"});
    std::size_t total_pos = 0, total_neg = 0;
    for (const auto& c : report.clusters) {
      total_pos += c.n_positive;
      total_neg += c.n_negative;
    }
    for (const auto& c : report.clusters) {
      w.row({std::to_string(c.cluster), std::to_string(c.n_negative),
             fmt_double(total_neg ? 100.0 * c.n_negative / total_neg : 0.0),
             std::to_string(c.n_positive),
             fmt_double(total_pos ? 100.0 * c.n_positive / total_pos : 0.0)});
    }
  }
  for (const auto& c : report.clusters) {
    const std::string base = "cluster" + std::to_string(c.cluster + 1);
    if (!c.positive_score_cdf.empty()) {
      write_cdf_csv(c.positive_score_cdf, out_path(o, base + "_cdf_positive.csv"));
      outputs.push_back(base + "_cdf_positive.csv");
    }
    if (!c.negative_score_cdf.empty()) {
      write_cdf_csv(c.negative_score_cdf, out_path(o, base + "_cdf_negative.csv"));
      outputs.push_back(base + "_cdf_negative.csv");
    }
  }
  json echo{{"events", o.events},
            {"labels", o.labels},
            {"scores", o.scores},
            {"cluster.k", o.k_clusters},
            {"seed", o.seed}};
  write_manifest(out_path(o, "manifest.json"), "cluster", echo,
                 digests({o.events, o.labels, o.scores}), outputs);
  for (const auto& c : report.clusters) {
    std::cout << "cluster " << c.cluster + 1 << ": " << c.n_positive
              << " positive, " << c.n_negative << " negative\n";
  }
  return 0;
}

int cmd_cv(Options& o, const std::string& split) {
  require_out(o);
  const EventLog log = read_events_file(o.events);
  const LabelMap labels = read_labels_file(o.labels);
  const auto sequences = build_all_sequences(log);

  CvOptions cv;
  cv.k_folds = o.k_folds;
  cv.window = o.window;
  cv.train = o.train_config();
  cv.decision_cutoff = o.cutoff;
  cv.sweep_step = o.step;
  cv.holdout_frac = o.val_frac;
  cv.sweep_accounts_per_class = o.sweep_accounts;
  cv.actions_only = o.actions_only;
  cv.seed = o.seed;
  cv.threads = o.threads;

  json echo{{"events", o.events},   {"labels", o.labels},
            {"L", o.window},        {"seed", o.seed},
            {"cv.k_folds", o.k_folds}, {"cv.split", split},
            {"score.cutoff", o.cutoff},
            {"sweep.step", o.step}, {"train.val_frac", o.val_frac},
            {"cv.sweep_accounts", o.sweep_accounts},
            {"train.layers", o.layers}, {"train.hidden", o.hidden},
            {"train.dropout", o.dropout}, {"train.lr", o.lr},
            {"train.batch", o.batch}, {"train.max_epochs", o.max_epochs},
            {"train.patience", o.patience},
            {"actions_only", o.actions_only}, {"threads", o.threads}};

  if (split == "trajectory") {
    const TrajectoryCvResult result = run_trajectory_cv(sequences, labels, cv);
    write_trajectory_cv_reports(result, o.out);
    write_manifest(out_path(o, "manifest.json"), "cv", echo,
                   digests({o.events, o.labels}),
                   {"trajectory_eval.csv", "fold_log.csv"});
    std::cout << "trajectory AUC (pooled) " << fmt_double(result.pooled_auc) << "\n";
    return 0;
  }

  const CvResult result = run_cv(sequences, labels, cv);
  write_cv_reports(result, o.out);
  write_manifest(out_path(o, "manifest.json"), "cv", echo,
                 digests({o.events, o.labels}),
                 {"account_eval.csv", "trajectory_eval.csv", "fold_log.csv",
                  "scores.csv", "unscorable.csv", "cdf_positive.csv",
                  "cdf_negative.csv", "roc_accounts.csv"});
  std::cout << "trajectory AUC (pooled) " << fmt_double(result.pooled_trajectory_auc)
            << "\naccount AUC (pooled) " << fmt_double(result.pooled_account_auc)
            << "\n";
  return 0;
}

int cmd_baselines(Options& o) {
  require_out(o);
  const EventLog log = read_events_file(o.events);
  const LabelMap labels = read_labels_file(o.labels);
  const auto sequences = build_all_sequences(log);

  BaselineOptions b;
  b.window = o.window;
  b.val_frac = o.val_frac;
  b.train = o.train_config();
  b.actions_only = o.actions_only;
  b.seed = o.seed;
  const BaselineResult result = run_baseline_comparison(sequences, labels, b);
  write_baseline_csv(result, out_path(o, "baselines.csv"));
  json echo{{"events", o.events}, {"labels", o.labels}, {"L", o.window},
            {"seed", o.seed},     {"actions_only", o.actions_only}};
  write_manifest(out_path(o, "manifest.json"), "baselines", echo,
                 digests({o.events, o.labels}), {"baselines.csv"});
  for (const auto& row : result.rows) {
    std::cout << row.model << " AUC " << fmt_double(row.auc) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;

  // config file first, then the seed env override, flags last
  try {
    for (int i = 1; i + 1 < argc; ++i) {
      if (std::string(argv[i]) == "--config") o.config_path = argv[i + 1];
    }
    if (!o.config_path.empty()) apply_config(load_config_file(o.config_path), o);
    if (const char* env_seed = std::getenv("TROLLSCORE_SEED")) {
      o.seed = std::strtoull(env_seed, nullptr, 10);
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"behavioral troll detection from state-action activity sequences"};
  app.require_subcommand(1);
  app.add_option("--config", o.config_path, "JSON config file with flat dotted keys");

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config_path, "JSON config file (already applied)");
    cmd->add_option("--seed", o.seed, "RNG seed (env TROLLSCORE_SEED overrides config)");
    cmd->add_option("--out", o.out, "output directory");
  };

  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic corpus");
  add_common(synth);
  synth->add_option("--n-per-class", o.n_per_class, "accounts per class");
  synth->add_option("--blend", o.blend, "difficulty dial in [0,1]; 1 = no signal");
  synth->add_option("--len-min", o.len_min, "minimum pair-sequence length");
  synth->add_option("--len-max", o.len_max, "maximum pair-sequence length");
  synth->add_option("--troll-archetype", o.troll_archetype, "archetype JSON");
  synth->add_option("--user-archetype", o.user_archetype, "archetype JSON");

  auto* ingest = app.add_subcommand("ingest", "validate and filter an event log");
  add_common(ingest);
  ingest->add_option("--events", o.events)->required();
  ingest->add_option("--min-active", o.min_active, "minimum active events");
  ingest->add_option("--min-passive", o.min_passive, "minimum passive events");

  auto* sequences = app.add_subcommand("sequences", "compile state-action sequences");
  add_common(sequences);
  sequences->add_option("--events", o.events)->required();
  sequences->add_flag("--actions-only", o.actions_only, "3-symbol action encoding");

  auto* trajectories =
      app.add_subcommand("trajectories", "export fixed-length trajectories");
  add_common(trajectories);
  std::string traj_mode = "nonoverlap";
  trajectories->add_option("--events", o.events)->required();
  trajectories->add_option("--labels", o.labels)->required();
  trajectories->add_option("-L,--window", o.window, "trajectory length");
  trajectories->add_option("--mode", traj_mode, "nonoverlap|sliding")
      ->check(CLI::IsMember({"nonoverlap", "sliding"}));
  trajectories->add_flag("--actions-only", o.actions_only);

  auto add_train_flags = [&](CLI::App* cmd) {
    cmd->add_option("--layers", o.layers, "recurrent layer count");
    cmd->add_option("--hidden", o.hidden, "hidden units per layer");
    cmd->add_option("--dropout", o.dropout, "dropout rate");
    cmd->add_flag("--all-sigmoid", o.all_sigmoid, "sigmoid cell activations");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
    cmd->add_option("--batch", o.batch, "mini-batch size");
    cmd->add_option("--max-epochs", o.max_epochs);
    cmd->add_option("--patience", o.patience, "early-stop patience");
    cmd->add_option("--clip", o.clip, "gradient clip norm");
    cmd->add_option("--val-frac", o.val_frac, "validation account fraction");
  };

  auto* train = app.add_subcommand("train", "train the trajectory classifier");
  add_common(train);
  train->add_option("--events", o.events)->required();
  train->add_option("--labels", o.labels)->required();
  train->add_option("-L,--window", o.window);
  train->add_flag("--actions-only", o.actions_only);
  train->add_flag("--balance,!--no-balance", o.balance,
                  "undersample the majority class (default on)");
  train->add_option("--search", o.search_budget, "random-search trial budget");
  add_train_flags(train);

  auto* gradcheck =
      app.add_subcommand("gradcheck", "verify gradients against finite differences");
  gradcheck->add_option("--config", o.config_path, "JSON config file (already applied)");
  gradcheck->add_option("--seed", o.seed);
  gradcheck->add_option("--layers", o.gc_layers);
  gradcheck->add_option("--hidden", o.gc_hidden);
  gradcheck->add_option("-L,--window", o.gc_window);
  gradcheck->add_option("--batch", o.gc_batch);
  gradcheck->add_option("--dropout", o.gc_dropout);
  gradcheck->add_flag("--all-sigmoid", o.all_sigmoid);
  gradcheck->add_option("--tolerance", o.tolerance);

  auto* score = app.add_subcommand("score", "compute per-account troll scores");
  add_common(score);
  score->add_option("--events", o.events)->required();
  score->add_option("--labels", o.labels, "optional true labels");
  score->add_option("--model", o.model)->required();
  score->add_option("-L,--window", o.window);
  score->add_option("--cutoff", o.cutoff, "window probability cutoff");
  score->add_option("--threshold", o.threshold, "troll-score decision threshold");
  score->add_option("--threads", o.threads);
  score->add_flag("--actions-only", o.actions_only);

  auto* sweep = app.add_subcommand("sweep", "sweep the troll-score threshold");
  add_common(sweep);
  sweep->add_option("--scores", o.scores, "scores.csv with true labels")->required();
  sweep->add_option("--step", o.step, "threshold grid step");

  auto* evaluate = app.add_subcommand("evaluate", "evaluate classified scores");
  add_common(evaluate);
  evaluate->add_option("--scores", o.scores)->required();
  evaluate->add_option("--threshold", o.threshold)->required();

  auto* cluster = app.add_subcommand("cluster", "behavioral clustering of accounts");
  add_common(cluster);
  cluster->add_option("--events", o.events)->required();
  cluster->add_option("--labels", o.labels)->required();
  cluster->add_option("--scores", o.scores, "optional scores.csv for CDFs");
  cluster->add_option("-k,--clusters", o.k_clusters);

  auto* cv = app.add_subcommand("cv", "full cross-validated pipeline");
  add_common(cv);
  std::string cv_split = "account";
  cv->add_option("--events", o.events)->required();
  cv->add_option("--labels", o.labels)->required();
  cv->add_option("-L,--window", o.window);
  cv->add_option("--k-folds", o.k_folds);
  cv->add_option("--split", cv_split,
                 "fold unit; trajectory splits leak account identity and "
                 "evaluate trajectory classification only")
      ->check(CLI::IsMember({"account", "trajectory"}));
  cv->add_option("--cutoff", o.cutoff);
  cv->add_option("--step", o.step);
  cv->add_option("--sweep-accounts", o.sweep_accounts,
                 "train accounts per class scored for the sweep (0 = all)");
  cv->add_option("--threads", o.threads);
  cv->add_flag("--actions-only", o.actions_only);
  add_train_flags(cv);

  auto* baselines =
      app.add_subcommand("baselines", "compare against logistic regression and knn");
  add_common(baselines);
  baselines->add_option("--events", o.events)->required();
  baselines->add_option("--labels", o.labels)->required();
  baselines->add_option("-L,--window", o.window);
  baselines->add_flag("--actions-only", o.actions_only);
  add_train_flags(baselines);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(o);
    if (ingest->parsed()) return cmd_ingest(o);
    if (sequences->parsed()) return cmd_sequences(o);
    if (trajectories->parsed()) return cmd_trajectories(o, traj_mode);
    if (train->parsed()) return cmd_train(o);
    if (gradcheck->parsed()) return cmd_gradcheck(o);
    if (score->parsed()) return cmd_score(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (cluster->parsed()) return cmd_cluster(o);
    if (cv->parsed()) return cmd_cv(o, cv_split);
    if (baselines->parsed()) return cmd_baselines(o);
    throw InternalError("no subcommand dispatched");
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
