#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string cli = TS_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& sub) const { return (path / sub).string(); }
};

// tiny corpus + tiny network so the full pipeline runs in seconds
const std::string kSynthArgs =
    "synth --n-per-class 12 --len-min 120 --len-max 200 --seed 5 --out ";
const std::string kCvTinyArgs =
    " -L 50 --k-folds 3 --layers 2 --hidden 6 --batch 16 --max-epochs 2 "
    "--patience 0 --sweep-accounts 4 --seed 9 ";

}  // namespace

TEST_CASE("unknown subcommands and bad flags exit 1") {
  CHECK(run("frobnicate") == 1);
  CHECK(run("") == 1);
  CHECK(run("cv --events x") == 1);  // missing required --labels/--out
}

TEST_CASE("help exits 0") {
  CHECK(run("--help") == 0);
  CHECK(run("cv --help") == 0);
}

TEST_CASE("missing input files exit 2") {
  TempDir tmp("ts_cli_missing");
  CHECK(run("ingest --events /nonexistent.jsonl --out " + (tmp / "o")) == 2);
  CHECK(run("sweep --scores /nonexistent.csv --out " + (tmp / "o")) == 2);
}

TEST_CASE("synth writes a loadable corpus and manifest") {
  TempDir tmp("ts_cli_synth");
  REQUIRE(run(kSynthArgs + (tmp / "corpus")) == 0);
  CHECK(fs::exists(tmp.path / "corpus/events.jsonl"));
  CHECK(fs::exists(tmp.path / "corpus/labels.csv"));
  CHECK(fs::exists(tmp.path / "corpus/manifest.json"));
  CHECK(slurp(tmp.path / "corpus/manifest.json").find("\"subcommand\": \"synth\"") !=
        std::string::npos);

  // ingest accepts what synth produced
  REQUIRE(run("ingest --events " + (tmp / "corpus/events.jsonl") + " --out " +
              (tmp / "ingested")) == 0);
  CHECK(fs::exists(tmp.path / "ingested/accounts.csv"));
}

TEST_CASE("gradcheck subcommand passes on the default tiny network") {
  CHECK(run("gradcheck --seed 3") == 0);
}

TEST_CASE("train, score, sweep, evaluate chain together") {
  TempDir tmp("ts_cli_chain");
  REQUIRE(run(kSynthArgs + (tmp / "corpus")) == 0);
  const std::string events = tmp / "corpus/events.jsonl";
  const std::string labels = tmp / "corpus/labels.csv";

  REQUIRE(run("train --events " + events + " --labels " + labels +
              " -L 50 --layers 2 --hidden 6 --batch 16 --max-epochs 2 --seed 9" +
              " --out " + (tmp / "model")) == 0);
  REQUIRE(fs::exists(tmp.path / "model/model.bin"));
  REQUIRE(fs::exists(tmp.path / "model/training_log.csv"));

  REQUIRE(run("score --events " + events + " --labels " + labels + " --model " +
              (tmp / "model/model.bin") + " -L 50 --out " + (tmp / "scored")) == 0);
  REQUIRE(fs::exists(tmp.path / "scored/scores.csv"));

  REQUIRE(run("sweep --scores " + (tmp / "scored/scores.csv") + " --out " +
              (tmp / "swept")) == 0);
  REQUIRE(fs::exists(tmp.path / "swept/sweep.csv"));
  const std::string sweep_csv = slurp(tmp.path / "swept/sweep.csv");
  CHECK(sweep_csv.rfind("threshold,balanced_accuracy,accuracy,precision,recall,f1",
                        0) == 0);
  // 51 rows + header
  CHECK(std::count(sweep_csv.begin(), sweep_csv.end(), '\n') == 52);

  REQUIRE(run("evaluate --scores " + (tmp / "scored/scores.csv") +
              " --threshold 0.5 --out " + (tmp / "eval")) == 0);
  CHECK(fs::exists(tmp.path / "eval/account_eval.csv"));
  CHECK(fs::exists(tmp.path / "eval/roc.csv"));
}

TEST_CASE("cluster emits projections with cluster ids") {
  TempDir tmp("ts_cli_cluster");
  REQUIRE(run(kSynthArgs + (tmp / "corpus")) == 0);
  REQUIRE(run("cluster --events " + (tmp / "corpus/events.jsonl") + " --labels " +
              (tmp / "corpus/labels.csv") + " -k 2 --seed 4 --out " +
              (tmp / "clustered")) == 0);
  const std::string proj = slurp(tmp.path / "clustered/projection.csv");
  CHECK(proj.rfind("account_id,pc1,pc2,cluster,label,troll_score", 0) == 0);
  CHECK(fs::exists(tmp.path / "clustered/cluster_counts.csv"));
}

TEST_CASE("cv runs end to end and is byte-identical across reruns") {
  TempDir tmp("ts_cli_cv");
  REQUIRE(run(kSynthArgs + (tmp / "corpus")) == 0);
  const std::string events_before = slurp(tmp.path / "corpus/events.jsonl");
  const std::string labels_before = slurp(tmp.path / "corpus/labels.csv");
  const std::string base = "cv --events " + (tmp / "corpus/events.jsonl") +
                           " --labels " + (tmp / "corpus/labels.csv") + kCvTinyArgs;
  REQUIRE(run(base + "--out " + (tmp / "run1")) == 0);
  REQUIRE(run(base + "--out " + (tmp / "run2")) == 0);
  // inputs must come through untouched
  CHECK(slurp(tmp.path / "corpus/events.jsonl") == events_before);
  CHECK(slurp(tmp.path / "corpus/labels.csv") == labels_before);
  const char* files[] = {"account_eval.csv", "trajectory_eval.csv", "fold_log.csv",
                         "scores.csv",       "unscorable.csv",      "cdf_positive.csv",
                         "cdf_negative.csv", "roc_accounts.csv",    "manifest.json"};
  for (const char* f : files) {
    INFO(f);
    REQUIRE(fs::exists(tmp.path / "run1" / f));
    CHECK(slurp(tmp.path / "run1" / f) == slurp(tmp.path / "run2" / f));
  }
}

TEST_CASE("trajectory-level cv evaluates trajectory classification only") {
  TempDir tmp("ts_cli_cv_traj");
  REQUIRE(run(kSynthArgs + (tmp / "corpus")) == 0);
  REQUIRE(run("cv --events " + (tmp / "corpus/events.jsonl") + " --labels " +
              (tmp / "corpus/labels.csv") + kCvTinyArgs + "--split trajectory --out " +
              (tmp / "traj")) == 0);
  CHECK(fs::exists(tmp.path / "traj/trajectory_eval.csv"));
  CHECK(fs::exists(tmp.path / "traj/fold_log.csv"));
  CHECK_FALSE(fs::exists(tmp.path / "traj/scores.csv"));
  const std::string eval = slurp(tmp.path / "traj/trajectory_eval.csv");
  CHECK(eval.find("pooled,") != std::string::npos);
}

TEST_CASE("config file values apply and flags win over them") {
  TempDir tmp("ts_cli_config");
  {
    std::ofstream cfg(tmp / "config.json");
    cfg << R"({"synth.n_per_class": 3, "synth.len_min": 60, "synth.len_max": 80, "seed": 5})";
  }
  REQUIRE(run("synth --config " + (tmp / "config.json") + " --out " +
              (tmp / "from_config")) == 0);
  std::string labels = slurp(tmp.path / "from_config/labels.csv");
  CHECK(std::count(labels.begin(), labels.end(), '\n') == 7);  // header + 6 accounts

  REQUIRE(run("synth --config " + (tmp / "config.json") + " --n-per-class 2 --out " +
              (tmp / "flag_wins")) == 0);
  labels = slurp(tmp.path / "flag_wins/labels.csv");
  CHECK(std::count(labels.begin(), labels.end(), '\n') == 5);  // header + 4 accounts
}

TEST_CASE("the seed environment variable overrides config but not flags") {
  TempDir tmp("ts_cli_env");
  {
    std::ofstream cfg(tmp / "config.json");
    cfg << R"({"synth.n_per_class": 3, "synth.len_min": 60, "synth.len_max": 80, "seed": 5})";
  }
  setenv("TROLLSCORE_SEED", "99", 1);
  REQUIRE(run("synth --config " + (tmp / "config.json") + " --out " + (tmp / "env")) ==
          0);
  REQUIRE(run("synth --config " + (tmp / "config.json") + " --seed 5 --out " +
              (tmp / "flag")) == 0);
  unsetenv("TROLLSCORE_SEED");
  REQUIRE(run("synth --config " + (tmp / "config.json") + " --out " +
              (tmp / "config_only")) == 0);

  const std::string env_events = slurp(tmp.path / "env/events.jsonl");
  const std::string flag_events = slurp(tmp.path / "flag/events.jsonl");
  const std::string config_events = slurp(tmp.path / "config_only/events.jsonl");
  CHECK(env_events != config_events);   // env overrode the config seed
  CHECK(flag_events == config_events);  // flag restored it
}
