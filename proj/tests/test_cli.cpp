#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "test_support.hpp"

// End-to-end checks of the command-line binary (path injected by CMake).

namespace {

using nlohmann::json;

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

RunResult run(const std::string& args, const std::string& cwd) {
  const std::string out_file = cwd + "/cmd_stdout.txt";
  const std::string command = "cd " + cwd + " && " + ADVDET_CLI_PATH + " " +
                              args + " > " + out_file + " 2> " + cwd +
                              "/cmd_stderr.txt";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(status);
  result.stdout_text = testsup::read_file(out_file);
  return result;
}

std::string stderr_of(const std::string& cwd) {
  return testsup::read_file(cwd + "/cmd_stderr.txt");
}

}  // namespace

TEST_CASE("usage errors exit with code 2 and a parseable message") {
  testsup::TempDir dir("cli_usage");
  const std::string cwd = dir.path.string();

  SUBCASE("no subcommand") {
    CHECK(run("", cwd).exit_code == 2);
  }
  SUBCASE("unknown flag") {
    CHECK(run("gen-corpus --out-dir d --bogus 1", cwd).exit_code == 2);
  }
  SUBCASE("detect without calibration") {
    testsup::write_file(cwd + "/unc.jsonl", "{\"id\":\"a\",\"mu\":0,\"du\":0}\n");
    RunResult r = run("detect --uncertainty unc.jsonl --out s.jsonl", cwd);
    CHECK(r.exit_code == 2);
    json err = json::parse(stderr_of(cwd));
    CHECK(err["error"]["code"] == "usage");
  }
}

TEST_CASE("missing files and schema violations use distinct exit codes") {
  testsup::TempDir dir("cli_errs");
  const std::string cwd = dir.path.string();

  SUBCASE("missing dataset file") {
    RunResult r = run("train --data nope.jsonl --out m.ckpt", cwd);
    CHECK(r.exit_code == 3);
    CHECK(json::parse(stderr_of(cwd))["error"]["code"] == "missing-file");
  }

  SUBCASE("malformed dataset") {
    testsup::write_file(cwd + "/bad.jsonl", "{\"num_classes\": 2}\nnot json\n");
    RunResult r = run("train --data bad.jsonl --out m.ckpt", cwd);
    CHECK(r.exit_code == 4);
    CHECK(json::parse(stderr_of(cwd))["error"]["code"] == "schema");
  }

  SUBCASE("label out of range") {
    testsup::write_file(cwd + "/bad.jsonl",
                        "{\"num_classes\": 2}\n"
                        "{\"text\":\"x\",\"label\":7,\"origin\":\"natural\","
                        "\"source_id\":\"a\"}\n");
    RunResult r = run("train --data bad.jsonl --out m.ckpt", cwd);
    CHECK(r.exit_code == 4);
  }
}

TEST_CASE("small pipeline runs end to end and is deterministic") {
  testsup::TempDir dir_a("cli_pipe_a");
  testsup::TempDir dir_b("cli_pipe_b");

  auto pipeline = [&](const std::string& cwd) {
    REQUIRE(run("--seed 5 gen-corpus --out-dir data --train-size 300 "
                "--test-size 60 --validation-size 0 --aux-size 120",
                cwd).exit_code == 0);
    REQUIRE(run("--seed 5 train --data data/train.jsonl --out model.ckpt "
                "--feature-dim 1024 --hidden-dim 32 --epochs 30 --lr 0.5",
                cwd).exit_code == 0);
    REQUIRE(run("--seed 5 --threads 2 attack --model model.ckpt "
                "--data data/test.jsonl --synonyms data/synonyms.jsonl "
                "--goal fb --epsilon 0.9 --limit 20 --out outcomes.jsonl "
                "--adv-out adv.jsonl",
                cwd).exit_code == 0);
    REQUIRE(run("--seed 5 assemble-eval --natural data/test.jsonl "
                "--adversarial adv.jsonl --out eval.jsonl",
                cwd).exit_code == 0);
    REQUIRE(run("--seed 5 uncertainty --model model.ckpt --data data/aux.jsonl "
                "--out unc_aux.jsonl --schedule 0.2:10,0.4:10",
                cwd).exit_code == 0);
    REQUIRE(run("--seed 5 uncertainty --model model.ckpt --data eval.jsonl "
                "--out unc_eval.jsonl --schedule 0.2:10,0.4:10",
                cwd).exit_code == 0);
    REQUIRE(run("calibrate --uncertainty unc_aux.jsonl --out calib.json",
                cwd).exit_code == 0);
    REQUIRE(run("detect --calibration calib.json --uncertainty unc_eval.jsonl "
                "--out scores.jsonl",
                cwd).exit_code == 0);
    REQUIRE(run("evaluate --scores scores.jsonl --data eval.jsonl --fpr 0.1 "
                "--model model.ckpt --out report.json",
                cwd).exit_code == 0);
    REQUIRE(run("map --uncertainty unc_eval.jsonl --data eval.jsonl "
                "--out map.csv",
                cwd).exit_code == 0);
  };

  pipeline(dir_a.path.string());
  pipeline(dir_b.path.string());

  for (const std::string name :
       {"data/train.jsonl", "model.ckpt", "outcomes.jsonl", "adv.jsonl",
        "eval.jsonl", "unc_aux.jsonl", "unc_eval.jsonl", "calib.json",
        "scores.jsonl", "report.json", "map.csv"}) {
    CHECK(testsup::read_file(dir_a.file(name)) ==
          testsup::read_file(dir_b.file(name)));
  }

  // Report schema and metadata.
  json report = json::parse(testsup::read_file(dir_a.file("report.json")));
  for (const char* key : {"detector", "threshold", "fpr_target", "tpr", "f1",
                          "auc", "n_adv", "n_nat", "meta", "boundary_gaps"}) {
    CHECK(report.contains(key));
  }
  CHECK(report["meta"].contains("config_hash"));
  CHECK(report["meta"]["command"] == "evaluate");

  // Attack summary line mirrors the ASR/query columns.
  std::ifstream outcomes(dir_a.file("outcomes.jsonl"));
  std::string line, last;
  while (std::getline(outcomes, line)) {
    if (!line.empty()) last = line;
  }
  json summary = json::parse(last);
  REQUIRE(summary.contains("summary"));
  CHECK(summary["summary"].contains("asr_percent"));
  CHECK(summary["summary"].contains("mean_queries"));

  // Map CSV carries provenance then the pinned header.
  const std::string csv = testsup::read_file(dir_a.file("map.csv"));
  CHECK(csv.rfind("# command=map", 0) == 0);
  CHECK(csv.find("id,mu,du,origin\n") != std::string::npos);
}

TEST_CASE("config files mirror flags and flags win on conflict") {
  testsup::TempDir dir("cli_cfg");
  const std::string cwd = dir.path.string();
  testsup::write_file(cwd + "/cfg.ini",
                      "seed=9\n"
                      "[gen-corpus]\n"
                      "train-size=50\n"
                      "test-size=10\n"
                      "validation-size=0\n"
                      "aux-size=20\n");

  REQUIRE(run("--config cfg.ini gen-corpus --out-dir data", cwd).exit_code == 0);
  std::ifstream in(dir.file("data/train.jsonl"));
  std::string header;
  std::getline(in, header);
  json meta = json::parse(header)["meta"]["config"];
  CHECK(meta["seed"] == 9);
  CHECK(meta["train_size"] == 50);

  // A flag on the command line overrides the file value.
  REQUIRE(run("--config cfg.ini gen-corpus --out-dir data2 --train-size 30",
              cwd).exit_code == 0);
  std::ifstream in2(dir.file("data2/train.jsonl"));
  std::getline(in2, header);
  CHECK(json::parse(header)["meta"]["config"]["train_size"] == 30);
}

TEST_CASE("baseline detectors and ada-select run from the CLI") {
  testsup::TempDir dir("cli_base");
  const std::string cwd = dir.path.string();

  REQUIRE(run("--seed 5 gen-corpus --out-dir data --train-size 300 "
              "--test-size 40 --validation-size 0 --aux-size 100",
              cwd).exit_code == 0);
  REQUIRE(run("--seed 5 train --data data/train.jsonl --out model.ckpt "
              "--feature-dim 1024 --hidden-dim 32 --epochs 30 --lr 0.5",
              cwd).exit_code == 0);
  REQUIRE(run("detect --detector msp --model model.ckpt --data data/test.jsonl "
              "--out msp.jsonl",
              cwd).exit_code == 0);
  REQUIRE(run("detect --detector dist --model model.ckpt --data data/test.jsonl "
              "--reference data/train.jsonl --k 50 --out dist.jsonl",
              cwd).exit_code == 0);
  REQUIRE(run("--seed 5 detect --detector msp_aug --model model.ckpt "
              "--data data/test.jsonl --schedule 0.2:5 --out msp_aug.jsonl",
              cwd).exit_code == 0);

  std::ifstream in(dir.file("msp.jsonl"));
  std::string line;
  std::getline(in, line);  // meta
  std::getline(in, line);
  json record = json::parse(line);
  CHECK(record.contains("id"));
  CHECK(record.contains("adversariality"));
  CHECK(record["detector"] == "msp");

  REQUIRE(run("--seed 5 uncertainty --model model.ckpt --data data/test.jsonl "
              "--out unc.jsonl --schedule 0.2:10",
              cwd).exit_code == 0);
  REQUIRE(run("ada-select --uncertainty unc.jsonl --quadrant ldhm "
              "--out ids.txt",
              cwd).exit_code == 0);
  const std::string ids = testsup::read_file(dir.file("ids.txt"));
  CHECK(ids.rfind("# command=ada-select", 0) == 0);
}
