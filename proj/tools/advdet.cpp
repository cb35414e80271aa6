// Command-line surface for the adversarial-example detection toolkit.
// Every command is a pure file-to-file transform with an explicit seed, so
// whole pipelines are reproducible byte-for-byte.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "advdet/attack.hpp"
#include "advdet/baselines.hpp"
#include "advdet/calibration.hpp"
#include "advdet/corpus.hpp"
#include "advdet/error.hpp"
#include "advdet/eval.hpp"
#include "advdet/jsonl.hpp"
#include "advdet/rng.hpp"
#include "advdet/synth.hpp"
#include "advdet/uncertainty.hpp"
#include "advdet/victim.hpp"

namespace {

using advdet::Error;
using advdet::ErrorCode;
using nlohmann::json;

std::string hex64(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

// Provenance block embedded in every output file: the producing command, the
// full resolved configuration, and a hash of that configuration.
json make_meta(const std::string& command, const json& config) {
  const std::string payload = command + "\x1f" + config.dump();
  return json{{"command", command},
              {"config", config},
              {"config_hash", hex64(advdet::fnv1a64(payload))}};
}

std::string meta_comment(const json& meta) {
  return "# command=" + meta["command"].get<std::string>() +
         " config_hash=" + meta["config_hash"].get<std::string>() + "\n";
}

std::vector<advdet::MaskScheduleEntry> parse_schedule(const std::string& text) {
  std::vector<advdet::MaskScheduleEntry> schedule;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    const std::string part = text.substr(start, comma - start);
    const std::size_t colon = part.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kUsage,
                  "schedule entries must look like rate:count, got " + part);
    }
    try {
      advdet::MaskScheduleEntry entry;
      entry.rate = std::stod(part.substr(0, colon));
      entry.count = std::stoi(part.substr(colon + 1));
      schedule.push_back(entry);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kUsage, "bad schedule entry: " + part);
    }
    start = comma + 1;
  }
  if (schedule.empty()) {
    throw Error(ErrorCode::kUsage, "empty mask-rate schedule");
  }
  return schedule;
}

json schedule_to_json(const std::vector<advdet::MaskScheduleEntry>& schedule) {
  json rows = json::array();
  for (const auto& entry : schedule) {
    rows.push_back({{"rate", entry.rate}, {"count", entry.count}});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// gen-corpus

struct GenCorpusArgs {
  std::string out_dir;
  int train_size = 2000;
  int test_size = 600;
  int validation_size = 200;
  int aux_size = 1000;
  int num_classes = 2;
  std::uint64_t seed = 0;
};

void write_dataset_with_meta(const advdet::Dataset& dataset,
                             const std::string& path, const json& meta) {
  std::ofstream out = advdet::open_output(path);
  out << json{{"num_classes", dataset.num_classes}, {"meta", meta}}.dump()
      << '\n';
  for (const advdet::LabeledExample& example : dataset.examples) {
    out << json{{"text", example.sequence.text()},
                {"label", example.gold_label},
                {"origin", advdet::origin_name(example.origin)},
                {"source_id", example.source_id}}
               .dump()
        << '\n';
  }
}

void run_gen_corpus(const GenCorpusArgs& args) {
  advdet::ToyCorpusConfig config;
  config.train_size = args.train_size;
  config.test_size = args.test_size;
  config.validation_size = args.validation_size;
  config.num_classes = args.num_classes;
  config.seed = args.seed;

  const json meta = make_meta(
      "gen-corpus", json{{"out_dir", args.out_dir},
                         {"train_size", args.train_size},
                         {"test_size", args.test_size},
                         {"validation_size", args.validation_size},
                         {"aux_size", args.aux_size},
                         {"num_classes", args.num_classes},
                         {"seed", args.seed}});

  advdet::ToyCorpus corpus = advdet::make_toy_corpus(config);
  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path dir(args.out_dir);
  write_dataset_with_meta(corpus.train, (dir / "train.jsonl").string(), meta);
  write_dataset_with_meta(corpus.test, (dir / "test.jsonl").string(), meta);
  write_dataset_with_meta(corpus.validation,
                          (dir / "validation.jsonl").string(), meta);
  advdet::Dataset aux = advdet::sample_aux(
      corpus.train, static_cast<std::size_t>(args.aux_size), args.seed);
  write_dataset_with_meta(aux, (dir / "aux.jsonl").string(), meta);
  std::ofstream syn = advdet::open_output((dir / "synonyms.jsonl").string());
  syn << json{{"meta", meta}}.dump() << '\n';
  for (const auto& [word, candidates] : corpus.synonyms.entries) {
    syn << json{{"word", word}, {"candidates", candidates}}.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string augment_ids;
  std::string adv_corpus;
  std::string eval_data;
  std::string report;
  int feature_dim = 4096;
  int hidden_dim = 128;
  double dropout = 0.3;
  double learning_rate = 0.5;
  int epochs = 25;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

std::vector<std::string> read_id_list(const std::string& path) {
  std::ifstream in = advdet::open_input(path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    ids.push_back(line);
  }
  return ids;
}

void run_train(const TrainArgs& args) {
  advdet::Dataset train_set =
      advdet::load_dataset(args.data, advdet::SplitTag::kTrain);
  advdet::ModelConfig config;
  config.feature_dim = args.feature_dim;
  config.hidden_dim = args.hidden_dim;
  config.num_classes = train_set.num_classes;
  config.train_dropout_rate = args.dropout;
  config.learning_rate = args.learning_rate;
  config.epochs = args.epochs;
  config.batch_size = args.batch_size;
  config.seed = args.seed;

  json config_echo{{"data", args.data},
                   {"out", args.out},
                   {"feature_dim", args.feature_dim},
                   {"hidden_dim", args.hidden_dim},
                   {"dropout", args.dropout},
                   {"learning_rate", args.learning_rate},
                   {"epochs", args.epochs},
                   {"batch_size", args.batch_size},
                   {"seed", args.seed},
                   {"augment_ids", args.augment_ids},
                   {"adv_corpus", args.adv_corpus}};
  const json meta = make_meta("train", config_echo);

  std::size_t n_augment = 0;
  advdet::VictimModel model;
  if (!args.augment_ids.empty()) {
    if (args.adv_corpus.empty()) {
      throw Error(ErrorCode::kUsage, "--augment-ids requires --adv-corpus");
    }
    advdet::Dataset adv_corpus =
        advdet::load_dataset(args.adv_corpus, advdet::SplitTag::kEvalAdv);
    std::vector<std::string> ids = read_id_list(args.augment_ids);
    n_augment = ids.size();
    model = advdet::retrain_with_augmentation(train_set, ids, adv_corpus, config);
  } else {
    model = advdet::train(config, train_set);
  }
  advdet::save_checkpoint(model, args.out, meta.dump());

  json summary{{"train_accuracy", advdet::accuracy(model, train_set)},
               {"n_train", train_set.examples.size()},
               {"n_augment", n_augment},
               {"meta", meta}};
  if (!args.eval_data.empty()) {
    advdet::Dataset eval_set =
        advdet::load_dataset(args.eval_data, advdet::SplitTag::kEval);
    summary["eval_accuracy"] = advdet::accuracy(model, eval_set);
  }
  if (!args.report.empty()) {
    std::ofstream out = advdet::open_output(args.report);
    out << summary.dump() << '\n';
  }
  std::cout << summary.dump() << '\n';
}

// ---------------------------------------------------------------------------
// attack

struct AttackArgs {
  std::string model;
  std::string data;
  std::string synonyms;
  std::string goal = "regular";
  double epsilon = 0.9;
  double ratio = 0.3;
  int max_candidates = 8;
  std::size_t limit = 0;  // 0 = all
  std::size_t skip = 0;
  std::string out;
  std::string adv_out;
  std::uint64_t seed = 0;
  int threads = 1;
};

void run_attack(const AttackArgs& args) {
  advdet::VictimModel model = advdet::load_checkpoint(args.model);
  advdet::Dataset data =
      advdet::load_dataset(args.data, advdet::SplitTag::kEvalNat);

  advdet::AttackConfig config;
  if (args.goal == "regular") {
    config.goal.kind = advdet::GoalKind::kRegular;
  } else if (args.goal == "fb") {
    config.goal.kind = advdet::GoalKind::kFarBoundary;
  } else {
    throw Error(ErrorCode::kUsage, "--goal must be regular or fb");
  }
  config.goal.epsilon = args.epsilon;
  config.max_perturb_ratio = args.ratio;
  config.synonyms = advdet::load_synonyms(args.synonyms);
  config.max_candidates_per_word = args.max_candidates;
  config.seed = args.seed;
  config.validate(model.config.num_classes);

  const std::size_t begin = std::min(args.skip, data.examples.size());
  std::size_t end = data.examples.size();
  if (args.limit > 0) end = std::min(end, begin + args.limit);
  const std::size_t n = end - begin;

  std::vector<advdet::AttackOutcome> outcomes(n);
  auto attack_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      outcomes[i] = advdet::attack(model, data.examples[begin + i], config);
    }
  };
  if (args.threads <= 1 || n <= 1) {
    attack_range(0, n);
  } else {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(args.threads), n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back(attack_range, w * chunk, std::min(n, (w + 1) * chunk));
    }
    for (std::thread& t : pool) t.join();
  }

  const json meta = make_meta(
      "attack", json{{"model", args.model},
                     {"data", args.data},
                     {"synonyms", args.synonyms},
                     {"goal", args.goal},
                     {"epsilon", args.epsilon},
                     {"ratio", args.ratio},
                     {"max_candidates", args.max_candidates},
                     {"limit", args.limit},
                     {"skip", args.skip},
                     {"seed", args.seed}});

  std::ofstream out = advdet::open_output(args.out);
  out << json{{"meta", meta}}.dump() << '\n';

  std::size_t n_skipped = 0, n_failed = 0, n_success = 0, n_success_fb = 0;
  std::int64_t total_queries = 0;
  const bool fb_goal = config.goal.kind == advdet::GoalKind::kFarBoundary;

  advdet::Dataset adv_set;
  adv_set.num_classes = data.num_classes;
  adv_set.split_tag = advdet::SplitTag::kEvalAdv;

  for (std::size_t i = 0; i < n; ++i) {
    const advdet::LabeledExample& source = data.examples[begin + i];
    const advdet::AttackOutcome& outcome = outcomes[i];
    switch (outcome.status) {
      case advdet::AttackStatus::kSkipped: ++n_skipped; break;
      case advdet::AttackStatus::kFailed: ++n_failed; break;
      case advdet::AttackStatus::kSuccess: ++n_success; break;
      case advdet::AttackStatus::kSuccessFb: ++n_success_fb; break;
    }
    if (outcome.status != advdet::AttackStatus::kSkipped) {
      total_queries += outcome.queries;
    }
    json record{{"source_id", source.source_id},
                {"status", advdet::attack_status_name(outcome.status)},
                {"adv_text", outcome.adversarial
                                 ? json(outcome.adversarial->text())
                                 : json(nullptr)},
                {"queries", outcome.queries},
                {"final_prob", outcome.final_prob},
                {"perturbed_indices", outcome.perturbed_indices}};
    out << record.dump() << '\n';

    const bool goal_met = fb_goal
                              ? outcome.status == advdet::AttackStatus::kSuccessFb
                              : outcome.status == advdet::AttackStatus::kSuccess;
    if (goal_met && !args.adv_out.empty()) {
      advdet::LabeledExample adv;
      adv.sequence = *outcome.adversarial;
      adv.gold_label = source.gold_label;
      adv.origin = fb_goal ? advdet::Origin::kAdvFarBoundary
                           : advdet::Origin::kAdvRegular;
      adv.source_id = source.source_id;
      adv_set.examples.push_back(std::move(adv));
    }
  }

  const std::size_t attempted = n - n_skipped;
  const std::size_t goal_met_count = fb_goal ? n_success_fb : n_success;
  json summary{{"n_total", n},
               {"n_skipped", n_skipped},
               {"n_failed", n_failed},
               {"n_success", n_success},
               {"n_success_fb", n_success_fb},
               {"asr_percent",
                attempted == 0 ? 0.0
                               : 100.0 * static_cast<double>(goal_met_count) /
                                     static_cast<double>(attempted)},
               {"mean_queries",
                attempted == 0 ? 0.0
                               : static_cast<double>(total_queries) /
                                     static_cast<double>(attempted)}};
  out << json{{"summary", summary}}.dump() << '\n';
  std::cout << json{{"summary", summary}}.dump() << '\n';

  if (!args.adv_out.empty()) {
    write_dataset_with_meta(adv_set, args.adv_out, meta);
  }
}

// ---------------------------------------------------------------------------
// uncertainty

struct UncertaintyArgs {
  std::string model;
  std::string data;
  std::string out;
  int n_m = 10;
  double p_m = 0.2;
  std::string schedule = "0.1:25,0.2:25,0.3:25,0.4:25";
  std::string mu_augment;  // "count:rate", empty = off
  std::uint64_t seed = 0;
  int threads = 1;
};

advdet::UncertaintyConfig make_uncertainty_config(const UncertaintyArgs& args) {
  advdet::UncertaintyConfig config;
  config.n_m = args.n_m;
  config.p_m = args.p_m;
  config.p_d_schedule = parse_schedule(args.schedule);
  config.n_d = 0;
  for (const auto& entry : config.p_d_schedule) config.n_d += entry.count;
  if (!args.mu_augment.empty()) {
    const std::size_t colon = args.mu_augment.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kUsage, "--mu-augment must look like count:rate");
    }
    try {
      advdet::NeighborAugment augment;
      augment.count = std::stoi(args.mu_augment.substr(0, colon));
      augment.mask_rate = std::stod(args.mu_augment.substr(colon + 1));
      config.mu_neighbor_augment = augment;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kUsage, "bad --mu-augment value");
    }
  }
  config.seed = args.seed;
  config.validate();
  return config;
}

json uncertainty_config_echo(const UncertaintyArgs& args,
                             const advdet::UncertaintyConfig& config) {
  return json{{"model", args.model},
              {"data", args.data},
              {"n_m", config.n_m},
              {"p_m", config.p_m},
              {"n_d", config.n_d},
              {"p_d_schedule", schedule_to_json(config.p_d_schedule)},
              {"mu_augment", args.mu_augment},
              {"seed", args.seed}};
}

void run_uncertainty(const UncertaintyArgs& args) {
  advdet::VictimModel model = advdet::load_checkpoint(args.model);
  advdet::Dataset data = advdet::load_dataset(args.data, advdet::SplitTag::kEval);
  advdet::UncertaintyConfig config = make_uncertainty_config(args);

  auto scores = advdet::score_uncertainties(model, data, config, args.threads);

  const json meta = make_meta("uncertainty", uncertainty_config_echo(args, config));
  std::ofstream out = advdet::open_output(args.out);
  out << json{{"meta", meta}}.dump() << '\n';
  for (const auto& [id, s] : scores) {
    out << json{{"id", id}, {"mu", s.mu}, {"du", s.du}}.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateArgs {
  std::string uncertainty;
  std::string out;
};

struct UncertaintyFile {
  std::vector<std::string> ids;
  std::vector<double> mu;
  std::vector<double> du;
  json producer_config;  // config echoed by the producing uncertainty run
};

UncertaintyFile read_uncertainty_file(const std::string& path) {
  UncertaintyFile file;
  file.producer_config = json::object();
  for (const json& record : advdet::read_jsonl(path, /*skip_meta=*/false)) {
    if (record.size() == 1 && record.contains("meta")) {
      if (record["meta"].contains("config")) {
        file.producer_config = record["meta"]["config"];
      }
      continue;
    }
    if (!record.contains("id") || !record.contains("mu") ||
        !record.contains("du")) {
      throw Error(ErrorCode::kSchema,
                  path + ": uncertainty records need id/mu/du");
    }
    file.ids.push_back(record["id"].get<std::string>());
    file.mu.push_back(record["mu"].get<double>());
    file.du.push_back(record["du"].get<double>());
  }
  return file;
}

void run_calibrate(const CalibrateArgs& args) {
  UncertaintyFile file = read_uncertainty_file(args.uncertainty);
  advdet::EmpiricalDistribution t_mu = advdet::fit_empirical(file.mu);
  advdet::EmpiricalDistribution t_du = advdet::fit_empirical(file.du);
  const json meta =
      make_meta("calibrate", json{{"uncertainty", args.uncertainty},
                                  {"out", args.out},
                                  {"n", file.ids.size()}});
  std::ofstream out = advdet::open_output(args.out);
  out << json{{"t_mu", t_mu.sorted_stats},
              {"t_du", t_du.sorted_stats},
              {"ucfg", file.producer_config},
              {"meta", meta}}
             .dump()
      << '\n';
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
  std::string detector = "addmu";
  std::string calibration;
  std::string uncertainty;
  std::string model;
  std::string data;
  std::string reference;
  int k = 600;
  std::string schedule = "0.1:25,0.2:25,0.3:25,0.4:25";
  std::uint64_t seed = 0;
  std::string out;
};

void run_detect_addmu(const DetectArgs& args, const json& meta) {
  if (args.calibration.empty() || args.uncertainty.empty()) {
    throw Error(ErrorCode::kUsage,
                "addmu detection needs --calibration and --uncertainty");
  }
  std::ifstream calib_in = advdet::open_input(args.calibration);
  json calib = json::parse(calib_in, nullptr, false);
  if (calib.is_discarded() || !calib.contains("t_mu") || !calib.contains("t_du")) {
    throw Error(ErrorCode::kSchema,
                args.calibration + ": calibration file needs t_mu and t_du");
  }
  advdet::EmpiricalDistribution t_mu =
      advdet::fit_empirical(calib["t_mu"].get<std::vector<double>>());
  advdet::EmpiricalDistribution t_du =
      advdet::fit_empirical(calib["t_du"].get<std::vector<double>>());

  UncertaintyFile file = read_uncertainty_file(args.uncertainty);
  std::ofstream out = advdet::open_output(args.out);
  out << json{{"meta", meta}}.dump() << '\n';
  for (std::size_t i = 0; i < file.ids.size(); ++i) {
    advdet::PValuePair pair{advdet::p_value(t_mu, file.mu[i]),
                            advdet::p_value(t_du, file.du[i])};
    advdet::AddmuScore score = advdet::fisher_aggregate(pair);
    out << json{{"id", file.ids[i]},
                {"q_m", pair.q_m},
                {"q_d", pair.q_d},
                {"log_q_agg", score.log_q_agg},
                {"adversariality", score.adversariality}}
               .dump()
        << '\n';
  }
}

void run_detect_baseline(const DetectArgs& args, const json& meta) {
  if (args.model.empty() || args.data.empty()) {
    throw Error(ErrorCode::kUsage,
                "baseline detectors need --model and --data");
  }
  advdet::VictimModel model = advdet::load_checkpoint(args.model);
  advdet::Dataset data = advdet::load_dataset(args.data, advdet::SplitTag::kEval);

  const bool augmented =
      args.detector == "msp_aug" || args.detector == "dist_aug";
  const bool dist_based = args.detector == "dist" || args.detector == "dist_aug";

  advdet::ReferenceIndex index;
  advdet::DistConfig dist_config{args.k};
  if (dist_based) {
    if (args.reference.empty()) {
      throw Error(ErrorCode::kUsage, "dist detectors need --reference");
    }
    advdet::Dataset reference =
        advdet::load_dataset(args.reference, advdet::SplitTag::kTrain);
    if (reference.num_classes != data.num_classes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "reference and eval sets disagree on num_classes");
    }
    index = advdet::build_reference_index(model, reference);
  }

  auto base_scorer = [&](const advdet::TokenSequence& sequence) {
    if (dist_based) {
      advdet::ProbVector probs = advdet::predict(model, sequence);
      return advdet::dist_score(index, advdet::features(model, sequence),
                                advdet::argmax(probs), dist_config);
    }
    return advdet::msp_score(advdet::predict(model, sequence));
  };

  std::vector<advdet::MaskScheduleEntry> schedule;
  if (augmented) schedule = parse_schedule(args.schedule);

  std::ofstream out = advdet::open_output(args.out);
  out << json{{"meta", meta}}.dump() << '\n';
  for (const advdet::LabeledExample& example : data.examples) {
    double score;
    if (augmented) {
      score = advdet::neighbor_augmented_score(
          base_scorer, example.sequence, schedule,
          advdet::derive_seed(args.seed, example.uid()));
    } else {
      score = base_scorer(example.sequence);
    }
    out << json{{"id", example.uid()},
                {"adversariality", score},
                {"detector", args.detector}}
               .dump()
        << '\n';
  }
}

void run_detect(const DetectArgs& args) {
  const json meta = make_meta(
      "detect", json{{"detector", args.detector},
                     {"calibration", args.calibration},
                     {"uncertainty", args.uncertainty},
                     {"model", args.model},
                     {"data", args.data},
                     {"reference", args.reference},
                     {"k", args.k},
                     {"schedule", args.schedule},
                     {"seed", args.seed}});
  if (args.detector == "addmu") {
    run_detect_addmu(args, meta);
  } else if (args.detector == "msp" || args.detector == "dist" ||
             args.detector == "msp_aug" || args.detector == "dist_aug") {
    run_detect_baseline(args, meta);
  } else {
    throw Error(ErrorCode::kUsage, "unknown detector: " + args.detector);
  }
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string scores;
  std::string data;
  std::string detector_name;
  double fpr_target = 0.1;
  std::string model;  // optional: adds boundary-gap diagnostics
  std::string out;
};

void run_evaluate(const EvaluateArgs& args) {
  advdet::Dataset data = advdet::load_dataset(args.data, advdet::SplitTag::kEval);
  std::unordered_map<std::string, const advdet::LabeledExample*> by_uid;
  for (const advdet::LabeledExample& example : data.examples) {
    by_uid[example.uid()] = &example;
  }

  std::string detector = args.detector_name;
  std::vector<advdet::ScoredExample> scored;
  for (const json& record : advdet::read_jsonl(args.scores)) {
    if (!record.contains("id") || !record.contains("adversariality")) {
      throw Error(ErrorCode::kSchema,
                  args.scores + ": score records need id/adversariality");
    }
    const std::string id = record["id"].get<std::string>();
    auto it = by_uid.find(id);
    if (it == by_uid.end()) {
      throw Error(ErrorCode::kSchema,
                  "scored id not present in the eval dataset: " + id);
    }
    if (detector.empty() && record.contains("detector")) {
      detector = record["detector"].get<std::string>();
    }
    scored.push_back({id, record["adversariality"].get<double>(),
                      it->second->origin != advdet::Origin::kNatural});
  }
  if (detector.empty()) detector = "addmu";

  advdet::DetectionReport report =
      advdet::evaluate_detector(detector, scored, args.fpr_target);

  const json meta = make_meta(
      "evaluate", json{{"scores", args.scores},
                       {"data", args.data},
                       {"detector", detector},
                       {"fpr_target", args.fpr_target},
                       {"model", args.model}});
  json out_json{{"detector", report.detector},
                {"threshold", report.threshold},
                {"fpr_target", report.fpr_target},
                {"tpr", report.tpr},
                {"f1", report.f1},
                {"auc", report.auc},
                {"n_adv", report.n_adv},
                {"n_nat", report.n_nat},
                {"meta", meta}};

  if (!args.model.empty()) {
    advdet::VictimModel model = advdet::load_checkpoint(args.model);
    advdet::ExampleGroups groups;
    std::unordered_map<std::string, double> score_of;
    for (const advdet::ScoredExample& example : scored) {
      score_of[example.id] = example.adversariality;
    }
    for (const advdet::LabeledExample& example : data.examples) {
      auto it = score_of.find(example.uid());
      if (it == score_of.end()) continue;
      if (example.origin == advdet::Origin::kNatural) {
        groups.natural.push_back(example.sequence);
      } else {
        groups.overall.push_back(example.sequence);
        if (it->second >= report.threshold) {
          groups.detected.push_back(example.sequence);
        } else {
          groups.failed.push_back(example.sequence);
        }
      }
    }
    advdet::BoundaryGapSummary gaps =
        advdet::boundary_gap_diagnostic(model, groups);
    json gap_json = json::object();
    if (gaps.natural) gap_json["natural"] = *gaps.natural;
    if (gaps.detected) gap_json["detected"] = *gaps.detected;
    if (gaps.failed) gap_json["failed"] = *gaps.failed;
    if (gaps.overall) gap_json["overall"] = *gaps.overall;
    out_json["boundary_gaps"] = gap_json;
  }

  std::ofstream out = advdet::open_output(args.out);
  out << out_json.dump() << '\n';
  std::cout << out_json.dump() << '\n';
}

// ---------------------------------------------------------------------------
// map

struct MapArgs {
  std::string uncertainty;
  std::string data;
  std::string out;
};

void run_map(const MapArgs& args) {
  UncertaintyFile file = read_uncertainty_file(args.uncertainty);
  advdet::Dataset data = advdet::load_dataset(args.data, advdet::SplitTag::kEval);
  std::unordered_map<std::string, advdet::Origin> origin_of;
  for (const advdet::LabeledExample& example : data.examples) {
    origin_of[example.uid()] = example.origin;
  }
  std::vector<std::tuple<std::string, advdet::UncertaintyScores, advdet::Origin>>
      rows;
  for (std::size_t i = 0; i < file.ids.size(); ++i) {
    auto it = origin_of.find(file.ids[i]);
    if (it == origin_of.end()) {
      throw Error(ErrorCode::kSchema,
                  "uncertainty id not present in the dataset: " + file.ids[i]);
    }
    rows.emplace_back(file.ids[i],
                      advdet::UncertaintyScores{file.mu[i], file.du[i]},
                      it->second);
  }
  const json meta = make_meta("map", json{{"uncertainty", args.uncertainty},
                                          {"data", args.data},
                                          {"out", args.out}});
  std::ofstream out = advdet::open_output(args.out);
  out << meta_comment(meta);
  out << advdet::mu_du_map(rows);
}

// ---------------------------------------------------------------------------
// ada-select

struct AdaSelectArgs {
  std::string uncertainty;
  std::string quadrant = "LDHM";
  std::string out;
};

void run_ada_select(const AdaSelectArgs& args) {
  UncertaintyFile file = read_uncertainty_file(args.uncertainty);
  std::vector<std::pair<std::string, advdet::UncertaintyScores>> scores;
  for (std::size_t i = 0; i < file.ids.size(); ++i) {
    scores.emplace_back(file.ids[i],
                        advdet::UncertaintyScores{file.mu[i], file.du[i]});
  }
  std::vector<std::string> ids =
      advdet::ada_select(scores, advdet::quadrant_from_name(args.quadrant));
  const json meta =
      make_meta("ada-select", json{{"uncertainty", args.uncertainty},
                                   {"quadrant", args.quadrant},
                                   {"out", args.out}});
  std::ofstream out = advdet::open_output(args.out);
  out << meta_comment(meta);
  for (const std::string& id : ids) out << id << '\n';
}

// ---------------------------------------------------------------------------
// assemble-eval

struct AssembleEvalArgs {
  std::string natural;
  std::string adversarial;
  std::uint64_t seed = 0;
  bool allow_unequal = false;
  std::string out;
};

void run_assemble_eval(const AssembleEvalArgs& args) {
  advdet::Dataset natural =
      advdet::load_dataset(args.natural, advdet::SplitTag::kEvalNat);
  advdet::Dataset adversarial =
      advdet::load_dataset(args.adversarial, advdet::SplitTag::kEvalAdv);
  advdet::Dataset eval = advdet::assemble_eval_set(natural, adversarial,
                                                   args.seed, args.allow_unequal);
  const json meta = make_meta(
      "assemble-eval", json{{"natural", args.natural},
                            {"adversarial", args.adversarial},
                            {"seed", args.seed},
                            {"allow_unequal", args.allow_unequal}});
  write_dataset_with_meta(eval, args.out, meta);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return 2;
    case ErrorCode::kMissingFile: return 3;
    case ErrorCode::kSchema:
    case ErrorCode::kEmptyText: return 4;
    case ErrorCode::kCorrupt:
    case ErrorCode::kVersion: return 5;
    default: return 6;
  }
}

void report_error(const char* code, const std::string& message) {
  std::cerr << json{{"error", {{"code", code}, {"message", message}}}}.dump()
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial-example detection toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI file mirroring the flags; command-line flags win");

  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--seed", seed, "global random seed")->capture_default_str();
  app.add_option("--threads", threads, "worker thread bound")
      ->capture_default_str();

  GenCorpusArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-corpus",
                                     "generate the bundled synthetic corpus");
  gen->add_option("--out-dir", gen_args.out_dir)->required();
  gen->add_option("--train-size", gen_args.train_size)->capture_default_str();
  gen->add_option("--test-size", gen_args.test_size)->capture_default_str();
  gen->add_option("--validation-size", gen_args.validation_size)
      ->capture_default_str();
  gen->add_option("--aux-size", gen_args.aux_size)->capture_default_str();
  gen->add_option("--classes", gen_args.num_classes)->capture_default_str();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train the victim classifier");
  train->add_option("--data", train_args.data)->required();
  train->add_option("--out", train_args.out)->required();
  train->add_option("--feature-dim", train_args.feature_dim)
      ->capture_default_str();
  train->add_option("--hidden-dim", train_args.hidden_dim)
      ->capture_default_str();
  train->add_option("--dropout", train_args.dropout)->capture_default_str();
  train->add_option("--lr", train_args.learning_rate)->capture_default_str();
  train->add_option("--epochs", train_args.epochs)->capture_default_str();
  train->add_option("--batch-size", train_args.batch_size)
      ->capture_default_str();
  train->add_option("--augment-ids", train_args.augment_ids,
                    "id list of adversarial examples to add");
  train->add_option("--adv-corpus", train_args.adv_corpus,
                    "dataset the augment ids resolve against");
  train->add_option("--eval", train_args.eval_data,
                    "dataset to report accuracy on");
  train->add_option("--report", train_args.report, "summary JSON path");

  AttackArgs attack_args;
  CLI::App* attack = app.add_subcommand("attack", "run the substitution attack");
  attack->add_option("--model", attack_args.model)->required();
  attack->add_option("--data", attack_args.data)->required();
  attack->add_option("--synonyms", attack_args.synonyms)->required();
  attack->add_option("--goal", attack_args.goal, "regular or fb")
      ->capture_default_str();
  attack->add_option("--epsilon", attack_args.epsilon)->capture_default_str();
  attack->add_option("--ratio", attack_args.ratio)->capture_default_str();
  attack->add_option("--max-candidates", attack_args.max_candidates)
      ->capture_default_str();
  attack->add_option("--limit", attack_args.limit, "attack at most N examples")
      ->capture_default_str();
  attack->add_option("--skip", attack_args.skip, "skip the first N examples")
      ->capture_default_str();
  attack->add_option("--out", attack_args.out)->required();
  attack->add_option("--adv-out", attack_args.adv_out,
                     "write goal-met adversarial examples as a dataset");

  UncertaintyArgs unc_args;
  CLI::App* unc = app.add_subcommand("uncertainty",
                                     "score MU and DU for every example");
  unc->add_option("--model", unc_args.model)->required();
  unc->add_option("--data", unc_args.data)->required();
  unc->add_option("--out", unc_args.out)->required();
  unc->add_option("--nm", unc_args.n_m)->capture_default_str();
  unc->add_option("--pm", unc_args.p_m)->capture_default_str();
  unc->add_option("--schedule", unc_args.schedule,
                  "mask-rate schedule rate:count[,rate:count...]")
      ->capture_default_str();
  unc->add_option("--mu-augment", unc_args.mu_augment,
                  "average MU over masked neighbors, count:rate");

  CalibrateArgs calib_args;
  CLI::App* calib = app.add_subcommand(
      "calibrate", "fit the clean MU/DU null distributions");
  calib->add_option("--uncertainty", calib_args.uncertainty)->required();
  calib->add_option("--out", calib_args.out)->required();

  DetectArgs detect_args;
  CLI::App* detect = app.add_subcommand("detect", "score examples as adversarial");
  detect->add_option("--detector", detect_args.detector,
                     "addmu, msp, dist, msp_aug, dist_aug")
      ->capture_default_str();
  detect->add_option("--calibration", detect_args.calibration);
  detect->add_option("--uncertainty", detect_args.uncertainty);
  detect->add_option("--model", detect_args.model);
  detect->add_option("--data", detect_args.data);
  detect->add_option("--reference", detect_args.reference);
  detect->add_option("--k", detect_args.k)->capture_default_str();
  detect->add_option("--schedule", detect_args.schedule)->capture_default_str();
  detect->add_option("--out", detect_args.out)->required();

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate",
                                          "detection metrics at a target FPR");
  evaluate->add_option("--scores", eval_args.scores)->required();
  evaluate->add_option("--data", eval_args.data)->required();
  evaluate->add_option("--detector-name", eval_args.detector_name);
  evaluate->add_option("--fpr", eval_args.fpr_target)->capture_default_str();
  evaluate->add_option("--model", eval_args.model,
                       "adds boundary-gap diagnostics to the report");
  evaluate->add_option("--out", eval_args.out)->required();

  MapArgs map_args;
  CLI::App* map = app.add_subcommand("map", "export the MU-DU map as CSV");
  map->add_option("--uncertainty", map_args.uncertainty)->required();
  map->add_option("--data", map_args.data)->required();
  map->add_option("--out", map_args.out)->required();

  AdaSelectArgs ada_args;
  CLI::App* ada = app.add_subcommand("ada-select",
                                     "pick an augmentation quadrant");
  ada->add_option("--uncertainty", ada_args.uncertainty)->required();
  ada->add_option("--quadrant", ada_args.quadrant, "HDHM, HDLM, LDHM, LDLM")
      ->capture_default_str();
  ada->add_option("--out", ada_args.out)->required();

  AssembleEvalArgs assemble_args;
  CLI::App* assemble = app.add_subcommand(
      "assemble-eval", "build a balanced natural/adversarial eval set");
  assemble->add_option("--natural", assemble_args.natural)->required();
  assemble->add_option("--adversarial", assemble_args.adversarial)->required();
  assemble->add_flag("--allow-unequal", assemble_args.allow_unequal);
  assemble->add_option("--out", assemble_args.out)->required();

  try {
    app.parse(argc, argv);

    gen_args.seed = seed;
    train_args.seed = seed;
    attack_args.seed = seed;
    attack_args.threads = threads;
    unc_args.seed = seed;
    unc_args.threads = threads;
    detect_args.seed = seed;
    assemble_args.seed = seed;

    if (gen->parsed()) run_gen_corpus(gen_args);
    if (train->parsed()) run_train(train_args);
    if (attack->parsed()) run_attack(attack_args);
    if (unc->parsed()) run_uncertainty(unc_args);
    if (calib->parsed()) run_calibrate(calib_args);
    if (detect->parsed()) run_detect(detect_args);
    if (evaluate->parsed()) run_evaluate(eval_args);
    if (map->parsed()) run_map(map_args);
    if (ada->parsed()) run_ada_select(ada_args);
    if (assemble->parsed()) run_assemble_eval(assemble_args);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  } catch (const Error& e) {
    report_error(advdet::error_code_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
}
