#include "advdet/victim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "advdet/error.hpp"
#include "advdet/jsonl.hpp"
#include "advdet/rng.hpp"

namespace advdet {

namespace {

constexpr char kCheckpointMagic[9] = "ADVDET01";
constexpr char kBigramSep = '\x1f';  // never appears inside a token

Eigen::VectorXd hidden_preactivation(const VictimModel& model,
                                     const SparseFeatures& feats) {
  Eigen::VectorXd a = model.b1;
  for (const auto& [index, value] : feats.entries) {
    a.noalias() += value * model.w1.col(index);
  }
  return a;
}

ProbVector output_probs(const VictimModel& model, const Eigen::VectorXd& h) {
  return softmax(model.w2 * h + model.b2);
}

}  // namespace

void ModelConfig::validate() const {
  if (feature_dim < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "feature_dim must be >= 2 (index 0 is the mask slot)");
  }
  if (hidden_dim < 1 || num_classes < 1 || epochs < 0 || batch_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad model dimensions");
  }
  if (train_dropout_rate < 0.0 || train_dropout_rate >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "dropout rate must be in [0,1)");
  }
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "learning rate must be positive");
  }
}

ProbVector softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  Eigen::VectorXd exps = shifted.array().exp();
  return exps / exps.sum();
}

int argmax(const Eigen::VectorXd& values) {
  Eigen::Index index = 0;
  values.maxCoeff(&index);
  return static_cast<int>(index);
}

SparseFeatures featurize(const TokenSequence& sequence, int feature_dim) {
  if (sequence.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot featurize an empty sequence");
  }
  if (feature_dim < 2) {
    throw Error(ErrorCode::kInvalidArgument, "feature_dim must be >= 2");
  }
  const std::uint64_t buckets = static_cast<std::uint64_t>(feature_dim) - 1;
  auto bucket_of = [&](const std::string& key) {
    return static_cast<std::int32_t>(1 + fnv1a64(key) % buckets);
  };

  std::vector<std::pair<std::int32_t, double>> counts;
  const std::size_t n = sequence.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (sequence.mask_flags[i]) {
      counts.emplace_back(0, 1.0);
    } else {
      counts.emplace_back(bucket_of(sequence.tokens[i]), 1.0);
    }
    if (i + 1 < n && !sequence.mask_flags[i] && !sequence.mask_flags[i + 1]) {
      counts.emplace_back(
          bucket_of(sequence.tokens[i] + kBigramSep + sequence.tokens[i + 1]),
          1.0);
    }
  }

  std::sort(counts.begin(), counts.end());
  SparseFeatures feats;
  for (const auto& [index, value] : counts) {
    if (!feats.entries.empty() && feats.entries.back().first == index) {
      feats.entries.back().second += value;
    } else {
      feats.entries.emplace_back(index, value);
    }
  }
  double norm_sq = 0.0;
  for (const auto& [index, value] : feats.entries) norm_sq += value * value;
  const double inv_norm = 1.0 / std::sqrt(norm_sq);
  for (auto& [index, value] : feats.entries) value *= inv_norm;
  return feats;
}

VictimModel init_model(const ModelConfig& config) {
  config.validate();
  VictimModel model;
  model.config = config;
  Rng rng(derive_seed(config.seed, "init"));
  const double a1 = std::sqrt(6.0 / (config.feature_dim + config.hidden_dim));
  const double a2 = std::sqrt(6.0 / (config.hidden_dim + config.num_classes));
  model.w1.resize(config.hidden_dim, config.feature_dim);
  for (int i = 0; i < model.w1.rows(); ++i) {
    for (int j = 0; j < model.w1.cols(); ++j) {
      model.w1(i, j) = rng.uniform(-a1, a1);
    }
  }
  model.b1 = Eigen::VectorXd::Zero(config.hidden_dim);
  model.w2.resize(config.num_classes, config.hidden_dim);
  for (int i = 0; i < model.w2.rows(); ++i) {
    for (int j = 0; j < model.w2.cols(); ++j) {
      model.w2(i, j) = rng.uniform(-a2, a2);
    }
  }
  model.b2 = Eigen::VectorXd::Zero(config.num_classes);
  return model;
}

VictimModel train(const ModelConfig& config, const Dataset& train_set) {
  config.validate();
  if (train_set.split_tag != SplitTag::kTrain) {
    throw Error(ErrorCode::kInvalidArgument,
                "train() expects a dataset tagged as a training split");
  }
  if (config.num_classes != train_set.num_classes) {
    throw Error(ErrorCode::kInvalidArgument,
                "config num_classes does not match the dataset header");
  }
  if (train_set.examples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty training set");
  }

  const std::size_t n = train_set.examples.size();
  std::vector<SparseFeatures> feats(n);
  for (std::size_t i = 0; i < n; ++i) {
    feats[i] = featurize(train_set.examples[i].sequence, config.feature_dim);
  }

  VictimModel model = init_model(config);
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  Rng dropout_rng(derive_seed(config.seed, "dropout"));
  const double keep_scale = 1.0 / (1.0 - config.train_dropout_rate);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  Eigen::MatrixXd g_w2(config.num_classes, config.hidden_dim);
  Eigen::VectorXd g_b2(config.num_classes);
  Eigen::VectorXd g_b1(config.hidden_dim);
  std::vector<Eigen::VectorXd> batch_da1;
  std::vector<std::size_t> batch_idx;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(config.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(stop - start);

      g_w2.setZero();
      g_b2.setZero();
      g_b1.setZero();
      batch_da1.clear();
      batch_idx.clear();
      double batch_loss = 0.0;

      for (std::size_t pos = start; pos < stop; ++pos) {
        const std::size_t i = order[pos];
        const SparseFeatures& x = feats[i];
        const int y = train_set.examples[i].gold_label;

        Eigen::VectorXd a1 = hidden_preactivation(model, x);
        Eigen::VectorXd h = a1.cwiseMax(0.0);
        Eigen::VectorXd mask(config.hidden_dim);
        for (int k = 0; k < config.hidden_dim; ++k) {
          mask(k) = dropout_rng.bernoulli(config.train_dropout_rate)
                        ? 0.0
                        : keep_scale;
        }
        Eigen::VectorXd hd = h.cwiseProduct(mask);
        ProbVector p = output_probs(model, hd);
        batch_loss += -std::log(std::max(p(y), 1e-300));

        Eigen::VectorXd dz = p;
        dz(y) -= 1.0;
        g_w2.noalias() += dz * hd.transpose();
        g_b2 += dz;
        Eigen::VectorXd dhd = model.w2.transpose() * dz;
        Eigen::VectorXd da1 =
            dhd.cwiseProduct(mask)
                .cwiseProduct((a1.array() > 0.0).cast<double>().matrix());
        g_b1 += da1;
        batch_da1.push_back(std::move(da1));
        batch_idx.push_back(i);
      }

      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorCode::kNumeric,
                    "non-finite training loss; lower the learning rate");
      }

      const double step = config.learning_rate * inv_batch;
      model.w2.noalias() -= step * g_w2;
      model.b2 -= step * g_b2;
      model.b1 -= step * g_b1;
      for (std::size_t b = 0; b < batch_idx.size(); ++b) {
        for (const auto& [index, value] : feats[batch_idx[b]].entries) {
          model.w1.col(index).noalias() -= step * value * batch_da1[b];
        }
      }
    }
  }
  return model;
}

ProbVector predict(const VictimModel& model, const TokenSequence& sequence) {
  SparseFeatures x = featurize(sequence, model.config.feature_dim);
  Eigen::VectorXd h = hidden_preactivation(model, x).cwiseMax(0.0);
  return output_probs(model, h);
}

ProbVector predict_mcd(const VictimModel& model, const TokenSequence& sequence,
                       double p_m, std::uint64_t pass_seed) {
  if (p_m < 0.0 || p_m >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "p_m must be in [0,1)");
  }
  SparseFeatures x = featurize(sequence, model.config.feature_dim);
  Eigen::VectorXd h = hidden_preactivation(model, x).cwiseMax(0.0);
  Rng rng(pass_seed);
  const double keep_scale = 1.0 / (1.0 - p_m);
  for (int k = 0; k < h.size(); ++k) {
    h(k) = rng.bernoulli(p_m) ? 0.0 : h(k) * keep_scale;
  }
  return output_probs(model, h);
}

FeatureVector features(const VictimModel& model,
                       const TokenSequence& sequence) {
  SparseFeatures x = featurize(sequence, model.config.feature_dim);
  return hidden_preactivation(model, x).cwiseMax(0.0);
}

double accuracy(const VictimModel& model, const Dataset& dataset) {
  if (dataset.examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const LabeledExample& example : dataset.examples) {
    if (argmax(predict(model, example.sequence)) == example.gold_label) {
      ++correct;
    }
  }
  return static_cast<double>(correct) /
         static_cast<double>(dataset.examples.size());
}

namespace {

void write_f64_block(std::ofstream& out, const double* data, std::size_t count) {
  // Little-endian IEEE doubles; asserted at build time for this target.
  static_assert(std::endian::native == std::endian::little);
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void read_f64_block(std::ifstream& in, double* data, std::size_t count,
                    const std::string& path) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
    throw Error(ErrorCode::kCorrupt, path + ": truncated weight block");
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isfinite(data[i])) {
      throw Error(ErrorCode::kCorrupt, path + ": non-finite weight");
    }
  }
}

}  // namespace

void save_checkpoint(const VictimModel& model, const std::string& path,
                     const std::string& meta_json) {
  std::ofstream out = open_output(path);
  out.write(kCheckpointMagic, 8);
  nlohmann::json header{
      {"config",
       {{"feature_dim", model.config.feature_dim},
        {"hidden_dim", model.config.hidden_dim},
        {"num_classes", model.config.num_classes},
        {"train_dropout_rate", model.config.train_dropout_rate},
        {"learning_rate", model.config.learning_rate},
        {"epochs", model.config.epochs},
        {"batch_size", model.config.batch_size},
        {"seed", model.config.seed}}}};
  if (!meta_json.empty()) {
    nlohmann::json meta = nlohmann::json::parse(meta_json, nullptr, false);
    if (meta.is_discarded() || !meta.is_object()) {
      throw Error(ErrorCode::kInvalidArgument, "checkpoint meta must be JSON");
    }
    header["meta"] = std::move(meta);
  }
  out << header.dump() << '\n';
  // w1 is serialized in (feature_dim x hidden_dim) declared order.
  for (int j = 0; j < model.w1.cols(); ++j) {
    Eigen::VectorXd column = model.w1.col(j);
    write_f64_block(out, column.data(), static_cast<std::size_t>(column.size()));
  }
  write_f64_block(out, model.b1.data(), static_cast<std::size_t>(model.b1.size()));
  for (int i = 0; i < model.w2.rows(); ++i) {
    Eigen::VectorXd row = model.w2.row(i);
    write_f64_block(out, row.data(), static_cast<std::size_t>(row.size()));
  }
  write_f64_block(out, model.b2.data(), static_cast<std::size_t>(model.b2.size()));
}

VictimModel load_checkpoint(const std::string& path) {
  std::ifstream in = open_input(path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw Error(ErrorCode::kVersion, path + ": bad checkpoint magic");
  }
  std::string header_line;
  if (!std::getline(in, header_line)) {
    throw Error(ErrorCode::kCorrupt, path + ": missing checkpoint header");
  }
  nlohmann::json header = nlohmann::json::parse(header_line, nullptr, false);
  if (header.is_discarded() || !header.contains("config")) {
    throw Error(ErrorCode::kCorrupt, path + ": bad checkpoint header");
  }
  const nlohmann::json& cfg = header["config"];
  VictimModel model;
  try {
    model.config.feature_dim = cfg.at("feature_dim").get<int>();
    model.config.hidden_dim = cfg.at("hidden_dim").get<int>();
    model.config.num_classes = cfg.at("num_classes").get<int>();
    model.config.train_dropout_rate = cfg.at("train_dropout_rate").get<double>();
    model.config.learning_rate = cfg.at("learning_rate").get<double>();
    model.config.epochs = cfg.at("epochs").get<int>();
    model.config.batch_size = cfg.at("batch_size").get<int>();
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kCorrupt, path + ": incomplete checkpoint config");
  }
  model.config.validate();

  model.w1.resize(model.config.hidden_dim, model.config.feature_dim);
  Eigen::VectorXd column(model.config.hidden_dim);
  for (int j = 0; j < model.w1.cols(); ++j) {
    read_f64_block(in, column.data(), static_cast<std::size_t>(column.size()),
                   path);
    model.w1.col(j) = column;
  }
  model.b1.resize(model.config.hidden_dim);
  read_f64_block(in, model.b1.data(), static_cast<std::size_t>(model.b1.size()),
                 path);
  model.w2.resize(model.config.num_classes, model.config.hidden_dim);
  Eigen::VectorXd row(model.config.hidden_dim);
  for (int i = 0; i < model.w2.rows(); ++i) {
    read_f64_block(in, row.data(), static_cast<std::size_t>(row.size()), path);
    model.w2.row(i) = row;
  }
  model.b2.resize(model.config.num_classes);
  read_f64_block(in, model.b2.data(), static_cast<std::size_t>(model.b2.size()),
                 path);
  char extra;
  if (in.read(&extra, 1) && in.gcount() == 1) {
    throw Error(ErrorCode::kCorrupt, path + ": trailing bytes after weights");
  }
  return model;
}

}  // namespace advdet
