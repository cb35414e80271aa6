#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "advdet/corpus.hpp"

namespace advdet {

// Softmax output over the classes; entries sum to 1.
using ProbVector = Eigen::VectorXd;
// Penultimate (post-ReLU, dropout-off) activations.
using FeatureVector = Eigen::VectorXd;

struct ModelConfig {
  int feature_dim = 4096;  // hashed n-gram space; index 0 reserved for masks
  int hidden_dim = 128;
  int num_classes = 0;
  double train_dropout_rate = 0.3;
  double learning_rate = 0.1;
  int epochs = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;  // throws kInvalidArgument
};

// Hashed unigram+bigram counts, L2-normalized. Entries are sorted by index.
struct SparseFeatures {
  std::vector<std::pair<std::int32_t, double>> entries;
};

// Two dense layers: feature -> hidden (ReLU, dropout during training/MCD)
// -> classes (softmax).
struct VictimModel {
  ModelConfig config;
  Eigen::MatrixXd w1;  // hidden_dim x feature_dim
  Eigen::VectorXd b1;  // hidden_dim
  Eigen::MatrixXd w2;  // num_classes x hidden_dim
  Eigen::VectorXd b2;  // num_classes
};

// Max-subtracted softmax; invariant to adding a constant to all logits.
ProbVector softmax(const Eigen::VectorXd& logits);

int argmax(const Eigen::VectorXd& values);

// Unigrams and bigrams hash into [1, feature_dim); masked tokens count at
// index 0 and bigrams touching a masked position are dropped.
SparseFeatures featurize(const TokenSequence& sequence, int feature_dim);

// Seeded initialization; train(config, data) with epochs == 0 returns exactly
// this model.
VictimModel init_model(const ModelConfig& config);

// Mini-batch SGD on cross-entropy with inverted dropout on the hidden layer.
// Deterministic given config.seed. Throws kNumeric if the loss goes
// non-finite.
VictimModel train(const ModelConfig& config, const Dataset& train_set);

// Deterministic inference, dropout disabled.
ProbVector predict(const VictimModel& model, const TokenSequence& sequence);

// One stochastic forward pass: hidden units zeroed independently with
// probability p_m and survivors scaled by 1/(1-p_m), so p_m == 0 reproduces
// predict() exactly. Deterministic given pass_seed.
ProbVector predict_mcd(const VictimModel& model, const TokenSequence& sequence,
                       double p_m, std::uint64_t pass_seed);

FeatureVector features(const VictimModel& model, const TokenSequence& sequence);

double accuracy(const VictimModel& model, const Dataset& dataset);

// Checkpoint: magic "ADVDET01", one JSON header line, then the four weight
// blocks as little-endian float64 in declared order (w1, b1, w2, b2).
// `meta_json`, when non-empty, must be a serialized JSON object and is
// embedded in the header as run provenance.
void save_checkpoint(const VictimModel& model, const std::string& path,
                     const std::string& meta_json = "");
VictimModel load_checkpoint(const std::string& path);

}  // namespace advdet
