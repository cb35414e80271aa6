#include "advdet/uncertainty.hpp"

#include <cmath>
#include <thread>

#include "advdet/error.hpp"
#include "advdet/rng.hpp"

namespace advdet {

void UncertaintyConfig::validate() const {
  if (n_m < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "n_m must be >= 2 for a variance estimate");
  }
  if (p_m < 0.0 || p_m >= 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "p_m must be in [0,1)");
  }
  if (p_d_schedule.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "empty mask-rate schedule");
  }
  int total = 0;
  for (const MaskScheduleEntry& entry : p_d_schedule) {
    if (!(entry.rate > 0.0) || entry.rate >= 1.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "schedule mask rates must be in (0,1)");
    }
    if (entry.count < 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "schedule counts must be positive");
    }
    total += entry.count;
  }
  if (total != n_d) {
    throw Error(ErrorCode::kInvalidArgument,
                "schedule counts must sum to n_d");
  }
  if (mu_neighbor_augment) {
    if (mu_neighbor_augment->count < 1 || mu_neighbor_augment->mask_rate <= 0.0 ||
        mu_neighbor_augment->mask_rate >= 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "bad mu_neighbor_augment");
    }
  }
}

double class_variance_mean(const std::vector<ProbVector>& passes) {
  if (passes.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "variance needs at least two passes");
  }
  const int num_classes = static_cast<int>(passes.front().size());
  const double inv_n = 1.0 / static_cast<double>(passes.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(num_classes);
  for (const ProbVector& p : passes) mean += p;
  mean *= inv_n;
  double acc = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    // Identical pass outputs have zero variance by definition; skipping the
    // arithmetic keeps the p_m = 0 identity exact.
    bool constant = true;
    for (const ProbVector& p : passes) {
      if (p(c) != passes.front()(c)) {
        constant = false;
        break;
      }
    }
    if (constant) continue;
    double var = 0.0;
    for (const ProbVector& p : passes) {
      const double d = p(c) - mean(c);
      var += d * d;
    }
    acc += var * inv_n;  // population variance, 1/N
  }
  return acc / static_cast<double>(num_classes);
}

double mean_shortfall(std::span<const double> p_y_values) {
  if (p_y_values.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no neighbor probabilities");
  }
  double acc = 0.0;
  for (double p : p_y_values) acc += 1.0 - p;
  return acc / static_cast<double>(p_y_values.size());
}

namespace {

double mu_single(const VictimModel& model, const TokenSequence& sequence,
                 const UncertaintyConfig& config, std::uint64_t stream_seed) {
  std::vector<ProbVector> passes;
  passes.reserve(static_cast<std::size_t>(config.n_m));
  for (int j = 0; j < config.n_m; ++j) {
    passes.push_back(predict_mcd(model, sequence, config.p_m,
                                 derive_seed(stream_seed, "pass", j)));
  }
  return class_variance_mean(passes);
}

}  // namespace

double model_uncertainty(const VictimModel& model,
                         const TokenSequence& sequence,
                         const UncertaintyConfig& config) {
  if (config.n_m < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "n_m must be >= 2 for a variance estimate");
  }
  if (!config.mu_neighbor_augment) {
    return mu_single(model, sequence, config, derive_seed(config.seed, "mu"));
  }
  const NeighborAugment& aug = *config.mu_neighbor_augment;
  std::vector<TokenSequence> neighbors =
      mask_neighbors(sequence, {{aug.mask_rate, aug.count}},
                     derive_seed(config.seed, "mu-neighbors"));
  double acc = 0.0;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    acc += mu_single(model, neighbors[i], config,
                     derive_seed(config.seed, "mu-aug", i));
  }
  return acc / static_cast<double>(neighbors.size());
}

std::vector<TokenSequence> mask_neighbors(
    const TokenSequence& sequence,
    const std::vector<MaskScheduleEntry>& schedule, std::uint64_t seed) {
  if (sequence.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot mask an empty sequence");
  }
  std::vector<TokenSequence> variants;
  std::size_t variant_index = 0;
  for (const MaskScheduleEntry& entry : schedule) {
    if (entry.rate < 0.0 || entry.rate >= 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "mask rate must be in [0,1)");
    }
    for (int k = 0; k < entry.count; ++k, ++variant_index) {
      Rng rng(derive_seed(seed, "variant", variant_index));
      TokenSequence variant = sequence;
      for (std::size_t i = 0; i < variant.size(); ++i) {
        if (rng.bernoulli(entry.rate)) variant.mask_flags[i] = true;
      }
      variants.push_back(std::move(variant));
    }
  }
  return variants;
}

double data_uncertainty(const VictimModel& model, const TokenSequence& sequence,
                        const UncertaintyConfig& config) {
  const int y = argmax(predict(model, sequence));
  std::vector<TokenSequence> neighbors = mask_neighbors(
      sequence, config.p_d_schedule, derive_seed(config.seed, "du"));
  std::vector<double> p_y;
  p_y.reserve(neighbors.size());
  for (const TokenSequence& neighbor : neighbors) {
    p_y.push_back(predict(model, neighbor)(y));
  }
  return mean_shortfall(p_y);
}

std::vector<std::pair<std::string, UncertaintyScores>> score_uncertainties(
    const VictimModel& model, const Dataset& dataset,
    const UncertaintyConfig& config, int threads) {
  config.validate();
  const std::size_t n = dataset.examples.size();
  std::vector<std::pair<std::string, UncertaintyScores>> out(n);
  if (n == 0) return out;

  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const LabeledExample& example = dataset.examples[i];
      UncertaintyConfig per_example = config;
      per_example.seed = derive_seed(config.seed, example.uid());
      try {
        UncertaintyScores scores;
        scores.mu = model_uncertainty(model, example.sequence, per_example);
        scores.du = data_uncertainty(model, example.sequence, per_example);
        out[i] = {example.uid(), scores};
      } catch (const Error& e) {
        throw Error(e.code(),
                    "example " + example.uid() + ": " + e.what());
      }
    }
  };

  if (threads <= 1 || n == 1) {
    score_range(0, n);
    return out;
  }
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        score_range(w * chunk, std::min(n, (w + 1) * chunk));
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  return out;
}

}  // namespace advdet
