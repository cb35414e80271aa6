#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advdet/corpus.hpp"
#include "advdet/victim.hpp"

namespace advdet {

struct MaskScheduleEntry {
  double rate = 0.1;  // per-token masking probability
  int count = 25;     // neighbors drawn at this rate
};

struct NeighborAugment {
  int count = 10;
  double mask_rate = 0.1;
};

struct UncertaintyConfig {
  int n_m = 10;      // MC-dropout passes
  double p_m = 0.2;  // inference dropout rate
  int n_d = 100;     // total masked neighbors
  std::vector<MaskScheduleEntry> p_d_schedule = {
      {0.1, 25}, {0.2, 25}, {0.3, 25}, {0.4, 25}};
  // Off by default: averages the MU statistic over masked neighbors.
  std::optional<NeighborAugment> mu_neighbor_augment;
  std::uint64_t seed = 0;

  void validate() const;  // schedule counts must sum to n_d, rates in (0,1)
};

struct UncertaintyScores {
  double mu = 0.0;  // >= 0
  double du = 0.0;  // in [0, 1]
};

// Mean over classes of the population variance of the pass outputs:
// (1/C) sum_i (1/N) sum_j (p_ij - mean_i)^2.
double class_variance_mean(const std::vector<ProbVector>& passes);

// Mean shortfall of the original class probability: mean(1 - p_y).
double mean_shortfall(std::span<const double> p_y_values);

// Softmax variance under MC dropout (n_m passes at rate p_m, pass seeds
// derived from config.seed). Requires n_m >= 2.
double model_uncertainty(const VictimModel& model, const TokenSequence& sequence,
                         const UncertaintyConfig& config);

// For each (rate, count) schedule entry emits `count` variants with every
// token independently masked at `rate`. Zero-mask draws are kept as-is.
std::vector<TokenSequence> mask_neighbors(
    const TokenSequence& sequence, const std::vector<MaskScheduleEntry>& schedule,
    std::uint64_t seed);

// Mean of (1 - p_y) over the masked neighbors, where y is the prediction on
// the unmasked input; dropout-off inference throughout.
double data_uncertainty(const VictimModel& model, const TokenSequence& sequence,
                        const UncertaintyConfig& config);

// Both estimators for every example; per-example seeds are keyed by uid so
// the result is independent of dataset order and thread count.
std::vector<std::pair<std::string, UncertaintyScores>> score_uncertainties(
    const VictimModel& model, const Dataset& dataset,
    const UncertaintyConfig& config, int threads = 1);

}  // namespace advdet
