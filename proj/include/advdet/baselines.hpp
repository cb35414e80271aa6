#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "advdet/corpus.hpp"
#include "advdet/uncertainty.hpp"
#include "advdet/victim.hpp"

namespace advdet {

struct DistConfig {
  int k = 600;  // neighbors per class; Euclidean distance throughout
};

// Per-class penultimate feature vectors from a clean reference set.
struct ReferenceIndex {
  std::vector<std::vector<FeatureVector>> per_class;
};

ReferenceIndex build_reference_index(const VictimModel& model,
                                     const Dataset& reference);

// 1 - max(probs): higher means more adversarial, like every detector here.
double msp_score(const ProbVector& prob);

// Mean distance to the k nearest reference points of the predicted class,
// minus the smallest such mean among the other classes.
double dist_score(const ReferenceIndex& index, const FeatureVector& feat,
                  int predicted_class, const DistConfig& config);

// Mean of base_scorer over the masked neighbors plus the original input.
double neighbor_augmented_score(
    const std::function<double(const TokenSequence&)>& base_scorer,
    const TokenSequence& sequence,
    const std::vector<MaskScheduleEntry>& schedule, std::uint64_t seed);

struct ExampleGroups {
  std::vector<TokenSequence> natural;
  std::vector<TokenSequence> detected;  // adversarial, caught by a detector
  std::vector<TokenSequence> failed;    // adversarial, missed
  std::vector<TokenSequence> overall;   // all adversarial
};

struct BoundaryGapSummary {
  std::optional<double> natural;
  std::optional<double> detected;
  std::optional<double> failed;
  std::optional<double> overall;
};

// Mean boundary gap per group; empty groups report no value.
BoundaryGapSummary boundary_gap_diagnostic(const VictimModel& model,
                                           const ExampleGroups& groups);

}  // namespace advdet
