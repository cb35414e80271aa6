#include "advdet/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advdet/attack.hpp"
#include "advdet/error.hpp"
#include "advdet/rng.hpp"

namespace advdet {

ReferenceIndex build_reference_index(const VictimModel& model,
                                     const Dataset& reference) {
  ReferenceIndex index;
  index.per_class.resize(static_cast<std::size_t>(reference.num_classes));
  for (const LabeledExample& example : reference.examples) {
    index.per_class[static_cast<std::size_t>(example.gold_label)].push_back(
        features(model, example.sequence));
  }
  return index;
}

double msp_score(const ProbVector& prob) {
  return 1.0 - prob.maxCoeff();
}

double dist_score(const ReferenceIndex& index, const FeatureVector& feat,
                  int predicted_class, const DistConfig& config) {
  if (config.k < 1) {
    throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  }
  if (predicted_class < 0 ||
      static_cast<std::size_t>(predicted_class) >= index.per_class.size()) {
    throw Error(ErrorCode::kInvalidArgument, "predicted class out of range");
  }

  std::vector<double> class_means(index.per_class.size());
  std::vector<double> dists;
  for (std::size_t c = 0; c < index.per_class.size(); ++c) {
    const auto& refs = index.per_class[c];
    if (refs.size() < static_cast<std::size_t>(config.k)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "class " + std::to_string(c) + " has fewer than k references");
    }
    dists.clear();
    dists.reserve(refs.size());
    for (const FeatureVector& ref : refs) {
      dists.push_back((ref - feat).norm());
    }
    std::nth_element(dists.begin(), dists.begin() + (config.k - 1), dists.end());
    double acc = 0.0;
    for (int i = 0; i < config.k; ++i) acc += dists[static_cast<std::size_t>(i)];
    class_means[c] = acc / static_cast<double>(config.k);
  }

  double min_other = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < class_means.size(); ++c) {
    if (static_cast<int>(c) != predicted_class) {
      min_other = std::min(min_other, class_means[c]);
    }
  }
  if (!std::isfinite(min_other)) {
    throw Error(ErrorCode::kInvalidArgument,
                "dist score needs at least two classes");
  }
  return class_means[static_cast<std::size_t>(predicted_class)] - min_other;
}

double neighbor_augmented_score(
    const std::function<double(const TokenSequence&)>& base_scorer,
    const TokenSequence& sequence,
    const std::vector<MaskScheduleEntry>& schedule, std::uint64_t seed) {
  std::vector<TokenSequence> neighbors = mask_neighbors(sequence, schedule, seed);
  double acc = base_scorer(sequence);
  for (const TokenSequence& neighbor : neighbors) {
    acc += base_scorer(neighbor);
  }
  return acc / static_cast<double>(neighbors.size() + 1);
}

namespace {

std::optional<double> mean_gap(const VictimModel& model,
                               const std::vector<TokenSequence>& group) {
  if (group.empty()) return std::nullopt;
  double acc = 0.0;
  for (const TokenSequence& sequence : group) {
    acc += boundary_gap(predict(model, sequence));
  }
  return acc / static_cast<double>(group.size());
}

}  // namespace

BoundaryGapSummary boundary_gap_diagnostic(const VictimModel& model,
                                           const ExampleGroups& groups) {
  BoundaryGapSummary summary;
  summary.natural = mean_gap(model, groups.natural);
  summary.detected = mean_gap(model, groups.detected);
  summary.failed = mean_gap(model, groups.failed);
  summary.overall = mean_gap(model, groups.overall);
  return summary;
}

}  // namespace advdet
