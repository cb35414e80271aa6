#pragma once

#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "advdet/corpus.hpp"
#include "advdet/uncertainty.hpp"
#include "advdet/victim.hpp"

namespace advdet {

struct ScoredExample {
  std::string id;
  double adversariality = 0.0;
  bool is_adversarial = false;  // ground truth
};

struct DetectionReport {
  std::string detector;
  double threshold = 0.0;
  double fpr_target = 0.1;
  double tpr = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  int n_adv = 0;
  int n_nat = 0;
};

enum class Quadrant { kHDHM, kHDLM, kLDHM, kLDLM };

const char* quadrant_name(Quadrant quadrant);
Quadrant quadrant_from_name(std::string_view name);

struct QuadrantAssignment {
  Quadrant quadrant = Quadrant::kLDLM;
  std::string id;
};

// Smallest observed score (or +inf) whose false-positive rate on the natural
// examples stays within fpr_target; the rule is score >= threshold =>
// adversarial. Requires at least one natural example.
double choose_threshold(const std::vector<ScoredExample>& scored,
                        double fpr_target);

// (TPR, F1) at the given threshold; F1 is 0 when there are no true positives.
std::pair<double, double> compute_metrics(
    const std::vector<ScoredExample>& scored, double threshold);

// Mann-Whitney AUC: fraction of (adversarial, natural) pairs ranked
// correctly, ties counting 0.5. Requires both classes present.
double auc(const std::vector<ScoredExample>& scored);

DetectionReport evaluate_detector(const std::string& detector,
                                  const std::vector<ScoredExample>& scored,
                                  double fpr_target);

// CSV text with header `id,mu,du,origin`, one row per input.
std::string mu_du_map(
    const std::vector<std::tuple<std::string, UncertaintyScores, Origin>>& rows);

// Median splits on DU and MU (lower median, ties to the low side).
std::vector<QuadrantAssignment> assign_quadrants(
    const std::vector<std::pair<std::string, UncertaintyScores>>& scores);

// Ids landing in the requested quadrant, in input order. Requires at least
// two examples.
std::vector<std::string> ada_select(
    const std::vector<std::pair<std::string, UncertaintyScores>>& scores,
    Quadrant quadrant);

// Trains on base_train plus the adversarial examples named by augment_ids
// (resolved against adv_corpus uids). An empty id list reproduces plain
// train() exactly.
VictimModel retrain_with_augmentation(const Dataset& base_train,
                                      const std::vector<std::string>& augment_ids,
                                      const Dataset& adv_corpus,
                                      const ModelConfig& config);

}  // namespace advdet
