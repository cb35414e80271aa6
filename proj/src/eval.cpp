#include "advdet/eval.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "advdet/error.hpp"

namespace advdet {

namespace {

// Shortest round-trip decimal form, locale-independent.
std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

double lower_median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return values[(values.size() - 1) / 2];
}

}  // namespace

const char* quadrant_name(Quadrant quadrant) {
  switch (quadrant) {
    case Quadrant::kHDHM: return "HDHM";
    case Quadrant::kHDLM: return "HDLM";
    case Quadrant::kLDHM: return "LDHM";
    case Quadrant::kLDLM: return "LDLM";
  }
  return "LDLM";
}

Quadrant quadrant_from_name(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (upper == "HDHM") return Quadrant::kHDHM;
  if (upper == "HDLM") return Quadrant::kHDLM;
  if (upper == "LDHM") return Quadrant::kLDHM;
  if (upper == "LDLM") return Quadrant::kLDLM;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown quadrant: " + std::string(name));
}

double choose_threshold(const std::vector<ScoredExample>& scored,
                        double fpr_target) {
  std::vector<double> natural;
  std::vector<double> candidates;
  candidates.reserve(scored.size() + 1);
  for (const ScoredExample& example : scored) {
    if (!std::isfinite(example.adversariality)) {
      throw Error(ErrorCode::kNonFinite, "non-finite score for " + example.id);
    }
    candidates.push_back(example.adversariality);
    if (!example.is_adversarial) natural.push_back(example.adversariality);
  }
  if (natural.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "threshold selection needs at least one natural example");
  }
  std::sort(natural.begin(), natural.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  candidates.push_back(std::numeric_limits<double>::infinity());

  const double n_nat = static_cast<double>(natural.size());
  for (double t : candidates) {
    const std::size_t false_positives =
        natural.end() - std::lower_bound(natural.begin(), natural.end(), t);
    if (static_cast<double>(false_positives) / n_nat <= fpr_target) {
      return t;
    }
  }
  return std::numeric_limits<double>::infinity();  // unreachable
}

std::pair<double, double> compute_metrics(
    const std::vector<ScoredExample>& scored, double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const ScoredExample& example : scored) {
    const bool flagged = example.adversariality >= threshold;
    if (example.is_adversarial && flagged) ++tp;
    if (example.is_adversarial && !flagged) ++fn;
    if (!example.is_adversarial && flagged) ++fp;
  }
  if (tp == 0) return {0.0, 0.0};
  const double tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double precision =
      static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double f1 = 2.0 * precision * tpr / (precision + tpr);
  return {tpr, f1};
}

double auc(const std::vector<ScoredExample>& scored) {
  std::vector<double> adv, nat;
  for (const ScoredExample& example : scored) {
    (example.is_adversarial ? adv : nat).push_back(example.adversariality);
  }
  if (adv.empty() || nat.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "AUC needs both adversarial and natural examples");
  }
  // Midrank formulation; ties contribute exactly 0.5 per pair.
  std::vector<std::pair<double, bool>> all;  // (score, is_adversarial)
  all.reserve(scored.size());
  for (double s : adv) all.emplace_back(s, true);
  for (double s : nat) all.emplace_back(s, false);
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double adv_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double midrank =
        0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second) adv_rank_sum += midrank;
    }
    i = j;
  }
  const double n_a = static_cast<double>(adv.size());
  const double n_n = static_cast<double>(nat.size());
  return (adv_rank_sum - n_a * (n_a + 1.0) / 2.0) / (n_a * n_n);
}

DetectionReport evaluate_detector(const std::string& detector,
                                  const std::vector<ScoredExample>& scored,
                                  double fpr_target) {
  DetectionReport report;
  report.detector = detector;
  report.fpr_target = fpr_target;
  report.threshold = choose_threshold(scored, fpr_target);
  std::tie(report.tpr, report.f1) = compute_metrics(scored, report.threshold);
  report.auc = auc(scored);
  for (const ScoredExample& example : scored) {
    (example.is_adversarial ? report.n_adv : report.n_nat) += 1;
  }
  return report;
}

std::string mu_du_map(
    const std::vector<std::tuple<std::string, UncertaintyScores, Origin>>& rows) {
  std::string csv = "id,mu,du,origin\n";
  for (const auto& [id, scores, origin] : rows) {
    csv += id;
    csv += ',';
    csv += format_double(scores.mu);
    csv += ',';
    csv += format_double(scores.du);
    csv += ',';
    csv += origin_name(origin);
    csv += '\n';
  }
  return csv;
}

std::vector<QuadrantAssignment> assign_quadrants(
    const std::vector<std::pair<std::string, UncertaintyScores>>& scores) {
  if (scores.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "quadrant split needs at least two examples");
  }
  std::vector<double> du_values, mu_values;
  du_values.reserve(scores.size());
  mu_values.reserve(scores.size());
  for (const auto& [id, s] : scores) {
    du_values.push_back(s.du);
    mu_values.push_back(s.mu);
  }
  const double du_median = lower_median(std::move(du_values));
  const double mu_median = lower_median(std::move(mu_values));

  std::vector<QuadrantAssignment> assignments;
  assignments.reserve(scores.size());
  for (const auto& [id, s] : scores) {
    const bool high_du = s.du > du_median;  // ties go to the low side
    const bool high_mu = s.mu > mu_median;
    Quadrant quadrant = high_du ? (high_mu ? Quadrant::kHDHM : Quadrant::kHDLM)
                                : (high_mu ? Quadrant::kLDHM : Quadrant::kLDLM);
    assignments.push_back({quadrant, id});
  }
  return assignments;
}

std::vector<std::string> ada_select(
    const std::vector<std::pair<std::string, UncertaintyScores>>& scores,
    Quadrant quadrant) {
  std::vector<std::string> ids;
  for (const QuadrantAssignment& assignment : assign_quadrants(scores)) {
    if (assignment.quadrant == quadrant) ids.push_back(assignment.id);
  }
  return ids;
}

VictimModel retrain_with_augmentation(const Dataset& base_train,
                                      const std::vector<std::string>& augment_ids,
                                      const Dataset& adv_corpus,
                                      const ModelConfig& config) {
  std::unordered_map<std::string, std::size_t> by_uid;
  for (std::size_t i = 0; i < adv_corpus.examples.size(); ++i) {
    by_uid[adv_corpus.examples[i].uid()] = i;
  }
  std::unordered_set<std::string> seen;
  Dataset augmented = base_train;
  for (const std::string& id : augment_ids) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate augment id: " + id);
    }
    auto it = by_uid.find(id);
    if (it == by_uid.end()) {
      throw Error(ErrorCode::kInvalidArgument, "unresolved augment id: " + id);
    }
    augmented.examples.push_back(adv_corpus.examples[it->second]);
  }
  return train(config, augmented);
}

}  // namespace advdet
