#include "advdet/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "advdet/error.hpp"

namespace advdet {

EmpiricalDistribution fit_empirical(std::vector<double> stats) {
  if (stats.size() < kMinCalibrationSize) {
    throw Error(ErrorCode::kTooFew,
                "empirical distribution needs at least " +
                    std::to_string(kMinCalibrationSize) + " values, got " +
                    std::to_string(stats.size()));
  }
  for (double v : stats) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite,
                  "non-finite value in calibration statistics");
    }
  }
  std::sort(stats.begin(), stats.end());
  return EmpiricalDistribution{std::move(stats)};
}

double p_value(const EmpiricalDistribution& dist, double stat) {
  if (!std::isfinite(stat)) {
    throw Error(ErrorCode::kNonFinite, "non-finite test statistic");
  }
  const auto& s = dist.sorted_stats;
  const std::size_t at_least =
      static_cast<std::size_t>(s.end() -
                               std::lower_bound(s.begin(), s.end(), stat));
  return static_cast<double>(1 + at_least) / static_cast<double>(1 + s.size());
}

double chi2_4_survival(double x) {
  if (x < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "chi2 statistic must be >= 0");
  }
  return std::exp(-0.5 * x) * (1.0 + 0.5 * x);
}

AddmuScore fisher_aggregate(const PValuePair& pair) {
  if (!(pair.q_m > 0.0) || pair.q_m > 1.0 || !(pair.q_d > 0.0) ||
      pair.q_d > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "p-values must lie in (0,1]");
  }
  AddmuScore score;
  score.log_q_agg = std::log(pair.q_m) + std::log(pair.q_d);
  score.chi2_stat = -2.0 * score.log_q_agg;
  score.combined_p = chi2_4_survival(score.chi2_stat);
  score.adversariality = -score.log_q_agg;
  return score;
}

std::vector<AddmuDetection> addmu_detect(const VictimModel& model,
                                         const Dataset& aux,
                                         const Dataset& eval,
                                         const UncertaintyConfig& config,
                                         int threads) {
  for (const LabeledExample& example : aux.examples) {
    if (example.origin != Origin::kNatural) {
      throw Error(ErrorCode::kInvalidArgument,
                  "auxiliary set must contain only clean data");
    }
  }

  auto aux_scores = score_uncertainties(model, aux, config, threads);
  std::vector<double> mu_stats, du_stats;
  mu_stats.reserve(aux_scores.size());
  du_stats.reserve(aux_scores.size());
  for (const auto& [id, scores] : aux_scores) {
    mu_stats.push_back(scores.mu);
    du_stats.push_back(scores.du);
  }
  EmpiricalDistribution t_mu = fit_empirical(std::move(mu_stats));
  EmpiricalDistribution t_du = fit_empirical(std::move(du_stats));

  auto eval_scores = score_uncertainties(model, eval, config, threads);
  std::vector<AddmuDetection> detections;
  detections.reserve(eval_scores.size());
  for (const auto& [id, scores] : eval_scores) {
    AddmuDetection detection;
    detection.id = id;
    detection.p_values.q_m = p_value(t_mu, scores.mu);
    detection.p_values.q_d = p_value(t_du, scores.du);
    detection.score = fisher_aggregate(detection.p_values);
    detections.push_back(std::move(detection));
  }
  return detections;
}

}  // namespace advdet
