#pragma once

#include <string>
#include <vector>

#include "advdet/corpus.hpp"
#include "advdet/uncertainty.hpp"
#include "advdet/victim.hpp"

namespace advdet {

// Minimum auxiliary-set size for an empirical null distribution.
inline constexpr std::size_t kMinCalibrationSize = 30;

struct EmpiricalDistribution {
  std::vector<double> sorted_stats;  // ascending

  std::size_t size() const { return sorted_stats.size(); }
};

struct PValuePair {
  double q_m = 1.0;
  double q_d = 1.0;
};

struct AddmuScore {
  double log_q_agg = 0.0;      // ln q_m + ln q_d, <= 0
  double chi2_stat = 0.0;      // -2 * log_q_agg
  double combined_p = 1.0;     // chi^2_4 survival of chi2_stat
  double adversariality = 0.0; // -log_q_agg; higher = more adversarial
};

struct AddmuDetection {
  std::string id;
  PValuePair p_values;
  AddmuScore score;
};

// Sorted copy of the auxiliary statistics. Requires >= kMinCalibrationSize
// finite values.
EmpiricalDistribution fit_empirical(std::vector<double> stats);

// Smoothed upper-tail empirical p-value: (1 + #{t >= stat}) / (1 + n).
// Ties count toward the tail; never returns 0.
double p_value(const EmpiricalDistribution& dist, double stat);

// Closed-form chi^2 survival with 4 degrees of freedom:
// S(x) = exp(-x/2) * (1 + x/2).
double chi2_4_survival(double x);

// Fisher's combination of the two p-values.
AddmuScore fisher_aggregate(const PValuePair& pair);

// Full detector: fits the MU/DU null distributions on the (clean) auxiliary
// set, then scores every eval example. Output order matches eval order.
std::vector<AddmuDetection> addmu_detect(const VictimModel& model,
                                         const Dataset& aux,
                                         const Dataset& eval,
                                         const UncertaintyConfig& config,
                                         int threads = 1);

}  // namespace advdet
