#ifndef CTSNM_VALIDATE_HPP
#define CTSNM_VALIDATE_HPP

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ctsnm/conditional_model.hpp"
#include "ctsnm/shift_model.hpp"
#include "ctsnm/simulate.hpp"

namespace ctsnm {

struct StratumTestReport {
  std::string stratum_id;
  std::size_t n_a = 0, n_b = 0;
  double ks_stat = 0.0;
  double critical_value = 0.0;
  bool pass = false;
};

using StratumSamples = std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>;

double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b);
double ks_two_sample_critical(double alpha, std::size_t n_a, std::size_t n_b);
double ks_one_sample_critical(double alpha, std::size_t n);

// Two-sample KS per stratum with the asymptotic critical value
// c(alpha) * sqrt((n_a + n_b) / (n_a n_b)). Strata with fewer than min_count
// observations on either side are skipped.
std::vector<StratumTestReport> conditional_ks(const StratumSamples &strata, double alpha,
                                              std::size_t min_count = 2);

double pass_rate(const std::vector<StratumTestReport> &reports);

struct PitReport {
  std::size_t n = 0;
  double ks_stat = 0.0;
  double critical_value = 0.0;
  bool pass = false;
};

// One-sample KS of probability-integral-transform values against Uniform[0,1].
PitReport pit_uniformity(const std::vector<double> &values, double alpha);

// Max absolute residual of the quantile-derivative identity
//   d/dh F_h(y) + F_h'(y) * (d/dh F_h^{-1})(F_h(y)) = 0
// over the (y, t) points, with central finite differences of the given step.
// Throws regularity_error when the density falls below eps at a point.
double quantile_identity_check(const ConditionalModel &family,
                               const std::vector<std::pair<double, double>> &points,
                               double step = 1e-5, double eps = 1e-12);

struct BudgetViolation {
  std::string what;  // density_floor | density_cap | h_derivative_cap | lipschitz_density | lipschitz_h
  double y = 0.0, t = 0.0;
  double value = 0.0, bound = 0.0;
};

// Numeric audit of the regularity constants over a (y, t) lattice: density in
// [eps, c1], |h-derivative| <= c2, difference quotients within l1 / l2.
std::vector<BudgetViolation> regularity_audit(const ConditionalModel &family,
                                              const RegularityBudget &budget,
                                              const std::vector<double> &ys,
                                              const std::vector<double> &ts);

// Stratification for the conditional mimicry test: strata are the cross of
// decision-time index, treatment status at t, and the level-n discretized
// path prefix. Survival datasets keep only subjects alive at t. value_a and
// value_b map (subject index, t) to the two samples (e.g. the solved X and
// the simulated counterfactual).
struct MimicryStrataSpec {
  std::vector<double> times;
  int level = 2;
  std::size_t status_coord = 1;
  int alive_coord = 0;  // -1: no filter
};

StratumSamples mimicry_strata(const Dataset &dataset, const MimicryStrataSpec &spec,
                              const std::function<double(std::size_t, double)> &value_a,
                              const std::function<double(std::size_t, double)> &value_b);

std::string stratum_reports_csv(const std::vector<StratumTestReport> &reports);
std::string stratum_summary_json(const std::vector<StratumTestReport> &reports, double alpha);

}  // namespace ctsnm

#endif
