#ifndef CTSNM_INFERENCE_HPP
#define CTSNM_INFERENCE_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ctsnm/mimic_ode.hpp"
#include "ctsnm/shift_model.hpp"
#include "ctsnm/simulate.hpp"

namespace ctsnm {

// Configuration of the treatment-change score. The nuisance model is a
// pooled logistic regression for P(treatment change at d | observed past)
// with one intercept per decision time plus the past-summary features; the
// features must not involve the outcome or the mimicking process.
struct ScoreSpec {
  std::vector<double> decision_times;
  std::size_t treat_coord = 1;  // coordinate whose 0 -> nonzero change is the event
  int alive_coord = 0;          // at-risk requires alive; -1 disables the filter

  // past-summary features at (path, d), evaluated from the left limit;
  // default: the value of every coordinate other than treat/alive just
  // before d
  std::function<std::vector<double>(const SamplePath &, double)> past_features;

  std::function<double(double)> h_transform;  // applied to X (or Y); default identity
  bool center_h = true;                       // center per decision time
  std::size_t threads = 1;

  static ScoreSpec for_scenario(const Scenario &scenario);
};

struct ScoreResult {
  double score = 0.0;
  double variance = 0.0;
  double z = 0.0;
  std::size_t rows = 0;      // pooled (subject, decision time) terms
  std::size_t changes = 0;   // observed treatment changes among them
  std::vector<std::pair<double, double>> per_time;  // (decision time, score share)
};

// S(psi) = sum over at-risk (i, d) of (dA - p_hat) h(X_psi,i(d)) with a
// sandwich variance that accounts for the fitted nuisance model. X is solved
// per subject by the backward integrator.
ScoreResult score_statistic(const Dataset &dataset, const ShiftModel &model,
                            const ScoreSpec &spec, const SolverOptions &solver = {});

struct NullTestResult {
  double z = 0.0;
  double p_value = 1.0;
  ScoreResult detail;
};

// Model-free null test: the score computed at X identically Y. Takes no
// shift model by design.
NullTestResult test_no_effect(const Dataset &dataset, const ScoreSpec &spec);

struct SearchOptions {
  double lo = -2.0;
  double hi = 2.0;
  std::size_t grid_points = 41;
  double z_threshold = 1.96;
};

struct EstimationResult {
  std::vector<double> psi_hat;
  bool identified = false;
  double ci_lo = 0.0, ci_hi = 0.0;
  bool ci_clipped_lo = false, ci_clipped_hi = false;
  std::vector<std::pair<double, double>> score_curve;  // (psi value, z)
  std::string message;

  std::string to_json_string() const;
  std::string score_curve_csv() const;
};

// Grid scan of the standardized score over one psi component (the others
// stay at the template's values), root refinement by bisection, and a
// test-inversion confidence interval {psi : |z(psi)| < z_threshold}.
EstimationResult estimate_psi(const Dataset &dataset, const ShiftModel &model_template,
                              const ScoreSpec &spec, const SearchOptions &search,
                              std::size_t psi_component = 0,
                              const SolverOptions &solver = {});

}  // namespace ctsnm

#endif
