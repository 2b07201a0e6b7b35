#ifndef CTSNM_DISCRETE_MIMIC_HPP
#define CTSNM_DISCRETE_MIMIC_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ctsnm/conditional_model.hpp"
#include "ctsnm/sample_path.hpp"
#include "ctsnm/shift_model.hpp"

namespace ctsnm {

// Grid 0 = tau_0 < tau_1 < ... < tau_{K+1} = tau with one conditional family
// per interval [tau_k, tau_{k+1}]; interval_models[k] is the law of Y^(t)
// given the conditioning stratum at tau_k.
struct QuantileEngine {
  std::vector<double> grid_times;
  std::vector<std::shared_ptr<const ConditionalModel>> interval_models;
  OutcomeKind kind = OutcomeKind::Continuous;

  void validate() const;
};

// The explicit discrete-time solution: the alternating composition
//   X(t) = F^{-1}_{Y^(t)|k} . F_{Y^(tau_{k+1})|k} . ... (y_final)
// started from the final condition. Survival engines truncate the chain at
// the interval containing the death time and return y_final from there on.
double compose_quantile_maps(const QuantileEngine &engine, double y_final, double t);

// Same composition evaluated on an ascending mesh, sharing the chain tail
// across evaluation times.
std::vector<double> compose_on_mesh(const QuantileEngine &engine, double y_final,
                                    const std::vector<double> &times);

// One conditioning stratum's contribution to the discretized shift.
struct WeightedComponent {
  double weight = 1.0;
  std::shared_ptr<const ConditionalModel> model;
  bool alive = true;
};

// Discretized shift D^(n) as a mixture quotient: minus the weighted mean of
// h-derivatives over the weighted mean of densities. Survival kind keeps only
// components alive at t and is 0 for y < t. Throws regularity_error when the
// denominator falls below eps.
double dn_shift(const std::vector<WeightedComponent> &components, double y, double t,
                double eps, OutcomeKind kind = OutcomeKind::Continuous);

struct ConvergenceLevel {
  int level = 0;
  double sup_gap = 0.0;
  double gronwall_bound = 0.0;
  bool gap_within_bound = true;
};

struct ConvergenceResult {
  std::vector<ConvergenceLevel> levels;

  bool nonincreasing(double slack = 0.05) const;
  bool all_within_bounds() const;
  std::string to_csv() const;  // level,sup_gap,gronwall_bound
};

// Generic study: per-level engines against a reference solution, sup norm
// over the evaluation mesh. Levels must be increasing.
ConvergenceResult convergence_study(
    const std::function<QuantileEngine(int)> &engine_for_level,
    const std::function<double(double)> &reference, double y_final,
    const std::vector<int> &levels, const std::vector<double> &eval_mesh);

// ---------------------------------------------------------------------------
// Study scenarios for the discrete engine.
// ---------------------------------------------------------------------------

// Latent-Gaussian outcome driven by a continuous dose path: Y = U + beta *
// integral of the dose, U truncated normal. Conditioning on the level-n
// binned dose history gives Gaussian-mixture conditionals with empirical
// stratum weights; the continuous-time solution is available in closed form.
class GaussianConvergenceStudy {
 public:
  struct Config {
    double tau = 1.0;
    double beta = 0.5;
    double sigma = 1.0;
    double trunc_halfwidth = 2.0;
    std::size_t n_subjects = 4096;
    std::size_t panel = 16;         // subjects entering the reported sup norm
    std::uint64_t seed = 20240817;
    RegularityBudget budget{0.05, 0.45, 0.25, 0.30, 0.16, -10.0, 10.0};
  };

  explicit GaussianConvergenceStudy(Config cfg);

  const SamplePath &path(std::size_t subject) const { return paths_[subject]; }
  double outcome(std::size_t subject) const { return outcomes_[subject]; }
  std::size_t size() const { return paths_.size(); }

  double dose_integral(std::size_t subject, double t) const;
  double reference_x(std::size_t subject, double t) const;
  double true_shift(std::size_t subject, double t) const;  // beta * dose(t)

  QuantileEngine engine(std::size_t subject, int level) const;
  // D^(n) at (y, t) for the subject's level-n stratum, via dn_shift.
  double discretized_shift(std::size_t subject, int level, double y, double t) const;

  ConvergenceResult run(const std::vector<int> &levels) const;

 private:
  struct LevelStrata {
    // group id per (interval, subject) and member lists per (interval, gid)
    std::vector<std::vector<std::int32_t>> group_of;
    std::vector<std::vector<std::vector<std::int32_t>>> members;
  };
  const LevelStrata &strata(int level) const;
  std::vector<WeightedComponent> stratum_components(std::size_t subject, int level,
                                                    std::size_t interval) const;

  Config cfg_;
  std::vector<SamplePath> paths_;
  std::vector<double> outcomes_;
  mutable std::map<int, LevelStrata> strata_cache_;
};

// Discrete-time confounded scenario with a four-level baseline severity, two
// treatment decisions and an additive effect; the engine conditions on a
// coarsened severity (one bit), so composed values and simulated
// counterfactuals are distinct pathwise but share conditional laws.
class GaussianDiscreteStudy {
 public:
  struct Config {
    double tau = 1.0;
    double theta = 0.8;
    double theta_het = 0.25;  // severity multiplies the effect: theta * (1 + het * w)
    double sigma = 1.0;
    double m_scale = 0.5;     // baseline mean is m_scale * severity
    std::vector<double> w_probs{0.3, 0.3, 0.2, 0.2};
    double pol0 = -0.5, pol_w = 0.35, pol_prev = 0.6;
    std::size_t n_subjects = 12000;
    std::uint64_t seed = 7;
  };

  explicit GaussianDiscreteStudy(Config cfg);

  std::size_t size() const { return w_.size(); }
  double outcome(std::size_t i) const { return y_[i]; }
  double counterfactual(std::size_t i, double t) const;  // Y^(t), simulable oracle
  double composed(std::size_t i, double t) const;        // X^(n)(t) via the engine

  // Stratum key of Z^(n)_t: (coarse severity, treatments decided by t).
  std::string stratum_key(std::size_t i, double t) const;

  // Per-stratum paired samples {composed X} vs {simulated Y^(t)}.
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
  ks_samples(double t) const;

 private:
  QuantileEngine engine_for(std::size_t i) const;
  double treated_time(std::size_t i, double t) const;

  Config cfg_;
  std::vector<int> w_;
  std::vector<int> z0_, z1_;
  std::vector<double> u_, y_;
  // mixture weights: counts of severity per (coarse, z0) and (coarse, z0, z1)
  std::map<std::string, std::vector<double>> stratum_w_counts_;
};

}  // namespace ctsnm

#endif
