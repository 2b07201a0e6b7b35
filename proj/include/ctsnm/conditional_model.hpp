#ifndef CTSNM_CONDITIONAL_MODEL_HPP
#define CTSNM_CONDITIONAL_MODEL_HPP

#include <memory>
#include <utility>
#include <vector>

namespace ctsnm {

double normal_cdf(double z);
double normal_pdf(double z);
double normal_quantile(double p);

// Time-indexed conditional distribution family: for one grid interval and one
// conditioning stratum, t -> F_{Y^(t) | stratum}. Provides the CDF, the
// generalized inverse F^{-1}(p) = inf{x : F(x) >= p}, the density in y and
// the right-hand derivative in the stop time ("h-derivative").
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;

  virtual double cdf(double y, double t) const = 0;
  virtual double density(double y, double t) const = 0;
  virtual double h_derivative(double y, double t) const;  // default: central difference
  virtual std::pair<double, double> support(double t) const = 0;
  virtual double inverse_cdf(double p, double t) const;   // default: bisection to 1e-12
};

// Gaussian location family F(y, t) = Phi((y - mu(t)) / sigma) with
// mu(t) = mu0 + mu_slope * t, optionally truncated to mu(t) +- halfwidth.
class GaussianLocation : public ConditionalModel {
 public:
  GaussianLocation(double mu0, double mu_slope, double sigma,
                   double trunc_halfwidth = 0.0);

  double cdf(double y, double t) const override;
  double density(double y, double t) const override;
  double h_derivative(double y, double t) const override;
  std::pair<double, double> support(double t) const override;
  double inverse_cdf(double p, double t) const override;

  double mean(double t) const { return mu0_ + mu_slope_ * t; }
  double slope() const { return mu_slope_; }
  double sigma() const { return sigma_; }

 private:
  double mu0_, mu_slope_, sigma_;
  double halfwidth_;  // 0 = untruncated
  double trunc_lo_p_ = 0.0, trunc_norm_ = 1.0;
};

// Survival law under "treated until the stop time t, baseline afterwards":
// hazard rate_treated on [t0, t), rate_baseline on [t, infinity), for an
// interval starting at t0 with the subject alive at t0. Supports y >= t0.
class ExponentialHazardSurvival : public ConditionalModel {
 public:
  ExponentialHazardSurvival(double interval_start, double rate_treated,
                            double rate_baseline);

  double cdf(double y, double t) const override;
  double density(double y, double t) const override;
  double h_derivative(double y, double t) const override;
  std::pair<double, double> support(double t) const override;
  double inverse_cdf(double p, double t) const override;

 private:
  double cumulative_hazard(double y, double t) const;
  double t0_, rate_treated_, rate_baseline_;
};

// Uniform on [a(t), b(t)] with affine endpoints; support-condition stress
// family.
class UniformInterval : public ConditionalModel {
 public:
  UniformInterval(double a0, double a_slope, double b0, double b_slope);

  double cdf(double y, double t) const override;
  double density(double y, double t) const override;
  double h_derivative(double y, double t) const override;
  std::pair<double, double> support(double t) const override;
  double inverse_cdf(double p, double t) const override;

 private:
  double a(double t) const { return a0_ + a_slope_ * t; }
  double b(double t) const { return b0_ + b_slope_ * t; }
  double a0_, a_slope_, b0_, b_slope_;
};

// Finite mixture of conditional models; the discretized conditional law
// F_{Y^(t) | coarsened past} as a weighted average of stratum members.
class MixtureConditionalModel : public ConditionalModel {
 public:
  MixtureConditionalModel(std::vector<std::shared_ptr<const ConditionalModel>> components,
                          std::vector<double> weights);

  double cdf(double y, double t) const override;
  double density(double y, double t) const override;
  double h_derivative(double y, double t) const override;
  std::pair<double, double> support(double t) const override;

  std::size_t size() const { return components_.size(); }
  const ConditionalModel &component(std::size_t i) const { return *components_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

 private:
  std::vector<std::shared_ptr<const ConditionalModel>> components_;
  std::vector<double> weights_;
};

}  // namespace ctsnm

#endif
