#include "ctsnm/conditional_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "ctsnm/errors.hpp"

namespace ctsnm {

namespace {
const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);
}

double normal_cdf(double z) { return boost::math::cdf(kStdNormal, z); }
double normal_pdf(double z) { return boost::math::pdf(kStdNormal, z); }
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    throw std::domain_error("normal_quantile: p outside [0, 1]");
  }
  return boost::math::quantile(kStdNormal, p);
}

double ConditionalModel::h_derivative(double y, double t) const {
  const double s = 1e-6;
  return (cdf(y, t + s) - cdf(y, t - s)) / (2.0 * s);
}

double ConditionalModel::inverse_cdf(double p, double t) const {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("inverse_cdf: p outside [0, 1]");
  auto [lo, hi] = support(t);
  if (p <= 0.0) return lo;
  // inf{x : F(x) >= p}; keep the invariant F(hi) >= p.
  for (int iter = 0; iter < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid, t) >= p)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

GaussianLocation::GaussianLocation(double mu0, double mu_slope, double sigma,
                                   double trunc_halfwidth)
    : mu0_(mu0), mu_slope_(mu_slope), sigma_(sigma), halfwidth_(trunc_halfwidth) {
  if (!(sigma > 0.0)) throw std::domain_error("GaussianLocation: sigma must be > 0");
  if (halfwidth_ < 0.0) throw std::domain_error("GaussianLocation: negative truncation width");
  if (halfwidth_ > 0.0) {
    trunc_lo_p_ = normal_cdf(-halfwidth_ / sigma_);
    trunc_norm_ = normal_cdf(halfwidth_ / sigma_) - trunc_lo_p_;
  }
}

double GaussianLocation::cdf(double y, double t) const {
  const double z = (y - mean(t)) / sigma_;
  if (halfwidth_ == 0.0) return normal_cdf(z);
  const double p = (normal_cdf(z) - trunc_lo_p_) / trunc_norm_;
  return std::clamp(p, 0.0, 1.0);
}

double GaussianLocation::density(double y, double t) const {
  const double z = (y - mean(t)) / sigma_;
  if (halfwidth_ > 0.0 && std::abs(y - mean(t)) > halfwidth_) return 0.0;
  const double f = normal_pdf(z) / sigma_;
  return halfwidth_ == 0.0 ? f : f / trunc_norm_;
}

double GaussianLocation::h_derivative(double y, double t) const {
  // Pure location family: d/dt F = -mu'(t) f(y, t), truncated or not.
  return -mu_slope_ * density(y, t);
}

std::pair<double, double> GaussianLocation::support(double t) const {
  const double w = halfwidth_ == 0.0 ? 8.5 * sigma_ : halfwidth_;
  return {mean(t) - w, mean(t) + w};
}

double GaussianLocation::inverse_cdf(double p, double t) const {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("inverse_cdf: p outside [0, 1]");
  auto [lo, hi] = support(t);
  if (p <= 0.0) return lo;
  if (p >= 1.0) return hi;
  const double pe = halfwidth_ == 0.0 ? p : trunc_lo_p_ + p * trunc_norm_;
  return mean(t) + sigma_ * normal_quantile(pe);
}

ExponentialHazardSurvival::ExponentialHazardSurvival(double interval_start,
                                                     double rate_treated,
                                                     double rate_baseline)
    : t0_(interval_start), rate_treated_(rate_treated), rate_baseline_(rate_baseline) {
  if (!(rate_treated > 0.0 && rate_baseline > 0.0))
    throw std::domain_error("ExponentialHazardSurvival: rates must be > 0");
}

double ExponentialHazardSurvival::cumulative_hazard(double y, double t) const {
  if (y <= t0_) return 0.0;
  const double stop = std::max(t, t0_);
  if (y <= stop) return rate_treated_ * (y - t0_);
  return rate_treated_ * (stop - t0_) + rate_baseline_ * (y - stop);
}

double ExponentialHazardSurvival::cdf(double y, double t) const {
  return -std::expm1(-cumulative_hazard(y, t));
}

double ExponentialHazardSurvival::density(double y, double t) const {
  if (y <= t0_) return 0.0;
  const double rate = y <= std::max(t, t0_) ? rate_treated_ : rate_baseline_;
  return rate * std::exp(-cumulative_hazard(y, t));
}

double ExponentialHazardSurvival::h_derivative(double y, double t) const {
  // For y > t, raising the stop time extends the treated-hazard span:
  // dH/dt = rate_treated - rate_baseline.
  if (y <= std::max(t, t0_)) return 0.0;
  return (rate_treated_ - rate_baseline_) * std::exp(-cumulative_hazard(y, t));
}

std::pair<double, double> ExponentialHazardSurvival::support(double t) const {
  // Upper end: the 1 - 1e-15 quantile under the slower hazard.
  const double r = std::min(rate_treated_, rate_baseline_);
  return {t0_, std::max(t, t0_) + 36.0 / r};
}

double ExponentialHazardSurvival::inverse_cdf(double p, double t) const {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("inverse_cdf: p outside [0, 1]");
  if (p <= 0.0) return t0_;
  if (p >= 1.0) return support(t).second;
  const double target = -std::log1p(-p);  // cumulative hazard to reach
  const double stop = std::max(t, t0_);
  const double treated_budget = rate_treated_ * (stop - t0_);
  if (target <= treated_budget) return t0_ + target / rate_treated_;
  return stop + (target - treated_budget) / rate_baseline_;
}

UniformInterval::UniformInterval(double a0, double a_slope, double b0, double b_slope)
    : a0_(a0), a_slope_(a_slope), b0_(b0), b_slope_(b_slope) {}

double UniformInterval::cdf(double y, double t) const {
  const double lo = a(t), hi = b(t);
  if (!(hi > lo)) throw std::domain_error("UniformInterval: empty support");
  return std::clamp((y - lo) / (hi - lo), 0.0, 1.0);
}

double UniformInterval::density(double y, double t) const {
  const double lo = a(t), hi = b(t);
  if (y < lo || y > hi) return 0.0;
  return 1.0 / (hi - lo);
}

double UniformInterval::h_derivative(double y, double t) const {
  const double lo = a(t), hi = b(t), w = hi - lo;
  if (y <= lo || y >= hi) return 0.0;
  return (-a_slope_ * w - (y - lo) * (b_slope_ - a_slope_)) / (w * w);
}

std::pair<double, double> UniformInterval::support(double t) const {
  return {a(t), b(t)};
}

double UniformInterval::inverse_cdf(double p, double t) const {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("inverse_cdf: p outside [0, 1]");
  return a(t) + p * (b(t) - a(t));
}

MixtureConditionalModel::MixtureConditionalModel(
    std::vector<std::shared_ptr<const ConditionalModel>> components,
    std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty() || components_.size() != weights_.size())
    throw std::domain_error("MixtureConditionalModel: component/weight mismatch");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw std::domain_error("MixtureConditionalModel: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::domain_error("MixtureConditionalModel: weights must sum to 1");
}

double MixtureConditionalModel::cdf(double y, double t) const {
  double v = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i)
    v += weights_[i] * components_[i]->cdf(y, t);
  return v;
}

double MixtureConditionalModel::density(double y, double t) const {
  double v = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i)
    v += weights_[i] * components_[i]->density(y, t);
  return v;
}

double MixtureConditionalModel::h_derivative(double y, double t) const {
  double v = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i)
    v += weights_[i] * components_[i]->h_derivative(y, t);
  return v;
}

std::pair<double, double> MixtureConditionalModel::support(double t) const {
  auto [lo, hi] = components_.front()->support(t);
  for (std::size_t i = 1; i < components_.size(); ++i) {
    auto [l, h] = components_[i]->support(t);
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  }
  return {lo, hi};
}

}  // namespace ctsnm
