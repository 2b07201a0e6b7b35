#include "ctsnm/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "ctsnm/errors.hpp"
#include "ctsnm/sample_path.hpp"

namespace ctsnm {

double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::domain_error("ks_two_sample_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  return d;
}

namespace {
double ks_coefficient(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("ks critical value: alpha outside (0, 1)");
  return std::sqrt(-std::log(alpha / 2.0) / 2.0);
}
}  // namespace

double ks_two_sample_critical(double alpha, std::size_t n_a, std::size_t n_b) {
  const double na = static_cast<double>(n_a), nb = static_cast<double>(n_b);
  return ks_coefficient(alpha) * std::sqrt((na + nb) / (na * nb));
}

double ks_one_sample_critical(double alpha, std::size_t n) {
  return ks_coefficient(alpha) / std::sqrt(static_cast<double>(n));
}

std::vector<StratumTestReport> conditional_ks(const StratumSamples &strata, double alpha,
                                              std::size_t min_count) {
  std::vector<StratumTestReport> reports;
  for (const auto &[id, samples] : strata) {
    const auto &[a, b] = samples;
    if (a.size() < min_count || b.size() < min_count) continue;  // skipped stratum
    StratumTestReport rep;
    rep.stratum_id = id;
    rep.n_a = a.size();
    rep.n_b = b.size();
    rep.ks_stat = ks_two_sample_statistic(a, b);
    rep.critical_value = ks_two_sample_critical(alpha, a.size(), b.size());
    rep.pass = rep.ks_stat < rep.critical_value;
    reports.push_back(std::move(rep));
  }
  return reports;
}

double pass_rate(const std::vector<StratumTestReport> &reports) {
  if (reports.empty()) return 0.0;
  std::size_t passed = 0;
  for (const auto &r : reports) passed += r.pass ? 1 : 0;
  return static_cast<double>(passed) / static_cast<double>(reports.size());
}

PitReport pit_uniformity(const std::vector<double> &values, double alpha) {
  if (values.empty()) throw std::domain_error("pit_uniformity: empty input");
  std::vector<double> v = values;
  for (double x : v)
    if (x < 0.0 || x > 1.0)
      throw std::domain_error("pit_uniformity: values must lie in [0, 1]");
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::abs(v[i] - lo), std::abs(hi - v[i])));
  }
  PitReport rep;
  rep.n = v.size();
  rep.ks_stat = d;
  rep.critical_value = ks_one_sample_critical(alpha, v.size());
  rep.pass = d < rep.critical_value;
  return rep;
}

double quantile_identity_check(const ConditionalModel &family,
                               const std::vector<std::pair<double, double>> &points,
                               double step, double eps) {
  double worst = 0.0;
  for (const auto &[y, t] : points) {
    const double f = family.density(y, t);
    if (f < eps)
      throw regularity_error("quantile_identity_check: density " + std::to_string(f) +
                             " below the floor at y = " + std::to_string(y));
    const double dh_f = (family.cdf(y, t + step) - family.cdf(y, t - step)) / (2.0 * step);
    const double p = family.cdf(y, t);
    const double dh_inv =
        (family.inverse_cdf(p, t + step) - family.inverse_cdf(p, t - step)) / (2.0 * step);
    worst = std::max(worst, std::abs(dh_f + f * dh_inv));
  }
  return worst;
}

std::vector<BudgetViolation> regularity_audit(const ConditionalModel &family,
                                              const RegularityBudget &budget,
                                              const std::vector<double> &ys,
                                              const std::vector<double> &ts) {
  std::vector<BudgetViolation> out;
  for (double t : ts) {
    double prev_f = 0.0, prev_dh = 0.0, prev_y = 0.0;
    bool have_prev = false;
    for (double y : ys) {
      const double f = family.density(y, t);
      const double dh = family.h_derivative(y, t);
      if (f < budget.eps) out.push_back({"density_floor", y, t, f, budget.eps});
      if (f > budget.c1) out.push_back({"density_cap", y, t, f, budget.c1});
      if (std::abs(dh) > budget.c2) out.push_back({"h_derivative_cap", y, t, std::abs(dh), budget.c2});
      if (have_prev && y > prev_y) {
        const double q_f = std::abs(f - prev_f) / (y - prev_y);
        const double q_dh = std::abs(dh - prev_dh) / (y - prev_y);
        if (q_f > budget.l1) out.push_back({"lipschitz_density", y, t, q_f, budget.l1});
        if (q_dh > budget.l2) out.push_back({"lipschitz_h", y, t, q_dh, budget.l2});
      }
      prev_f = f;
      prev_dh = dh;
      prev_y = y;
      have_prev = true;
    }
  }
  return out;
}

StratumSamples mimicry_strata(const Dataset &dataset, const MimicryStrataSpec &spec,
                              const std::function<double(std::size_t, double)> &value_a,
                              const std::function<double(std::size_t, double)> &value_b) {
  StratumSamples out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const SamplePath &path = dataset.subjects[i].path;
    const DiscretizedPath dp = discretize(path, spec.level);
    for (std::size_t ti = 0; ti < spec.times.size(); ++ti) {
      const double t = spec.times[ti];
      if (spec.alive_coord >= 0 &&
          path.value_at(t, static_cast<std::size_t>(spec.alive_coord)) != 1.0)
        continue;
      std::ostringstream key;
      key << "t" << ti << "|g" << path.value_at(t, spec.status_coord) << "|b";
      for (std::int64_t b : dp.prefix_key(t)) key << b << '.';
      auto &bucket = out[key.str()];
      bucket.first.push_back(value_a(i, t));
      bucket.second.push_back(value_b(i, t));
    }
  }
  return out;
}

std::string stratum_reports_csv(const std::vector<StratumTestReport> &reports) {
  std::ostringstream out;
  out << "stratum_id,n_a,n_b,ks_stat,critical_value,pass\n";
  char buf[40];
  for (const auto &r : reports) {
    out << r.stratum_id << ',' << r.n_a << ',' << r.n_b << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.ks_stat);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", r.critical_value);
    out << buf << ',' << (r.pass ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string stratum_summary_json(const std::vector<StratumTestReport> &reports, double alpha) {
  std::ostringstream out;
  out << "{\"n_strata\":" << reports.size() << ",\"pass_rate\":" << pass_rate(reports)
      << ",\"alpha\":" << alpha << "}";
  return out.str();
}

}  // namespace ctsnm
