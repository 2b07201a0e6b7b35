#include "ctsnm/discrete_mimic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "ctsnm/errors.hpp"
#include "ctsnm/mimic_ode.hpp"
#include "ctsnm/rng.hpp"

namespace ctsnm {

void QuantileEngine::validate() const {
  if (grid_times.size() < 2)
    throw std::domain_error("QuantileEngine: need at least two grid times");
  for (std::size_t i = 1; i < grid_times.size(); ++i)
    if (!(grid_times[i] > grid_times[i - 1]))
      throw std::domain_error("QuantileEngine: grid times must be strictly increasing");
  if (interval_models.size() != grid_times.size() - 1)
    throw std::domain_error("QuantileEngine: one model per grid interval required");
  for (const auto &m : interval_models)
    if (!m) throw std::domain_error("QuantileEngine: null interval model");
}

namespace {

std::size_t interval_of(const std::vector<double> &grid, double t) {
  auto it = std::upper_bound(grid.begin(), grid.end(), t);
  std::size_t k = static_cast<std::size_t>(it - grid.begin());
  if (k == 0) throw std::domain_error("compose_quantile_maps: t below the grid");
  --k;
  return std::min(k, grid.size() - 2);
}

// Last grid index strictly below the death time; the chain starts at that
// interval for survival outcomes.
std::size_t death_interval(const std::vector<double> &grid, double y) {
  auto it = std::lower_bound(grid.begin(), grid.end(), y);
  std::size_t p = static_cast<std::size_t>(it - grid.begin());
  if (p > 0) --p;
  return std::min(p, grid.size() - 2);
}

// The chain starts in the interval holding the final condition: the last
// interval for continuous outcomes, the death interval for survival. The
// final value must lie in that model's support.
std::size_t chain_start(const QuantileEngine &e, double y) {
  std::size_t start = e.grid_times.size() - 2;
  if (e.kind == OutcomeKind::Survival) {
    if (!(y > 0.0))
      throw std::domain_error("compose_quantile_maps: survival outcome must be > 0");
    start = death_interval(e.grid_times, y);
  }
  auto [lo, hi] = e.interval_models[start]->support(e.grid_times[start + 1]);
  if (y < lo || y > hi)
    throw std::domain_error("compose_quantile_maps: final value outside the terminal support");
  return start;
}

}  // namespace

double compose_quantile_maps(const QuantileEngine &engine, double y_final, double t) {
  engine.validate();
  const auto &grid = engine.grid_times;
  if (t < grid.front() || t > grid.back())
    throw std::domain_error("compose_quantile_maps: t outside [0, tau]");
  const std::size_t start = chain_start(engine, y_final);

  if (t == grid.back()) return y_final;
  if (engine.kind == OutcomeKind::Survival && t >= y_final) return y_final;

  const std::size_t k = interval_of(grid, t);
  double x = y_final;
  for (std::size_t j = start; j > k; --j) {
    const auto &m = *engine.interval_models[j];
    x = m.inverse_cdf(m.cdf(x, grid[j + 1]), grid[j]);
  }
  const auto &m = *engine.interval_models[k];
  return m.inverse_cdf(m.cdf(x, grid[k + 1]), t);
}

std::vector<double> compose_on_mesh(const QuantileEngine &engine, double y_final,
                                    const std::vector<double> &times) {
  engine.validate();
  const auto &grid = engine.grid_times;
  const std::size_t start = chain_start(engine, y_final);
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] >= times[i - 1]))
      throw std::domain_error("compose_on_mesh: times must be ascending");

  std::vector<double> out(times.size());
  std::vector<std::size_t> pending;  // indices still needing a composed value
  const bool survival = engine.kind == OutcomeKind::Survival;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    if (t < grid.front() || t > grid.back())
      throw std::domain_error("compose_on_mesh: time outside [0, tau]");
    if (t == grid.back() || (survival && t >= y_final)) {
      out[i] = y_final;
    } else {
      pending.push_back(i);
    }
  }

  double x = y_final;
  std::size_t next = pending.size();
  for (std::size_t j = start + 1; j-- > 0;) {
    const auto &m = *engine.interval_models[j];
    const double inner = m.cdf(x, grid[j + 1]);
    while (next > 0 && interval_of(grid, times[pending[next - 1]]) == j) {
      const std::size_t i = pending[next - 1];
      out[i] = m.inverse_cdf(inner, times[i]);
      --next;
    }
    if (next == 0) break;
    x = m.inverse_cdf(inner, grid[j]);
  }
  return out;
}

double dn_shift(const std::vector<WeightedComponent> &components, double y, double t,
                double eps, OutcomeKind kind) {
  if (components.empty()) throw std::domain_error("dn_shift: no components");
  double total = 0.0;
  for (const auto &c : components) {
    if (!(c.weight > 0.0)) throw std::domain_error("dn_shift: weights must be positive");
    if (!c.model) throw std::domain_error("dn_shift: null component model");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::domain_error("dn_shift: weights must sum to 1");

  if (kind == OutcomeKind::Survival && y < t) return 0.0;
  double num = 0.0, den = 0.0, alive_mass = 0.0;
  for (const auto &c : components) {
    if (kind == OutcomeKind::Survival && !c.alive) continue;
    num += c.weight * c.model->h_derivative(y, t);
    den += c.weight * c.model->density(y, t);
    alive_mass += c.weight;
  }
  if (kind == OutcomeKind::Survival && alive_mass == 0.0) return 0.0;
  if (den < eps)
    throw regularity_error("dn_shift: mixture density " + std::to_string(den) +
                           " below the floor " + std::to_string(eps) + " at y = " +
                           std::to_string(y));
  return -num / den;
}

bool ConvergenceResult::nonincreasing(double slack) const {
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i].sup_gap > levels[i - 1].sup_gap * (1.0 + slack)) return false;
  return true;
}

bool ConvergenceResult::all_within_bounds() const {
  for (const auto &l : levels)
    if (!l.gap_within_bound) return false;
  return true;
}

std::string ConvergenceResult::to_csv() const {
  std::ostringstream out;
  out << "level,sup_gap,gronwall_bound\n";
  char buf[40];
  for (const auto &l : levels) {
    out << l.level << ',';
    std::snprintf(buf, sizeof buf, "%.17g", l.sup_gap);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", l.gronwall_bound);
    out << buf << '\n';
  }
  return out.str();
}

ConvergenceResult convergence_study(
    const std::function<QuantileEngine(int)> &engine_for_level,
    const std::function<double(double)> &reference, double y_final,
    const std::vector<int> &levels, const std::vector<double> &eval_mesh) {
  if (levels.empty()) throw std::domain_error("convergence_study: no levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i] <= levels[i - 1])
      throw std::domain_error("convergence_study: levels must be increasing");
  if (eval_mesh.empty()) throw std::domain_error("convergence_study: empty evaluation mesh");

  ConvergenceResult result;
  for (int n : levels) {
    const QuantileEngine engine = engine_for_level(n);
    const std::vector<double> x = compose_on_mesh(engine, y_final, eval_mesh);
    double gap = 0.0;
    for (std::size_t i = 0; i < eval_mesh.size(); ++i)
      gap = std::max(gap, std::abs(x[i] - reference(eval_mesh[i])));
    result.levels.push_back({n, gap, 0.0, true});
  }
  return result;
}

// ---------------------------------------------------------------------------
// GaussianConvergenceStudy
// ---------------------------------------------------------------------------

GaussianConvergenceStudy::GaussianConvergenceStudy(Config cfg) : cfg_(cfg) {
  paths_.reserve(cfg_.n_subjects);
  outcomes_.reserve(cfg_.n_subjects);
  for (std::size_t i = 0; i < cfg_.n_subjects; ++i) {
    Rng rng = Rng::subject_stream(cfg_.seed, i);
    const double z0 = rng.uniform();
    const double z1 = z0 + 0.37 < 1.0 ? z0 + 0.37 : z0 - 0.63;  // deterministic titration
    double u = rng.normal(0.0, cfg_.sigma);
    while (std::abs(u) > cfg_.trunc_halfwidth) u = rng.normal(0.0, cfg_.sigma);

    SamplePath p(cfg_.tau, {z0});
    p.set_value(0.5 * cfg_.tau, {z1});
    const double dose_total = z0 * 0.5 * cfg_.tau + z1 * 0.5 * cfg_.tau;
    paths_.push_back(std::move(p));
    outcomes_.push_back(u + cfg_.beta * dose_total);
  }
}

double GaussianConvergenceStudy::dose_integral(std::size_t subject, double t) const {
  const SamplePath &p = paths_[subject];
  const double half = 0.5 * cfg_.tau;
  const double z0 = p.record_values(0)[0];
  const double z1 = p.record_values(p.record_count() - 1)[0];
  return z0 * std::min(t, half) + z1 * std::max(0.0, t - half);
}

double GaussianConvergenceStudy::reference_x(std::size_t subject, double t) const {
  return outcomes_[subject] -
         cfg_.beta * (dose_integral(subject, cfg_.tau) - dose_integral(subject, t));
}

double GaussianConvergenceStudy::true_shift(std::size_t subject, double t) const {
  return cfg_.beta * paths_[subject].value_at(t, 0);
}

const GaussianConvergenceStudy::LevelStrata &GaussianConvergenceStudy::strata(int level) const {
  auto it = strata_cache_.find(level);
  if (it != strata_cache_.end()) return it->second;

  const std::size_t n = paths_.size();
  const std::size_t intervals = std::size_t{1} << level;
  std::vector<DiscretizedPath> dp;
  dp.reserve(n);
  for (const auto &p : paths_) dp.push_back(discretize(p, level));

  LevelStrata S;
  S.group_of.assign(intervals, std::vector<std::int32_t>(n, 0));
  S.members.resize(intervals);
  std::vector<std::int32_t> prev(n, 0);
  for (std::size_t k = 0; k < intervals; ++k) {
    std::unordered_map<std::uint64_t, std::int32_t> ids;
    std::int32_t next_id = 0;
    for (std::size_t i = 0; i < n; ++i) {
      // refine the previous group by the bin observed at grid time k
      const std::uint64_t key =
          Rng::splitmix64((static_cast<std::uint64_t>(prev[i]) << 32) ^
                          static_cast<std::uint64_t>(dp[i].bins[k][0] + (1 << 30)));
      auto [pos, inserted] = ids.try_emplace(key, next_id);
      if (inserted) {
        ++next_id;
        S.members[k].emplace_back();
      }
      S.group_of[k][i] = pos->second;
      S.members[k][pos->second].push_back(static_cast<std::int32_t>(i));
    }
    prev = S.group_of[k];
  }
  return strata_cache_.emplace(level, std::move(S)).first->second;
}

std::vector<WeightedComponent> GaussianConvergenceStudy::stratum_components(
    std::size_t subject, int level, std::size_t interval) const {
  const LevelStrata &S = strata(level);
  const auto &group = S.members[interval][S.group_of[interval][subject]];
  const double tau_k = DiscretizationGrid(level, cfg_.tau).time(interval);
  const double w = 1.0 / static_cast<double>(group.size());
  std::vector<WeightedComponent> comps;
  comps.reserve(group.size());
  for (std::int32_t j : group) {
    const double slope = cfg_.beta * paths_[j].value_at(tau_k, 0);
    const double mu0 = cfg_.beta * dose_integral(j, tau_k) - slope * tau_k;
    comps.push_back({w,
                     std::make_shared<GaussianLocation>(mu0, slope, cfg_.sigma,
                                                        cfg_.trunc_halfwidth),
                     true});
  }
  return comps;
}

QuantileEngine GaussianConvergenceStudy::engine(std::size_t subject, int level) const {
  QuantileEngine e;
  e.kind = OutcomeKind::Continuous;
  e.grid_times = DiscretizationGrid(level, cfg_.tau).times();
  const std::size_t intervals = e.grid_times.size() - 1;
  e.interval_models.reserve(intervals);
  for (std::size_t k = 0; k < intervals; ++k) {
    auto comps = stratum_components(subject, level, k);
    std::vector<std::shared_ptr<const ConditionalModel>> models;
    std::vector<double> weights;
    models.reserve(comps.size());
    for (auto &c : comps) {
      models.push_back(c.model);
      weights.push_back(c.weight);
    }
    e.interval_models.push_back(
        std::make_shared<MixtureConditionalModel>(std::move(models), std::move(weights)));
  }
  return e;
}

double GaussianConvergenceStudy::discretized_shift(std::size_t subject, int level,
                                                   double y, double t) const {
  const std::size_t intervals = std::size_t{1} << level;
  const double width = cfg_.tau / static_cast<double>(intervals);
  std::size_t k = static_cast<std::size_t>(t / width);
  if (k >= intervals) k = intervals - 1;  // left extension at tau
  return dn_shift(stratum_components(subject, level, k), y, t, 1e-12,
                  OutcomeKind::Continuous);
}

ConvergenceResult GaussianConvergenceStudy::run(const std::vector<int> &levels) const {
  if (levels.empty()) throw std::domain_error("GaussianConvergenceStudy: no levels");
  std::vector<double> mesh(257);
  for (std::size_t i = 0; i < mesh.size(); ++i)
    mesh[i] = cfg_.tau * static_cast<double>(i) / 256.0;

  const std::size_t panel = std::min<std::size_t>(cfg_.panel, paths_.size());
  ConvergenceResult result;
  for (int n : levels) {
    ConvergenceLevel lvl;
    lvl.level = n;
    for (std::size_t s = 0; s < panel; ++s) {
      const QuantileEngine eng = engine(s, n);
      const std::vector<double> x = compose_on_mesh(eng, outcomes_[s], mesh);
      double gap = 0.0;
      for (std::size_t i = 0; i < mesh.size(); ++i)
        gap = std::max(gap, std::abs(x[i] - reference_x(s, mesh[i])));

      Trajectory traj;
      traj.mesh = mesh;
      traj.values = x;
      traj.final_value = outcomes_[s];
      auto gap_fn = [&, s, n](double y, double t) {
        return std::abs(true_shift(s, t) - discretized_shift(s, n, y, t));
      };
      const double bound = gronwall_gap_bound(traj, gap_fn, cfg_.budget);
      lvl.sup_gap = std::max(lvl.sup_gap, gap);
      lvl.gronwall_bound = std::max(lvl.gronwall_bound, bound);
      if (gap > bound) lvl.gap_within_bound = false;
    }
    result.levels.push_back(lvl);
  }
  return result;
}

// ---------------------------------------------------------------------------
// GaussianDiscreteStudy
// ---------------------------------------------------------------------------

namespace {
double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

GaussianDiscreteStudy::GaussianDiscreteStudy(Config cfg) : cfg_(cfg) {
  const std::size_t n = cfg_.n_subjects;
  w_.reserve(n);
  z0_.reserve(n);
  z1_.reserve(n);
  u_.reserve(n);
  y_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::subject_stream(cfg_.seed, i);
    const double uw = rng.uniform();
    int w = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < cfg_.w_probs.size(); ++k) {
      acc += cfg_.w_probs[k];
      if (uw < acc) {
        w = static_cast<int>(k);
        break;
      }
      w = static_cast<int>(cfg_.w_probs.size()) - 1;
    }
    const int z0 = rng.bernoulli(expit(cfg_.pol0 + cfg_.pol_w * w)) ? 1 : 0;
    const int z1 = rng.bernoulli(expit(cfg_.pol0 + cfg_.pol_w * w + cfg_.pol_prev * z0)) ? 1 : 0;
    const double u = rng.normal(cfg_.m_scale * w, cfg_.sigma);
    const double theta_w = cfg_.theta * (1.0 + cfg_.theta_het * w);
    w_.push_back(w);
    z0_.push_back(z0);
    z1_.push_back(z1);
    u_.push_back(u);
    y_.push_back(u + theta_w * (z0 * 0.5 * cfg_.tau + z1 * 0.5 * cfg_.tau));
  }

  // severity counts per engine stratum (coarse group and treatment prefix)
  for (std::size_t i = 0; i < n; ++i) {
    const int coarse = w_[i] >= 2 ? 1 : 0;
    const std::string k0 = "k0|c" + std::to_string(coarse) + "|z" + std::to_string(z0_[i]);
    const std::string k1 = "k1|c" + std::to_string(coarse) + "|z" + std::to_string(z0_[i]) +
                           std::to_string(z1_[i]);
    for (const auto &key : {k0, k1}) {
      auto &counts = stratum_w_counts_[key];
      counts.resize(cfg_.w_probs.size(), 0.0);
      counts[static_cast<std::size_t>(w_[i])] += 1.0;
    }
  }
}

double GaussianDiscreteStudy::treated_time(std::size_t i, double t) const {
  const double half = 0.5 * cfg_.tau;
  return z0_[i] * std::min(t, half) + z1_[i] * std::max(0.0, t - half);
}

double GaussianDiscreteStudy::counterfactual(std::size_t i, double t) const {
  const double theta_w = cfg_.theta * (1.0 + cfg_.theta_het * w_[i]);
  return u_[i] + theta_w * treated_time(i, t);
}

QuantileEngine GaussianDiscreteStudy::engine_for(std::size_t i) const {
  const int coarse = w_[i] >= 2 ? 1 : 0;
  const double half = 0.5 * cfg_.tau;
  const std::string k0 = "k0|c" + std::to_string(coarse) + "|z" + std::to_string(z0_[i]);
  const std::string k1 = "k1|c" + std::to_string(coarse) + "|z" + std::to_string(z0_[i]) +
                         std::to_string(z1_[i]);
  const int z0 = z0_[i], z1 = z1_[i];

  // Mixture over severities compatible with the coarsened stratum; the
  // severity-specific effect makes the mixture move non-uniformly in t.
  auto mixture = [&](const std::string &key, int interval) {
    const auto &counts = stratum_w_counts_.at(key);
    double total = 0.0;
    for (double c : counts) total += c;
    std::vector<std::shared_ptr<const ConditionalModel>> models;
    std::vector<double> weights;
    for (std::size_t w = 0; w < counts.size(); ++w) {
      if (counts[w] == 0.0) continue;
      const double theta_w = cfg_.theta * (1.0 + cfg_.theta_het * static_cast<double>(w));
      const double base = cfg_.m_scale * static_cast<double>(w);
      // interval 0: mu(t) = base + theta_w z0 t
      // interval 1: mu(t) = base + theta_w (z0 half + z1 (t - half))
      const double mu0 = interval == 0 ? base : base + theta_w * (z0 - z1) * half;
      const double slope = theta_w * (interval == 0 ? z0 : z1);
      models.push_back(std::make_shared<GaussianLocation>(mu0, slope, cfg_.sigma));
      weights.push_back(counts[w] / total);
    }
    return std::make_shared<MixtureConditionalModel>(std::move(models), std::move(weights));
  };

  QuantileEngine e;
  e.kind = OutcomeKind::Continuous;
  e.grid_times = {0.0, half, cfg_.tau};
  e.interval_models.push_back(mixture(k0, 0));
  e.interval_models.push_back(mixture(k1, 1));
  return e;
}

double GaussianDiscreteStudy::composed(std::size_t i, double t) const {
  return compose_quantile_maps(engine_for(i), y_[i], t);
}

std::string GaussianDiscreteStudy::stratum_key(std::size_t i, double t) const {
  const int coarse = w_[i] >= 2 ? 1 : 0;
  std::string key = "c" + std::to_string(coarse) + "|z" + std::to_string(z0_[i]);
  if (t >= 0.5 * cfg_.tau) key += std::to_string(z1_[i]);
  return key;
}

std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
GaussianDiscreteStudy::ks_samples(double t) const {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> out;
  for (std::size_t i = 0; i < size(); ++i) {
    auto &bucket = out[stratum_key(i, t)];
    bucket.first.push_back(composed(i, t));
    bucket.second.push_back(counterfactual(i, t));
  }
  return out;
}

}  // namespace ctsnm
