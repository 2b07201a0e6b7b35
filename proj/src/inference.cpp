#include "ctsnm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "ctsnm/conditional_model.hpp"
#include "ctsnm/errors.hpp"
#include "json.hpp"

namespace ctsnm {

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t, std::size_t)> &chunk_fn) {
  if (threads <= 1 || n < 2 * threads) {
    chunk_fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * per, hi = std::min(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back(chunk_fn, lo, hi);
  }
  for (auto &th : pool) th.join();
}

// Dense symmetric solve by Gauss-Jordan with partial pivoting.
std::vector<std::vector<double>> invert(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-12)
      throw fit_error("nuisance fit: singular information matrix");
    std::swap(a[pivot], a[col]);
    std::swap(inv[pivot], inv[col]);
    const double d = a[col][col];
    for (std::size_t c = 0; c < n; ++c) {
      a[col][c] /= d;
      inv[col][c] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a[r][c] -= f * a[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

struct Row {
  std::size_t subject;
  std::size_t time_idx;
  int change;              // dA in {0, 1}
  std::vector<double> x;   // time dummies + past features
  double p = 0.5;          // fitted change probability
};

std::vector<double> default_past_features(const SamplePath &path, double d,
                                          std::size_t treat_coord, int alive_coord) {
  std::vector<double> f;
  const auto &z = path.left_value_at(d);
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (c == treat_coord) continue;
    if (alive_coord >= 0 && c == static_cast<std::size_t>(alive_coord)) continue;
    f.push_back(z[c]);
  }
  return f;
}

// Pooled nuisance model and score assembly shared by the statistic, the null
// test and the estimation scan.
class ScoreEngine {
 public:
  ScoreEngine(const Dataset &dataset, const ScoreSpec &spec)
      : dataset_(dataset), spec_(spec) {
    if (dataset.size() == 0) throw identification_error("score: empty dataset");
    if (spec.decision_times.empty())
      throw identification_error("score: no decision times configured");

    build_rows();
    fit_nuisance();
  }

  // h value per row -> score, sandwich variance, z.
  ScoreResult evaluate(std::vector<double> h) const {
    if (spec_.center_h) {
      std::map<std::size_t, std::pair<double, std::size_t>> by_time;
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        auto &acc = by_time[rows_[r].time_idx];
        acc.first += h[r];
        acc.second += 1;
      }
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        const auto &acc = by_time[rows_[r].time_idx];
        h[r] -= acc.first / static_cast<double>(acc.second);
      }
    }

    const std::size_t k = dim_;
    ScoreResult res;
    res.rows = rows_.size();
    std::vector<double> bh(k, 0.0);  // dS/dgamma
    std::map<std::size_t, double> per_subject_s;
    std::map<std::size_t, std::vector<double>> per_subject_u;
    std::map<std::size_t, double> per_time_s;

    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Row &row = rows_[r];
      const double resid = row.change - row.p;
      res.score += resid * h[r];
      res.changes += static_cast<std::size_t>(row.change);
      per_time_s[row.time_idx] += resid * h[r];
      per_subject_s[row.subject] += resid * h[r];
      auto &u = per_subject_u[row.subject];
      u.resize(k, 0.0);
      const double w = row.p * (1.0 - row.p);
      for (std::size_t c = 0; c < k; ++c) {
        u[c] += resid * row.x[c];
        bh[c] += w * h[r] * row.x[c];
      }
    }

    if (per_subject_s.size() < 2)
      throw identification_error("score: variance degenerate (fewer than 2 contributing subjects)");

    // eff_i = S_i - B I^{-1} U_i
    std::vector<double> b_ainv(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t c2 = 0; c2 < k; ++c2) b_ainv[c] += bh[c2] * info_inv_[c2][c];
    for (const auto &[subject, s_i] : per_subject_s) {
      double corr = 0.0;
      const auto &u = per_subject_u[subject];
      for (std::size_t c = 0; c < k; ++c) corr += b_ainv[c] * u[c];
      const double eff = s_i - corr;
      res.variance += eff * eff;
    }
    if (!(res.variance > 0.0))
      throw identification_error("score: variance degenerate (zero sandwich variance)");
    res.z = res.score / std::sqrt(res.variance);
    for (const auto &[ti, s] : per_time_s)
      res.per_time.emplace_back(spec_.decision_times[ti], s);
    return res;
  }

  // h from a per-(subject, time) value function.
  ScoreResult evaluate_with(const std::function<double(std::size_t, double)> &value) const {
    std::vector<double> h(rows_.size());
    std::vector<double> cache_value(dataset_.size() * spec_.decision_times.size(), 0.0);
    std::vector<char> cached(cache_value.size(), 0);

    // subjects can be processed in parallel; rows index into the cache
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> per_subject(dataset_.size());
    for (std::size_t r = 0; r < rows_.size(); ++r)
      per_subject[rows_[r].subject].emplace_back(r, rows_[r].time_idx);

    parallel_for(dataset_.size(), spec_.threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i)
        for (const auto &[r, ti] : per_subject[i])
          h[r] = value(i, spec_.decision_times[ti]);
    });
    const auto transform = spec_.h_transform;
    if (transform)
      for (double &v : h) v = transform(v);
    return evaluate(std::move(h));
  }

  const std::vector<Row> &rows() const { return rows_; }

 private:
  void build_rows() {
    const auto &times = spec_.decision_times;
    struct Raw {
      std::size_t subject, time_idx;
      int change;
      std::vector<double> feats;
    };
    std::vector<Raw> raw;
    std::vector<std::size_t> n_at(times.size(), 0), n_change(times.size(), 0);
    for (std::size_t i = 0; i < dataset_.size(); ++i) {
      const SamplePath &path = dataset_.subjects[i].path;
      if (spec_.treat_coord >= path.dim())
        throw config_error("score: treat coordinate out of range");
      for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const double d = times[ti];
        if (d < 0.0 || d > path.horizon()) continue;
        if (spec_.alive_coord >= 0 &&
            path.value_at(d, static_cast<std::size_t>(spec_.alive_coord)) != 1.0)
          continue;
        if (path.left_value_at(d, spec_.treat_coord) != 0.0) continue;  // already treated
        Raw r;
        r.subject = i;
        r.time_idx = ti;
        r.change = path.value_at(d, spec_.treat_coord) != 0.0 ? 1 : 0;
        r.feats = spec_.past_features
                      ? spec_.past_features(path, d)
                      : default_past_features(path, d, spec_.treat_coord, spec_.alive_coord);
        n_at[ti] += 1;
        n_change[ti] += static_cast<std::size_t>(r.change);
        raw.push_back(std::move(r));
      }
    }
    if (raw.empty()) throw identification_error("score: no at-risk decision points");

    // Decision times with no variation carry no information and would make
    // their intercepts inestimable; drop them from the pooled model.
    std::vector<std::size_t> compact(times.size(), SIZE_MAX);
    std::size_t n_kept = 0;
    for (std::size_t ti = 0; ti < times.size(); ++ti)
      if (n_at[ti] > 0 && n_change[ti] > 0 && n_change[ti] < n_at[ti])
        compact[ti] = n_kept++;
    if (n_kept == 0)
      throw identification_error(
          "score: no treatment variation (all at-risk decisions identical)");

    for (auto &r : raw) {
      if (compact[r.time_idx] == SIZE_MAX) continue;
      Row row;
      row.subject = r.subject;
      row.time_idx = r.time_idx;
      row.change = r.change;
      row.x.assign(n_kept, 0.0);
      row.x[compact[r.time_idx]] = 1.0;
      row.x.insert(row.x.end(), r.feats.begin(), r.feats.end());
      rows_.push_back(std::move(row));
    }
    dim_ = rows_.front().x.size();
    for (const auto &r : rows_)
      if (r.x.size() != dim_) throw config_error("score: ragged feature vectors");
  }

  void fit_nuisance() {
    std::vector<double> beta(dim_, 0.0);
    for (int iter = 0; iter < 100; ++iter) {
      std::vector<double> grad(dim_, 0.0);
      std::vector<std::vector<double>> info(dim_, std::vector<double>(dim_, 0.0));
      for (auto &row : rows_) {
        double eta = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) eta += beta[c] * row.x[c];
        eta = std::clamp(eta, -30.0, 30.0);
        row.p = expit(eta);
        const double w = row.p * (1.0 - row.p);
        for (std::size_t c = 0; c < dim_; ++c) {
          grad[c] += (row.change - row.p) * row.x[c];
          for (std::size_t c2 = c; c2 < dim_; ++c2) info[c][c2] += w * row.x[c] * row.x[c2];
        }
      }
      for (std::size_t c = 0; c < dim_; ++c)
        for (std::size_t c2 = 0; c2 < c; ++c2) info[c][c2] = info[c2][c];

      double gmax = 0.0;
      for (double g : grad) gmax = std::max(gmax, std::abs(g));
      if (gmax < 1e-9) {
        info_inv_ = invert(info);
        return;
      }
      const auto inv = invert(info);
      for (std::size_t c = 0; c < dim_; ++c) {
        double step = 0.0;
        for (std::size_t c2 = 0; c2 < dim_; ++c2) step += inv[c][c2] * grad[c2];
        beta[c] += step;
      }
    }
    throw fit_error("nuisance fit: Newton iteration did not converge");
  }

  const Dataset &dataset_;
  const ScoreSpec &spec_;
  std::vector<Row> rows_;
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> info_inv_;
};

// X_psi at the decision times for every subject, by backward integration.
std::vector<std::vector<double>> solve_x_at_times(const Dataset &dataset,
                                                  const ShiftModel &model,
                                                  const std::vector<double> &times,
                                                  const SolverOptions &solver,
                                                  std::size_t threads) {
  std::vector<std::vector<double>> x(dataset.size());
  SolverOptions opts = solver;
  opts.record_times = times;
  parallel_for(dataset.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Trajectory traj =
          solve_backward(model, dataset.subjects[i].path, dataset.subjects[i].y, opts);
      x[i].resize(times.size());
      for (std::size_t ti = 0; ti < times.size(); ++ti)
        x[i][ti] = traj.value_at(times[ti]);
    }
  });
  return x;
}

}  // namespace

ScoreSpec ScoreSpec::for_scenario(const Scenario &scenario) {
  ScoreSpec spec;
  spec.decision_times = scenario.decision_times();
  switch (scenario.kind) {
    case ScenarioKind::GvHDSurvival:
    case ScenarioKind::NullEffect:
      spec.treat_coord = 1;   // exposure indicator
      spec.alive_coord = 0;
      break;
    case ScenarioKind::PCPContinuous:
      spec.treat_coord = 0;   // prophylaxis indicator
      spec.alive_coord = -1;
      break;
    case ScenarioKind::DiscreteTree:
      throw config_error("discrete_tree: score machinery targets the continuous scenarios");
  }
  return spec;
}

ScoreResult score_statistic(const Dataset &dataset, const ShiftModel &model,
                            const ScoreSpec &spec, const SolverOptions &solver) {
  model.validate();
  ScoreEngine engine(dataset, spec);
  const auto x = solve_x_at_times(dataset, model, spec.decision_times, solver, spec.threads);
  const auto &times = spec.decision_times;
  return engine.evaluate_with([&](std::size_t i, double d) {
    const auto it = std::lower_bound(times.begin(), times.end(), d);
    return x[i][static_cast<std::size_t>(it - times.begin())];
  });
}

NullTestResult test_no_effect(const Dataset &dataset, const ScoreSpec &spec) {
  ScoreEngine engine(dataset, spec);
  NullTestResult out;
  out.detail = engine.evaluate_with(
      [&](std::size_t i, double) { return dataset.subjects[i].y; });
  out.z = out.detail.z;
  out.p_value = 2.0 * (1.0 - normal_cdf(std::abs(out.z)));
  return out;
}

EstimationResult estimate_psi(const Dataset &dataset, const ShiftModel &model_template,
                              const ScoreSpec &spec, const SearchOptions &search,
                              std::size_t psi_component, const SolverOptions &solver) {
  if (psi_component >= model_template.psi.size())
    throw config_error("estimate_psi: psi component out of range");
  if (!(search.hi > search.lo) || search.grid_points < 3)
    throw config_error("estimate_psi: invalid search options");

  ScoreEngine engine(dataset, spec);
  const auto &times = spec.decision_times;
  auto z_at = [&](double psi_value, double *score_out = nullptr) {
    ShiftModel m = model_template;
    m.psi[psi_component] = psi_value;
    const auto x = solve_x_at_times(dataset, m, times, solver, spec.threads);
    const ScoreResult r = engine.evaluate_with([&](std::size_t i, double d) {
      const auto it = std::lower_bound(times.begin(), times.end(), d);
      return x[i][static_cast<std::size_t>(it - times.begin())];
    });
    if (score_out) *score_out = r.score;
    return r.z;
  };

  EstimationResult result;
  std::vector<double> psis(search.grid_points), zs(search.grid_points),
      scores(search.grid_points);
  for (std::size_t g = 0; g < search.grid_points; ++g) {
    psis[g] = search.lo + (search.hi - search.lo) * static_cast<double>(g) /
                              static_cast<double>(search.grid_points - 1);
    zs[g] = z_at(psis[g], &scores[g]);
    result.score_curve.emplace_back(psis[g], zs[g]);
  }

  // root of the score by bisection on the first sign change
  double psi_hat = 0.0;
  bool found = false;
  for (std::size_t g = 0; g + 1 < search.grid_points && !found; ++g) {
    if (scores[g] == 0.0) {
      psi_hat = psis[g];
      found = true;
      break;
    }
    if (scores[g] * scores[g + 1] < 0.0) {
      double lo = psis[g], hi = psis[g + 1], s_lo = scores[g];
      for (int iter = 0; iter < 60; ++iter) {
        const double mid = 0.5 * (lo + hi);
        double s_mid;
        z_at(mid, &s_mid);
        if (s_mid == 0.0) {
          lo = hi = mid;
          break;
        }
        if (s_lo * s_mid < 0.0)
          hi = mid;
        else {
          lo = mid;
          s_lo = s_mid;
        }
        if (hi - lo < 1e-8) break;
      }
      psi_hat = 0.5 * (lo + hi);
      found = true;
    }
  }
  if (!found) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < zs.size(); ++g)
      if (std::abs(zs[g]) < std::abs(zs[best])) best = g;
    if (std::abs(zs[best]) < search.z_threshold) {
      psi_hat = psis[best];
      found = true;
      result.message = "score has no sign change; grid minimum below threshold used";
    } else {
      result.identified = false;
      result.message =
          "not identified: score has no sign change and no interior minimum below threshold";
      result.psi_hat = model_template.psi;
      result.psi_hat[psi_component] = psis[best];
      result.ci_lo = search.lo;
      result.ci_hi = search.hi;
      result.ci_clipped_lo = result.ci_clipped_hi = true;
      return result;
    }
  }
  result.identified = true;
  result.psi_hat = model_template.psi;
  result.psi_hat[psi_component] = psi_hat;

  // test-inversion CI: |z| < threshold region, endpoint refinement
  auto abs_z_minus = [&](double v) { return std::abs(z_at(v)) - search.z_threshold; };
  double lo_edge = search.lo, hi_edge = search.hi;
  bool lo_found = false, hi_found = false;
  for (std::size_t g = 0; g + 1 < search.grid_points; ++g) {
    const bool in_g = std::abs(zs[g]) < search.z_threshold;
    const bool in_g1 = std::abs(zs[g + 1]) < search.z_threshold;
    if (!in_g && in_g1 && !lo_found) {
      double a = psis[g], b = psis[g + 1];
      for (int iter = 0; iter < 40 && b - a > 1e-6; ++iter) {
        const double mid = 0.5 * (a + b);
        if (abs_z_minus(mid) > 0.0)
          a = mid;
        else
          b = mid;
      }
      lo_edge = 0.5 * (a + b);
      lo_found = true;
    }
    if (in_g && !in_g1) {
      double a = psis[g], b = psis[g + 1];
      for (int iter = 0; iter < 40 && b - a > 1e-6; ++iter) {
        const double mid = 0.5 * (a + b);
        if (abs_z_minus(mid) < 0.0)
          a = mid;
        else
          b = mid;
      }
      hi_edge = 0.5 * (a + b);
      hi_found = true;
    }
  }
  result.ci_lo = lo_found ? lo_edge : search.lo;
  result.ci_hi = hi_found ? hi_edge : search.hi;
  result.ci_clipped_lo = !lo_found && std::abs(zs.front()) < search.z_threshold;
  result.ci_clipped_hi = !hi_found && std::abs(zs.back()) < search.z_threshold;
  if (result.ci_lo > result.psi_hat[psi_component]) result.ci_lo = result.psi_hat[psi_component];
  if (result.ci_hi < result.psi_hat[psi_component]) result.ci_hi = result.psi_hat[psi_component];
  return result;
}

std::string EstimationResult::to_json_string() const {
  nlohmann::json j;
  j["psi_hat"] = psi_hat;
  j["identified"] = identified;
  j["ci"] = {ci_lo, ci_hi};
  j["ci_clipped"] = {ci_clipped_lo, ci_clipped_hi};
  if (!message.empty()) j["message"] = message;
  nlohmann::json curve = nlohmann::json::array();
  for (const auto &[p, z] : score_curve) curve.push_back({p, z});
  j["score_curve"] = curve;
  return j.dump(2);
}

std::string EstimationResult::score_curve_csv() const {
  std::ostringstream out;
  out << "psi,z\n";
  char buf[40];
  for (const auto &[p, z] : score_curve) {
    std::snprintf(buf, sizeof buf, "%.17g", p);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", z);
    out << buf << '\n';
  }
  return out.str();
}

}  // namespace ctsnm
