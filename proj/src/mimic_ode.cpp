#include "ctsnm/mimic_ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ctsnm/errors.hpp"

namespace ctsnm {

double Trajectory::value_at(double t) const {
  if (mesh.empty()) throw std::domain_error("Trajectory: empty mesh");
  if (t <= mesh.front()) return values.front();
  if (t >= mesh.back()) return values.back();
  auto it = std::upper_bound(mesh.begin(), mesh.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - mesh.begin());
  const double t0 = mesh[i - 1], t1 = mesh[i];
  if (t1 == t0) return values[i];
  const double h = t1 - t0;
  const double w = (t - t0) / h;
  if (derivatives.size() == values.size()) {
    const double w2 = w * w, w3 = w2 * w;
    return (2 * w3 - 3 * w2 + 1) * values[i - 1] + (w3 - 2 * w2 + w) * h * derivatives[i - 1] +
           (-2 * w3 + 3 * w2) * values[i] + (w3 - w2) * h * derivatives[i];
  }
  return values[i - 1] * (1.0 - w) + values[i] * w;
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

struct Integrator {
  const std::function<double(double, double)> &f;
  const SolverOptions &opts;
  SolverReport report;
  bool survival_diag_check = false;

  double eval(double y, double t) {
    ++report.rhs_evaluations;
    return f(y, t);
  }

  // One backward segment from t_hi down to t_lo, appending (time, value,
  // derivative) triples in descending time order (t_hi itself is assumed
  // already recorded).
  void segment(double t_hi, double t_lo, double &y,
               std::vector<double> &ts, std::vector<double> &ys, std::vector<double> &ds) {
    if (t_hi <= t_lo) return;
    double t = t_hi;
    double h = -(t_hi - t_lo);  // negative: integrating backward
    double k1 = eval(y, t);     // derivative at the current point (FSAL)
    if (ts.empty()) {
      ts.push_back(t_hi);
      ys.push_back(y);
      ds.push_back(k1);
    } else if (ts.back() == t_hi && ds.back() != k1) {
      // one-sided derivatives at a boundary: keep both so interpolation uses
      // the correct side in each adjacent cell
      ts.push_back(t_hi);
      ys.push_back(y);
      ds.push_back(k1);
    }
    while (t > t_lo) {
      if (t + h < t_lo) h = t_lo - t;
      if (report.steps_accepted + report.steps_rejected >= opts.max_steps)
        throw solver_error("solve_backward: step budget exhausted (accepted " +
                           std::to_string(report.steps_accepted) + ", rejected " +
                           std::to_string(report.steps_rejected) + ", t = " +
                           std::to_string(t) + ")");
      const double k2 = eval(y + h * a21 * k1, t + c2 * h);
      const double k3 = eval(y + h * (a31 * k1 + a32 * k2), t + c3 * h);
      const double k4 = eval(y + h * (a41 * k1 + a42 * k2 + a43 * k3), t + c4 * h);
      const double k5 = eval(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), t + c5 * h);
      const double k6 = eval(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), t + h);
      const double y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const double k7 = eval(y5, t + h);
      const double err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double scale = opts.abs_tol + opts.rel_tol * std::max(std::abs(y), std::abs(y5));
      const double err_norm = std::abs(err) / scale;

      if (err_norm <= 1.0) {
        t += h;
        y = y5;
        k1 = k7;  // first-same-as-last
        ts.push_back(t);
        ys.push_back(y);
        ds.push_back(k7);
        ++report.steps_accepted;
        report.max_local_error = std::max(report.max_local_error, std::abs(err));
        if (survival_diag_check && y < t - opts.survival_dip_tol)
          throw regularity_error(
              "solve_backward: survival trajectory dips below the diagonal at t = " +
              std::to_string(t) + " (X = " + std::to_string(y) +
              "); the shift model violates the diagonal bound");
        const double grow = err_norm == 0.0 ? 5.0
                                            : std::min(5.0, 0.9 * std::pow(err_norm, -0.2));
        h *= std::max(grow, 0.2);
      } else {
        ++report.steps_rejected;
        h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
      }
      const double min_h = 1e-14 * std::max(1.0, std::abs(t_hi - t_lo));
      if (std::abs(h) < min_h) {
        if (t + h <= t_lo) continue;  // final sliver, will clamp
        throw solver_error("solve_backward: step size underflow at t = " + std::to_string(t));
      }
    }
    // Land on the boundary exactly.
    if (ts.empty() || ts.back() != t_lo) {
      ts.push_back(t_lo);
      ys.push_back(y);
      ds.push_back(k1);
    } else {
      ts.back() = t_lo;
    }
  }
};

std::vector<double> boundaries_in(double lo, double hi, const SamplePath &path,
                                  const std::vector<double> &extra) {
  std::set<double> b;
  b.insert(lo);
  b.insert(hi);
  for (double t : path.jump_times())
    if (t > lo && t < hi) b.insert(t);
  for (double t : extra)
    if (t > lo && t < hi) b.insert(t);
  return std::vector<double>(b.begin(), b.end());
}

}  // namespace

Trajectory solve_backward_rhs(const std::function<double(double, double)> &d,
                              double t_end, double y_end,
                              const std::vector<double> &split_times,
                              const SolverOptions &opts) {
  std::set<double> b;
  b.insert(0.0);
  b.insert(t_end);
  for (double t : split_times)
    if (t > 0.0 && t < t_end) b.insert(t);
  std::vector<double> bounds(b.begin(), b.end());

  Integrator integ{d, opts, {}, false};
  std::vector<double> ts, ys, ds;
  double y = y_end;
  for (std::size_t i = bounds.size() - 1; i > 0; --i)
    integ.segment(bounds[i], bounds[i - 1], y, ts, ys, ds);
  if (ts.empty()) {
    ts.push_back(t_end);
    ys.push_back(y_end);
    ds.push_back(0.0);
  }

  Trajectory traj;
  traj.final_value = y_end;
  traj.report = integ.report;
  traj.mesh.assign(ts.rbegin(), ts.rend());
  traj.values.assign(ys.rbegin(), ys.rend());
  traj.derivatives.assign(ds.rbegin(), ds.rend());
  return traj;
}

Trajectory solve_backward(const ShiftModel &model, const SamplePath &path, double y,
                          const SolverOptions &opts) {
  model.validate();
  const double tau = path.horizon();
  const bool survival = model.outcome_kind == OutcomeKind::Survival;
  if (survival) {
    if (!(y > 0.0)) throw std::domain_error("solve_backward: survival outcome must be > 0");
  } else {
    if (y < model.budget.y1 || y > model.budget.y2)
      throw std::domain_error("solve_backward: final value outside support [y1, y2]");
  }

  // For survival, D vanishes on [min(y, tau), tau]; the trajectory there is
  // identically y.
  const double start = survival ? std::min(y, tau) : tau;

  std::vector<double> ts, ys, ds;
  // Mesh points in the analytic region [start, tau]: X is identically y and
  // flat there.
  if (start < tau) {
    std::set<double> flat;
    flat.insert(tau);
    flat.insert(start);
    for (double t : path.jump_times())
      if (t > start && t < tau) flat.insert(t);
    for (double t : opts.record_times)
      if (t > start && t < tau) flat.insert(t);
    for (auto it = flat.rbegin(); it != flat.rend(); ++it) {
      ts.push_back(*it);
      ys.push_back(y);
      ds.push_back(0.0);
    }
  }

  const std::vector<double> bounds = boundaries_in(0.0, start, path, opts.record_times);
  SolverReport report;
  double x = y;
  for (std::size_t i = bounds.size() - 1; i > 0; --i) {
    const double hi = bounds[i], lo = bounds[i - 1];
    // The path is constant on [lo, hi); at hi the left extension of the shift
    // is used, so the whole closed segment sees one frozen snapshot.
    const std::vector<double> frozen = path.value_at(lo);
    auto rhs = [&](double yy, double tt) { return shift_with_values(model, yy, tt, frozen); };
    std::function<double(double, double)> f = rhs;
    Integrator integ{f, opts, report, survival};
    integ.segment(hi, lo, x, ts, ys, ds);
    report = integ.report;
  }

  if (ts.empty()) {  // degenerate horizon
    ts.push_back(tau);
    ys.push_back(y);
    ds.push_back(0.0);
  }

  Trajectory traj;
  traj.final_value = y;
  traj.report = report;
  traj.mesh.assign(ts.rbegin(), ts.rend());
  traj.values.assign(ys.rbegin(), ys.rend());
  traj.derivatives.assign(ds.rbegin(), ds.rend());

  if (survival) {
    for (std::size_t i = 0; i < traj.mesh.size(); ++i) {
      const double t = traj.mesh[i];
      if (t < y && traj.values[i] < t - opts.survival_dip_tol)
        throw regularity_error(
            "solve_backward: survival trajectory dips below the diagonal at t = " +
            std::to_string(t) + " (X = " + std::to_string(traj.values[i]) +
            "); the shift model violates the diagonal bound");
    }
  }
  return traj;
}

double gronwall_gap_bound(const Trajectory &traj,
                          const std::function<double(double, double)> &shift_gap,
                          const RegularityBudget &budget) {
  if (traj.mesh.size() < 2) throw std::domain_error("gronwall_gap_bound: mesh too small");
  const double C = gronwall_constant(budget);

  // Trapezoid over a refinement of the trajectory mesh; X interpolates
  // linearly, the integrand is e^{C s} |gap(X(s), s)|.
  std::vector<double> s = traj.mesh;
  auto integrate = [&](const std::vector<double> &pts) {
    double total = 0.0;
    double prev_g = std::exp(C * pts.front()) *
                    std::abs(shift_gap(traj.value_at(pts.front()), pts.front()));
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double g = std::exp(C * pts[i]) *
                       std::abs(shift_gap(traj.value_at(pts[i]), pts[i]));
      total += 0.5 * (prev_g + g) * (pts[i] - pts[i - 1]);
      prev_g = g;
    }
    return total;
  };

  double value = integrate(s);
  for (int round = 0; round < 12; ++round) {
    std::vector<double> finer;
    finer.reserve(s.size() * 2);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      finer.push_back(s[i]);
      finer.push_back(0.5 * (s[i] + s[i + 1]));
    }
    finer.push_back(s.back());
    const double refined = integrate(finer);
    const bool settled = std::abs(refined - value) <= 0.001 * std::abs(refined);
    value = refined;
    s = std::move(finer);
    if (settled) break;
  }
  return value;
}

double sup_distance(const Trajectory &a, const Trajectory &b) {
  if (a.mesh != b.mesh) throw std::domain_error("sup_distance: trajectories must share a mesh");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  return worst;
}

SurvivalCheckReport check_survival_constraints(const Trajectory &traj, double y, double tol) {
  SurvivalCheckReport rep;
  for (std::size_t i = 0; i < traj.mesh.size(); ++i) {
    const double t = traj.mesh[i], x = traj.values[i];
    if (t < y) {
      const double below = t - x;
      if (below > rep.worst_below_diagonal) {
        rep.worst_below_diagonal = below;
        if (below > tol) rep.worst_time = t;
      }
    } else {
      const double dev = std::abs(x - y);
      if (dev > rep.worst_final_deviation) {
        rep.worst_final_deviation = dev;
        if (dev > tol) rep.worst_time = t;
      }
    }
  }
  rep.pass = rep.worst_below_diagonal <= tol && rep.worst_final_deviation <= tol;
  return rep;
}

std::optional<double> closed_form_mimic(const ShiftModel &model, const SamplePath &path,
                                        double y, double t) {
  if (model.family != ShiftFamily::GvHDMultiplicative &&
      model.family != ShiftFamily::PCPProphylaxis)
    return std::nullopt;
  const double tau = path.horizon();
  const bool survival = model.outcome_kind == OutcomeKind::Survival;
  const double upper = survival ? std::min(y, tau) : tau;
  if (t >= upper) return y;

  // The shift is piecewise constant in t between jumps; integrate segment by
  // segment. Any representative point inside the segment determines D.
  double integral = 0.0;
  std::vector<double> cuts{t, upper};
  for (double jt : path.jump_times())
    if (jt > t && jt < upper) cuts.push_back(jt);
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const double d = shift_with_values(model, std::max(y, lo), lo, path.value_at(lo));
    integral += d * (hi - lo);
  }
  return y - integral;
}

std::string trajectory_to_csv(const Trajectory &traj) {
  std::ostringstream out;
  out << "t,x\n";
  char buf[40];
  for (std::size_t i = 0; i < traj.mesh.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.mesh[i]);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", traj.values[i]);
    out << buf << '\n';
  }
  return out.str();
}

std::string solver_report_to_json(const SolverReport &report) {
  std::ostringstream out;
  out << "{\"steps_accepted\":" << report.steps_accepted
      << ",\"steps_rejected\":" << report.steps_rejected
      << ",\"rhs_evaluations\":" << report.rhs_evaluations
      << ",\"max_local_error\":" << report.max_local_error << "}";
  return out.str();
}

}  // namespace ctsnm
