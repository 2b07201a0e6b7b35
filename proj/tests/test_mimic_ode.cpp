#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ctsnm/errors.hpp"
#include "ctsnm/mimic_ode.hpp"
#include "ctsnm/rng.hpp"
#include "ctsnm/sample_path.hpp"
#include "ctsnm/shift_model.hpp"

using namespace ctsnm;

namespace {

// Test-local oracle: analytic backward integral of the (y-independent)
// built-in shifts, X(t) = y - sum over path segments of D * length, where the
// integration stops at tau (continuous) or min(y, tau) (survival).
double oracle_mimic(const ShiftModel &m, const SamplePath &path, double y, double t) {
  const double upper =
      m.outcome_kind == OutcomeKind::Survival ? std::min(y, path.horizon()) : path.horizon();
  if (t >= upper) return y;
  std::vector<double> cuts{t, upper};
  for (double jt : path.jump_times())
    if (jt > t && jt < upper) cuts.push_back(jt);
  std::sort(cuts.begin(), cuts.end());
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto &z = path.value_at(cuts[i]);
    double d = 0.0;
    if (m.family == ShiftFamily::GvHDMultiplicative) {
      if (z[m.indicator_coord] != 0.0) d = 1.0 - std::exp(m.psi[0]);
    } else {  // prophylaxis
      if (z[m.indicator_coord] != 0.0)
        d = 1.0 - std::exp(m.psi[0] + m.psi[1] * z[m.pcp_coord] + m.psi[2] * z[m.arm_coord]);
    }
    integral += d * (cuts[i + 1] - cuts[i]);
  }
  return y - integral;
}

SamplePath random_survival_path(Rng &rng, double tau, double death) {
  // [alive, indicator]; exposure switches on at a random time and stays
  SamplePath p(tau, {1.0, rng.bernoulli(0.3) ? 1.0 : 0.0});
  if (p.value_at(0.0, 1) == 0.0 && rng.bernoulli(0.8)) {
    const double onset = rng.uniform(0.05, tau * 0.95);
    if (onset < std::min(death, tau)) p.set_value(onset, {1.0, 1.0});
  }
  if (death <= tau) {
    const double ind = p.value_at(std::nexttoward(death, 0.0), 1);
    p.set_value(death, {0.0, ind});
  }
  return p;
}

SamplePath random_pcp_path(Rng &rng, double tau) {
  // [treated, pcp, arm]
  const double arm = rng.bernoulli(0.5) ? 2.0 : 1.0;
  double pcp = rng.bernoulli(0.4) ? 1.0 : 0.0;
  SamplePath p(tau, {0.0, pcp, arm});
  double t = rng.uniform(0.05, 0.5 * tau);
  if (pcp == 0.0 && rng.bernoulli(0.5)) {
    p.set_value(t, {0.0, 1.0, arm});
    pcp = 1.0;
    t += rng.uniform(0.05, 0.3 * tau);
  }
  if (t < tau && rng.bernoulli(0.9)) p.set_value(t, {1.0, pcp, arm});
  return p;
}

}  // namespace

TEST_CASE("psi = 0 collapses the trajectory onto Y exactly") {
  Rng rng(3);
  const ShiftModel m = ShiftModel::gvhd(0.0, OutcomeKind::Survival);
  for (int rep = 0; rep < 25; ++rep) {
    const double y = rng.uniform(0.2, 3.0);
    const SamplePath p = random_survival_path(rng, 2.0, y);
    const Trajectory traj = solve_backward(m, p, y);
    for (double v : traj.values) CHECK(v == y);
  }
}

TEST_CASE("exposure over the whole residual time doubles it at psi = ln 2") {
  // X(0) = 0 + int_0^1 e^{ln 2} ds = 2 for Y = 1 with exposure active on [0, Y]
  SamplePath p(2.0, {1.0, 1.0});
  p.set_value(1.0, {0.0, 1.0});
  const ShiftModel m = ShiftModel::gvhd(std::log(2.0), OutcomeKind::Survival);
  const Trajectory traj = solve_backward(m, p, 1.0);
  CHECK(traj.value_at(0.0) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("survival trajectories sit at Y from the death time on") {
  SamplePath p(2.0, {1.0, 1.0});
  p.set_value(0.8, {0.0, 1.0});
  const ShiftModel m = ShiftModel::gvhd(std::log(2.0), OutcomeKind::Survival);
  SolverOptions opts;
  opts.record_times = {0.9, 1.3, 1.7};
  const Trajectory traj = solve_backward(m, p, 0.8, opts);
  CHECK(traj.values.back() == 0.8);  // X(tau) = Y exactly
  for (std::size_t i = 0; i < traj.mesh.size(); ++i)
    if (traj.mesh[i] >= 0.8) CHECK(traj.values[i] == 0.8);
}

TEST_CASE("final condition holds exactly for continuous outcomes") {
  Rng rng(9);
  ShiftModel m = ShiftModel::pcp(0.4, -0.2, 0.1, OutcomeKind::Continuous);
  m.budget.y1 = -50.0;
  m.budget.y2 = 50.0;
  for (int rep = 0; rep < 10; ++rep) {
    const SamplePath p = random_pcp_path(rng, 2.0);
    const double y = rng.uniform(-3.0, 3.0);
    const Trajectory traj = solve_backward(m, p, y);
    CHECK(traj.values.back() == y);
    CHECK(traj.mesh.front() == 0.0);
    CHECK(traj.mesh.back() == 2.0);
  }
}

TEST_CASE("solver matches the closed forms on randomized cases") {
  Rng rng(2024);
  const double tau = 2.0;
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    // survival, multiplicative family
    {
      const double psi = rng.uniform(-1.5, 1.5);
      const double y = rng.uniform(0.2, 4.0);
      const SamplePath p = random_survival_path(rng, tau, y);
      ShiftModel m = ShiftModel::gvhd(psi, OutcomeKind::Survival);
      const Trajectory traj = solve_backward(m, p, y);
      for (double t : {0.0, 0.33, 0.77, 1.5}) {
        const double expected = oracle_mimic(m, p, y, t);
        CHECK(std::abs(traj.value_at(t) - expected) <=
              1e-8 * std::max(1.0, std::abs(expected)));
      }
    }
    // continuous, prophylaxis family
    {
      ShiftModel m = ShiftModel::pcp(rng.uniform(-1.5, 1.5), rng.uniform(-0.5, 0.5),
                                     rng.uniform(-0.5, 0.5), OutcomeKind::Continuous);
      m.budget.y1 = -100.0;
      m.budget.y2 = 100.0;
      const double y = rng.uniform(-2.0, 2.0);
      const SamplePath p = random_pcp_path(rng, tau);
      const Trajectory traj = solve_backward(m, p, y);
      for (double t : {0.0, 0.5, 1.2}) {
        const double expected = oracle_mimic(m, p, y, t);
        CHECK(std::abs(traj.value_at(t) - expected) <=
              1e-8 * std::max(1.0, std::abs(expected)));
      }
    }
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("trajectories are monotone in the final condition") {
  Rng rng(77);
  ShiftModel m = ShiftModel::gvhd(0.8, OutcomeKind::Survival);
  for (int rep = 0; rep < 20; ++rep) {
    double y1 = rng.uniform(0.3, 3.0), y2 = rng.uniform(0.3, 3.0);
    if (y1 > y2) std::swap(y1, y2);
    if (y2 - y1 < 1e-6) continue;
    const SamplePath p = random_survival_path(rng, 2.0, 1e9);  // no death jump
    SolverOptions opts;
    opts.record_times = {0.1, 0.5, 0.9, 1.4, 1.9};
    const Trajectory a = solve_backward(m, p, y1, opts);
    const Trajectory b = solve_backward(m, p, y2, opts);
    for (double t : opts.record_times)
      CHECK(a.value_at(t) <= b.value_at(t) + 1e-10);
  }
}

TEST_CASE("a shift vanishing at the support edges keeps the solution inside") {
  // D(y, t) = k (y - y1)(y2 - y) sampled on a lattice; zero at both edges, so
  // trajectories started inside [y1, y2] stay inside.
  const double y1 = 0.0, y2 = 4.0;
  ShiftTable tab;
  for (int i = 0; i <= 16; ++i) tab.y_grid.push_back(y1 + (y2 - y1) * i / 16.0);
  tab.t_grid = {0.0, 2.0};
  std::vector<double> vals;
  for (double y : tab.y_grid) {
    const double d = 0.6 * (y - y1) * (y2 - y);
    vals.push_back(d);
    vals.push_back(d);
  }
  tab.values[0] = vals;
  tab.bin_width = 1e9;
  ShiftModel m = ShiftModel::tabulated(tab, OutcomeKind::Continuous);
  m.budget.y1 = y1;
  m.budget.y2 = y2;

  SamplePath p(2.0, {0.0});
  Rng rng(15);
  for (int rep = 0; rep < 10; ++rep) {
    const double y = rng.uniform(y1 + 0.05, y2 - 0.05);
    const Trajectory traj = solve_backward(m, p, y);
    const auto [lo, hi] = std::minmax_element(traj.values.begin(), traj.values.end());
    CHECK(*lo >= y1 - 1e-9);
    CHECK(*hi <= y2 + 1e-9);
  }
}

TEST_CASE("generic backward solve matches a linear manufactured solution") {
  // X' = a X with X(tau) = y has X(t) = y e^{a (t - tau)}
  const double a = 0.7, tau = 1.5, y = 2.3;
  const Trajectory traj =
      solve_backward_rhs([a](double x, double) { return a * x; }, tau, y,
                         {0.4, 1.0});
  for (double t : {0.0, 0.4, 1.0, 1.5}) {
    const double expected = y * std::exp(a * (t - tau));
    CHECK(traj.value_at(t) == doctest::Approx(expected).epsilon(1e-8));
  }
  // dense output between mesh points stays within interpolation accuracy
  CHECK(traj.value_at(0.7) ==
        doctest::Approx(y * std::exp(a * (0.7 - tau))).epsilon(1e-6));
}

TEST_CASE("gronwall bound basics") {
  SamplePath p(1.0, {0.0});
  ShiftModel m = ShiftModel::gvhd(0.0, OutcomeKind::Continuous);
  m.budget.y1 = -10.0;
  m.budget.y2 = 10.0;
  const Trajectory traj = solve_backward(m, p, 0.5);

  RegularityBudget b{1.0, 1.0, 1.0, 1.0, 1.0, -10.0, 10.0};
  CHECK(gronwall_gap_bound(traj, [](double, double) { return 0.0; }, b) == 0.0);

  // C = 0 with a constant gap g integrates to g * tau exactly
  RegularityBudget zero_c{1.0, 1.0, 0.0, 0.0, 0.0, -10.0, 10.0};
  const double g = 0.37;
  CHECK(gronwall_gap_bound(traj, [g](double, double) { return g; }, zero_c) ==
        doctest::Approx(g * 1.0));
}

TEST_CASE("sup distance requires a shared mesh") {
  Trajectory a, b;
  a.mesh = {0.0, 1.0};
  a.values = {1.0, 2.0};
  b.mesh = {0.0, 0.5, 1.0};
  b.values = {1.0, 1.0, 2.0};
  CHECK_THROWS_AS(sup_distance(a, b), std::domain_error);
  b.mesh = {0.0, 1.0};
  b.values = {1.25, 2.0};
  CHECK(sup_distance(a, b) == doctest::Approx(0.25));
}

TEST_CASE("survival constraint checks") {
  // closed-form trajectory satisfies the constraints identically
  SamplePath p(2.0, {1.0, 1.0});
  p.set_value(1.0, {0.0, 1.0});
  const ShiftModel m = ShiftModel::gvhd(std::log(2.0), OutcomeKind::Survival);
  const Trajectory traj = solve_backward(m, p, 1.0);
  CHECK(check_survival_constraints(traj, 1.0).pass);

  Trajectory flat;
  flat.mesh = {0.0, 0.5, 1.0};
  flat.values = {1.0, 1.0, 1.0};
  flat.final_value = 1.0;
  CHECK(check_survival_constraints(flat, 1.0).pass);

  Trajectory dip;
  dip.mesh = {0.0, 0.5, 1.0};
  dip.values = {0.8, 0.3, 1.0};  // X(0.5) = 0.3 < 0.5
  dip.final_value = 1.0;
  const auto rep = check_survival_constraints(dip, 1.0);
  CHECK_FALSE(rep.pass);
  CHECK(rep.worst_time == doctest::Approx(0.5));
  CHECK(rep.worst_below_diagonal == doctest::Approx(0.2));
}

TEST_CASE("a diagonal-violating survival model is reported, not clamped") {
  // constant D = 1.6 > 1 drives X below the diagonal near t = Y
  ShiftTable tab;
  tab.y_grid = {-10.0, 10.0};
  tab.t_grid = {0.0, 2.0};
  tab.values[0] = {1.6, 1.6, 1.6, 1.6};
  tab.bin_width = 1e9;
  ShiftModel m = ShiftModel::tabulated(tab, OutcomeKind::Survival);
  SamplePath p(2.0, {1.0});
  p.set_value(1.0, {0.0});
  CHECK_THROWS_AS(solve_backward(m, p, 1.0), regularity_error);
}

TEST_CASE("an exhausted step budget is a solver failure with diagnostics") {
  SamplePath p(1.0, {1.0});
  ShiftModel m = ShiftModel::gvhd(0.9, OutcomeKind::Continuous);
  m.budget.y1 = -100.0;
  m.budget.y2 = 100.0;
  SolverOptions opts;
  opts.max_steps = 1;
  opts.record_times = {0.2, 0.4, 0.6, 0.8};
  CHECK_THROWS_AS(solve_backward(m, p, 1.0, opts), solver_error);
}

TEST_CASE("a jump coinciding with tau uses the left extension") {
  SamplePath p(1.0, {1.0});
  p.set_value(1.0, {0.0});  // switch-off exactly at the horizon
  ShiftModel m = ShiftModel::gvhd(0.5, OutcomeKind::Continuous);
  m.budget.y1 = -100.0;
  m.budget.y2 = 100.0;
  const Trajectory traj = solve_backward(m, p, 1.0);
  CHECK(traj.values.back() == 1.0);
  // the active branch (value before tau) drives the whole interval
  const double expected = 1.0 - (1.0 - std::exp(0.5)) * 1.0;
  CHECK(traj.value_at(0.0) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("trajectory export formats") {
  SamplePath p(1.0, {0.0});
  ShiftModel m = ShiftModel::gvhd(0.0, OutcomeKind::Continuous);
  m.budget.y1 = -10.0;
  m.budget.y2 = 10.0;
  const Trajectory traj = solve_backward(m, p, 0.25);
  const std::string csv = trajectory_to_csv(traj);
  CHECK(csv.rfind("t,x\n", 0) == 0);
  CHECK(csv.find("0.25") != std::string::npos);
  const std::string rep = solver_report_to_json(traj.report);
  CHECK(rep.find("\"steps_accepted\"") != std::string::npos);
  CHECK(rep.find("\"rhs_evaluations\"") != std::string::npos);
}

TEST_CASE("closed_form_mimic agrees with the solver where defined") {
  Rng rng(31);
  const ShiftModel m = ShiftModel::gvhd(0.6, OutcomeKind::Survival);
  for (int rep = 0; rep < 10; ++rep) {
    const double y = rng.uniform(0.3, 3.0);
    const SamplePath p = random_survival_path(rng, 2.0, y);
    const Trajectory traj = solve_backward(m, p, y);
    for (double t : {0.0, 0.6, 1.4}) {
      const auto cf = closed_form_mimic(m, p, y, t);
      REQUIRE(cf.has_value());
      CHECK(traj.value_at(t) == doctest::Approx(*cf).epsilon(1e-9));
    }
  }
  const ShiftModel de = ShiftModel::delayed(0.3, OutcomeKind::Continuous);
  SamplePath p(1.0, {1.0});
  CHECK_FALSE(closed_form_mimic(de, p, 0.5, 0.0).has_value());
}
