#ifndef CTSNM_MIMIC_ODE_HPP
#define CTSNM_MIMIC_ODE_HPP

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctsnm/sample_path.hpp"
#include "ctsnm/shift_model.hpp"

namespace ctsnm {

struct SolverOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  std::size_t max_steps = 200000;
  double survival_dip_tol = 1e-8;          // X(t) < t - tol is a model-validity error
  std::vector<double> record_times;        // extra mesh points to land on exactly
};

struct SolverReport {
  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;
  std::size_t rhs_evaluations = 0;
  double max_local_error = 0.0;            // largest accepted local error estimate
};

// The mimicking solution X(t) on an ascending mesh that contains 0, tau and
// every jump time of the driving path. X(tau) equals the final value exactly.
struct Trajectory {
  std::vector<double> mesh;
  std::vector<double> values;
  std::vector<double> derivatives;  // dX/dt at mesh points when available
  double final_value = 0.0;
  SolverReport report;

  // Exact at mesh points; cubic Hermite between them when derivatives are
  // recorded, linear otherwise.
  double value_at(double t) const;
};

// Integrates X'(t) = D(X(t), t; path) backward from the final condition
// X(tau) = y with an adaptive Dormand-Prince 5(4) scheme, restarting at every
// jump time of the path so the right-hand side is continuous per interval
// (the left extension of D is used at interval right endpoints). Survival
// kind integrates on [0, min(y, tau)] and sets X identically to y beyond.
Trajectory solve_backward(const ShiftModel &model, const SamplePath &path, double y,
                          const SolverOptions &opts = {});

// Generic backward solve for an arbitrary right-hand side d(y, t) that may be
// discontinuous in t only at the given split times.
Trajectory solve_backward_rhs(const std::function<double(double, double)> &d,
                              double t_end, double y_end,
                              const std::vector<double> &split_times,
                              const SolverOptions &opts = {});

// Upper bound (up to quadrature error) on sup_t |X_a(t) - X_b(t)| when X_a
// solves the equation with shift gap |shift_gap| relative to the trajectory's
// own equation: integral over [0, tau] of e^{C s} |shift_gap(X(s), s)| ds,
// with C = gronwall_constant(budget). Trapezoidal quadrature on the
// trajectory mesh, refined by midpoint doubling until the value changes by
// less than 0.1%.
double gronwall_gap_bound(const Trajectory &traj,
                          const std::function<double(double, double)> &shift_gap,
                          const RegularityBudget &budget);

// Max |a - b| over the shared mesh. Throws std::domain_error when meshes
// differ.
double sup_distance(const Trajectory &a, const Trajectory &b);

struct SurvivalCheckReport {
  bool pass = true;
  double worst_below_diagonal = 0.0;  // max over mesh of (t - X(t)) for t < y
  double worst_final_deviation = 0.0; // max over mesh of |X(t) - y| for t >= y
  double worst_time = 0.0;
};

// Checks X(t) >= t - tol for t < y and |X(t) - y| <= tol for t >= y.
SurvivalCheckReport check_survival_constraints(const Trajectory &traj, double y,
                                               double tol = 1e-9);

// Analytic mimicking value for the built-in closed-form families
// (y-independent shifts): X(t) = y - integral of the shift over [t, upper],
// where upper is tau for continuous outcomes and min(y, tau) for survival.
// Returns nullopt for families without a closed form.
std::optional<double> closed_form_mimic(const ShiftModel &model, const SamplePath &path,
                                        double y, double t);

std::string trajectory_to_csv(const Trajectory &traj);
std::string solver_report_to_json(const SolverReport &report);

}  // namespace ctsnm

#endif
