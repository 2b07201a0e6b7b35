#ifndef CTSNM_SHIFT_MODEL_HPP
#define CTSNM_SHIFT_MODEL_HPP

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "ctsnm/sample_path.hpp"

namespace ctsnm {

enum class OutcomeKind { Continuous, Survival };

enum class ShiftFamily { GvHDMultiplicative, PCPProphylaxis, DelayedEffect, UserTabulated };

std::string to_string(OutcomeKind kind);
std::string to_string(ShiftFamily family);
OutcomeKind outcome_kind_from_string(const std::string &s);
ShiftFamily shift_family_from_string(const std::string &s);

// Regularity constants: density floor eps, density cap c1, h-derivative cap
// c2, Lipschitz constants l1 (density) and l2 (h-derivative), support limits.
// Survival models only use y2 (support is [t, y2]).
struct RegularityBudget {
  double eps = 0.05;
  double c1 = 1.0;
  double c2 = 1.0;
  double l1 = 1.0;
  double l2 = 1.0;
  double y1 = 0.0;
  double y2 = 1.0;

  void validate(OutcomeKind kind) const;
};

// Lipschitz constant of the quotient expression for the shift function:
// L2/eps + C2*L1/eps^2.
double gronwall_constant(const RegularityBudget &budget);

// Nonparametric shift table: values over a (y, t) lattice per covariate bin,
// bilinear interpolation inside the lattice, clamped at the edges.
struct ShiftTable {
  std::vector<double> y_grid;  // strictly increasing
  std::vector<double> t_grid;  // strictly increasing
  // bin key -> row-major values [y index][t index]
  std::map<std::int64_t, std::vector<double>> values;
  std::size_t bin_coord = 0;   // path coordinate whose value selects the bin
  double bin_width = 1.0;

  double evaluate(std::int64_t bin, double y, double t) const;
  std::int64_t bin_of(double coord_value) const;
};

// Parametric family for the treatment-effect shift D_psi(y, t; path), with
// survival guards (zero when dead at t or when y < t).
struct ShiftModel {
  ShiftFamily family = ShiftFamily::GvHDMultiplicative;
  std::vector<double> psi;
  OutcomeKind outcome_kind = OutcomeKind::Continuous;
  RegularityBudget budget;

  // Path-coordinate layout. Defaults follow the built-in scenarios:
  // survival paths are [alive, indicator, ...extras], continuous paths put
  // the treatment indicator first.
  std::size_t alive_coord = 0;
  std::size_t indicator_coord = 1;
  std::size_t pcp_coord = 2;
  std::size_t arm_coord = 3;

  double delayed_window = 5.0;  // DelayedEffect: shift is 0 when y - t > window
  ShiftTable table;             // UserTabulated only

  static ShiftModel gvhd(double psi, OutcomeKind kind);
  static ShiftModel pcp(double psi1, double psi2, double psi3, OutcomeKind kind);
  static ShiftModel delayed(double psi, OutcomeKind kind, double window = 5.0);
  static ShiftModel tabulated(ShiftTable table, OutcomeKind kind);

  void validate() const;  // psi dimension, table shape

  std::string to_json_string() const;
  static ShiftModel from_json_string(const std::string &text);
  static ShiftModel load_json_file(const std::string &filename);
};

// D_psi(y, t; path). Survival guards are applied first: the value is 0 when
// the path indicates death at or before t, and 0 for y < t.
double shift(const ShiftModel &model, double y, double t, const SamplePath &path);

// Same evaluation against a frozen coordinate snapshot; used by the solver
// between jump times where the path value is constant.
double shift_with_values(const ShiftModel &model, double y, double t,
                         const std::vector<double> &path_values);

// lim_{y -> t+} D(y, t; path) for survival models. Closed-form families are
// y-independent on the active branch and return the branch value; tabulated
// models use offsets t + 2^-j, j = 10..20, with Richardson extrapolation.
// Throws std::domain_error for non-survival models.
double survival_limit_at_diagonal(const ShiftModel &model, double t, const SamplePath &path);

// A diagonal limit above this threshold signals a misspecified survival model
// (the limit must be <= 1 for valid models).
inline constexpr double kDiagonalLimitThreshold = 1.0 + 1e-9;

}  // namespace ctsnm

#endif
