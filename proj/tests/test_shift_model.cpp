#include "doctest.h"

#include <cmath>

#include "ctsnm/errors.hpp"
#include "ctsnm/sample_path.hpp"
#include "ctsnm/shift_model.hpp"

using namespace ctsnm;

namespace {

// survival path [alive, indicator]: exposure active from `onset` on, death at
// `death` when it falls inside the horizon
SamplePath survival_path(double tau, double onset, double death) {
  SamplePath p(tau, {1.0, onset <= 0.0 ? 1.0 : 0.0});
  if (onset > 0.0 && onset < std::min(death, tau)) p.set_value(onset, {1.0, 1.0});
  if (death <= tau) {
    const double ind = onset <= death ? 1.0 : 0.0;
    p.set_value(death, {0.0, ind});
  }
  return p;
}

ShiftTable constant_table(double value) {
  ShiftTable t;
  t.y_grid = {-10.0, 10.0};
  t.t_grid = {0.0, 10.0};
  t.values[0] = {value, value, value, value};
  t.bin_width = 1e9;  // single bin for any coordinate value
  return t;
}

}  // namespace

TEST_CASE("multiplicative family evaluates 1 - e^psi while exposure is active") {
  const SamplePath p = survival_path(2.0, 0.5, 100.0);
  ShiftModel m = ShiftModel::gvhd(std::log(2.0), OutcomeKind::Survival);
  CHECK(shift(m, 1.4, 1.0, p) == doctest::Approx(-1.0));  // 1 - 2
  CHECK(shift(m, 0.6, 0.3, p) == 0.0);                    // not yet exposed
}

TEST_CASE("psi = 0 gives a zero shift everywhere, for every family") {
  const SamplePath sp = survival_path(2.0, 0.2, 100.0);
  SamplePath cp(2.0, {1.0, 1.0, 2.0});  // continuous: [treated, pcp, arm]
  const ShiftModel gv = ShiftModel::gvhd(0.0, OutcomeKind::Survival);
  const ShiftModel pc = ShiftModel::pcp(0.0, 0.0, 0.0, OutcomeKind::Continuous);
  const ShiftModel de = ShiftModel::delayed(0.0, OutcomeKind::Continuous);
  for (double t : {0.0, 0.5, 1.0, 1.9}) {
    for (double y : {0.1, 1.0, 3.0, 7.0}) {
      CHECK(shift(gv, y, t, sp) == 0.0);
      CHECK(shift(pc, y, t, cp) == 0.0);
      CHECK(shift(de, y, t, cp) == 0.0);
    }
  }
}

TEST_CASE("prophylaxis family uses the psi-linear exponent") {
  SamplePath p(2.0, {1.0, 1.0, 2.0});
  const ShiftModel m = ShiftModel::pcp(0.3, -0.4, 0.1, OutcomeKind::Continuous);
  const double expected = 1.0 - std::exp(0.3 - 0.4 * 1.0 + 0.1 * 2.0);
  CHECK(shift(m, 1.0, 0.5, p) == doctest::Approx(expected));

  SamplePath untreated(2.0, {0.0, 1.0, 2.0});
  CHECK(shift(m, 1.0, 0.5, untreated) == 0.0);
}

TEST_CASE("delayed-effect family vanishes beyond its window") {
  SamplePath p(5.0, {1.0});
  const ShiftModel m = ShiftModel::delayed(0.7, OutcomeKind::Continuous);
  CHECK(shift(m, 10.0, 2.0, p) == 0.0);  // y - t = 8 > 5
  CHECK(shift(m, 6.0, 2.0, p) == doctest::Approx(1.0 - std::exp(0.7)));
}

TEST_CASE("survival guards are exact") {
  const SamplePath p = survival_path(2.0, 0.2, 1.0);
  const ShiftModel m = ShiftModel::gvhd(-0.8, OutcomeKind::Survival);
  for (double t : {0.3, 0.6, 0.9})
    CHECK(shift(m, t - 0.01, t, p) == 0.0);  // y < t
  for (double y : {0.5, 1.5, 3.0})
    for (double t : {1.0, 1.5, 2.0}) CHECK(shift(m, y, t, p) == 0.0);  // dead at t
}

TEST_CASE("gronwall constant formula") {
  CHECK(gronwall_constant({0.1, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0}) == doctest::Approx(110.0));
  CHECK(gronwall_constant({1.0, 1.0, 5.0, 0.0, 0.0, 0.0, 1.0}) == 0.0);
  CHECK(gronwall_constant({0.5, 1.0, 1.0, 2.0, 3.0, 0.0, 1.0}) == doctest::Approx(14.0));
}

TEST_CASE("diagonal limit for closed-form families equals the active branch value") {
  const SamplePath p = survival_path(2.0, 0.0, 100.0);
  for (double psi : {-1.0, -0.3, 0.0}) {
    const ShiftModel m = ShiftModel::gvhd(psi, OutcomeKind::Survival);
    const double limit = survival_limit_at_diagonal(m, 0.5, p);
    CHECK(limit == doctest::Approx(1.0 - std::exp(psi)));
    CHECK(limit <= kDiagonalLimitThreshold);
    CHECK(limit >= 0.0);
  }
  const ShiftModel null_model = ShiftModel::gvhd(0.0, OutcomeKind::Survival);
  CHECK(survival_limit_at_diagonal(null_model, 0.5, p) == 0.0);
}

TEST_CASE("diagonal limit is rejected for non-survival models") {
  SamplePath p(1.0, {1.0});
  const ShiftModel m = ShiftModel::gvhd(0.1, OutcomeKind::Continuous);
  CHECK_THROWS_AS(survival_limit_at_diagonal(m, 0.5, p), std::domain_error);
}

TEST_CASE("tabulated diagonal limit extrapolates the linear-in-y term away") {
  // D(y, t) = 0.3 + 0.5 y on a coarse grid; the limit at y -> t+ with t = 1
  // is 0.8 and Richardson extrapolation removes the first-order offset term.
  ShiftTable tab;
  tab.y_grid = {0.0, 4.0};
  tab.t_grid = {0.0, 4.0};
  tab.values[0] = {0.3, 0.3, 2.3, 2.3};  // rows y = 0 and y = 4
  tab.bin_width = 1e9;
  ShiftModel m = ShiftModel::tabulated(tab, OutcomeKind::Survival);
  m.alive_coord = 0;
  SamplePath p(4.0, {1.0});
  CHECK(survival_limit_at_diagonal(m, 1.0, p) == doctest::Approx(0.8).epsilon(1e-9));
}

TEST_CASE("a diagonal limit above one flags a misspecified survival model") {
  ShiftModel m = ShiftModel::tabulated(constant_table(1.5), OutcomeKind::Survival);
  m.alive_coord = 0;
  SamplePath p(4.0, {1.0});
  CHECK(survival_limit_at_diagonal(m, 1.0, p) > kDiagonalLimitThreshold);
}

TEST_CASE("shift is continuous in psi at every evaluation point") {
  const SamplePath p = survival_path(2.0, 0.0, 100.0);
  for (double psi : {-1.0, -0.2, 0.4, 1.2}) {
    const double d = 1e-7;
    const ShiftModel lo = ShiftModel::gvhd(psi - d, OutcomeKind::Survival);
    const ShiftModel hi = ShiftModel::gvhd(psi + d, OutcomeKind::Survival);
    CHECK(std::abs(shift(hi, 1.0, 0.5, p) - shift(lo, 1.0, 0.5, p)) < 1e-6);
  }
}

TEST_CASE("built-in shifts are constant in y on each branch") {
  const SamplePath p = survival_path(2.0, 0.0, 100.0);
  const ShiftModel m = ShiftModel::gvhd(0.9, OutcomeKind::Survival);
  const double ref = shift(m, 1.0, 0.5, p);
  for (double y : {0.6, 1.3, 5.0, 11.0}) CHECK(shift(m, y, 0.5, p) == ref);

  // delayed effect: constant within each branch of the window
  const ShiftModel de = ShiftModel::delayed(0.9, OutcomeKind::Continuous);
  SamplePath cp(2.0, {1.0});
  CHECK(shift(de, 1.0, 0.5, cp) == shift(de, 5.4, 0.5, cp));
  CHECK(shift(de, 5.6, 0.5, cp) == shift(de, 9.0, 0.5, cp));
}

TEST_CASE("coordinate mismatch is a configuration error") {
  SamplePath narrow(1.0, {1.0});
  const ShiftModel m = ShiftModel::pcp(0.1, 0.2, 0.3, OutcomeKind::Continuous);
  CHECK_THROWS_AS(shift(m, 0.5, 0.5, narrow), config_error);
}

TEST_CASE("model json round trip") {
  ShiftModel m = ShiftModel::pcp(0.25, -0.5, 0.75, OutcomeKind::Survival);
  m.budget = {0.02, 2.0, 3.0, 4.0, 5.0, 0.0, 12.0};
  const ShiftModel back = ShiftModel::from_json_string(m.to_json_string());
  CHECK(back.family == m.family);
  CHECK(back.psi == m.psi);
  CHECK(back.outcome_kind == m.outcome_kind);
  CHECK(back.budget.eps == m.budget.eps);
  CHECK(back.budget.y2 == m.budget.y2);
  CHECK(back.indicator_coord == m.indicator_coord);
}

TEST_CASE("budget validation") {
  RegularityBudget b;
  b.eps = 0.0;
  CHECK_THROWS_AS(b.validate(OutcomeKind::Continuous), config_error);
  b = RegularityBudget{};
  b.y1 = 2.0;
  b.y2 = 1.0;
  CHECK_THROWS_AS(b.validate(OutcomeKind::Continuous), config_error);
  b = RegularityBudget{};
  b.y2 = 3.0;
  CHECK_NOTHROW(b.validate(OutcomeKind::Survival));
}

TEST_CASE("psi dimension is validated per family") {
  ShiftModel m = ShiftModel::gvhd(0.1, OutcomeKind::Continuous);
  m.psi = {0.1, 0.2};
  CHECK_THROWS_AS(m.validate(), config_error);
}
