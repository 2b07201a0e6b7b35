#include "doctest.h"

#include <cmath>

#include "ctsnm/errors.hpp"
#include "ctsnm/rng.hpp"
#include "ctsnm/validate.hpp"

using namespace ctsnm;

TEST_CASE("identical samples pass with statistic zero") {
  StratumSamples strata;
  strata["s0"] = {{1.0, 2.0, 3.0, 4.0}, {1.0, 2.0, 3.0, 4.0}};
  const auto reports = conditional_ks(strata, 0.01);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].ks_stat == 0.0);
  CHECK(reports[0].pass);
  CHECK(pass_rate(reports) == 1.0);
}

TEST_CASE("disjoint samples fail with statistic one") {
  Rng rng(2);
  std::vector<double> a(500), b(500);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + 10.0;
  }
  StratumSamples strata;
  strata["s"] = {a, b};
  const auto reports = conditional_ks(strata, 0.01);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].ks_stat == doctest::Approx(1.0));
  CHECK_FALSE(reports[0].pass);
}

TEST_CASE("the two-sample statistic is symmetric") {
  Rng rng(8);
  std::vector<double> a(60), b(40);
  for (auto &x : a) x = rng.normal();
  for (auto &x : b) x = rng.normal(0.3, 1.2);
  CHECK(ks_two_sample_statistic(a, b) == doctest::Approx(ks_two_sample_statistic(b, a)));
}

TEST_CASE("undersized strata are skipped") {
  StratumSamples strata;
  strata["tiny"] = {{1.0}, {2.0}};
  strata["ok"] = {{1.0, 2.0, 3.0}, {1.5, 2.5, 3.5}};
  const auto reports = conditional_ks(strata, 0.05, 2);
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].stratum_id == "ok");
}

TEST_CASE("conditional ks detects matched versus shifted gaussian strata") {
  Rng rng(3);
  StratumSamples same, shifted;
  for (int s = 0; s < 8; ++s) {
    std::vector<double> a(600), b(600), c(600);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.normal(s * 0.1, 1.0);
      b[i] = rng.normal(s * 0.1, 1.0);
      c[i] = rng.normal(s * 0.1 + 0.35, 1.0);
    }
    same["s" + std::to_string(s)] = {a, b};
    shifted["s" + std::to_string(s)] = {a, c};
  }
  CHECK(pass_rate(conditional_ks(same, 0.01)) >= 0.95);
  CHECK(pass_rate(conditional_ks(shifted, 0.01)) <= 0.5);
}

TEST_CASE("exact PIT values pass and mismatched rates fail") {
  Rng rng(77);
  std::vector<double> exact(10000), wrong(10000);
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double rate = 0.5 + (i % 3) * 0.5;  // conditional rate varies
    const double y = rng.exponential(rate);
    exact[i] = -std::expm1(-rate * y);
    wrong[i] = -std::expm1(-1.3 * rate * y);
  }
  CHECK(pit_uniformity(exact, 0.01).pass);
  CHECK_FALSE(pit_uniformity(wrong, 0.01).pass);
}

TEST_CASE("degenerate PIT input fails") {
  std::vector<double> constant(200, 0.5);
  CHECK_FALSE(pit_uniformity(constant, 0.01).pass);
  CHECK_THROWS_AS(pit_uniformity({}, 0.01), std::domain_error);
  CHECK_THROWS_AS(pit_uniformity({1.2}, 0.01), std::domain_error);
}

TEST_CASE("PIT rejection rate is close to alpha under the null") {
  Rng rng(123);
  int rejections = 0;
  const int reps = 400;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<double> v(300);
    for (auto &x : v) x = rng.uniform();
    if (!pit_uniformity(v, 0.05).pass) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  CHECK(rate > 0.01);
  CHECK(rate < 0.10);
}

TEST_CASE("quantile identity holds exactly for a gaussian shift family") {
  GaussianLocation g(0.0, 1.0, 1.0);  // F(y, t) = Phi(y - t)
  std::vector<std::pair<double, double>> pts;
  for (double y : {-1.0, 0.0, 0.7})
    for (double t : {0.1, 0.4, 0.9}) pts.emplace_back(y, t);
  CHECK(quantile_identity_check(g, pts) <= 1e-6);
}

TEST_CASE("an h-independent family has near-zero residual") {
  GaussianLocation g(0.3, 0.0, 1.0);
  std::vector<std::pair<double, double>> pts{{0.0, 0.2}, {0.5, 0.6}, {-0.4, 0.8}};
  CHECK(quantile_identity_check(g, pts) <= 1e-10);
}

TEST_CASE("the exponential survival family satisfies the identity on a lattice") {
  ExponentialHazardSurvival f(0.0, 2.0, 1.0);
  std::vector<std::pair<double, double>> pts;
  for (int iy = 0; iy < 10; ++iy)
    for (int it = 0; it < 10; ++it)
      pts.emplace_back(1.05 + 0.1 * iy, 0.2 + 0.08 * it);
  CHECK(quantile_identity_check(f, pts) <= 1e-4);
}

TEST_CASE("identity residual shrinks like the squared step") {
  // mu(t) nonlinear in t so the central-difference error is visible
  class CurvedGaussian : public GaussianLocation {
   public:
    CurvedGaussian() : GaussianLocation(0.0, 0.0, 1.0) {}
    double cdf(double y, double t) const override {
      return normal_cdf(y - std::exp(t));
    }
    double density(double y, double t) const override {
      return normal_pdf(y - std::exp(t));
    }
    double inverse_cdf(double p, double t) const override {
      return std::exp(t) + normal_quantile(p);
    }
  };
  CurvedGaussian g;
  std::vector<std::pair<double, double>> pts{{1.5, 0.3}, {2.0, 0.5}, {2.5, 0.7}};
  const double r3 = quantile_identity_check(g, pts, 1e-3);
  const double r4 = quantile_identity_check(g, pts, 1e-4);
  const double r5 = quantile_identity_check(g, pts, 1e-5);
  CHECK(r4 <= r3 / 50.0);  // two decades per step decade
  CHECK(r5 <= r3 / 50.0);
}

TEST_CASE("density below the floor is a regularity violation") {
  GaussianLocation g(0.0, 0.5, 1.0);
  std::vector<std::pair<double, double>> pts{{25.0, 0.5}};
  CHECK_THROWS_AS(quantile_identity_check(g, pts, 1e-5, 0.01), regularity_error);
}

TEST_CASE("regularity audit accepts analytic extrema and flags tight floors") {
  GaussianLocation g(0.0, 0.8, 1.0);
  std::vector<double> ys, ts{0.0, 0.25, 0.5};
  for (int i = 0; i <= 20; ++i) ys.push_back(-1.5 + 0.15 * i);  // within mu(t) +- ~2 sigma

  // analytic extrema over the lattice: density <= phi(0), slopes <= phi'(max)
  RegularityBudget ok;
  ok.eps = 0.02;            // density at ~2.3 sigma is above this
  ok.c1 = 0.40;             // phi(0) ~ 0.3989
  ok.c2 = 0.8 * 0.40;       // |dh F| = mu' * density
  ok.l1 = 0.25;             // max |phi'| ~ 0.2420
  ok.l2 = 0.8 * 0.25;
  ok.y1 = -10.0;
  ok.y2 = 10.0;
  CHECK(regularity_audit(g, ok, ys, ts).empty());

  RegularityBudget tight = ok;
  tight.eps = 0.08;  // above the true density near the lattice edge
  const auto violations = regularity_audit(g, tight, ys, ts);
  CHECK_FALSE(violations.empty());
  for (const auto &v : violations) CHECK(v.what == "density_floor");
}

TEST_CASE("an empty mesh audits to no violations") {
  GaussianLocation g(0.0, 0.5, 1.0);
  CHECK(regularity_audit(g, RegularityBudget{}, {}, {}).empty());
}

TEST_CASE("mimicry strata split by time, status and binned past") {
  Scenario sc;
  sc.kind = ScenarioKind::GvHDSurvival;
  sc.true_psi = {std::log(2.0)};
  const Dataset data = simulate_observed(sc, 500, 12);
  MimicryStrataSpec spec;
  spec.times = {0.5, 1.0};
  spec.level = 2;
  spec.status_coord = 1;
  spec.alive_coord = 0;
  const auto strata = mimicry_strata(
      data, spec, [&](std::size_t i, double) { return data.subjects[i].y; },
      [&](std::size_t i, double t) { return simulate_counterfactual(sc, data.subjects[i], t); });
  CHECK(strata.size() > 4);
  std::size_t total = 0;
  for (const auto &[key, ab] : strata) {
    CHECK(ab.first.size() == ab.second.size());
    total += ab.first.size();
  }
  // only alive-at-t subjects enter
  std::size_t alive_points = 0;
  for (const auto &s : data.subjects)
    for (double t : spec.times)
      if (s.path.value_at(t, 0) == 1.0) ++alive_points;
  CHECK(total == alive_points);
}

TEST_CASE("critical value formulas match published constants") {
  // c(0.05) = 1.3581, c(0.01) = 1.6276
  CHECK(ks_one_sample_critical(0.05, 1) == doctest::Approx(1.3581).epsilon(1e-4));
  CHECK(ks_one_sample_critical(0.01, 1) == doctest::Approx(1.6276).epsilon(1e-4));
  CHECK(ks_two_sample_critical(0.01, 500, 500) ==
        doctest::Approx(1.6276 * std::sqrt(1000.0 / 250000.0)).epsilon(1e-4));
}
