#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "ctsnm/conditional_model.hpp"
#include "ctsnm/errors.hpp"
#include "ctsnm/inference.hpp"
#include "ctsnm/rng.hpp"
#include "ctsnm/validate.hpp"

using namespace ctsnm;

namespace {

Scenario gvhd_scenario(double psi) {
  Scenario sc;
  sc.kind = psi == 0.0 ? ScenarioKind::NullEffect : ScenarioKind::GvHDSurvival;
  sc.true_psi = {psi};
  return sc;
}

// Dataset with treatment changes assigned by independent fair coins, ignoring
// everything; the score is mean-zero for any h.
Dataset coin_flip_dataset(std::size_t n, std::uint64_t seed) {
  Dataset data;
  data.scenario.kind = ScenarioKind::PCPContinuous;
  data.scenario.true_psi = {0.0, 0.0, 0.0};
  data.scenario.horizon = 1.0;
  data.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::subject_stream(seed, i);
    SamplePath p(1.0, {0.0});
    bool treated = false;
    for (double d : {0.0, 0.25, 0.5, 0.75}) {
      if (!treated && rng.bernoulli(0.5)) {
        treated = true;
        p.set_value(d, {1.0});
      }
    }
    data.subjects.push_back({std::move(p), rng.normal(0.0, 1.0), false});
  }
  return data;
}

ScoreSpec coin_spec() {
  ScoreSpec spec;
  spec.decision_times = {0.0, 0.25, 0.5, 0.75};
  spec.treat_coord = 0;
  spec.alive_coord = -1;
  return spec;
}

}  // namespace

TEST_CASE("randomized treatment keeps the null-test z small") {
  int small = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const Dataset data = coin_flip_dataset(150, 1000 + rep);
    const NullTestResult res = test_no_effect(data, coin_spec());
    if (std::abs(res.z) < 3.0) ++small;
  }
  CHECK(small >= reps - 3);  // |z| < 3 in at least 98.5% of replicates
}

TEST_CASE("score is invariant under subject permutation") {
  Dataset data = coin_flip_dataset(80, 7);
  const NullTestResult before = test_no_effect(data, coin_spec());
  std::reverse(data.subjects.begin(), data.subjects.end());
  const NullTestResult after = test_no_effect(data, coin_spec());
  CHECK(before.detail.score == doctest::Approx(after.detail.score).epsilon(1e-12));
  CHECK(before.z == doctest::Approx(after.z).epsilon(1e-12));
}

TEST_CASE("no treatment variation is an identification error") {
  Scenario sc = gvhd_scenario(std::log(2.0));
  sc.policy_intercept = -50.0;  // exposure never starts
  const Dataset data = simulate_observed(sc, 50, 3);
  const ScoreSpec spec = ScoreSpec::for_scenario(sc);
  CHECK_THROWS_AS(test_no_effect(data, spec), identification_error);
}

TEST_CASE("a single subject cannot carry a variance estimate") {
  Dataset data = coin_flip_dataset(40, 11);
  data.subjects.resize(1);
  CHECK_THROWS_AS(test_no_effect(data, coin_spec()), identification_error);
}

TEST_CASE("score at the true psi is within null range across replicates") {
  const double psi_star = std::log(2.0);
  const Scenario sc = gvhd_scenario(psi_star);
  const ShiftModel model = sc.shift_model({psi_star});
  const ScoreSpec spec = ScoreSpec::for_scenario(sc);
  int inside = 0;
  const int reps = 40;
  for (int rep = 0; rep < reps; ++rep) {
    const Dataset data = simulate_observed(sc, 400, 500 + rep);
    const ScoreResult res = score_statistic(data, model, spec);
    if (std::abs(res.z) < 1.96) ++inside;
  }
  CHECK(inside >= 33);  // roughly the nominal 95%
}

TEST_CASE("score drifts away from zero at a wrong psi") {
  const double psi_star = std::log(2.0);
  const Scenario sc = gvhd_scenario(psi_star);
  const ShiftModel wrong = sc.shift_model({psi_star + 1.0});
  const ScoreSpec spec = ScoreSpec::for_scenario(sc);
  double total_abs_z = 0.0;
  const int reps = 5;
  for (int rep = 0; rep < reps; ++rep) {
    const Dataset data = simulate_observed(sc, 2000, 900 + rep);
    total_abs_z += std::abs(score_statistic(data, wrong, spec).z);
  }
  CHECK(total_abs_z / reps > 3.0);
}

TEST_CASE("estimate_psi recovers the true parameter on one replicate") {
  const double psi_star = std::log(2.0);
  const Scenario sc = gvhd_scenario(psi_star);
  const Dataset data = simulate_observed(sc, 800, 31415);
  const ScoreSpec spec = ScoreSpec::for_scenario(sc);
  SearchOptions search;
  search.lo = -0.5;
  search.hi = 1.8;
  search.grid_points = 24;
  const EstimationResult res =
      estimate_psi(data, sc.shift_model({0.0}), spec, search);
  REQUIRE(res.identified);
  CHECK(std::abs(res.psi_hat[0] - psi_star) < 0.3);
  CHECK(res.ci_lo <= res.psi_hat[0]);
  CHECK(res.ci_hi >= res.psi_hat[0]);
  CHECK(res.score_curve.size() == 24);
}

TEST_CASE("the null test rejects a strong effect") {
  const Scenario sc = gvhd_scenario(std::log(2.0));
  const Dataset data = simulate_observed(sc, 1500, 271828);
  const NullTestResult res = test_no_effect(data, ScoreSpec::for_scenario(sc));
  CHECK(res.p_value < 0.05);
}

TEST_CASE("threads do not change the score") {
  const Scenario sc = gvhd_scenario(std::log(2.0));
  const Dataset data = simulate_observed(sc, 300, 5);
  const ShiftModel model = sc.shift_model({0.4});
  ScoreSpec spec = ScoreSpec::for_scenario(sc);
  const ScoreResult serial = score_statistic(data, model, spec);
  spec.threads = 4;
  const ScoreResult parallel = score_statistic(data, model, spec);
  CHECK(serial.score == parallel.score);
  CHECK(serial.z == parallel.z);
}

TEST_CASE("z at the true psi is approximately standard normal: reported, not asserted") {
  // Asymptotic normality of the standardized score is conjectured, not
  // proved, in this setting; we measure it at desk scale and only warn.
  const double psi_star = std::log(2.0);
  const Scenario sc = gvhd_scenario(psi_star);
  const ShiftModel model = sc.shift_model({psi_star});
  const ScoreSpec spec = ScoreSpec::for_scenario(sc);
  std::vector<double> pit;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const Dataset data = simulate_observed(sc, 250, 40000 + rep);
    pit.push_back(normal_cdf(score_statistic(data, model, spec).z));
  }
  const PitReport rep = pit_uniformity(pit, 0.01);
  MESSAGE("z(psi*) normality over ", reps, " replicates: KS ", rep.ks_stat,
          " vs critical ", rep.critical_value, (rep.pass ? " (consistent)" : " (off)"));
  WARN(rep.pass);
}

TEST_CASE("per-time breakdown sums to the pooled score") {
  const Dataset data = coin_flip_dataset(120, 99);
  const NullTestResult res = test_no_effect(data, coin_spec());
  double total = 0.0;
  for (const auto &[d, s] : res.detail.per_time) total += s;
  CHECK(total == doctest::Approx(res.detail.score).epsilon(1e-9));
}
