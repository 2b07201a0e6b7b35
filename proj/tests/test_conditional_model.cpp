#include "doctest.h"

#include <cmath>
#include <memory>

#include "ctsnm/conditional_model.hpp"
#include "ctsnm/rng.hpp"

using namespace ctsnm;

TEST_CASE("gaussian location family: inverse round trip and derivatives") {
  GaussianLocation g(0.5, -0.3, 1.2);
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const double t = rng.uniform(0.0, 2.0);
    const double y = rng.uniform(-3.0, 4.0);
    const double p = g.cdf(y, t);
    CHECK(g.inverse_cdf(p, t) == doctest::Approx(y).epsilon(1e-9));
    // density is the y-derivative of the cdf
    const double fd = (g.cdf(y + 1e-6, t) - g.cdf(y - 1e-6, t)) / 2e-6;
    CHECK(g.density(y, t) == doctest::Approx(fd).epsilon(1e-6));
    // h-derivative: -mu' * density
    const double hd = (g.cdf(y, t + 1e-6) - g.cdf(y, t - 1e-6)) / 2e-6;
    CHECK(g.h_derivative(y, t) == doctest::Approx(hd).epsilon(1e-6));
  }
}

TEST_CASE("truncated gaussian reaches 0 and 1 at its support limits") {
  GaussianLocation g(1.0, 0.5, 1.0, 2.0);
  const auto [lo, hi] = g.support(0.8);
  CHECK(g.cdf(lo, 0.8) == 0.0);
  CHECK(g.cdf(hi, 0.8) == 1.0);
  CHECK(g.inverse_cdf(0.0, 0.8) == doctest::Approx(lo));
  CHECK(g.inverse_cdf(1.0, 0.8) == doctest::Approx(hi));
  CHECK(g.density(hi + 0.1, 0.8) == 0.0);
  // renormalized density integrates the kink correctly at an interior point
  const double fd = (g.cdf(1.0, 0.8) - g.cdf(0.99, 0.8)) / 0.01;
  CHECK(g.density(0.995, 0.8) == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("exponential hazard survival: analytic inverse and consistency below t") {
  ExponentialHazardSurvival f(0.5, 2.0, 1.0);
  Rng rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    const double t = rng.uniform(0.5, 1.5);
    const double p = rng.uniform(0.01, 0.99);
    const double y = f.inverse_cdf(p, t);
    CHECK(f.cdf(y, t) == doctest::Approx(p).epsilon(1e-10));
  }
  // For y <= t the law agrees with the observed outcome's law: the stop time
  // does not matter below t.
  for (double y : {0.6, 0.8, 1.0})
    CHECK(f.cdf(y, 1.0) == doctest::Approx(f.cdf(y, 1.7)).epsilon(1e-12));
  // h-derivative matches finite differences above t
  const double t = 1.0, y = 1.4;
  const double hd = (f.cdf(y, t + 1e-6) - f.cdf(y, t - 1e-6)) / 2e-6;
  CHECK(f.h_derivative(y, t) == doctest::Approx(hd).epsilon(1e-6));
  CHECK(f.h_derivative(0.7, t) == 0.0);
}

TEST_CASE("uniform interval family h-derivative matches finite differences") {
  UniformInterval u(0.0, 0.5, 2.0, -0.25);
  for (double t : {0.1, 0.5, 1.0}) {
    for (double y : {0.6, 1.0, 1.4}) {
      const double hd = (u.cdf(y, t + 1e-7) - u.cdf(y, t - 1e-7)) / 2e-7;
      CHECK(u.h_derivative(y, t) == doctest::Approx(hd).epsilon(1e-5));
    }
  }
  CHECK(u.inverse_cdf(0.5, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("mixture validates weights and averages the pieces") {
  auto a = std::make_shared<GaussianLocation>(0.0, 0.0, 1.0);
  auto b = std::make_shared<GaussianLocation>(2.0, 0.0, 1.0);
  CHECK_THROWS_AS(MixtureConditionalModel({a, b}, {0.5, 0.6}), std::domain_error);
  CHECK_THROWS_AS(MixtureConditionalModel({a, b}, {1.2, -0.2}), std::domain_error);

  MixtureConditionalModel mix({a, b}, {0.25, 0.75});
  const double y = 1.0, t = 0.3;
  CHECK(mix.cdf(y, t) == doctest::Approx(0.25 * a->cdf(y, t) + 0.75 * b->cdf(y, t)));
  CHECK(mix.density(y, t) ==
        doctest::Approx(0.25 * a->density(y, t) + 0.75 * b->density(y, t)));
}

TEST_CASE("generalized inverse lands at the left edge of a flat cdf region") {
  // mixture of U[0,1] and U[2,3]: F is flat at 1/2 on [1, 2], so
  // inf{x : F(x) >= 1/2} = 1
  auto u1 = std::make_shared<UniformInterval>(0.0, 0.0, 1.0, 0.0);
  auto u2 = std::make_shared<UniformInterval>(2.0, 0.0, 3.0, 0.0);
  MixtureConditionalModel mix({u1, u2}, {0.5, 0.5});
  CHECK(mix.inverse_cdf(0.5, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mix.inverse_cdf(0.25, 0.0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(mix.inverse_cdf(0.75, 0.0) == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("normal quantile and cdf are mutual inverses") {
  Rng rng(19);
  for (int rep = 0; rep < 100; ++rep) {
    const double p = rng.uniform(1e-6, 1.0 - 1e-6);
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
}
