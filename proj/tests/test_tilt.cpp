#include <catch_amalgamated.hpp>
#include <cmath>

#include "helpers.hpp"
#include "nmfeb/tilt.hpp"

using namespace nmfeb;
using Catch::Approx;

namespace {
const PriorGrid rademacher = PriorGrid::from({-1.0, 1.0}, {0.5, 0.5});
}

TEST_CASE("log_partition closed forms", "[tilt]") {
  CHECK(log_partition(rademacher, 0.0, 0.0) == Approx(0.0).margin(1e-15));
  // log cosh(gamma) - d/2 for the +-1 prior
  CHECK(log_partition(rademacher, 1.0, 2.0) ==
        Approx(std::log(std::cosh(1.0)) - 1.0).epsilon(1e-12));
  const PriorGrid point = PriorGrid::point_mass(0.7);
  CHECK(log_partition(point, 2.5, 3.0) ==
        Approx(0.7 * 2.5 - 0.5 * 0.49 * 3.0).epsilon(1e-12));
}

TEST_CASE("log_partition matches long-double summation", "[tilt]") {
  CounterRng rng(11, "tilt-lp");
  const PriorGrid prior = testutil::random_prior(rng, 5);
  const double gamma = 3.7, d = 0.9;
  long double s = 0.0L;
  for (std::size_t r = 0; r < prior.size(); ++r)
    s += static_cast<long double>(prior.weights[r]) *
         std::exp(static_cast<long double>(prior.atoms[r]) * gamma -
                  0.5L * prior.atoms[r] * prior.atoms[r] * d);
  CHECK(log_partition(prior, gamma, d) ==
        Approx(static_cast<double>(std::log(s))).epsilon(1e-12));
}

TEST_CASE("tilt_moments closed forms", "[tilt]") {
  const auto m = tilt_moments(rademacher, 1.0, 0.4);
  CHECK(m.mean == Approx(std::tanh(1.0)).epsilon(1e-12));
  CHECK(m.variance ==
        Approx(1.0 - std::tanh(1.0) * std::tanh(1.0)).epsilon(1e-12));

  const auto pm = tilt_moments(PriorGrid::point_mass(0.3), -2.0, 5.0);
  CHECK(pm.mean == Approx(0.3).epsilon(1e-15));
  CHECK(pm.variance == 0.0);
}

TEST_CASE("tilt variance matches finite differences of the mean", "[tilt]") {
  CounterRng rng(12, "tilt-var");
  const PriorGrid prior = testutil::random_prior(rng, 7);
  const double gamma = -2.1, d = 1.5, h = 1e-6;
  const double fd = (tilt_moments(prior, gamma + h, d).mean -
                     tilt_moments(prior, gamma - h, d).mean) /
                    (2.0 * h);
  const double var = tilt_moments(prior, gamma, d).variance;
  CHECK(var == Approx(fd).epsilon(1e-5));
}

TEST_CASE("tilt_measure normalization and special cases", "[tilt]") {
  const PriorGrid half = PriorGrid::from({0.0, 1.0}, {0.5, 0.5});
  SECTION("gamma = d/2 cancels the precision penalty at atom 1") {
    const double d = 1.8;
    const auto m = tilt_measure(half, d / 2.0, d);
    CHECK(m.prob(0) == Approx(0.5).epsilon(1e-12));
    CHECK(m.prob(1) == Approx(0.5).epsilon(1e-12));
  }
  SECTION("identity tilt reproduces the prior") {
    CounterRng rng(13, "tilt-id");
    const PriorGrid prior = testutil::random_prior(rng, 4);
    const auto m = tilt_measure(prior, 0.0, 0.0);
    for (std::size_t r = 0; r < prior.size(); ++r)
      CHECK(m.prob(r) == Approx(prior.weights[r]).epsilon(1e-12));
  }
  SECTION("three-atom direct normalization") {
    const PriorGrid tri = PriorGrid::from({-1.0, 0.0, 1.0}, {0.25, 0.5, 0.25});
    const auto m = tilt_measure(tri, 2.0, 1.0);
    const double z = 0.25 * std::exp(-2.5) + 0.5 + 0.25 * std::exp(1.5);
    CHECK(m.prob(0) == Approx(0.25 * std::exp(-2.5) / z).epsilon(1e-12));
    CHECK(m.prob(1) == Approx(0.5 / z).epsilon(1e-12));
    CHECK(m.prob(2) == Approx(0.25 * std::exp(1.5) / z).epsilon(1e-12));
  }
  SECTION("zero-weight atoms stay at -inf") {
    const PriorGrid g = PriorGrid::from({-1.0, 0.0, 1.0}, {0.5, 0.0, 0.5});
    const auto m = tilt_measure(g, 1.0, 1.0);
    CHECK(m.log_weights[1] == kNegInf);
  }
}

TEST_CASE("tilt_kl values and nonnegativity", "[tilt]") {
  CHECK(tilt_kl(rademacher, 0.0, 1.0) == 0.0);
  CHECK(tilt_kl(PriorGrid::point_mass(0.4), 7.0, 2.0) ==
        Approx(0.0).margin(1e-12));
  const double expect = std::tanh(1.0) - std::log(std::cosh(1.0));
  CHECK(tilt_kl(rademacher, 1.0, 2.0) == Approx(expect).epsilon(1e-12));

  SECTION("matches atomwise KL summation") {
    CounterRng rng(14, "tilt-kl");
    const PriorGrid prior = testutil::random_prior(rng, 5);
    const double gamma = 1.3, d = 0.7;
    const auto q = tilt_measure(prior, gamma, d);
    const auto base = tilt_measure(prior, 0.0, d);
    double kl = 0.0;
    for (std::size_t r = 0; r < prior.size(); ++r)
      if (q.prob(r) > 0.0)
        kl += q.prob(r) * (q.log_weights[r] - base.log_weights[r]);
    CHECK(tilt_kl(prior, gamma, d) == Approx(kl).epsilon(1e-12));
  }
}

TEST_CASE("natural_from_mean inversion", "[tilt]") {
  CHECK(natural_from_mean(rademacher, 0.5, 3.0) ==
        Approx(std::atanh(0.5)).margin(1e-9));

  SECTION("round trip through the forward map") {
    CounterRng rng(15, "tilt-inv");
    const PriorGrid prior = testutil::random_prior(rng, 4);
    const double d = 1.2;
    const double g = natural_from_mean(prior, 0.3, d, 1e-10);
    CHECK(tilt_moments(prior, g, d).mean == Approx(0.3).margin(1e-10));
    const double g0 = -1.7;
    const double u = tilt_moments(prior, g0, d).mean;
    CHECK(natural_from_mean(prior, u, d, 1e-12) == Approx(g0).margin(1e-6));
  }
  SECTION("error paths") {
    CHECK_THROWS_AS(natural_from_mean(PriorGrid::point_mass(0.0), 0.0, 1.0),
                    DegeneratePrior);
    const PriorGrid two = PriorGrid::from({-1.0, 0.0, 1.0}, {0.5, 0.5, 0.0});
    CHECK_THROWS_AS(natural_from_mean(two, 0.5, 1.0), MeanOutOfRange);
    CHECK_THROWS_AS(natural_from_mean(rademacher, 1.0, 1.0), MeanOutOfRange);
    CHECK_THROWS_AS(natural_from_mean(rademacher, -1.5, 1.0), MeanOutOfRange);
  }
}

TEST_CASE("quantile left-continuous convention", "[tilt]") {
  const PriorGrid half = PriorGrid::from({0.0, 1.0}, {0.5, 0.5});
  const auto m = tilt_measure(half, 0.0, 0.0);
  CHECK(quantile(m, 0.25) == 0.0);
  CHECK(quantile(m, 0.5) == 0.0);
  CHECK(quantile(m, 0.75) == 1.0);
  CHECK(quantile(m, 1.0) == 1.0);
}

TEST_CASE("log_partition convexity in gamma", "[tilt][property]") {
  CounterRng rng(16, "tilt-convex");
  for (int trial = 0; trial < 10; ++trial) {
    const PriorGrid prior = testutil::random_prior(rng, 3 + trial % 4);
    const double d = 0.1 + 2.0 * rng.next_uniform();
    const double h = 1e-4;
    for (double g = -5.0; g <= 5.0; g += 0.5) {
      const double second =
          (log_partition(prior, g + h, d) - 2.0 * log_partition(prior, g, d) +
           log_partition(prior, g - h, d)) /
          (h * h);
      CHECK(second >= -1e-9);
    }
  }
}

TEST_CASE("tilt mean strictly increasing in gamma", "[tilt][property]") {
  CounterRng rng(17, "tilt-mono");
  for (int trial = 0; trial < 10; ++trial) {
    const PriorGrid prior = testutil::random_prior(rng, 2 + trial % 5);
    const double d = 0.1 + rng.next_uniform();
    double prev = tilt_moments(prior, -6.0, d).mean;
    for (double g = -5.0; g <= 6.0; g += 1.0) {
      const double cur = tilt_moments(prior, g, d).mean;
      CHECK(cur > prev);
      prev = cur;
    }
  }
}

TEST_CASE("tilt normalization stable at extreme exponents",
          "[tilt][property]") {
  CounterRng rng(18, "tilt-extreme");
  for (int trial = 0; trial < 20; ++trial) {
    const PriorGrid prior = testutil::random_prior(rng, 3 + trial % 3);
    const double gamma = (2.0 * rng.next_uniform() - 1.0) * 500.0;
    const double d = rng.next_uniform() * 1e4;
    const auto m = tilt_measure(prior, gamma, d);
    double s = 0.0;
    for (std::size_t r = 0; r < m.size(); ++r) s += m.prob(r);
    CHECK(s == Approx(1.0).margin(1e-10));
  }
}
