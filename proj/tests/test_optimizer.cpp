#include <catch_amalgamated.hpp>
#include <limits>

#include "helpers.hpp"
#include "nmfeb/optimizer.hpp"
#include "nmfeb/oracle.hpp"

using namespace nmfeb;
using Catch::Approx;

namespace {

// Exhaustive simplex projection: the optimal support is some subset; try
// them all and keep the feasible candidate closest to v.
Eigen::VectorXd project_simplex_bruteforce(const Eigen::VectorXd& v) {
  const int k = static_cast<int>(v.size());
  Eigen::VectorXd best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    double sum = 0.0;
    int m = 0;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) {
        sum += v[i];
        ++m;
      }
    const double shift = (sum - 1.0) / m;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(k);
    bool feasible = true;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) {
        q[i] = v[i] - shift;
        if (q[i] < 0.0) feasible = false;
      }
    if (!feasible) continue;
    const double dist = (q - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = q;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("project_simplex hand examples", "[optimizer]") {
  Eigen::VectorXd v(2);
  v << 0.5, 0.7;
  Eigen::VectorXd q = project_simplex(v);
  CHECK(q[0] == Approx(0.4).margin(1e-12));
  CHECK(q[1] == Approx(0.6).margin(1e-12));

  v << 1.2, -0.3;
  q = project_simplex(v);
  CHECK(q[0] == Approx(1.0).margin(1e-12));
  CHECK(q[1] == Approx(0.0).margin(1e-12));

  Eigen::VectorXd v3(3);
  v3 << 0.3, 0.3, 0.9;
  q = project_simplex(v3);
  CHECK(q[0] == Approx(0.4 / 3.0).margin(1e-5));
  CHECK(q[1] == Approx(0.4 / 3.0).margin(1e-5));
  CHECK(q[2] == Approx(0.9 - 0.5 / 3.0).margin(1e-5));
}

TEST_CASE("project_simplex matches brute-force QP", "[optimizer][property]") {
  CounterRng rng(41, "proj");
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd v = testutil::random_vector(rng, 8, 1.5);
    const Eigen::VectorXd q = project_simplex(v);
    const Eigen::VectorXd qb = project_simplex_bruteforce(v);
    CHECK((q - qb).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(q.sum() == Approx(1.0).margin(1e-12));
    CHECK(q.minCoeff() >= 0.0);
  }
}

TEST_CASE("init_gamma", "[optimizer]") {
  CounterRng rng(42, "init");
  SECTION("A = 0 gives w") {
    ProblemStats s = testutil::random_stats(rng, 4);
    s.A.setZero();
    const Eigen::VectorXd beta = testutil::random_vector(rng, 4, 1.0);
    CHECK((init_gamma(s, beta) - s.w).norm() == 0.0);
  }
  SECTION("identity design with OLS beta gives y") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd y(3);
    y << 1.0, -2.0, 0.5;
    const auto s = build_stats(X, y, 1.0);
    const Eigen::VectorXd beta = estimate_beta_init(X, y, 1.0, InitMode::ols);
    CHECK((init_gamma(s, beta) - y).norm() < 1e-12);
  }
  SECTION("matches the direct formula") {
    const ProblemStats s = testutil::random_stats(rng, 5);
    const Eigen::VectorXd beta = testutil::random_vector(rng, 5, 1.0);
    CHECK((init_gamma(s, beta) - (s.w - s.A * beta)).norm() < 1e-12);
  }
  SECTION("dimension mismatch") {
    const ProblemStats s = testutil::random_stats(rng, 3);
    CHECK_THROWS_AS(init_gamma(s, Eigen::VectorXd::Zero(4)),
                    DimensionMismatch);
  }
}

TEST_CASE("estimate_beta_init", "[optimizer]") {
  CounterRng rng(43, "beta-init");
  const Eigen::MatrixXd X = testutil::random_design(rng, 50, 10, 1.0);
  const Eigen::VectorXd y = testutil::random_vector(rng, 50, 1.0);

  SECTION("ridge approaches OLS as lambda -> 0") {
    const Eigen::VectorXd ols = estimate_beta_init(X, y, 1.0, InitMode::ols);
    const Eigen::VectorXd ridge =
        estimate_beta_init(X, y, 1.0, InitMode::ridge, 1e-10);
    CHECK((ols - ridge).norm() < 1e-6);
  }
  SECTION("ridge normal-equation residual") {
    const double lambda = 0.37;
    const Eigen::VectorXd b =
        estimate_beta_init(X, y, 1.0, InitMode::ridge, lambda);
    const Eigen::VectorXd resid =
        X.transpose() * X * b + lambda * b - X.transpose() * y;
    CHECK(resid.norm() < 1e-8);
  }
  SECTION("OLS on rank-deficient X throws") {
    Eigen::MatrixXd Xr(4, 2);
    Xr << 1, 2, 2, 4, 3, 6, 4, 8;
    CHECK_THROWS_AS(
        estimate_beta_init(Xr, Eigen::VectorXd::Ones(4), 1.0, InitMode::ols),
        RankDeficient);
  }
}

TEST_CASE("optimize_gamma", "[optimizer]") {
  CounterRng rng(44, "opt-gamma");
  FitConfig cfg;
  SECTION("A = 0 converges to w") {
    ProblemStats s = testutil::random_stats(rng, 5);
    s.A.setZero();
    const PriorGrid prior = testutil::random_prior(rng, 4);
    const Eigen::VectorXd g0 = testutil::random_vector(rng, 5, 1.0);
    const Eigen::VectorXd ghat = optimize_gamma(s, prior, g0, cfg);
    CHECK(grad_gamma(s, ghat, prior).lpNorm<Eigen::Infinity>() <=
          cfg.tol_grad);
    // with A = 0 the stationarity identity pins gamma = w wherever the
    // tilt variance is positive
    CHECK((ghat - s.w).lpNorm<Eigen::Infinity>() < 1e-3);
  }
  SECTION("point-mass prior returns the start point") {
    const ProblemStats s = testutil::random_stats(rng, 3);
    const PriorGrid point = PriorGrid::point_mass(0.2);
    const Eigen::VectorXd g0 = testutil::random_vector(rng, 3, 1.0);
    CHECK((optimize_gamma(s, point, g0, cfg) - g0).norm() == 0.0);
  }
  SECTION("random instance reaches first-order stationarity") {
    const ProblemStats s = testutil::random_stats(rng, 6);
    const PriorGrid prior = testutil::random_prior(rng, 4);
    const Eigen::VectorXd ghat = optimize_gamma(s, prior, s.w, cfg);
    CHECK(grad_gamma(s, ghat, prior).lpNorm<Eigen::Infinity>() <= 1e-6);
    // coordinate perturbations cannot improve the objective
    const double base = objective(s, ghat, prior).m_tilde;
    for (int i = 0; i < 6; ++i) {
      for (double delta : {-0.05, 0.05}) {
        Eigen::VectorXd g = ghat;
        g[i] += delta;
        CHECK(objective(s, g, prior).m_tilde <= base + 1e-8);
      }
    }
  }
}

TEST_CASE("optimize_weights", "[optimizer]") {
  CounterRng rng(45, "opt-w");
  FitConfig cfg;
  SECTION("singleton simplex is a fixed point") {
    const ProblemStats s = testutil::random_stats(rng, 3);
    const PriorGrid grid = PriorGrid::point_mass(0.5);
    Eigen::VectorXd w0(1);
    w0 << 1.0;
    const Eigen::VectorXd w =
        optimize_weights(s, s.w, w0, grid, cfg);
    CHECK(w.size() == 1);
    CHECK(w[0] == 1.0);
  }
  SECTION("KKT residual on a random instance") {
    const ProblemStats s = testutil::random_stats(rng, 4);
    const PriorGrid grid = PriorGrid::uniform(-1.0, 1.0, 5);
    const Eigen::VectorXd gamma = testutil::random_vector(rng, 4, 1.0);
    Eigen::VectorXd w0 = Eigen::VectorXd::Constant(5, 0.2);
    const Eigen::VectorXd what = optimize_weights(s, gamma, w0, grid, cfg);
    CHECK(what.sum() == Approx(1.0).margin(1e-12));
    CHECK(what.minCoeff() >= 0.0);
    PriorGrid fitted = grid;
    fitted.weights.assign(what.data(), what.data() + 5);
    const Eigen::VectorXd g = grad_weights(s, gamma, fitted);
    double gmax = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < 5; ++r)
      if (what[r] > 1e-8) gmax = std::max(gmax, g[r]);
    for (int r = 0; r < 5; ++r)
      if (what[r] > 1e-8) CHECK(g[r] - gmax >= -1e-5);
  }
}

TEST_CASE("fit on orthogonal designs and determinism", "[optimizer]") {
  SECTION("A = 0: one gamma phase lands on w") {
    const int p = 6;
    const Eigen::MatrixXd X = Eigen::MatrixXd::Identity(p, p);
    Eigen::VectorXd y(p);
    y << 0.9, -0.8, 0.1, 0.4, -0.2, 0.6;
    FitConfig cfg;
    cfg.init_mode = InitMode::ols;
    const FitResult res = fit(X, y, 1.0, {-1.0, 1.0, 9}, cfg);
    CHECK((res.gamma - y).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(res.converged);
    for (std::size_t t = 1; t < res.trace.size(); ++t)
      CHECK(res.trace[t] >= res.trace[t - 1] - 1e-9);
  }
  SECTION("identical inputs give bit-identical results") {
    CounterRng rng(46, "fit-det");
    const Eigen::MatrixXd X = testutil::random_design(rng, 40, 8, 0.2);
    const Eigen::VectorXd y = testutil::random_vector(rng, 40, 1.0);
    const FitResult a = fit(X, y, 1.0, {-1.0, 1.0, 15}, {});
    const FitResult b = fit(X, y, 1.0, {-1.0, 1.0, 15}, {});
    CHECK(a.gamma == b.gamma);
    CHECK(a.prior.weights == b.prior.weights);
    CHECK(a.trace == b.trace);
  }
  SECTION("monotone trace and feasibility on a random fit") {
    CounterRng rng(47, "fit-mono");
    const Eigen::MatrixXd X = testutil::random_design(rng, 60, 10, 0.15);
    const Eigen::VectorXd y = testutil::random_vector(rng, 60, 1.0);
    const FitResult res = fit(X, y, 1.0, {-1.0, 1.0, 21}, {});
    REQUIRE(!res.trace.empty());
    for (std::size_t t = 1; t < res.trace.size(); ++t)
      CHECK(res.trace[t] >= res.trace[t - 1] - 1e-9);
    CHECK(res.max_simplex_violation <= 1e-12);
    double sum = 0.0;
    for (double w : res.prior.weights) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(sum == Approx(1.0).margin(1e-12));
  }
}
