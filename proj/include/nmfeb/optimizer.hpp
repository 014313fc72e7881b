#ifndef NMFEB_OPTIMIZER_HPP
#define NMFEB_OPTIMIZER_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "nmfeb/elbo.hpp"
#include "nmfeb/prior.hpp"
#include "nmfeb/problem.hpp"

// Alternating maximization of Mtilde over (gamma, weights): L-BFGS with
// Armijo backtracking in gamma for fixed weights, projected gradient
// ascent on the simplex for fixed gamma.

namespace nmfeb {

enum class InitMode { ols, ridge, provided };

struct FitConfig {
  double tol_outer = 1e-8;  // on |delta Mtilde| / p
  int max_outer = 500;
  double tol_grad = 1e-6;  // max-norm of the relevant gradient
  int max_inner_gamma = 200;
  int max_inner_weights = 200;
  int lbfgs_memory = 10;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  InitMode init_mode = InitMode::ridge;
  double ridge_lambda = -1.0;  // < 0 means 1e-3 * tr(X^T X) / p
  Eigen::VectorXd beta_provided;
};

struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  int k = 100;
};

struct FitResult {
  PriorGrid prior;
  Eigen::VectorXd gamma;
  std::vector<double> trace;  // Mtilde after each outer iteration
  bool converged = false;
  int outer_iters = 0;
  bool line_search_failed = false;   // any inner soft-failure
  double max_simplex_violation = 0;  // max |sum w - 1| over outer iterations
};

/// Euclidean projection onto the probability simplex (sort and threshold).
inline Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const int k = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  int rho = 0;
  for (int j = 0; j < k; ++j) {
    css += u[j];
    const double t = (css - 1.0) / (j + 1);
    if (u[j] - t > 0.0) {
      rho = j + 1;
      theta = t;
    }
  }
  (void)rho;
  return (v.array() - theta).cwiseMax(0.0);
}

/// gamma0 = w - A * beta_hat (the stationary-point identity evaluated at a
/// pilot estimate of beta).
inline Eigen::VectorXd init_gamma(const ProblemStats& stats,
                                  const Eigen::VectorXd& beta_hat) {
  if (beta_hat.size() != stats.p)
    throw DimensionMismatch("beta_hat length must equal p");
  return stats.w - stats.A * beta_hat;
}

inline Eigen::VectorXd estimate_beta_init(const Eigen::MatrixXd& X,
                                          const Eigen::VectorXd& y,
                                          double sigma2, InitMode mode,
                                          double ridge_lambda = -1.0) {
  (void)sigma2;
  const int p = static_cast<int>(X.cols());
  if (mode == InitMode::ols) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p) throw RankDeficient("OLS init needs full column rank");
    return qr.solve(y);
  }
  const Eigen::MatrixXd G = X.transpose() * X;
  double lambda = ridge_lambda;
  if (lambda < 0.0) lambda = 1e-3 * G.trace() / p;
  Eigen::MatrixXd R = G;
  R.diagonal().array() += lambda;
  return Eigen::LDLT<Eigen::MatrixXd>(R).solve(X.transpose() * y);
}

namespace detail {

struct InnerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool converged = false;
  bool line_search_failed = false;
};

/// L-BFGS ascent on gamma |-> Mtilde(gamma, w, nu(p)) with fixed weights.
inline InnerResult lbfgs_gamma(const ProblemStats& stats,
                               const PriorGrid& prior,
                               const Eigen::VectorXd& gamma0,
                               const FitConfig& cfg) {
  InnerResult res;
  Eigen::VectorXd x = gamma0;
  ValueGradGamma vg = value_and_grad_gamma(stats, x, prior);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int it = 0; it < cfg.max_inner_gamma; ++it) {
    if (vg.grad.lpNorm<Eigen::Infinity>() <= cfg.tol_grad) {
      res.converged = true;
      break;
    }
    // two-loop recursion on the ascent direction
    Eigen::VectorXd q = vg.grad;
    std::vector<double> alpha(s_hist.size());
    for (int j = static_cast<int>(s_hist.size()) - 1; j >= 0; --j) {
      alpha[j] = rho_hist[j] * s_hist[j].dot(q);
      q -= alpha[j] * y_hist[j];
    }
    if (!s_hist.empty()) {
      const double h0 =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= h0;
    }
    for (std::size_t j = 0; j < s_hist.size(); ++j) {
      const double beta = rho_hist[j] * y_hist[j].dot(q);
      q += (alpha[j] - beta) * s_hist[j];
    }
    Eigen::VectorXd dir = q;
    double slope = vg.grad.dot(dir);
    if (!(slope > 0.0) || !dir.allFinite()) {
      dir = vg.grad;  // fall back to steepest ascent
      slope = vg.grad.squaredNorm();
    }

    // Armijo backtracking for sufficient increase
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    ValueGradGamma vg_new;
    while (step >= 1e-16) {
      x_new = x + step * dir;
      vg_new = value_and_grad_gamma(stats, x_new, prior);
      if (vg_new.m_tilde >= vg.m_tilde + cfg.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack_factor;
    }
    if (!accepted) {
      res.line_search_failed = true;
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = -(vg_new.grad - vg.grad);  // curvature of -M
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > cfg.lbfgs_memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    vg = std::move(vg_new);
  }
  if (vg.grad.lpNorm<Eigen::Infinity>() <= cfg.tol_grad) res.converged = true;
  res.x = std::move(x);
  res.value = vg.m_tilde;
  return res;
}

/// Projected gradient ascent on the weights for fixed gamma.
inline InnerResult pgd_weights(const ProblemStats& stats,
                               const Eigen::VectorXd& gamma,
                               const Eigen::VectorXd& weights0,
                               PriorGrid prior, const FitConfig& cfg) {
  InnerResult res;
  Eigen::VectorXd x = weights0;
  prior.weights.assign(x.data(), x.data() + x.size());
  ValueGradWeights vg = value_and_grad_weights(stats, gamma, prior);
  double step = 1.0;

  for (int it = 0; it < cfg.max_inner_weights; ++it) {
    const Eigen::VectorXd fixed_point = project_simplex(x + vg.grad);
    if ((fixed_point - x).norm() <= cfg.tol_grad) {
      res.converged = true;
      break;
    }
    bool accepted = false;
    Eigen::VectorXd x_new;
    ValueGradWeights vg_new;
    double t = step;
    while (t >= 1e-16) {
      x_new = project_simplex(x + t * vg.grad);
      const double pred = vg.grad.dot(x_new - x);
      if (pred <= 0.0) {
        t *= cfg.backtrack_factor;
        continue;
      }
      prior.weights.assign(x_new.data(), x_new.data() + x_new.size());
      vg_new = value_and_grad_weights(stats, gamma, prior);
      if (vg_new.m_tilde >= vg.m_tilde + cfg.armijo_c * pred) {
        accepted = true;
        break;
      }
      t *= cfg.backtrack_factor;
    }
    if (!accepted) {
      res.line_search_failed = true;
      break;
    }
    step = std::min(t / cfg.backtrack_factor, 1e6);  // mild step recovery
    x = std::move(x_new);
    vg = std::move(vg_new);
  }
  if (!res.converged) {
    prior.weights.assign(x.data(), x.data() + x.size());
    const Eigen::VectorXd g = grad_weights(stats, gamma, prior);
    if ((project_simplex(x + g) - x).norm() <= cfg.tol_grad)
      res.converged = true;
  }
  res.x = std::move(x);
  res.value = vg.m_tilde;
  return res;
}

}  // namespace detail

inline Eigen::VectorXd optimize_gamma(const ProblemStats& stats,
                                      const PriorGrid& prior,
                                      const Eigen::VectorXd& gamma0,
                                      const FitConfig& cfg = {}) {
  return detail::lbfgs_gamma(stats, prior, gamma0, cfg).x;
}

inline Eigen::VectorXd optimize_weights(const ProblemStats& stats,
                                        const Eigen::VectorXd& gamma,
                                        const Eigen::VectorXd& weights0,
                                        const PriorGrid& grid,
                                        const FitConfig& cfg = {}) {
  return detail::pgd_weights(stats, gamma, weights0, grid, cfg).x;
}

inline FitResult fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     double sigma2, const GridSpec& grid_spec = {},
                     const FitConfig& cfg = {}) {
  if (grid_spec.k < 2) throw InvalidPrior("grid needs k >= 2");
  const ProblemStats stats = build_stats(X, y, sigma2);

  PriorGrid prior = PriorGrid::uniform(grid_spec.lo, grid_spec.hi, grid_spec.k);
  Eigen::VectorXd beta_hat;
  if (cfg.init_mode == InitMode::provided) {
    if (cfg.beta_provided.size() != stats.p)
      throw DimensionMismatch("provided beta_hat length must equal p");
    beta_hat = cfg.beta_provided;
  } else {
    beta_hat =
        estimate_beta_init(X, y, sigma2, cfg.init_mode, cfg.ridge_lambda);
  }
  Eigen::VectorXd gamma = init_gamma(stats, beta_hat);

  FitResult res;
  double prev = objective(stats, gamma, prior).m_tilde;
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    auto g_res = detail::lbfgs_gamma(stats, prior, gamma, cfg);
    gamma = std::move(g_res.x);
    Eigen::VectorXd w0 =
        Eigen::Map<const Eigen::VectorXd>(prior.weights.data(), prior.size());
    auto w_res = detail::pgd_weights(stats, gamma, w0, prior, cfg);
    prior.weights.assign(w_res.x.data(), w_res.x.data() + w_res.x.size());
    res.line_search_failed |=
        g_res.line_search_failed || w_res.line_search_failed;

    const double cur = w_res.value;
    res.trace.push_back(cur);
    res.outer_iters = outer + 1;
    res.max_simplex_violation = std::max(
        res.max_simplex_violation, std::abs(w_res.x.sum() - 1.0));
    if (std::abs(cur - prev) <= cfg.tol_outer * stats.p) {
      res.converged = true;
      break;
    }
    prev = cur;
  }
  res.prior = std::move(prior);
  res.gamma = std::move(gamma);
  return res;
}

}  // namespace nmfeb

#endif
