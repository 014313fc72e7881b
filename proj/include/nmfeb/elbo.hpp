#ifndef NMFEB_ELBO_HPP
#define NMFEB_ELBO_HPP

#include <Eigen/Dense>
#include <cmath>

#include "nmfeb/prior.hpp"
#include "nmfeb/problem.hpp"
#include "nmfeb/tilt.hpp"

// Mean-field objective
//   Mtilde(gamma, w, nu(p)) = -1/2 u^T A u + u^T w - u^T gamma
//                             + sum_i c(gamma_i, d_i),
// where u_i is the mean of the (gamma_i, d_i)-tilt of the prior, plus its
// exact gradients in gamma and in the prior weights. The full evidence
// bound on log m(y) is the same quantity shifted by the Gaussian constant.

namespace nmfeb {

struct ObjectiveValue {
  double m_tilde = 0.0;
  double elbo_evidence = 0.0;
};

namespace detail {

/// Per-coordinate log-partitions, tilt means and variances, shared by the
/// objective and both gradients.
struct TiltProfile {
  Eigen::VectorXd c;    // c(gamma_i, d_i)
  Eigen::VectorXd u;    // tilt means
  Eigen::VectorXd var;  // tilt variances = du_i/dgamma_i
};

inline TiltProfile tilt_profile(const PriorGrid& prior,
                                const Eigen::VectorXd& gamma,
                                const Eigen::VectorXd& d) {
  const int p = static_cast<int>(gamma.size());
  const int k = static_cast<int>(prior.size());
  TiltProfile t;
  t.c.resize(p);
  t.u.resize(p);
  t.var.resize(p);
  // single pass per coordinate: raw log weights, then normalized moments
  std::vector<double> lw(k), logp(k);
  for (int r = 0; r < k; ++r)
    logp[r] = prior.weights[r] > 0.0 ? std::log(prior.weights[r]) : kNegInf;
  for (int i = 0; i < p; ++i) {
    double m = kNegInf;
    for (int r = 0; r < k; ++r) {
      const double a = prior.atoms[r];
      lw[r] = logp[r] + a * gamma[i] - 0.5 * a * a * d[i];
      m = std::max(m, lw[r]);
    }
    double z = 0.0, mean = 0.0, second = 0.0;
    for (int r = 0; r < k; ++r) {
      if (lw[r] == kNegInf) continue;
      const double e = std::exp(lw[r] - m);
      z += e;
      mean += prior.atoms[r] * e;
      second += prior.atoms[r] * prior.atoms[r] * e;
    }
    t.c[i] = m + std::log(z);
    mean /= z;
    second /= z;
    t.u[i] = mean;
    t.var[i] = std::max(0.0, second - mean * mean);
  }
  return t;
}

inline double m_tilde_from_profile(const ProblemStats& stats,
                                   const Eigen::VectorXd& gamma,
                                   const TiltProfile& t) {
  const Eigen::VectorXd Au = stats.A * t.u;
  return -0.5 * t.u.dot(Au) + t.u.dot(stats.w) - t.u.dot(gamma) + t.c.sum();
}

inline void check_dims(const ProblemStats& stats,
                       const Eigen::VectorXd& gamma) {
  if (gamma.size() != stats.p)
    throw DimensionMismatch("gamma length must equal p");
}

}  // namespace detail

inline ObjectiveValue objective(const ProblemStats& stats,
                                const Eigen::VectorXd& gamma,
                                const PriorGrid& prior) {
  detail::check_dims(stats, gamma);
  const auto t = detail::tilt_profile(prior, gamma, stats.d);
  ObjectiveValue v;
  v.m_tilde = detail::m_tilde_from_profile(stats, gamma, t);
  v.elbo_evidence = -0.5 * stats.n * std::log(2.0 * M_PI * stats.sigma2) -
                    stats.y_sq_norm / (2.0 * stats.sigma2) + v.m_tilde;
  return v;
}

/// dMtilde/dgamma_i = [-(A u)_i + w_i - gamma_i] * var_i.
inline Eigen::VectorXd grad_gamma(const ProblemStats& stats,
                                  const Eigen::VectorXd& gamma,
                                  const PriorGrid& prior) {
  detail::check_dims(stats, gamma);
  const auto t = detail::tilt_profile(prior, gamma, stats.d);
  return (stats.w - stats.A * t.u - gamma).cwiseProduct(t.var);
}

/// Objective value and gamma-gradient in one pass (the optimizer asks for
/// both at every trial point).
struct ValueGradGamma {
  double m_tilde;
  Eigen::VectorXd grad;
};

inline ValueGradGamma value_and_grad_gamma(const ProblemStats& stats,
                                           const Eigen::VectorXd& gamma,
                                           const PriorGrid& prior) {
  detail::check_dims(stats, gamma);
  const auto t = detail::tilt_profile(prior, gamma, stats.d);
  const Eigen::VectorXd Au = stats.A * t.u;
  ValueGradGamma out;
  out.m_tilde =
      -0.5 * t.u.dot(Au) + t.u.dot(stats.w) - t.u.dot(gamma) + t.c.sum();
  out.grad = (stats.w - Au - gamma).cwiseProduct(t.var);
  return out;
}

namespace detail {

inline Eigen::VectorXd grad_weights_from_profile(const ProblemStats& stats,
                                                 const Eigen::VectorXd& gamma,
                                                 const PriorGrid& prior,
                                                 const TiltProfile& t) {
  const int k = static_cast<int>(prior.size());
  const Eigen::VectorXd s = stats.w - stats.A * t.u - gamma;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < stats.p; ++i) {
    for (int r = 0; r < k; ++r) {
      const double a = prior.atoms[r];
      const double e =
          std::exp(a * gamma[i] - 0.5 * a * a * stats.d[i] - t.c[i]);
      g[r] += e * (s[i] * (a - t.u[i]) + 1.0);
    }
  }
  return g;
}

}  // namespace detail

/// dMtilde/dp_r = sum_i e_ir * [s_i (a_r - u_i) + 1], with
/// e_ir = exp(a_r gamma_i - a_r^2 d_i/2 - c_i) and s_i = -(Au)_i + w_i
/// - gamma_i. One-sided limits at zero weights come out of the same
/// formula since it depends on p_r only through the normalized tilt.
inline Eigen::VectorXd grad_weights(const ProblemStats& stats,
                                    const Eigen::VectorXd& gamma,
                                    const PriorGrid& prior) {
  detail::check_dims(stats, gamma);
  const auto t = detail::tilt_profile(prior, gamma, stats.d);
  return detail::grad_weights_from_profile(stats, gamma, prior, t);
}

struct ValueGradWeights {
  double m_tilde;
  Eigen::VectorXd grad;  // length k
};

inline ValueGradWeights value_and_grad_weights(const ProblemStats& stats,
                                               const Eigen::VectorXd& gamma,
                                               const PriorGrid& prior) {
  detail::check_dims(stats, gamma);
  const auto t = detail::tilt_profile(prior, gamma, stats.d);
  ValueGradWeights out;
  out.m_tilde = detail::m_tilde_from_profile(stats, gamma, t);
  out.grad = detail::grad_weights_from_profile(stats, gamma, prior, t);
  return out;
}

}  // namespace nmfeb

#endif
