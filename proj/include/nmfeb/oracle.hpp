#ifndef NMFEB_ORACLE_HPP
#define NMFEB_ORACLE_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "nmfeb/prior.hpp"
#include "nmfeb/problem.hpp"
#include "nmfeb/tilt.hpp"

// Exact brute-force references at toy scale (k^p <= 1e7). Test and
// acceptance code only; nothing here is called from the fitting path.

namespace nmfeb {

struct DiscreteMeasure1D {
  std::vector<double> atoms;
  std::vector<double> probs;

  double mean() const {
    double m = 0.0;
    for (std::size_t r = 0; r < atoms.size(); ++r) m += atoms[r] * probs[r];
    return m;
  }
};

namespace detail {

/// Streaming log-sum-exp: running max with rescaled partial sum.
struct LogSumAcc {
  double max_term = kNegInf;
  double scaled_sum = 0.0;

  void add(double t) {
    if (t == kNegInf) return;
    if (t <= max_term) {
      scaled_sum += std::exp(t - max_term);
    } else {
      scaled_sum = scaled_sum * std::exp(max_term - t) + 1.0;
      max_term = t;
    }
  }
  double value() const {
    return (max_term == kNegInf) ? kNegInf : max_term + std::log(scaled_sum);
  }
};

inline void enumeration_guard(int p, std::size_t k) {
  double combos = 1.0;
  for (int i = 0; i < p; ++i) combos *= static_cast<double>(k);
  if (combos > 1e7)
    throw TooLarge("enumeration k^p exceeds the 1e7 guard");
}

/// Odometer over {0..k-1}^p; calls f(indices, beta).
template <typename F>
void enumerate_grid(int p, const std::vector<double>& atoms, F&& f) {
  const int k = static_cast<int>(atoms.size());
  std::vector<int> idx(p, 0);
  Eigen::VectorXd beta(p);
  for (int i = 0; i < p; ++i) beta[i] = atoms[0];
  for (;;) {
    f(idx, beta);
    int pos = p - 1;
    while (pos >= 0) {
      if (++idx[pos] < k) {
        beta[pos] = atoms[idx[pos]];
        break;
      }
      idx[pos] = 0;
      beta[pos] = atoms[0];
      --pos;
    }
    if (pos < 0) return;
  }
}

}  // namespace detail

/// Exact log Z_p(w, mu): log-space sum over all k^p atom combinations of
/// exp(-1/2 b^T A b + w^T b) under the product of (0, d_i)-tilts.
inline double exact_log_Z(const ProblemStats& stats, const PriorGrid& prior) {
  const int p = stats.p;
  const int k = static_cast<int>(prior.size());
  detail::enumeration_guard(p, k);
  // lw0(i, r): log weight of atom r under the (0, d_i)-tilt of the prior
  Eigen::MatrixXd lw0(p, k);
  for (int i = 0; i < p; ++i) {
    const double c0 = log_partition(prior, 0.0, stats.d[i]);
    for (int r = 0; r < k; ++r) {
      const double a = prior.atoms[r];
      lw0(i, r) = (prior.weights[r] > 0.0)
                      ? std::log(prior.weights[r]) - 0.5 * a * a * stats.d[i] -
                            c0
                      : kNegInf;
    }
  }
  detail::LogSumAcc acc;
  detail::enumerate_grid(
      p, prior.atoms, [&](const std::vector<int>& idx,
                          const Eigen::VectorXd& beta) {
        double t = -0.5 * beta.dot(stats.A * beta) + stats.w.dot(beta);
        for (int i = 0; i < p; ++i) {
          const double l = lw0(i, idx[i]);
          if (l == kNegInf) return;
          t += l;
        }
        acc.add(t);
      });
  return acc.value();
}

/// Exact posterior marginals by full enumeration of the atom grid.
inline std::vector<DiscreteMeasure1D> exact_posterior_marginals(
    const ProblemStats& stats, const PriorGrid& prior) {
  const int p = stats.p;
  const int k = static_cast<int>(prior.size());
  detail::enumeration_guard(p, k);
  Eigen::MatrixXd lprior(p, k);
  for (int i = 0; i < p; ++i)
    for (int r = 0; r < k; ++r) {
      const double a = prior.atoms[r];
      lprior(i, r) = (prior.weights[r] > 0.0)
                         ? std::log(prior.weights[r]) -
                               0.5 * a * a * stats.d[i]
                         : kNegInf;
    }
  std::vector<std::vector<detail::LogSumAcc>> acc(
      p, std::vector<detail::LogSumAcc>(k));
  detail::enumerate_grid(
      p, prior.atoms, [&](const std::vector<int>& idx,
                          const Eigen::VectorXd& beta) {
        double t = -0.5 * beta.dot(stats.A * beta) + stats.w.dot(beta);
        for (int i = 0; i < p; ++i) {
          const double l = lprior(i, idx[i]);
          if (l == kNegInf) return;
          t += l;
        }
        for (int i = 0; i < p; ++i) acc[i][idx[i]].add(t);
      });
  std::vector<DiscreteMeasure1D> out(p);
  for (int i = 0; i < p; ++i) {
    detail::LogSumAcc total;
    for (int r = 0; r < k; ++r)
      if (acc[i][r].max_term != kNegInf) total.add(acc[i][r].value());
    out[i].atoms = prior.atoms;
    out[i].probs.resize(k);
    for (int r = 0; r < k; ++r)
      out[i].probs[r] = (acc[i][r].max_term == kNegInf)
                            ? 0.0
                            : std::exp(acc[i][r].value() - total.value());
  }
  return out;
}

/// Exact log marginal likelihood of y assembled from exact_log_Z.
inline double exact_log_marginal(const ProblemStats& stats,
                                 const PriorGrid& prior) {
  double c0_sum = 0.0;
  for (int i = 0; i < stats.p; ++i)
    c0_sum += log_partition(prior, 0.0, stats.d[i]);
  return -0.5 * stats.n * std::log(2.0 * M_PI * stats.sigma2) -
         stats.y_sq_norm / (2.0 * stats.sigma2) + c0_sum +
         exact_log_Z(stats, prior);
}

/// Exact log marginal of the sequence model z ~ N(theta, Sigma),
/// theta_i iid from the prior.
inline double exact_log_marginal_seq(const Eigen::VectorXd& z,
                                     const Eigen::MatrixXd& Sigma,
                                     const PriorGrid& prior) {
  const int p = static_cast<int>(z.size());
  const int k = static_cast<int>(prior.size());
  if (Sigma.rows() != p || Sigma.cols() != p)
    throw DimensionMismatch("Sigma must be p x p");
  detail::enumeration_guard(p, k);
  Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) throw NotSPD("Sigma is not SPD");
  const Eigen::MatrixXd L = llt.matrixL();
  double log_det = 0.0;
  for (int i = 0; i < p; ++i) log_det += 2.0 * std::log(L(i, i));

  std::vector<double> logw(k);
  for (int r = 0; r < k; ++r)
    logw[r] = (prior.weights[r] > 0.0) ? std::log(prior.weights[r]) : kNegInf;

  detail::LogSumAcc acc;
  detail::enumerate_grid(
      p, prior.atoms, [&](const std::vector<int>& idx,
                          const Eigen::VectorXd& theta) {
        double t = 0.0;
        for (int i = 0; i < p; ++i) {
          if (logw[idx[i]] == kNegInf) return;
          t += logw[idx[i]];
        }
        const Eigen::VectorXd half = llt.matrixL().solve(z - theta);
        acc.add(t - 0.5 * half.squaredNorm());
      });
  return -0.5 * p * std::log(2.0 * M_PI) - 0.5 * log_det + acc.value();
}

/// 1-Wasserstein distance of two discrete measures on the line:
/// integral of |F_a - F_b| over the merged atom partition.
inline double wasserstein1(const DiscreteMeasure1D& a,
                           const DiscreteMeasure1D& b) {
  std::vector<double> grid;
  grid.reserve(a.atoms.size() + b.atoms.size());
  grid.insert(grid.end(), a.atoms.begin(), a.atoms.end());
  grid.insert(grid.end(), b.atoms.begin(), b.atoms.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double dist = 0.0, Fa = 0.0, Fb = 0.0;
  std::size_t ia = 0, ib = 0;
  for (std::size_t t = 0; t + 1 < grid.size(); ++t) {
    while (ia < a.atoms.size() && a.atoms[ia] <= grid[t]) Fa += a.probs[ia++];
    while (ib < b.atoms.size() && b.atoms[ib] <= grid[t]) Fb += b.probs[ib++];
    dist += std::abs(Fa - Fb) * (grid[t + 1] - grid[t]);
  }
  return dist;
}

/// Toy NPMLE by dense lattice search over simplex weights plus pairwise
/// mass-transfer polishing. Ties broken toward the lexicographically
/// smallest weight vector.
inline PriorGrid toy_npmle(const ProblemStats& stats,
                           const std::vector<double>& atoms,
                           int weight_grid_resolution = 50) {
  const int k = static_cast<int>(atoms.size());
  if (k > 3 || stats.p > 6)
    throw TooLarge("toy NPMLE supports k <= 3 atoms and p <= 6");
  const int R = weight_grid_resolution;

  auto eval = [&](const std::vector<double>& w) {
    PriorGrid g = PriorGrid::from(atoms, w);
    return exact_log_marginal(stats, g);
  };

  std::vector<double> best;
  double best_val = -std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<double>& w) {
    const double v = eval(w);
    if (v > best_val + 1e-12 ||
        (v > best_val - 1e-12 &&
         (best.empty() || std::lexicographical_compare(w.begin(), w.end(),
                                                       best.begin(),
                                                       best.end())))) {
      if (v > best_val) best_val = v;
      best = w;
    }
  };

  // lattice over the simplex at resolution 1/R
  std::vector<double> w(k, 0.0);
  if (k == 1) {
    consider({1.0});
  } else if (k == 2) {
    for (int i = 0; i <= R; ++i)
      consider({static_cast<double>(i) / R, static_cast<double>(R - i) / R});
  } else {
    for (int i = 0; i <= R; ++i)
      for (int j = 0; j <= R - i; ++j)
        consider({static_cast<double>(i) / R, static_cast<double>(j) / R,
                  static_cast<double>(R - i - j) / R});
  }

  // pairwise mass-transfer polish with shrinking step
  for (double delta = 0.5 / R; delta > 1e-5; delta *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int r = 0; r < k; ++r) {
        for (int s = 0; s < k; ++s) {
          if (r == s || best[r] < delta) continue;
          std::vector<double> cand = best;
          cand[r] -= delta;
          cand[s] += delta;
          const double v = eval(cand);
          if (v > best_val + 1e-13) {
            best_val = v;
            best = cand;
            improved = true;
          }
        }
      }
    }
  }
  return PriorGrid::from(atoms, best);
}

}  // namespace nmfeb

#endif
