#ifndef NMFEB_TESTS_HELPERS_HPP
#define NMFEB_TESTS_HELPERS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nmfeb/prior.hpp"
#include "nmfeb/problem.hpp"
#include "nmfeb/rng.hpp"

namespace testutil {

/// Random prior with k distinct sorted atoms in [-1, 1] and Dirichlet-like
/// weights.
inline nmfeb::PriorGrid random_prior(nmfeb::CounterRng& rng, int k) {
  std::vector<double> atoms(k), w(k);
  for (;;) {
    for (int r = 0; r < k; ++r) atoms[r] = 2.0 * rng.next_uniform() - 1.0;
    std::sort(atoms.begin(), atoms.end());
    bool distinct = true;
    for (int r = 1; r < k; ++r)
      if (atoms[r] - atoms[r - 1] < 1e-3) distinct = false;
    if (distinct) break;
  }
  double sum = 0.0;
  for (int r = 0; r < k; ++r) {
    w[r] = -std::log(rng.next_uniform());
    sum += w[r];
  }
  for (int r = 0; r < k; ++r) w[r] /= sum;
  // renormalize exactly to the 1e-12 contract
  const double s2 = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= s2;
  return nmfeb::PriorGrid::from(atoms, w);
}

/// Random Gaussian design, entries N(0, scale^2).
inline Eigen::MatrixXd random_design(nmfeb::CounterRng& rng, int n, int p,
                                     double scale) {
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = scale * rng.next_normal();
  return X;
}

inline Eigen::VectorXd random_vector(nmfeb::CounterRng& rng, int n,
                                     double scale) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.next_normal();
  return v;
}

/// Random regression instance with n = 4p rows so correlations stay mild.
inline nmfeb::ProblemStats random_stats(nmfeb::CounterRng& rng, int p,
                                        double sigma2 = 1.0) {
  const int n = 4 * p;
  const Eigen::MatrixXd X = random_design(rng, n, p, 1.0 / std::sqrt(n));
  const Eigen::VectorXd y = random_vector(rng, n, 1.0);
  return nmfeb::build_stats(X, y, sigma2);
}

}  // namespace testutil

#endif
