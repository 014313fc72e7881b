#ifndef NMFEB_SIM_HPP
#define NMFEB_SIM_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

#include "nmfeb/errors.hpp"
#include "nmfeb/prior.hpp"
#include "nmfeb/rng.hpp"

// Seeded data generation for the simulation studies: Gaussian designs
// (independent entries or AR(1) rows), coefficients drawn iid from a
// discrete prior, Gaussian noise. Named RNG sub-streams (design / beta /
// noise) keep the realized beta fixed when only sigma2 changes.

namespace nmfeb {

enum class DesignKind { iid_gaussian, ar_gaussian };

struct SimConfig {
  int n = 500;
  int p = 100;
  DesignKind design_kind = DesignKind::iid_gaussian;
  double rho = 0.5;  // AR(1) correlation, used by ar_gaussian only
  PriorGrid prior_truth = PriorGrid::from({-1.0, 0.0, 1.0}, {0.25, 0.5, 0.25});
  double sigma2 = 1.0;
  std::uint64_t seed = 0;
  bool row_normalize = true;  // scale entries by 1/sqrt(n)

  void validate() const {
    if (n < 1 || p < 1) throw Error("n and p must be positive");
    if (!(sigma2 > 0.0)) throw Error("sigma2 must be positive");
    if (design_kind == DesignKind::ar_gaussian && !(rho > -1.0 && rho < 1.0))
      throw Error("rho must lie in (-1, 1)");
    prior_truth.validate();
  }
};

inline Eigen::MatrixXd gen_design(const SimConfig& cfg) {
  cfg.validate();
  CounterRng rng(cfg.seed, "design");
  const double scale = cfg.row_normalize ? 1.0 / std::sqrt(cfg.n) : 1.0;
  Eigen::MatrixXd X(cfg.n, cfg.p);
  if (cfg.design_kind == DesignKind::iid_gaussian) {
    for (int i = 0; i < cfg.n; ++i)
      for (int j = 0; j < cfg.p; ++j) X(i, j) = scale * rng.next_normal();
  } else {
    const double innov = std::sqrt(1.0 - cfg.rho * cfg.rho);
    for (int i = 0; i < cfg.n; ++i) {
      double prev = rng.next_normal();
      X(i, 0) = scale * prev;
      for (int j = 1; j < cfg.p; ++j) {
        prev = cfg.rho * prev + innov * rng.next_normal();
        X(i, j) = scale * prev;
      }
    }
  }
  return X;
}

struct SimData {
  Eigen::VectorXd beta;
  Eigen::VectorXd y;
};

inline SimData gen_data(const Eigen::MatrixXd& X, const PriorGrid& prior_truth,
                        double sigma2, std::uint64_t seed) {
  prior_truth.validate();
  if (!(sigma2 > 0.0)) throw Error("sigma2 must be positive");
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());

  CounterRng beta_rng(seed, "beta");
  SimData out;
  out.beta.resize(p);
  for (int i = 0; i < p; ++i) {
    const double u = beta_rng.next_uniform();
    double cum = 0.0;
    double value = prior_truth.atoms.back();
    for (std::size_t r = 0; r < prior_truth.size(); ++r) {
      cum += prior_truth.weights[r];
      if (u <= cum) {
        value = prior_truth.atoms[r];
        break;
      }
    }
    out.beta[i] = value;
  }

  CounterRng noise_rng(seed, "noise");
  out.y = X * out.beta;
  const double sd = std::sqrt(sigma2);
  for (int i = 0; i < n; ++i) out.y[i] += sd * noise_rng.next_normal();
  return out;
}

}  // namespace nmfeb

#endif
