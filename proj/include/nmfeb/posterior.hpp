#ifndef NMFEB_POSTERIOR_HPP
#define NMFEB_POSTERIOR_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "nmfeb/prior.hpp"
#include "nmfeb/tilt.hpp"

// Product-form approximate posterior: coordinate i gets the
// (gamma_i, d_i)-tilt of the fitted prior.

namespace nmfeb {

struct PosteriorProduct {
  std::vector<TiltedMeasure> components;
  PriorGrid prior;
  Eigen::VectorXd gamma;
  Eigen::VectorXd d;

  int dim() const { return static_cast<int>(components.size()); }
};

inline PosteriorProduct build_posterior(const PriorGrid& prior,
                                        const Eigen::VectorXd& gamma,
                                        const Eigen::VectorXd& d) {
  if (gamma.size() != d.size())
    throw DimensionMismatch("gamma and d length differ");
  PosteriorProduct post;
  post.prior = prior;
  post.gamma = gamma;
  post.d = d;
  post.components.reserve(gamma.size());
  for (Eigen::Index i = 0; i < gamma.size(); ++i) {
    if (!(d[i] > 0.0)) throw Error("d entries must be positive");
    post.components.push_back(tilt_measure(prior, gamma[i], d[i]));
  }
  return post;
}

inline Eigen::VectorXd posterior_mean(const PosteriorProduct& post) {
  Eigen::VectorXd mean(post.dim());
  for (int i = 0; i < post.dim(); ++i) {
    double m = 0.0;
    const TiltedMeasure& c = post.components[i];
    for (std::size_t r = 0; r < c.size(); ++r) m += c.atoms[r] * c.prob(r);
    mean[i] = m;
  }
  return mean;
}

/// Per-coordinate credible intervals
/// (q_{alpha/2} - eps, q_{1-alpha/2} + eps).
inline std::vector<std::pair<double, double>> credible_intervals(
    const PosteriorProduct& post, double alpha, double eps = 0.0) {
  std::vector<std::pair<double, double>> out;
  out.reserve(post.dim());
  for (const TiltedMeasure& c : post.components)
    out.emplace_back(quantile(c, alpha / 2.0) - eps,
                     quantile(c, 1.0 - alpha / 2.0) + eps);
  return out;
}

/// Estimated null mass: total prior weight on atoms with |a_r| <= eps.
inline double null_proportion(const PriorGrid& prior, double eps = 0.05) {
  double mass = 0.0;
  for (std::size_t r = 0; r < prior.size(); ++r)
    if (std::abs(prior.atoms[r]) <= eps) mass += prior.weights[r];
  return mass;
}

}  // namespace nmfeb

#endif
