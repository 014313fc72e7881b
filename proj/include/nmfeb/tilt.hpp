#ifndef NMFEB_TILT_HPP
#define NMFEB_TILT_HPP

#include <cmath>
#include <limits>
#include <vector>

#include "nmfeb/errors.hpp"
#include "nmfeb/prior.hpp"

// Exponential-family kernel for quadratic tilts of a discrete prior.
// A tilt reweights the base prior by exp(gamma*b - d*b^2/2) and normalizes
// by the log-partition c(gamma, d). Everything works in log-space with
// max-subtraction; exponents can reach +-1e3 during optimization.

namespace nmfeb {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// A quadratic tilt of a PriorGrid, stored as atoms with normalized
/// log-weights. Zero-weight atoms carry log-weight -inf.
struct TiltedMeasure {
  std::vector<double> atoms;
  std::vector<double> log_weights;
  double gamma = 0.0;
  double d = 0.0;

  std::size_t size() const { return atoms.size(); }
  double prob(std::size_t r) const { return std::exp(log_weights[r]); }
};

namespace detail {

// Unnormalized log tilt weight of atom r; -inf when the prior weight is 0.
inline double raw_log_weight(const PriorGrid& prior, std::size_t r,
                             double gamma, double d) {
  if (prior.weights[r] <= 0.0) return kNegInf;
  const double a = prior.atoms[r];
  return std::log(prior.weights[r]) + a * gamma - 0.5 * a * a * d;
}

}  // namespace detail

/// Log-partition c(gamma, d) = log sum_r p_r exp(a_r*gamma - a_r^2*d/2).
inline double log_partition(const PriorGrid& prior, double gamma, double d) {
  const std::size_t k = prior.size();
  double m = kNegInf;
  for (std::size_t r = 0; r < k; ++r)
    m = std::max(m, detail::raw_log_weight(prior, r, gamma, d));
  double s = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    const double t = detail::raw_log_weight(prior, r, gamma, d);
    if (t > kNegInf) s += std::exp(t - m);
  }
  return m + std::log(s);
}

/// Mean and variance of the tilted measure. The variance equals the
/// derivative of the mean in gamma.
struct TiltMoments {
  double mean;
  double variance;
};

inline TiltMoments tilt_moments(const PriorGrid& prior, double gamma,
                                double d) {
  const double c = log_partition(prior, gamma, d);
  double mean = 0.0, second = 0.0;
  for (std::size_t r = 0; r < prior.size(); ++r) {
    const double t = detail::raw_log_weight(prior, r, gamma, d);
    if (t == kNegInf) continue;
    const double q = std::exp(t - c);
    mean += prior.atoms[r] * q;
    second += prior.atoms[r] * prior.atoms[r] * q;
  }
  const double var = std::max(0.0, second - mean * mean);
  return {mean, var};
}

inline TiltedMeasure tilt_measure(const PriorGrid& prior, double gamma,
                                  double d) {
  const double c = log_partition(prior, gamma, d);
  TiltedMeasure m;
  m.atoms = prior.atoms;
  m.gamma = gamma;
  m.d = d;
  m.log_weights.resize(prior.size());
  for (std::size_t r = 0; r < prior.size(); ++r) {
    const double t = detail::raw_log_weight(prior, r, gamma, d);
    m.log_weights[r] = (t == kNegInf) ? kNegInf : t - c;
  }
  return m;
}

/// KL divergence of the (gamma, d)-tilt from the (0, d)-tilt:
/// gamma * mean(gamma, d) - c(gamma, d) + c(0, d). Always >= 0.
inline double tilt_kl(const PriorGrid& prior, double gamma, double d) {
  const double kl = gamma * tilt_moments(prior, gamma, d).mean -
                    log_partition(prior, gamma, d) +
                    log_partition(prior, 0.0, d);
  return std::max(0.0, kl);
}

/// Inverts the strictly increasing mean map gamma -> mean(gamma, d) by
/// bisection with bracket doubling. u must lie strictly inside the open
/// convex hull of the positive-weight atoms.
inline double natural_from_mean(const PriorGrid& prior, double u, double d,
                                double tol = 1e-10) {
  if (prior.positive_weight_count() < 2)
    throw DegeneratePrior("mean inversion needs >= 2 positive-weight atoms");
  double amin = std::numeric_limits<double>::infinity(), amax = -amin;
  for (std::size_t r = 0; r < prior.size(); ++r) {
    if (prior.weights[r] > 0.0) {
      amin = std::min(amin, prior.atoms[r]);
      amax = std::max(amax, prior.atoms[r]);
    }
  }
  if (!(u > amin && u < amax))
    throw MeanOutOfRange("target mean outside the open hull of atoms");

  auto mean_at = [&](double g) { return tilt_moments(prior, g, d).mean; };

  double blo = -1.0, bhi = 1.0;
  while (mean_at(blo) >= u) blo *= 2.0;
  while (mean_at(bhi) <= u) bhi *= 2.0;
  double g = 0.5 * (blo + bhi);
  for (int it = 0; it < 400; ++it) {
    g = 0.5 * (blo + bhi);
    const double m = mean_at(g);
    if (std::abs(m - u) <= tol) return g;
    if (m < u)
      blo = g;
    else
      bhi = g;
  }
  return g;
}

/// Left-continuous generalized inverse CDF: inf{x : F(x) >= alpha}.
/// A 1e-12 slack absorbs round-off in the cumulative sums.
inline double quantile(const TiltedMeasure& measure, double alpha) {
  double cum = 0.0;
  for (std::size_t r = 0; r < measure.size(); ++r) {
    cum += measure.prob(r);
    if (cum >= alpha - 1e-12) return measure.atoms[r];
  }
  return measure.atoms.back();
}

}  // namespace nmfeb

#endif
