#ifndef NMFEB_PRIOR_HPP
#define NMFEB_PRIOR_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nmfeb/errors.hpp"

namespace nmfeb {

/// Discrete prior on a fixed atom grid: sum_r weights[r] * delta(atoms[r]).
/// Atoms are strictly increasing and live inside the declared support
/// interval [lo, hi]; weights lie on the probability simplex. Atoms may
/// carry weight exactly 0 -- they stay in the grid so a weight optimizer
/// can raise them later.
struct PriorGrid {
  std::vector<double> atoms;
  std::vector<double> weights;
  double lo = -1.0;
  double hi = 1.0;

  std::size_t size() const { return atoms.size(); }

  void validate() const {
    const std::size_t k = atoms.size();
    if (k < 1) throw InvalidPrior("prior must have at least one atom");
    if (weights.size() != k)
      throw InvalidPrior("atoms/weights length mismatch");
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
      throw InvalidPrior("support interval [lo, hi] must be finite, lo < hi");
    double sum = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      if (!(atoms[r] >= lo && atoms[r] <= hi))
        throw InvalidPrior("atom outside declared support interval");
      if (r > 0 && !(atoms[r] > atoms[r - 1]))
        throw InvalidPrior("atoms must be strictly increasing");
      if (!(weights[r] >= 0.0))
        throw InvalidPrior("weights must be nonnegative");
      sum += weights[r];
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw InvalidPrior("weights must sum to 1 within 1e-12");
  }

  int positive_weight_count() const {
    return static_cast<int>(
        std::count_if(weights.begin(), weights.end(),
                      [](double w) { return w > 0.0; }));
  }

  /// Uniform weights on k equally spaced atoms spanning [lo, hi].
  static PriorGrid uniform(double lo, double hi, int k) {
    if (k < 1) throw InvalidPrior("k must be >= 1");
    PriorGrid g;
    g.lo = lo;
    g.hi = hi;
    g.atoms.resize(k);
    g.weights.assign(k, 1.0 / k);
    if (k == 1) {
      g.atoms[0] = 0.5 * (lo + hi);
    } else {
      for (int r = 0; r < k; ++r)
        g.atoms[r] = lo + (hi - lo) * r / (k - 1);
    }
    g.validate();
    return g;
  }

  static PriorGrid from(std::vector<double> atoms, std::vector<double> weights,
                        double lo = -1.0, double hi = 1.0) {
    PriorGrid g;
    g.atoms = std::move(atoms);
    g.weights = std::move(weights);
    g.lo = lo;
    g.hi = hi;
    // widen the declared support if the caller's atoms spill past [lo, hi]
    if (!g.atoms.empty()) {
      g.lo = std::min(g.lo, g.atoms.front());
      g.hi = std::max(g.hi, g.atoms.back());
    }
    g.validate();
    return g;
  }

  static PriorGrid point_mass(double c) { return from({c}, {1.0}); }
};

}  // namespace nmfeb

#endif
