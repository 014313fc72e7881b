#ifndef NMFEB_PROBLEM_HPP
#define NMFEB_PROBLEM_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nmfeb/errors.hpp"

namespace nmfeb {

/// Sufficient statistics of the regression problem:
///   w = X^T y / sigma2,
///   A = off-diagonal part of X^T X / sigma2 (zero diagonal),
///   d = diagonal of X^T X / sigma2.
struct ProblemStats {
  Eigen::VectorXd w;
  Eigen::MatrixXd A;
  Eigen::VectorXd d;
  double sigma2 = 1.0;
  int n = 0;
  int p = 0;
  double y_sq_norm = 0.0;
};

struct DesignReport {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double trace_A2_over_p = 0.0;
  bool full_column_rank = false;
  bool passes_assumption1 = false;
  bool meanfield_ok = false;
};

inline ProblemStats build_stats(const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y, double sigma2) {
  if (X.rows() != y.size())
    throw DimensionMismatch("X rows and y length differ");
  if (X.rows() < 1 || X.cols() < 1)
    throw DimensionMismatch("X must be nonempty");
  if (!(sigma2 > 0.0)) throw Error("sigma2 must be positive");

  ProblemStats s;
  s.n = static_cast<int>(X.rows());
  s.p = static_cast<int>(X.cols());
  s.sigma2 = sigma2;
  s.y_sq_norm = y.squaredNorm();
  const Eigen::MatrixXd G = X.transpose() * X / sigma2;
  s.d = G.diagonal();
  for (int i = 0; i < s.p; ++i)
    if (!(s.d[i] > 0.0)) throw ZeroColumn(i);
  s.A = G;
  s.A.diagonal().setZero();
  s.w = X.transpose() * y / sigma2;
  return s;
}

/// Eigenvalue and weak-correlation diagnostics. Never blocks a fit.
inline DesignReport check_design(const Eigen::MatrixXd& X, double sigma2,
                                 double c1 = 1e-3, double c2 = 1e3,
                                 double mf_threshold = 0.5) {
  if (!(sigma2 > 0.0)) throw Error("sigma2 must be positive");
  const int p = static_cast<int>(X.cols());
  const Eigen::MatrixXd G = X.transpose() * X / sigma2;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  DesignReport r;
  r.lambda_min = es.eigenvalues().minCoeff();
  r.lambda_max = es.eigenvalues().maxCoeff();
  Eigen::MatrixXd A = G;
  A.diagonal().setZero();
  r.trace_A2_over_p = A.squaredNorm() / p;
  r.full_column_rank = r.lambda_min > 1e-10 * std::max(r.lambda_max, 0.0);
  r.passes_assumption1 = (r.lambda_min >= c1 && r.lambda_max <= c2);
  r.meanfield_ok = (r.trace_A2_over_p <= mf_threshold);
  return r;
}

/// OLS-style reduction to a correlated Gaussian location model:
/// z = (X^T X)^{-1} X^T y, Sigma = sigma2 (X^T X)^{-1}.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> sequence_reduce(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double sigma2) {
  if (X.rows() != y.size())
    throw DimensionMismatch("X rows and y length differ");
  const Eigen::MatrixXd G = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(es.eigenvalues().minCoeff() > 1e-10 * lmax))
    throw RankDeficient("X^T X is numerically singular");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  Eigen::VectorXd z = ldlt.solve(X.transpose() * y);
  Eigen::MatrixXd Sigma =
      sigma2 * ldlt.solve(Eigen::MatrixXd::Identity(G.rows(), G.cols()));
  // symmetrize round-off
  Sigma = 0.5 * (Sigma + Sigma.transpose()).eval();
  return {std::move(z), std::move(Sigma)};
}

}  // namespace nmfeb

#endif
