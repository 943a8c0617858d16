#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "noisestab/estimate.hpp"
#include "noisestab/linalg.hpp"
#include "noisestab/orthant.hpp"

namespace noisestab {

/// J(x; M) = Pr(X_i <= quantile(x_i) for all i), X ~ N(0, M).
///
/// J evaluated at the Gaussian measures of sets A_i is the joint containment
/// probability of parallel half-spaces with those measures. Indices are
/// 0-based throughout.
struct JQuery {
  Eigen::VectorXd x;
  CorrelationMatrix m;

  JQuery(Eigen::VectorXd x_, CorrelationMatrix m_);
};

/// Derivatives are only evaluated for x in [kInteriorMin, 1 - kInteriorMin]^k.
inline constexpr double kInteriorMin = 1e-6;

/// Full second-order picture of J at one point.
///
/// `mixed` holds the symmetrized J_ij (zero diagonal), `a_matrix` the
/// Laplacian-type matrix a_ij = m_ij J_ij, a_ii = -sum_{j != i} a_ij,
/// `iota` the diagonal 1 / I(x_i), and `hadamard_hessian` M (.) H_J assembled
/// entry by entry from the mixed and repeated second derivatives. Every
/// matrix has a companion of first-order propagated standard errors.
struct JEvaluation {
  Estimate value;
  Eigen::VectorXd grad;
  Eigen::VectorXd grad_se;
  Eigen::MatrixXd mixed;
  Eigen::MatrixXd mixed_se;
  Eigen::MatrixXd a_matrix;
  Eigen::MatrixXd a_se;
  Eigen::VectorXd iota;
  Eigen::MatrixXd hadamard_hessian;
  Eigen::MatrixXd hessian_se;

  /// max |hadamard_hessian - iota A iota| over entries.
  double factorization_residual() const;
  /// Largest eigenvalue of hadamard_hessian and its propagated standard
  /// error (first-order perturbation through the top eigenvector).
  Estimate max_hessian_eigenvalue() const;
};

struct KernelDiagnostic {
  bool applicable = false;
  /// Second-largest eigenvalue of A; strictly negative when the kernel is
  /// one-dimensional.
  double zero_eigenvalue_gap = 0.0;
  /// |cos| between A's top eigenvector and the normalized all-ones vector.
  double kernel_alignment = 0.0;
};

QmcResult j_value_detail(const JQuery& q, const QmcOptions& options, std::uint64_t seed);
Estimate j_value(const JQuery& q, const QmcOptions& options, std::uint64_t seed);
Estimate j_value(const JQuery& q, double target_se, std::uint64_t seed);

/// dJ/dx_i = K(quantile(x_{-i}) - M_{i,-i} quantile(x_i); Schur complement).
QmcResult j_grad_detail(const JQuery& q, Eigen::Index i, const QmcOptions& options,
                        std::uint64_t seed);
Estimate j_grad(const JQuery& q, Eigen::Index i, double target_se, std::uint64_t seed);

/// J_ij = I(x_i) * d_j K(z; Schur complement of M at i), the raw, unsymmetrized
/// quantity. The inner derivative uses the general-variance density of the
/// j-th conditional coordinate. Deterministic sub-seed per ordered (i, j).
Estimate j_cross(const JQuery& q, Eigen::Index i, Eigen::Index j, const QmcOptions& options,
                 std::uint64_t seed);

/// d_i d_j J = (J_ij + J_ji) / (2 I(x_i) I(x_j)), i != j.
Estimate j_mixed_second(const JQuery& q, Eigen::Index i, Eigen::Index j, double target_se,
                        std::uint64_t seed);
/// d_i^2 J = -(1 / I(x_i)^2) sum_{j != i} m_ij J_ij, built from the same J_ij
/// estimates as j_mixed_second.
Estimate j_diag_second(const JQuery& q, Eigen::Index i, double target_se, std::uint64_t seed);

/// Requires m strictly positive definite with nonnegative entries.
JEvaluation hadamard_hessian(const JQuery& q, double target_se, std::uint64_t seed);
JEvaluation hadamard_hessian(const JQuery& q, const QmcOptions& options, std::uint64_t seed);

/// Kernel structure of A: applicable only when every off-diagonal a_ij > 0.
KernelDiagnostic kernel_diagnostic(const JEvaluation& eval);

}  // namespace noisestab
