#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "noisestab/estimate.hpp"

namespace noisestab {

/// Pr(X_i <= limits_i for all i) with X ~ N(0, cov). Limits may be +-inf; the
/// covariance need not have unit diagonal.
struct OrthantQuery {
  Eigen::VectorXd limits;
  Eigen::MatrixXd cov;

  /// Throws std::invalid_argument on shape mismatch or NaN limits, and
  /// NotPositiveDefinite if cov is not PSD.
  void validate() const;
};

/// Largest orthant dimension accepted by the QMC estimator.
inline constexpr Eigen::Index kMaxOrthantDim = 12;

struct QmcOptions {
  double target_se = 1e-6;
  /// Total points (all shifts) never exceeded by the adaptive loop.
  std::uint64_t max_points = 100'000'000;
  std::uint32_t shifts = 12;
  std::uint64_t initial_points = 1024;  // per shift
  /// Sort coordinates by standardized limit before conditioning.
  bool reorder = true;
  /// When nonzero, evaluate exactly this many points per shift and skip the
  /// adaptive loop. Makes the estimator a smooth function of the limits.
  std::uint64_t fixed_points = 0;
};

struct QmcResult {
  Estimate estimate;
  /// Mean over each randomized shift; empty when the value was exact.
  std::vector<double> shift_means;
  bool cap_hit = false;
};

/// Brute-force oracle: indicator average over Cholesky-mixed normal draws.
Estimate orthant_mc(const OrthantQuery& q, std::uint64_t samples, std::uint64_t seed);

/// Separation-of-variables transform integrated on a Kronecker lattice with
/// randomized shifts. The standard error is the spread across shifts.
/// Coordinates with +inf limits are marginalized out exactly, and any
/// degenerate direction of cov is handled by its conditional indicator.
QmcResult orthant_qmc(const OrthantQuery& q, const QmcOptions& options, std::uint64_t seed);

inline Estimate orthant_qmc(const OrthantQuery& q, double target_se, std::uint64_t seed) {
  QmcOptions options;
  options.target_se = target_se;
  return orthant_qmc(q, options, seed).estimate;
}

/// Pr(X_1 <= 0, X_2 <= 0) for unit variances and correlation rho:
/// 1/4 + asin(rho) / (2 pi). Test oracle only.
double bivariate_orthant_closed(double rho);

}  // namespace noisestab
