#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "noisestab/estimate.hpp"
#include "noisestab/geometry.hpp"
#include "noisestab/linalg.hpp"
#include "noisestab/random.hpp"

namespace noisestab {

/// Draws (X_1, ..., X_k), X_i in R^n, with joint covariance M (x) I_n by
/// mixing k iid standard n-vectors Z_j through the Cholesky factor Q of M:
/// X_i = sum_j q_ij Z_j. The kn x kn covariance is never formed.
class KroneckerSampler {
 public:
  KroneckerSampler(const CorrelationMatrix& m, Eigen::Index n);

  /// One draw as a k x n matrix whose row i is X_i. `out` is resized.
  void draw(Rng& rng, Eigen::MatrixXd& out);

  Eigen::Index k() const { return q_.rows(); }
  Eigen::Index n() const { return n_; }
  const Eigen::MatrixXd& factor() const { return q_; }

 private:
  Eigen::MatrixXd q_;
  Eigen::Index n_;
  Eigen::MatrixXd z_;
};

/// Single joint draw (convenience wrapper over KroneckerSampler).
Eigen::MatrixXd sample_joint(const CorrelationMatrix& m, Eigen::Index n, std::uint64_t seed);

/// A discretized stationary OU trajectory: states.row(j) = X_{times[j]}.
struct OUPath {
  std::vector<double> times;
  Eigen::MatrixXd states;
  std::uint64_t seed = 0;
};

/// Exact-transition path: X_0 ~ gamma_n, then
/// X_{t+d} = e^{-d} X_t + sqrt(1 - e^{-2d}) xi. The grid must start at 0 and
/// be nondecreasing (repeated times give repeated states).
OUPath simulate_path(Eigen::Index n, std::span<const double> grid, std::uint64_t seed);

/// Uniform grid 0, tau/steps, ..., tau.
std::vector<double> uniform_grid(double tau, std::uint64_t steps);

struct ExitTimeEstimate {
  double horizon = 0.0;
  std::uint64_t steps = 0;
  Estimate survival;  // Pr(X_{i tau / steps} in A for i = 0..steps)
};

struct OccupationEstimate {
  double horizon = 0.0;
  std::uint64_t steps = 0;
  Estimate value;
};

/// Survival of the grid-monitored path in A up to tau. Over-estimates the
/// continuous-time Pr(e_A >= tau) because excursions between grid points
/// are missed.
ExitTimeEstimate exit_survival(const SetExpr& s, double tau, std::uint64_t steps,
                               std::uint64_t paths, std::uint64_t seed);

/// Two exit estimates driven by identical noise per path, with the standard
/// error of the paired difference (b - a).
struct PairedExit {
  ExitTimeEstimate a;
  ExitTimeEstimate b;
  double difference_se = 0.0;
};
PairedExit exit_survival_paired(const SetExpr& a, const SetExpr& b, double tau, std::uint64_t steps,
                                std::uint64_t paths, std::uint64_t seed);

/// (tau / steps) * sum_{i=1..steps} freq{X_{t_j} in A1 for j < i and X_{t_i} in A2}.
OccupationEstimate occupation(const SetExpr& a1, const SetExpr& a2, double tau, std::uint64_t steps,
                              std::uint64_t paths, std::uint64_t seed);

struct PairedOccupation {
  OccupationEstimate a;
  OccupationEstimate b;
  double difference_se = 0.0;
};
/// Occupation functionals of (a1, a2) and (b1, b2) on shared paths.
PairedOccupation occupation_paired(const SetExpr& a1, const SetExpr& a2, const SetExpr& b1,
                                   const SetExpr& b2, double tau, std::uint64_t steps,
                                   std::uint64_t paths, std::uint64_t seed);

/// (P_t 1_s)(x) = E 1_s(e^{-t} x + sqrt(1 - e^{-2t}) Y), Y ~ gamma_n, by Monte Carlo.
/// Throws std::domain_error for t <= 0.
Estimate semigroup_apply(const SetExpr& s, double t, const Eigen::VectorXd& x,
                         std::uint64_t samples, std::uint64_t seed);

/// P_t of the half-space {y : nu . y <= c} at a point with nu . x = u:
/// Phi((c - e^{-t} u) / sqrt(1 - e^{-2t})).
double semigroup_halfspace_closed(double c, double t, double u);

/// Closed-form P_t 1_s(x) where available: half-spaces, balls centered at the
/// origin (noncentral chi-square), boxes and complements of those.
std::optional<double> semigroup_exact(const SetExpr& s, double t, const Eigen::VectorXd& x);

/// Max over probe points of |grad quantile(P_t 1_s)| / k_t, by central
/// differences. Uses the closed form when available, otherwise Monte Carlo
/// with common random numbers across the difference stencil.
double gradient_bound_check(const SetExpr& s, double t, std::uint64_t probe_points,
                            std::uint64_t seed);

}  // namespace noisestab
