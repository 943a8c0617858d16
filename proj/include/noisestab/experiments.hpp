#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "noisestab/config.hpp"
#include "noisestab/estimate.hpp"
#include "noisestab/geometry.hpp"
#include "noisestab/linalg.hpp"

namespace noisestab {

// ---------------------------------------------------------------- verdicts

enum class Verdict { holds, equality_band, violated };

std::string_view verdict_name(Verdict v);

/// Bands are 3 standard errors of the difference, and never narrower than
/// kBandFloor in absolute terms.
inline constexpr double kBandWidth = 3.0;
inline constexpr double kBandFloor = 1e-6;

/// violated iff margin < -3, equality_band iff |margin| <= 3, holds otherwise.
Verdict classify(double margin_se);

/// One claimed inequality lhs <= rhs with its statistical evidence.
struct ComparisonResult {
  std::string name;
  std::optional<double> param;  // tau, t, ... when the comparison is one of a family
  Estimate lhs;
  Estimate rhs;
  double difference_se = 0.0;  // standard error of rhs - lhs before flooring
  double margin_se = 0.0;      // (rhs - lhs) / max(difference_se, kBandFloor / kBandWidth)
  Verdict verdict = Verdict::equality_band;
};

/// Builds a comparison. Without `paired_se` the two sides are taken as
/// independent; with it (common random numbers) that value is the standard
/// error of the difference.
ComparisonResult compare(std::string name, const Estimate& lhs, const Estimate& rhs,
                         std::optional<double> paired_se = std::nullopt,
                         std::optional<double> param = std::nullopt);

/// Refusal to run outside a theorem's hypotheses.
class HypothesisError : public std::invalid_argument {
 public:
  explicit HypothesisError(const std::string& what) : std::invalid_argument(what) {}
};

// ------------------------------------------------------------ experiments

/// Pr(X_i in A_i for all i) for (X_1..X_k) ~ N(0, M (x) I_n), by Monte Carlo.
Estimate joint_containment(const std::vector<SetExpr>& sets, const CorrelationMatrix& m,
                           std::uint64_t samples, std::uint64_t seed);

/// Gaussian measures of the sets (exact where possible), one sub-seed each.
std::vector<Estimate> set_measures(const std::vector<SetExpr>& sets, std::uint64_t samples,
                                   std::uint64_t seed);

/// J at the given measures; standard errors of the measures are propagated
/// through the gradient of J.
Estimate j_at_measures(const std::vector<Estimate>& measures, const CorrelationMatrix& m,
                       double target_se, std::uint64_t seed);

/// lhs: joint containment of the A_i; rhs: J(gamma(A_1), ..., gamma(A_k); M),
/// the same probability for parallel half-spaces. Requires M >= 0 entrywise.
ComparisonResult verify_main_inequality(const std::vector<SetExpr>& sets, const CorrelationMatrix& m,
                                        std::uint64_t samples, double target_se, std::uint64_t seed);

/// Two-set case with M = [[1, e^{-t}], [e^{-t}, 1]]: Pr(X_0 in A_1, X_t in A_2).
ComparisonResult verify_noise_stability(const SetExpr& a1, const SetExpr& a2, double t,
                                        std::uint64_t samples, double target_se, std::uint64_t seed);

/// Survival of A against the half-space {y_1 <= quantile(gamma(A))} at each
/// tau, on common paths.
std::vector<ComparisonResult> verify_exit_dominance(const SetExpr& a, const std::vector<double>& taus,
                                                    std::uint64_t steps, std::uint64_t paths,
                                                    std::uint64_t samples, std::uint64_t seed);

/// Occupation functional of (A_1, A_2) against matched parallel half-spaces.
ComparisonResult verify_occupation(const SetExpr& a1, const SetExpr& a2, double tau, std::uint64_t steps,
                                   std::uint64_t paths, std::uint64_t samples, std::uint64_t seed);

/// Linear fits of w_i(x) = quantile(P_t 1_{A_i}(x)) over a Gaussian probe
/// cloud. Parallel half-spaces give exactly linear w_i with a common
/// direction and slope k_t.
struct EqualityDiagnostic {
  double t = 0.0;
  double k_t = 0.0;
  std::uint64_t probes = 0;
  std::vector<Eigen::VectorXd> direction;  // fitted a_i
  std::vector<double> offset;              // fitted b_i
  std::vector<double> residual;            // RMS residual of the fit
  std::vector<std::uint64_t> used_probes;  // probes where 0 < P_t 1_{A_i} < 1
  Eigen::MatrixXd cosines;                 // between fitted directions

  static constexpr double kResidualTolerance = 0.02;
  static constexpr double kCosineTolerance = 0.999;
  /// Every residual and every pairwise cosine within tolerance.
  bool consistent_with_parallel_halfspaces() const;
};

EqualityDiagnostic equality_diagnostic_run(const std::vector<SetExpr>& sets, double t, std::uint64_t probes,
                                           std::uint64_t samples, std::uint64_t seed);

struct SweepPoint {
  Eigen::VectorXd x;
  CorrelationMatrix m;
};

struct SweepRow {
  SweepPoint point;
  Estimate max_eigenvalue;
  ComparisonResult check;  // max eigenvalue against 0
};

/// k = 2 grid: every (x_1, x_2) in xs^2 for every rho in rhos.
std::vector<SweepPoint> k2_grid(const std::vector<double>& xs, const std::vector<double>& rhos);
/// `count` points with x uniform in [0.05, 0.95]^k at a fixed matrix.
std::vector<SweepPoint> random_points(const CorrelationMatrix& m, std::uint64_t count, std::uint64_t seed);

std::vector<SweepRow> hessian_sweep(const std::vector<SweepPoint>& points, double target_se, std::uint64_t seed);

struct ConditionRow {
  std::string name;
  Eigen::MatrixXd m;
  bool entrywise_nonnegative = false;
  std::optional<bool> inverse_offdiag_nonpositive;  // empty when M is singular
  double min_eigenvalue = 0.0;
};

ConditionRow condition_check(const std::string& name, const CorrelationMatrix& m);

// ------------------------------------------------------------- configuration

/// A correlation matrix as written in a config.
struct MatrixSpec {
  enum class Kind { explicit_entries, ou, equicorrelated };
  std::string name;
  Kind kind = Kind::equicorrelated;
  Eigen::Index size = 0;
  double rho = 0.0;
  std::vector<double> values;  // row-major entries, or OU times

  CorrelationMatrix build() const;
};

/// A fully resolved experiment. `resolved` is the input document with every
/// default written back, so a report that embeds it can be re-run as is.
struct ExperimentConfig {
  std::string experiment;
  Eigen::Index dimension = 2;
  std::uint64_t seed = 1;
  std::uint64_t samples = 1'000'000;
  std::uint64_t paths = 100'000;
  std::uint64_t steps = 512;
  double target_se = 1e-6;
  std::vector<double> taus;
  double t = 0.5;
  std::uint64_t probes = 200;
  std::uint64_t random_ou = 0;
  std::vector<MatrixSpec> matrices;
  std::vector<std::string> set_names;
  std::vector<SetExpr> sets;
  std::vector<double> sweep_x;
  std::vector<double> sweep_rho;
  std::uint64_t sweep_random = 0;
  ConfigDocument resolved;
};

/// Command-line values that take precedence over the document.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  std::optional<std::uint64_t> paths;
  std::optional<std::uint64_t> steps;
  std::optional<std::vector<double>> taus;
  /// Used when neither the command line nor the document sets a seed.
  std::optional<std::uint64_t> default_seed;
};

inline constexpr std::string_view kExperiments[] = {
    "verify-main", "noise-stability", "exit-time", "occupation",
    "hessian-sweep", "equality-diagnostic", "condition-check"};

/// Validates the document for `experiment` and fills in defaults. Throws
/// ConfigError anchored to the offending line and field.
ExperimentConfig resolve_config(const ConfigDocument& doc, std::string_view experiment,
                                const ConfigOverrides& overrides = {});

/// Builds the named set from its [set.NAME] section (and those it references).
SetExpr parse_set(const ConfigDocument& doc, const std::string& name, Eigen::Index dimension);

}  // namespace noisestab
