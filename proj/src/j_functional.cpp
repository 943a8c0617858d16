#include "noisestab/j_functional.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "noisestab/gaussian.hpp"
#include "noisestab/random.hpp"

namespace noisestab {

namespace {

constexpr std::uint64_t kGradStream = 0x6772616400000000ULL;
constexpr std::uint64_t kCrossStream = 0x63726f7300000000ULL;

QmcOptions options_for(double target_se) {
  QmcOptions o;
  o.target_se = target_se;
  return o;
}

void require_interior(const JQuery& q, const char* who) {
  for (Eigen::Index i = 0; i < q.x.size(); ++i) {
    if (!(q.x(i) >= kInteriorMin && q.x(i) <= 1.0 - kInteriorMin)) {
      throw std::domain_error(std::string(who) + ": x_" + std::to_string(i) +
                              " outside the derivative domain [1e-6, 1 - 1e-6]");
    }
  }
}

void require_index(const JQuery& q, Eigen::Index i, const char* who) {
  if (i < 0 || i >= q.x.size()) throw std::out_of_range(std::string(who) + ": index out of range");
}

Eigen::VectorXd quantiles(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double p) { return std_normal_quantile(p); });
}

Estimate scaled(const Estimate& e, double factor) {
  return {e.value * factor, e.std_error * std::abs(factor), e.samples, e.seed};
}

// All ordered J_ij for one query, each from its own deterministic sub-seed.
struct CrossTable {
  Eigen::MatrixXd value;
  Eigen::MatrixXd se;
  std::uint64_t samples = 0;
};

CrossTable cross_table(const JQuery& q, const QmcOptions& options, std::uint64_t seed) {
  const Eigen::Index k = q.x.size();
  CrossTable t{Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, k), 0};
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i == j) continue;
      const Estimate e = j_cross(q, i, j, options, seed);
      t.value(i, j) = e.value;
      t.se(i, j) = e.std_error;
      t.samples += e.samples;
    }
  }
  return t;
}

}  // namespace

JQuery::JQuery(Eigen::VectorXd x_, CorrelationMatrix m_) : x(std::move(x_)), m(std::move(m_)) {
  if (x.size() != m.dim()) throw std::invalid_argument("JQuery: dimension mismatch");
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= 0.0 && x(i) <= 1.0)) {
      throw std::domain_error("JQuery: x_" + std::to_string(i) + " outside [0, 1]");
    }
  }
}

QmcResult j_value_detail(const JQuery& q, const QmcOptions& options, std::uint64_t seed) {
  return orthant_qmc({quantiles(q.x), q.m.matrix()}, options, seed);
}

Estimate j_value(const JQuery& q, const QmcOptions& options, std::uint64_t seed) {
  return j_value_detail(q, options, seed).estimate;
}

Estimate j_value(const JQuery& q, double target_se, std::uint64_t seed) {
  return j_value(q, options_for(target_se), seed);
}

QmcResult j_grad_detail(const JQuery& q, Eigen::Index i, const QmcOptions& options,
                        std::uint64_t seed) {
  require_index(q, i, "j_grad");
  require_interior(q, "j_grad");
  const SchurData schur = schur_complement(q.m, i);
  const Eigen::VectorXd qx = quantiles(q.x);
  Eigen::VectorXd limits(q.x.size() - 1);
  for (Eigen::Index c = 0, cc = 0; c < q.x.size(); ++c) {
    if (c != i) limits(cc++) = qx(c);
  }
  limits -= schur.cond_mean_row * qx(i);
  return orthant_qmc({limits, schur.reduced}, options, derive_seed(seed, kGradStream + i));
}

Estimate j_grad(const JQuery& q, Eigen::Index i, double target_se, std::uint64_t seed) {
  return j_grad_detail(q, i, options_for(target_se), seed).estimate;
}

Estimate j_cross(const JQuery& q, Eigen::Index i, Eigen::Index j, const QmcOptions& options,
                 std::uint64_t seed) {
  require_index(q, i, "j_cross");
  require_index(q, j, "j_cross");
  if (i == j) throw std::invalid_argument("j_cross: requires i != j");
  require_interior(q, "j_cross");
  const Eigen::Index k = q.x.size();
  const SchurData schur = schur_complement(q.m, i);
  const Eigen::VectorXd qx = quantiles(q.x);
  Eigen::VectorXd z(k - 1);
  for (Eigen::Index c = 0, cc = 0; c < k; ++c) {
    if (c != i) z(cc++) = qx(c);
  }
  z -= schur.cond_mean_row * qx(i);

  // d/dz_j K(z; S) = density of N(0, S_jj) at z_j times the orthant of the
  // other coordinates conditioned on coordinate j sitting at z_j.
  const Eigen::Index jj = j < i ? j : j - 1;
  const Eigen::MatrixXd& s = schur.reduced;
  const double var = s(jj, jj);
  const double sd = std::sqrt(var);
  const double density = std_normal_pdf(z(jj) / sd) / sd;
  const double factor = isoperimetric_profile(q.x(i)) * density;
  const std::uint64_t sub_seed = derive_seed(seed, kCrossStream + static_cast<std::uint64_t>(i * k + j));

  if (k == 2) return {factor, 0.0, 0, sub_seed};
  const Eigen::Index r = k - 2;
  Eigen::VectorXd limits(r);
  Eigen::VectorXd coupling(r);
  std::vector<Eigen::Index> rest;
  rest.reserve(r);
  for (Eigen::Index c = 0; c < k - 1; ++c) {
    if (c != jj) rest.push_back(c);
  }
  Eigen::MatrixXd cov(r, r);
  for (Eigen::Index a = 0; a < r; ++a) {
    coupling(a) = s(rest[a], jj);
    limits(a) = z(rest[a]) - coupling(a) / var * z(jj);
    for (Eigen::Index b = 0; b < r; ++b) cov(a, b) = s(rest[a], rest[b]);
  }
  cov -= coupling * coupling.transpose() / var;
  cov = (0.5 * (cov + cov.transpose())).eval();
  const Estimate inner = orthant_qmc({limits, cov}, options, sub_seed).estimate;
  return scaled(inner, factor);
}

Estimate j_mixed_second(const JQuery& q, Eigen::Index i, Eigen::Index j, double target_se,
                        std::uint64_t seed) {
  if (i == j) throw std::invalid_argument("j_mixed_second: requires i != j (use j_diag_second)");
  const QmcOptions options = options_for(target_se);
  const Estimate ij = j_cross(q, i, j, options, seed);
  const Estimate ji = j_cross(q, j, i, options, seed);
  const double denom = isoperimetric_profile(q.x(i)) * isoperimetric_profile(q.x(j));
  return {0.5 * (ij.value + ji.value) / denom, 0.5 * combined_se(ij, ji) / denom,
          ij.samples + ji.samples, seed};
}

Estimate j_diag_second(const JQuery& q, Eigen::Index i, double target_se, std::uint64_t seed) {
  require_index(q, i, "j_diag_second");
  require_interior(q, "j_diag_second");
  const QmcOptions options = options_for(target_se);
  const double profile = isoperimetric_profile(q.x(i));
  double value = 0.0;
  double var = 0.0;
  std::uint64_t samples = 0;
  for (Eigen::Index j = 0; j < q.x.size(); ++j) {
    if (j == i || q.m(i, j) == 0.0) continue;
    const Estimate ij = j_cross(q, i, j, options, seed);
    const Estimate ji = j_cross(q, j, i, options, seed);
    const double w = q.m(i, j) / (profile * profile);
    value -= w * 0.5 * (ij.value + ji.value);
    var += w * w * 0.25 * (ij.std_error * ij.std_error + ji.std_error * ji.std_error);
    samples += ij.samples + ji.samples;
  }
  return {value, std::sqrt(var), samples, seed};
}

JEvaluation hadamard_hessian(const JQuery& q, const QmcOptions& options, std::uint64_t seed) {
  require_interior(q, "hadamard_hessian");
  if (!q.m.entrywise_nonnegative()) {
    throw std::domain_error("hadamard_hessian: correlation matrix has a negative entry");
  }
  const Eigen::Index k = q.x.size();
  JEvaluation out;
  out.value = j_value(q, options, seed);
  out.grad.resize(k);
  out.grad_se.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Estimate g = j_grad_detail(q, i, options, seed).estimate;
    out.grad(i) = g.value;
    out.grad_se(i) = g.std_error;
  }

  const CrossTable cross = cross_table(q, options, seed);
  out.mixed = 0.5 * (cross.value + cross.value.transpose());
  out.mixed_se = 0.5 * (cross.se.cwiseAbs2() + cross.se.transpose().cwiseAbs2()).cwiseSqrt();

  const Eigen::MatrixXd& m = q.m.matrix();
  out.a_matrix = hadamard(m, out.mixed);
  out.a_se = hadamard(m, out.mixed_se);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.a_matrix(i, i) = 0.0;
    out.a_se(i, i) = 0.0;
    double row = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (j != i) row += out.a_matrix(i, j);
    }
    out.a_matrix(i, i) = -row;
    out.a_se(i, i) = out.a_se.row(i).norm();
  }

  out.iota.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) out.iota(i) = 1.0 / isoperimetric_profile(q.x(i));

  // Entry by entry from the mixed and repeated second derivatives.
  out.hadamard_hessian.resize(k, k);
  out.hessian_se.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i != j) {
        const double second = out.mixed(i, j) * out.iota(i) * out.iota(j);
        out.hadamard_hessian(i, j) = m(i, j) * second;
        out.hessian_se(i, j) = m(i, j) * out.mixed_se(i, j) * out.iota(i) * out.iota(j);
      }
    }
    double diag = 0.0;
    double diag_var = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (j == i) continue;
      const double w = m(i, j) * out.iota(i) * out.iota(i);
      diag -= w * out.mixed(i, j);
      diag_var += w * w * out.mixed_se(i, j) * out.mixed_se(i, j);
    }
    out.hadamard_hessian(i, i) = diag;
    out.hessian_se(i, i) = std::sqrt(diag_var);
  }
  return out;
}

JEvaluation hadamard_hessian(const JQuery& q, double target_se, std::uint64_t seed) {
  return hadamard_hessian(q, options_for(target_se), seed);
}

double JEvaluation::factorization_residual() const {
  const Eigen::MatrixXd factored = iota.asDiagonal() * a_matrix * iota.asDiagonal();
  return (hadamard_hessian - factored).cwiseAbs().maxCoeff();
}

Estimate JEvaluation::max_hessian_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hadamard_hessian);
  const Eigen::Index k = hadamard_hessian.rows();
  const Eigen::VectorXd top = solver.eigenvectors().col(k - 1);
  // lambda = u^T A u with u = iota (.) v, and u^T A u = -sum_{i<j} a_ij (u_i - u_j)^2;
  // the a_ij for distinct pairs come from independent estimates.
  const Eigen::VectorXd u = iota.cwiseProduct(top);
  double var = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double d = u(i) - u(j);
      const double term = a_se(i, j) * d * d;
      var += term * term;
    }
  }
  return {solver.eigenvalues()(k - 1), std::sqrt(var), value.samples, value.seed};
}

KernelDiagnostic kernel_diagnostic(const JEvaluation& eval) {
  KernelDiagnostic out;
  const Eigen::MatrixXd& a = eval.a_matrix;
  const Eigen::Index k = a.rows();
  if (k < 2) return out;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (i != j && !(a(i, j) > 0.0)) return out;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (a + a.transpose()));
  out.applicable = true;
  out.zero_eigenvalue_gap = solver.eigenvalues()(k - 2);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k) / std::sqrt(static_cast<double>(k));
  out.kernel_alignment = std::abs(solver.eigenvectors().col(k - 1).dot(ones));
  return out;
}

}  // namespace noisestab
