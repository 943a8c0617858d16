#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace noisestab {

/// Raised when a matrix fails a positive (semi)definiteness requirement.
class NotPositiveDefinite : public std::domain_error {
 public:
  explicit NotPositiveDefinite(const std::string& what) : std::domain_error(what) {}
};

/// Eigenvalues of a symmetric matrix below this are treated as zero.
inline constexpr double kPsdTolerance = 1e-10;

/// A k x k symmetric positive semidefinite matrix with unit diagonal.
///
/// Construction validates exact symmetry, unit diagonal (to 1e-12) and
/// min eigenvalue >= -kPsdTolerance. Whether every entry is nonnegative is
/// recorded since several results require it.
class CorrelationMatrix {
 public:
  explicit CorrelationMatrix(Eigen::MatrixXd entries);

  /// Rescales a covariance to unit diagonal, D^{-1/2} C D^{-1/2}.
  static CorrelationMatrix from_covariance(const Eigen::MatrixXd& cov);

  static CorrelationMatrix identity(Eigen::Index k);
  static CorrelationMatrix equicorrelated(Eigen::Index k, double rho);
  /// 2x2 matrix [[1, rho], [rho, 1]].
  static CorrelationMatrix bivariate(double rho);

  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
  bool entrywise_nonnegative() const { return nonnegative_; }
  double min_eigenvalue() const { return min_eigenvalue_; }
  bool strictly_positive_definite() const { return min_eigenvalue_ > 1e-12; }

  /// Principal submatrix with row/column i removed.
  CorrelationMatrix without(Eigen::Index i) const;

 private:
  Eigen::MatrixXd entries_;
  bool nonnegative_ = false;
  double min_eigenvalue_ = 0.0;
};

/// Lower-triangular Q with Q Q^T equal to the source matrix.
struct CholeskyFactor {
  Eigen::MatrixXd lower;
};

/// Conditional law of the remaining coordinates given coordinate `removed_index`
/// of a unit-diagonal Gaussian: mean x_i * cond_mean_row, covariance `reduced`.
struct SchurData {
  Eigen::Index removed_index = 0;
  Eigen::VectorXd cond_mean_row;
  Eigen::MatrixXd reduced;
};

/// Cholesky factor of a symmetric PSD matrix. Pivots that vanish within
/// tolerance are clamped to zero, so semidefinite inputs are accepted.
/// Throws NotPositiveDefinite when the min eigenvalue is below -kPsdTolerance.
CholeskyFactor cholesky(const Eigen::MatrixXd& m);

/// Schur complement of M with row/column i removed (0-based i).
/// Requires m strictly positive definite.
SchurData schur_complement(const CorrelationMatrix& m, Eigen::Index i);

/// Matrix with entries exp(-|t_i - t_j|): the joint correlation of an
/// Ornstein-Uhlenbeck coordinate sampled at the given times.
CorrelationMatrix ou_covariance(std::span<const double> times);

/// True iff every off-diagonal entry of M^{-1} is <= 1e-10.
bool inverse_offdiag_nonpositive(const CorrelationMatrix& m);

/// Largest eigenvalue of a symmetric matrix (dense self-adjoint solver).
template <typename Derived>
double max_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.rows() != m.cols()) throw std::invalid_argument("max_eigenvalue: matrix not square");
  if (m.rows() == 0) throw std::invalid_argument("max_eigenvalue: empty matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(Matrix(m), Eigen::EigenvaluesOnly);
  return static_cast<double>(solver.eigenvalues().maxCoeff());
}

template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.rows() != m.cols()) throw std::invalid_argument("min_eigenvalue: matrix not square");
  if (m.rows() == 0) throw std::invalid_argument("min_eigenvalue: empty matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(Matrix(m), Eigen::EigenvaluesOnly);
  return static_cast<double>(solver.eigenvalues().minCoeff());
}

/// -sum_{i<j} a_ij (v_i - v_j)^2, which equals v^T a v for symmetric a with
/// zero row sums. Throws std::invalid_argument if a is not symmetric or a row
/// sum exceeds 1e-10 (relative to the row's scale).
template <typename DerivedA, typename DerivedV>
double laplacian_quadratic_form(const Eigen::MatrixBase<DerivedA>& a,
                                const Eigen::MatrixBase<DerivedV>& v) {
  const Eigen::Index k = a.rows();
  if (a.cols() != k || v.size() != k) {
    throw std::invalid_argument("laplacian_quadratic_form: dimension mismatch");
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    double row_sum = 0.0;
    double scale = 1.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      row_sum += a(i, j);
      scale = std::max(scale, std::abs(static_cast<double>(a(i, j))));
      if (j > i && std::abs(a(i, j) - a(j, i)) > 1e-12 * scale) {
        throw std::invalid_argument("laplacian_quadratic_form: matrix not symmetric");
      }
    }
    if (std::abs(row_sum) > 1e-10 * scale) {
      throw std::invalid_argument("laplacian_quadratic_form: row " + std::to_string(i) +
                                  " does not sum to zero");
    }
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double d = v(i) - v(j);
      acc -= a(i, j) * d * d;
    }
  }
  return acc;
}

/// Entrywise product.
template <typename DerivedA, typename DerivedB>
auto hadamard(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return a.cwiseProduct(b);
}

}  // namespace noisestab
