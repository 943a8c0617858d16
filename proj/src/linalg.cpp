#include "noisestab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace noisestab {

namespace {

Eigen::MatrixXd drop_row_col(const Eigen::MatrixXd& m, Eigen::Index i) {
  const Eigen::Index k = m.rows();
  Eigen::MatrixXd out(k - 1, k - 1);
  for (Eigen::Index r = 0, rr = 0; r < k; ++r) {
    if (r == i) continue;
    for (Eigen::Index c = 0, cc = 0; c < k; ++c) {
      if (c == i) continue;
      out(rr, cc++) = m(r, c);
    }
    ++rr;
  }
  return out;
}

void require_symmetric(const Eigen::MatrixXd& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument(std::string(who) + ": matrix must be square and nonempty");
  }
  if (!m.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite entry");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      if (m(i, j) != m(j, i)) {
        throw std::invalid_argument(std::string(who) + ": matrix not symmetric at (" +
                                    std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
}

}  // namespace

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  require_symmetric(entries_, "CorrelationMatrix");
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    if (std::abs(entries_(i, i) - 1.0) > 1e-12) {
      throw std::invalid_argument("CorrelationMatrix: diagonal entry " + std::to_string(i) +
                                  " is not 1");
    }
    entries_(i, i) = 1.0;
  }
  min_eigenvalue_ = noisestab::min_eigenvalue(entries_);
  if (min_eigenvalue_ < -kPsdTolerance) {
    throw NotPositiveDefinite("CorrelationMatrix: matrix is not positive semidefinite");
  }
  nonnegative_ = (entries_.array() >= 0.0).all();
}

CorrelationMatrix CorrelationMatrix::from_covariance(const Eigen::MatrixXd& cov) {
  require_symmetric(cov, "CorrelationMatrix::from_covariance");
  const Eigen::ArrayXd d = cov.diagonal().array();
  if ((d <= 0.0).any()) {
    throw std::invalid_argument("CorrelationMatrix::from_covariance: nonpositive variance");
  }
  const Eigen::VectorXd inv_sd = d.rsqrt().matrix();
  Eigen::MatrixXd c = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  c = (0.5 * (c + c.transpose())).eval();
  c.diagonal().setOnes();
  return CorrelationMatrix(std::move(c));
}

CorrelationMatrix CorrelationMatrix::identity(Eigen::Index k) {
  return CorrelationMatrix(Eigen::MatrixXd::Identity(k, k));
}

CorrelationMatrix CorrelationMatrix::equicorrelated(Eigen::Index k, double rho) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(k, k, rho);
  m.diagonal().setOnes();
  return CorrelationMatrix(std::move(m));
}

CorrelationMatrix CorrelationMatrix::bivariate(double rho) { return equicorrelated(2, rho); }

CorrelationMatrix CorrelationMatrix::without(Eigen::Index i) const {
  if (i < 0 || i >= dim()) throw std::out_of_range("CorrelationMatrix::without: bad index");
  if (dim() == 1) throw std::invalid_argument("CorrelationMatrix::without: dimension 1");
  return CorrelationMatrix(drop_row_col(entries_, i));
}

CholeskyFactor cholesky(const Eigen::MatrixXd& m) {
  require_symmetric(m, "cholesky");
  if (min_eigenvalue(m) < -kPsdTolerance) {
    throw NotPositiveDefinite("cholesky: matrix is not positive semidefinite");
  }
  const Eigen::Index k = m.rows();
  const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double pivot = m(j, j) - q.row(j).head(j).squaredNorm();
    if (pivot <= 1e-14 * scale) continue;  // degenerate direction, column stays zero
    const double d = std::sqrt(pivot);
    q(j, j) = d;
    for (Eigen::Index i = j + 1; i < k; ++i) {
      q(i, j) = (m(i, j) - q.row(i).head(j).dot(q.row(j).head(j))) / d;
    }
  }
  return {std::move(q)};
}

SchurData schur_complement(const CorrelationMatrix& m, Eigen::Index i) {
  const Eigen::Index k = m.dim();
  if (i < 0 || i >= k) throw std::out_of_range("schur_complement: index out of range");
  if (!m.strictly_positive_definite()) {
    throw NotPositiveDefinite("schur_complement: matrix is singular");
  }
  SchurData out;
  out.removed_index = i;
  out.cond_mean_row.resize(k - 1);
  for (Eigen::Index c = 0, cc = 0; c < k; ++c) {
    if (c != i) out.cond_mean_row(cc++) = m(i, c);
  }
  out.reduced = drop_row_col(m.matrix(), i) -
                out.cond_mean_row * out.cond_mean_row.transpose() / m(i, i);
  out.reduced = (0.5 * (out.reduced + out.reduced.transpose())).eval();
  return out;
}

CorrelationMatrix ou_covariance(std::span<const double> times) {
  const auto k = static_cast<Eigen::Index>(times.size());
  if (k == 0) throw std::invalid_argument("ou_covariance: empty time grid");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::isfinite(times[i])) throw std::invalid_argument("ou_covariance: non-finite time");
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw std::invalid_argument("ou_covariance: times must be strictly increasing");
    }
  }
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      m(i, j) = m(j, i) = std::exp(-std::abs(times[i] - times[j]));
    }
  }
  return CorrelationMatrix(std::move(m));
}

bool inverse_offdiag_nonpositive(const CorrelationMatrix& m) {
  if (!m.strictly_positive_definite()) {
    throw NotPositiveDefinite("inverse_offdiag_nonpositive: matrix is singular");
  }
  const Eigen::MatrixXd inv = m.matrix().llt().solve(Eigen::MatrixXd::Identity(m.dim(), m.dim()));
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    for (Eigen::Index j = 0; j < m.dim(); ++j) {
      if (i != j && inv(i, j) > 1e-10) return false;
    }
  }
  return true;
}

}  // namespace noisestab
