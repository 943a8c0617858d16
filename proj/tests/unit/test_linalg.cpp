#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "noisestab/linalg.hpp"
#include "support/oracles.hpp"

using namespace noisestab;

namespace {

Eigen::MatrixXd drop(const Eigen::MatrixXd& m, Eigen::Index i) {
  const Eigen::Index k = m.rows();
  Eigen::MatrixXd out(k - 1, k - 1);
  for (Eigen::Index r = 0, rr = 0; r < k; ++r) {
    if (r == i) continue;
    for (Eigen::Index c = 0, cc = 0; c < k; ++c) {
      if (c != i) out(rr, cc++) = m(r, c);
    }
    ++rr;
  }
  return out;
}

}  // namespace

TEST_CASE("CorrelationMatrix validates its invariants") {
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(CorrelationMatrix{asym}, std::invalid_argument);

  Eigen::MatrixXd diag(2, 2);
  diag << 2, 0.5, 0.5, 1;
  CHECK_THROWS_AS(CorrelationMatrix{diag}, std::invalid_argument);

  Eigen::MatrixXd indefinite(3, 3);
  indefinite << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
  CHECK_THROWS_AS(CorrelationMatrix{indefinite}, NotPositiveDefinite);

  CHECK(CorrelationMatrix::equicorrelated(3, 0.2).entrywise_nonnegative());
  CHECK_FALSE(CorrelationMatrix::bivariate(-0.2).entrywise_nonnegative());
  // rank one, still PSD
  const auto ones = CorrelationMatrix::equicorrelated(3, 1.0);
  CHECK_FALSE(ones.strictly_positive_definite());

  Eigen::MatrixXd cov(2, 2);
  cov << 4, 1, 1, 1;
  const auto c = CorrelationMatrix::from_covariance(cov);
  CHECK(c(0, 1) == doctest::Approx(0.5));
  CHECK(c(0, 0) == 1.0);
}

TEST_CASE("cholesky examples") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  CHECK(cholesky(id).lower.isApprox(id));

  const double rho = 0.3;
  Eigen::MatrixXd m(2, 2);
  m << 1, rho, rho, 1;
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 0, rho, std::sqrt(1 - rho * rho);
  CHECK((cholesky(m).lower - expected).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky(bad), NotPositiveDefinite);
}

TEST_CASE("cholesky reconstructs random PSD matrices, including singular ones") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index k = 1 + trial % 5;
    const Eigen::MatrixXd m = oracle::random_correlation(k, gen);
    const auto q = cholesky(m).lower;
    CHECK((q * q.transpose() - m).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((q.diagonal().array() >= 0.0).all());
    CHECK(q.isLowerTriangular());
  }
  // rank 2 in dimension 4
  Eigen::MatrixXd v(4, 2);
  v << 1, 0, 0.6, 0.8, 0.8, 0.6, 0, 1;
  const Eigen::MatrixXd low_rank = v * v.transpose();
  const auto q = cholesky(low_rank).lower;
  CHECK((q * q.transpose() - low_rank).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("schur complement examples") {
  const double rho = 0.6;
  const auto s = schur_complement(CorrelationMatrix::bivariate(rho), 0);
  CHECK(s.reduced(0, 0) == doctest::Approx(1 - rho * rho));
  CHECK(s.cond_mean_row(0) == rho);

  const auto id = schur_complement(CorrelationMatrix::identity(4), 2);
  CHECK(id.reduced.isApprox(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(id.cond_mean_row.isZero());

  const std::vector<double> times{0.0, 0.5, 1.0};
  const auto ou = ou_covariance(times);
  const auto s2 = schur_complement(ou, 1);
  const Eigen::MatrixXd oracle_inv = oracle::gauss_jordan_inverse(drop(oracle::gauss_jordan_inverse(ou.matrix()), 1));
  CHECK((s2.reduced - oracle_inv).cwiseAbs().maxCoeff() < 1e-8);

  CHECK_THROWS_AS(schur_complement(CorrelationMatrix::equicorrelated(3, 1.0), 0), NotPositiveDefinite);
  CHECK_THROWS_AS(schur_complement(CorrelationMatrix::identity(2), 2), std::out_of_range);
}

TEST_CASE("schur complement inverse identity on random matrices") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index k = 2 + trial % 4;
    const CorrelationMatrix m(oracle::random_correlation(k, gen));
    const Eigen::MatrixXd inv = oracle::gauss_jordan_inverse(m.matrix());
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto s = schur_complement(m, i);
      const Eigen::MatrixXd lhs = oracle::gauss_jordan_inverse(s.reduced);
      CHECK((lhs - drop(inv, i)).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, inv.cwiseAbs().maxCoeff()));
      CHECK(oracle::jacobi_eigenvalues(s.reduced).minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("ou covariance") {
  const std::vector<double> two{0.0, std::log(2.0)};
  CHECK(ou_covariance(two)(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  const std::vector<double> three{0.0, 0.5, 1.0};
  const auto m = ou_covariance(three);
  CHECK(std::abs(m(0, 2) - 0.36787944117144233) < 1e-15);
  CHECK(m.entrywise_nonnegative());
  CHECK(inverse_offdiag_nonpositive(m));

  const std::vector<double> flat{0.0, 0.5, 0.5};
  CHECK_THROWS_AS(ou_covariance(flat), std::invalid_argument);
  const std::vector<double> down{1.0, 0.5};
  CHECK_THROWS_AS(ou_covariance(down), std::invalid_argument);
}

TEST_CASE("ou covariance is PSD and satisfies both hypotheses on random grids") {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto times = oracle::random_times(1 + trial % 6, gen);
    const auto m = ou_covariance(times);
    CHECK(oracle::jacobi_eigenvalues(m.matrix()).minCoeff() >= -1e-12);
    CHECK(m.entrywise_nonnegative());
    if (m.strictly_positive_definite()) {
      CHECK(inverse_offdiag_nonpositive(m));
      // same conclusion from the independent inverse
      const Eigen::MatrixXd inv = oracle::gauss_jordan_inverse(m.matrix());
      for (Eigen::Index i = 0; i < inv.rows(); ++i)
        for (Eigen::Index j = 0; j < inv.cols(); ++j)
          if (i != j) CHECK(inv(i, j) <= 1e-10);
    }
  }
}

TEST_CASE("inverse off-diagonal sign predicate") {
  CHECK(inverse_offdiag_nonpositive(CorrelationMatrix::identity(3)));
  Eigen::MatrixXd m(3, 3);
  m << 1, 0.7, 0.7, 0.7, 1, 0, 0.7, 0, 1;
  const CorrelationMatrix c(m);
  CHECK(c.entrywise_nonnegative());
  CHECK_FALSE(inverse_offdiag_nonpositive(c));
  // the (2,3) entry of the inverse is positive, by direct inversion
  CHECK(oracle::gauss_jordan_inverse(m)(1, 2) > 0.0);
  CHECK_THROWS_AS(inverse_offdiag_nonpositive(CorrelationMatrix::equicorrelated(2, 1.0)), NotPositiveDefinite);
}

TEST_CASE("laplacian quadratic form") {
  Eigen::MatrixXd a(2, 2);
  a << -1, 1, 1, -1;
  CHECK(laplacian_quadratic_form(a, Eigen::Vector2d(1, 1)) == 0.0);
  CHECK(laplacian_quadratic_form(a, Eigen::Vector2d(1, 0)) == -1.0);

  Eigen::MatrixXd bad(2, 2);
  bad << -1, 1, 1, -0.5;
  CHECK_THROWS_AS(laplacian_quadratic_form(bad, Eigen::Vector2d(1, 0)), std::invalid_argument);

  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index k = 2 + trial % 5;
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = i + 1; j < k; ++j) l(i, j) = l(j, i) = u(gen);
    for (Eigen::Index i = 0; i < k; ++i) l(i, i) = -(l.row(i).sum());
    Eigen::VectorXd v(k);
    for (Eigen::Index i = 0; i < k; ++i) v(i) = z(gen);
    const double dense = v.dot(l * v);
    CHECK(std::abs(laplacian_quadratic_form(l, v) - dense) <= 1e-8 * std::max(1.0, std::abs(dense)));
    CHECK(max_eigenvalue(l) <= 1e-8);
    CHECK(laplacian_quadratic_form(l, Eigen::VectorXd::Ones(k)) == 0.0);
  }
}

TEST_CASE("max eigenvalue against Jacobi oracle") {
  CHECK(max_eigenvalue(Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(1.0));
  CHECK(max_eigenvalue(Eigen::Vector2d(-1, -2).asDiagonal().toDenseMatrix()) == doctest::Approx(-1.0));
  std::mt19937_64 gen(17);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd m(4, 4);
    for (Eigen::Index i = 0; i < 16; ++i) m(i) = z(gen);
    m = 0.5 * (m + m.transpose()).eval();
    CHECK(std::abs(max_eigenvalue(m) - oracle::jacobi_max_eigenvalue(m)) <= 1e-8);
  }
}
