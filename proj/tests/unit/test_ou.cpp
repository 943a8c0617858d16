#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "noisestab/gaussian.hpp"
#include "noisestab/geometry.hpp"
#include "noisestab/ou.hpp"
#include "support/oracles.hpp"

using namespace noisestab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

bool within(const Estimate& a, const Estimate& b, double slack = 0.0) {
  return std::abs(a.value - b.value) <= 3.0 * combined_se(a, b) + slack;
}

// Sample correlation and its large-sample standard error (1 - r^2) / sqrt(N).
struct Corr {
  double r;
  double se;
};

Corr correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const double r = sab / std::sqrt(saa * sbb);
  return {r, (1 - r * r) / std::sqrt(n)};
}

}  // namespace

TEST_CASE("kronecker sampler covariance matches M (x) I_n") {
  const auto m = CorrelationMatrix::equicorrelated(3, 0.6);
  const Eigen::Index n = 2;
  KroneckerSampler sampler(m, n);
  Rng rng(5);
  Eigen::MatrixXd draw;
  const int samples = 1'000'000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(6, 6);
  for (int s = 0; s < samples; ++s) {
    sampler.draw(rng, draw);
    Eigen::Map<const Eigen::VectorXd> flat(draw.data(), 6);  // column-major: (i, d) at d * 3 + i
    sum.noalias() += flat * flat.transpose();
  }
  const Eigen::MatrixXd cov = sum / samples;
  for (Eigen::Index a = 0; a < 6; ++a) {
    for (Eigen::Index b = 0; b < 6; ++b) {
      const Eigen::Index ia = a % 3, da = a / 3, ib = b % 3, db = b / 3;
      const double expected = da == db ? m(ia, ib) : 0.0;
      // Var(XY) = 1 + E[XY]^2 for standard jointly Gaussian X, Y
      const double se = std::sqrt((1.0 + expected * expected) / samples);
      CHECK(std::abs(cov(a, b) - expected) <= 4 * se);
    }
  }
}

TEST_CASE("sample_joint examples") {
  const auto id = sample_joint(CorrelationMatrix::identity(3), 4, 1);
  CHECK(id.rows() == 3);
  CHECK(id.cols() == 4);
  // rank-one matrix: all rows identical
  const auto same = sample_joint(CorrelationMatrix::equicorrelated(3, 1.0), 2, 2);
  CHECK((same.row(0) - same.row(2)).norm() <= 1e-12);
  CHECK(sample_joint(CorrelationMatrix::identity(2), 3, 9) == sample_joint(CorrelationMatrix::identity(2), 3, 9));
}

TEST_CASE("simulate_path examples") {
  const std::vector<double> grid{0.0, 0.3, 0.3, 40.0};
  const auto p = simulate_path(2, grid, 3);
  CHECK(p.states.rows() == 4);
  CHECK(p.states.row(1) == p.states.row(2));

  const std::vector<double> bad_start{0.1, 0.2};
  CHECK_THROWS_AS(simulate_path(1, bad_start, 1), std::invalid_argument);
  const std::vector<double> down{0.0, 0.5, 0.4};
  CHECK_THROWS_AS(simulate_path(1, down, 1), std::invalid_argument);

  const auto g = uniform_grid(0.5, 4);
  CHECK(g == std::vector<double>{0.0, 0.125, 0.25, 0.375, 0.5});
}

TEST_CASE("path marginals are stationary and covariances are e^{-|t-s|}") {
  const std::vector<double> grid{0.0, 0.1, 0.35, 1.0, 2.2, 40.0};
  const int paths = 100'000;
  std::vector<std::vector<double>> coord(grid.size(), std::vector<double>(paths));
  for (int k = 0; k < paths; ++k) {
    const auto p = simulate_path(2, grid, derive_seed(17, k));
    for (std::size_t j = 0; j < grid.size(); ++j) coord[j][k] = p.states(static_cast<Eigen::Index>(j), 1);
  }
  for (std::size_t j = 0; j < grid.size(); ++j) {
    double mean = 0, sq = 0, four = 0;
    for (double v : coord[j]) {
      mean += v;
      sq += v * v;
      four += v * v * v * v;
    }
    mean /= paths;
    sq /= paths;
    four /= paths;
    CHECK(std::abs(mean) <= 4 / std::sqrt(static_cast<double>(paths)));
    CHECK(std::abs(sq - 1.0) <= 4 * std::sqrt((four - sq * sq) / paths));
  }
  for (std::size_t a = 0; a < grid.size(); ++a) {
    for (std::size_t b = a + 1; b < grid.size(); ++b) {
      const auto c = correlation(coord[a], coord[b]);
      const double expected = std::exp(-(grid[b] - grid[a]));
      CHECK(std::abs(c.r - expected) <= 4 * std::max(c.se, 1.0 / std::sqrt(static_cast<double>(paths))));
    }
  }
}

TEST_CASE("kronecker pair and path pair give the same joint frequencies") {
  const double t = 0.7;
  const int samples = 200'000;
  const auto m = CorrelationMatrix::bivariate(std::exp(-t));
  KroneckerSampler sampler(m, 1);
  Rng rng(8);
  Eigen::MatrixXd draw;
  std::uint64_t hits_joint = 0, hits_path = 0;
  const std::vector<double> grid{0.0, t};
  for (int s = 0; s < samples; ++s) {
    sampler.draw(rng, draw);
    hits_joint += draw(0, 0) <= 0.3 && draw(1, 0) <= -0.2 ? 1 : 0;
    const auto p = simulate_path(1, grid, derive_seed(9, s));
    hits_path += p.states(0, 0) <= 0.3 && p.states(1, 0) <= -0.2 ? 1 : 0;
  }
  CHECK(within(Estimate::binomial(hits_joint, samples, 0), Estimate::binomial(hits_path, samples, 0)));
}

TEST_CASE("exit survival examples") {
  const auto full = exit_survival(SetExpr::full(2), 1.0, 16, 1000, 1);
  CHECK(full.survival.value == 1.0);

  const auto h = SetExpr::halfspace(vec({1, 0}), 0.4);
  const auto instant = exit_survival(h, 1e-9, 1, 200'000, 2);
  const Estimate gamma = Estimate::exact(std_normal_cdf(0.4));
  CHECK(within(instant.survival, gamma));
}

TEST_CASE("exit survival converges under refinement") {
  const auto h = SetExpr::halfspace(vec({1, 0}), 0.0);
  const double tau = 0.5;
  const auto coarse = exit_survival(h, tau, 128, 100'000, 11).survival;
  const auto mid = exit_survival(h, tau, 512, 100'000, 12).survival;
  const auto fine = exit_survival(h, tau, 4096, 100'000, 13).survival;
  // The grid bias shrinks like sqrt(dt); the 128 -> 512 gap predicts the
  // 512 -> 4096 gap.
  const double scale = (std::sqrt(1.0 / 512) - std::sqrt(1.0 / 4096)) / (std::sqrt(1.0 / 128) - std::sqrt(1.0 / 512));
  const double allowance = std::max(0.0, coarse.value - mid.value) * scale;
  CHECK(std::abs(mid.value - fine.value) <= 3 * combined_se(mid, fine) + allowance);
  CHECK(fine.value <= mid.value + 3 * combined_se(mid, fine));
  CHECK(mid.value <= coarse.value + 3 * combined_se(mid, coarse));
}

TEST_CASE("survival is nonincreasing in the horizon") {
  const auto b = SetExpr::ball(vec({0, 0}), 1.5);
  Estimate prev = Estimate::exact(1.0);
  for (double tau : {0.1, 0.2, 0.4, 0.8}) {
    // same per-path noise; the grid spacing tau/steps varies with tau
    const auto s = exit_survival(b, tau, 64, 50'000, 21).survival;
    CHECK(s.value <= prev.value + 3 * combined_se(s, prev));
    prev = s;
  }
}

TEST_CASE("epsilon-enlargement convergence") {
  const auto b = SetExpr::halfspace(vec({0, 1}), 0.2);
  const auto base = exit_survival(b, 0.5, 256, 100'000, 31).survival;
  Estimate prev = Estimate::exact(1.0);
  double last_gap = 1.0;
  for (double eps : {0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002}) {
    const auto e = exit_survival(enlarge(b, eps), 0.5, 256, 100'000, 31).survival;
    // identical paths: the nested sets give ordered counts
    CHECK(e.value >= base.value);
    CHECK(e.value <= prev.value);
    prev = e;
    last_gap = e.value - base.value;
  }
  CHECK(last_gap <= 3 * base.std_error);
}

TEST_CASE("paired exit estimates share noise") {
  const auto a = SetExpr::ball(vec({0, 0}), 1.2);
  const auto b = SetExpr::ball(vec({0.1, 0}), 1.3);
  const auto paired = exit_survival_paired(a, b, 0.4, 64, 50'000, 4);
  const auto solo_a = exit_survival(a, 0.4, 64, 50'000, 4);
  const auto solo_b = exit_survival(b, 0.4, 64, 50'000, 4);
  CHECK(paired.a.survival.value == solo_a.survival.value);
  CHECK(paired.b.survival.value == solo_b.survival.value);
  CHECK(paired.difference_se > 0.0);
  // strongly overlapping sets: pairing must beat independent errors
  CHECK(paired.difference_se < combined_se(paired.a.survival, paired.b.survival));
}

TEST_CASE("occupation examples") {
  const auto h = SetExpr::halfspace(vec({1, 0}), 0.0);
  CHECK(occupation(h, SetExpr::empty(2), 0.5, 32, 1000, 1).value.value == 0.0);
  CHECK(occupation(SetExpr::full(2), SetExpr::full(2), 0.5, 32, 1000, 1).value.value == doctest::Approx(0.5).epsilon(1e-15));

  const auto a1 = SetExpr::halfspace(vec({1, 0}), 0.5);
  const auto a2 = SetExpr::halfspace(vec({1, 0}), -0.2);
  const auto coarse = occupation(a1, a2, 0.5, 128, 100'000, 5).value;
  const auto fine = occupation(a1, a2, 0.5, 512, 100'000, 6).value;
  CHECK(within(coarse, fine));
  CHECK(coarse.value >= 0.0);
  CHECK(coarse.value <= 0.5);
}

TEST_CASE("semigroup closed form examples") {
  CHECK(semigroup_halfspace_closed(0.0, 0.7, 0.0) == 0.5);
  CHECK(semigroup_halfspace_closed(0.8, 60.0, 3.0) == doctest::Approx(std_normal_cdf(0.8)).epsilon(1e-15));
  // e^{-t} = 1/sqrt 2: the argument is -1; Phi(-1) = 0.15865525393145705
  CHECK(std::abs(semigroup_halfspace_closed(0.0, std::log(std::sqrt(2.0)), 1.0) - 0.15865525393145705) <= 1e-14);
  CHECK_THROWS_AS(semigroup_halfspace_closed(0.0, 0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(semigroup_apply(SetExpr::full(1), -1.0, vec({0}), 10, 1), std::domain_error);
}

TEST_CASE("semigroup Monte Carlo against closed forms") {
  const auto h0 = SetExpr::halfspace(vec({0, 1}), 0.0);
  const auto sym = semigroup_apply(h0, 0.4, vec({2.0, 0.0}), 200'000, 1);
  CHECK(within(sym, Estimate::exact(0.5)));

  const auto b = SetExpr::ball(vec({0, 0}), 1.3);
  const auto stationary = semigroup_apply(b, 30.0, vec({1.0, -2.0}), 200'000, 2);
  CHECK(within(stationary, gaussian_measure(b, 1, 0)));

  std::mt19937_64 gen(6);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> tdist(0.05, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd nu = vec({z(gen), z(gen), z(gen)}).normalized();
    const double c = z(gen);
    const double t = tdist(gen);
    const Eigen::VectorXd x = vec({z(gen), z(gen), z(gen)});
    const auto mc = semigroup_apply(SetExpr::halfspace(nu, c), t, x, 200'000, trial);
    CHECK(within(mc, Estimate::exact(semigroup_halfspace_closed(c, t, nu.dot(x)))));

    const auto ball = SetExpr::ball(vec({z(gen), z(gen), z(gen)}), 1.0 + std::abs(z(gen)));
    const auto exact = semigroup_exact(ball, t, x);
    REQUIRE(exact.has_value());
    CHECK(within(semigroup_apply(ball, t, x, 200'000, trial + 50), Estimate::exact(*exact)));
  }
  CHECK_FALSE(semigroup_exact(SetExpr::union_of({b, h0}), 1.0, vec({0, 0})).has_value());
}

TEST_CASE("gradient bound check") {
  for (double t : {0.1, 0.5, 2.0}) {
    const double r = gradient_bound_check(SetExpr::halfspace(vec({1, 2}), 0.3), t, 20, 1);
    CHECK(r == doctest::Approx(1.0).epsilon(0.02));
  }
  for (double t : {0.2, 1.0}) {
    CHECK(gradient_bound_check(SetExpr::ball(vec({0.5, 0}), 1.0), t, 20, 2) <= 1.02);
    CHECK(gradient_bound_check(SetExpr::ball(vec({0, 0}), 1.0), t, 20, 3) <= 1.02);
  }
  // no closed form: Monte-Carlo differences with shared samples
  const auto u = SetExpr::union_of({SetExpr::ball(vec({1, 0}), 0.8), SetExpr::ball(vec({-1, 0}), 0.8)});
  CHECK(gradient_bound_check(u, 0.5, 5, 4) <= 1.02);
  // P_t of a centered ball flattens to a constant at second order in e^{-t}
  CHECK(gradient_bound_check(SetExpr::ball(vec({0, 0}), 1.0), 8.0, 20, 5) < 0.01);
}
