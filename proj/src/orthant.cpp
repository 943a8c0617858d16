#include "noisestab/orthant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "noisestab/gaussian.hpp"
#include "noisestab/linalg.hpp"
#include "noisestab/random.hpp"

namespace noisestab {

namespace {

constexpr std::uint64_t kMcShards = 64;

// Square roots of the first primes; generators of the Kronecker lattice.
constexpr double kLatticePrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

// A query reduced to standardized finite limits and a correlation factor.
struct Reduced {
  enum class Kind { exact, integrate };
  Kind kind = Kind::exact;
  double exact_value = 0.0;
  Eigen::VectorXd limits;  // standardized
  Eigen::MatrixXd lower;   // Cholesky factor of the (reordered) correlation
};

Reduced reduce(const OrthantQuery& q, bool reorder) {
  Reduced out;
  const Eigen::Index k = q.limits.size();
  if (k == 0) {
    out.exact_value = 1.0;
    return out;
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    if (q.limits(i) == -std::numeric_limits<double>::infinity()) {
      out.exact_value = 0.0;
      return out;
    }
  }
  const double var_scale = std::max(1.0, q.cov.diagonal().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::isinf(q.limits(i))) continue;  // +inf: marginalized out
    if (q.cov(i, i) <= 1e-12 * var_scale) {
      // Zero variance: X_i = 0 almost surely.
      if (q.limits(i) < 0.0) {
        out.exact_value = 0.0;
        return out;
      }
      continue;
    }
    keep.push_back(i);
  }
  const auto d = static_cast<Eigen::Index>(keep.size());
  if (d == 0) {
    out.exact_value = 1.0;
    return out;
  }
  Eigen::VectorXd b(d);
  Eigen::VectorXd sd(d);
  for (Eigen::Index r = 0; r < d; ++r) {
    sd(r) = std::sqrt(q.cov(keep[r], keep[r]));
    b(r) = q.limits(keep[r]) / sd(r);
  }
  if (d == 1) {
    out.exact_value = std_normal_cdf(b(0));
    return out;
  }
  std::vector<Eigen::Index> order(d);
  std::iota(order.begin(), order.end(), 0);
  if (reorder) {
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index x, Eigen::Index y) { return b(x) < b(y); });
  }
  Eigen::MatrixXd corr(d, d);
  out.limits.resize(d);
  for (Eigen::Index r = 0; r < d; ++r) {
    out.limits(r) = b(order[r]);
    for (Eigen::Index c = 0; c < d; ++c) {
      const Eigen::Index kr = keep[order[r]];
      const Eigen::Index kc = keep[order[c]];
      corr(r, c) = r == c ? 1.0 : q.cov(kr, kc) / (sd(order[r]) * sd(order[c]));
    }
  }
  corr = (0.5 * (corr + corr.transpose())).eval();
  out.lower = cholesky(corr).lower;
  out.kind = Reduced::Kind::integrate;
  return out;
}

// Genz's sequential conditioning integrand on [0,1)^{d-1}.
class Integrand {
 public:
  explicit Integrand(const Reduced& r)
      : b_(r.limits), lower_(r.lower), y_(r.limits.size()) {}

  double operator()(const double* w) {
    const Eigen::Index d = b_.size();
    double e = conditional(0, 0.0);
    double f = e;
    for (Eigen::Index i = 1; i < d && f > 0.0; ++i) {
      if (lower_(i - 1, i - 1) > 0.0) {
        const double u = std::clamp(w[i - 1] * e, 1e-300, 1.0 - 1e-16);
        y_(i - 1) = detail::quantile_as241(u);
      } else {
        y_(i - 1) = 0.0;
      }
      double s = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) s += lower_(i, j) * y_(j);
      e = conditional(i, s);
      f *= e;
    }
    return f;
  }

 private:
  double conditional(Eigen::Index i, double shift) const {
    const double pivot = lower_(i, i);
    if (pivot > 0.0) return std_normal_cdf((b_(i) - shift) / pivot);
    return shift <= b_(i) ? 1.0 : 0.0;
  }

  const Eigen::VectorXd& b_;
  const Eigen::MatrixXd& lower_;
  Eigen::VectorXd y_;
};

double periodize(double w) { return 1.0 - std::abs(2.0 * w - 1.0); }

}  // namespace

void OrthantQuery::validate() const {
  if (cov.rows() != cov.cols() || cov.rows() != limits.size()) {
    throw std::invalid_argument("OrthantQuery: limits and covariance dimensions disagree");
  }
  for (Eigen::Index i = 0; i < limits.size(); ++i) {
    if (std::isnan(limits(i))) throw std::invalid_argument("OrthantQuery: NaN limit");
  }
  if (cov.size() == 0) return;
  if (!cov.allFinite()) throw std::invalid_argument("OrthantQuery: non-finite covariance");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cov.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("OrthantQuery: covariance not symmetric");
  }
  if (min_eigenvalue(cov) < -kPsdTolerance) {
    throw NotPositiveDefinite("OrthantQuery: covariance is not positive semidefinite");
  }
}

Estimate orthant_mc(const OrthantQuery& q, std::uint64_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("orthant_mc: samples must be >= 1");
  q.validate();
  const Eigen::Index k = q.limits.size();
  if (k == 0 || (q.limits.array() == std::numeric_limits<double>::infinity()).all()) {
    return {1.0, 0.0, samples, seed};
  }
  const Eigen::MatrixXd lower = cholesky(0.5 * (q.cov + q.cov.transpose())).lower;
  const std::uint64_t shards = std::min(kMcShards, samples);
  std::vector<std::uint64_t> hits(shards, 0);
  for_each_shard(shards, [&](std::uint64_t s) {
    const std::uint64_t n = samples / shards + (s < samples % shards ? 1 : 0);
    Rng rng(derive_seed(seed, s));
    Eigen::VectorXd z(k);
    std::uint64_t count = 0;
    for (std::uint64_t t = 0; t < n; ++t) {
      rng.fill_normal(z);
      bool inside = true;
      for (Eigen::Index i = 0; i < k && inside; ++i) {
        inside = lower.row(i).head(i + 1).dot(z.head(i + 1)) <= q.limits(i);
      }
      count += inside ? 1 : 0;
    }
    hits[s] = count;
  });
  const std::uint64_t total = std::accumulate(hits.begin(), hits.end(), std::uint64_t{0});
  return Estimate::binomial(total, samples, seed);
}

QmcResult orthant_qmc(const OrthantQuery& q, const QmcOptions& options, std::uint64_t seed) {
  q.validate();
  if (q.limits.size() > kMaxOrthantDim) {
    throw std::invalid_argument("orthant_qmc: dimension exceeds 12");
  }
  if (options.shifts < 2) throw std::invalid_argument("orthant_qmc: need at least 2 shifts");
  const Reduced reduced = reduce(q, options.reorder);
  QmcResult result;
  result.estimate.seed = seed;
  if (reduced.kind == Reduced::Kind::exact) {
    result.estimate.value = reduced.exact_value;
    return result;
  }

  const auto dims = static_cast<std::size_t>(reduced.limits.size() - 1);
  const std::uint32_t shifts = options.shifts;
  std::vector<std::vector<double>> shift_vectors(shifts, std::vector<double>(dims));
  for (std::uint32_t s = 0; s < shifts; ++s) {
    Rng rng(derive_seed(seed, s));
    for (auto& v : shift_vectors[s]) v = rng.uniform();
  }
  std::vector<double> alpha(dims);
  for (std::size_t i = 0; i < dims; ++i) {
    const double r = std::sqrt(kLatticePrimes[i]);
    alpha[i] = r - std::floor(r);
  }

  std::vector<double> sums(shifts, 0.0);
  auto accumulate_points = [&](std::uint64_t begin, std::uint64_t end) {
    for_each_shard(shifts, [&](std::uint64_t s) {
      Integrand f(reduced);
      std::vector<double> w(dims);
      double total = 0.0;
      double block = 0.0;
      for (std::uint64_t j = begin; j < end; ++j) {
        const double jd = static_cast<double>(j);
        for (std::size_t i = 0; i < dims; ++i) {
          const double x = jd * alpha[i] + shift_vectors[s][i];
          w[i] = periodize(x - std::floor(x));
        }
        block += f(w.data());
        if (((j - begin) & 1023u) == 1023u) {
          total += block;
          block = 0.0;
        }
      }
      sums[s] += total + block;
    });
  };

  std::uint64_t n = options.fixed_points > 0 ? options.fixed_points
                                              : std::max<std::uint64_t>(options.initial_points, 1);
  std::uint64_t done = 0;
  std::vector<double> means(shifts);
  double mean = 0.0;
  double se = 0.0;
  for (;;) {
    accumulate_points(done, n);
    done = n;
    for (std::uint32_t s = 0; s < shifts; ++s) means[s] = sums[s] / static_cast<double>(n);
    mean = std::accumulate(means.begin(), means.end(), 0.0) / shifts;
    double ss = 0.0;
    for (double m : means) ss += (m - mean) * (m - mean);
    se = std::sqrt(ss / (shifts - 1.0) / shifts);
    if (options.fixed_points > 0 || se <= options.target_se) break;
    if (2 * n * shifts > options.max_points) {
      result.cap_hit = true;
      break;
    }
    n *= 2;
  }
  result.estimate.value = std::clamp(mean, 0.0, 1.0);
  result.estimate.std_error = se;
  result.estimate.samples = n * shifts;
  result.shift_means = std::move(means);
  return result;
}

double bivariate_orthant_closed(double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) {
    throw std::domain_error("bivariate_orthant_closed: correlation outside [-1, 1]");
  }
  return 0.25 + std::asin(rho) / (2.0 * std::numbers::pi);
}

}  // namespace noisestab
