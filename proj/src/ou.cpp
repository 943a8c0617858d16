#include "noisestab/ou.hpp"

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "noisestab/gaussian.hpp"

namespace noisestab {

namespace {

constexpr std::uint64_t kShards = 64;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Runs `visit(path_index, step_index, state)` along exact-transition paths on
// a uniform grid. Path p draws from its own seed, so the driving noise of a
// path is identical across any two calls with the same seed. `visit` returns
// false to stop the path early. Per-shard accumulators of type Acc are
// created by `make_acc`, and are merged by the caller in shard order.
template <typename Acc, typename MakeAcc, typename Visit>
std::vector<Acc> run_paths(Eigen::Index n, double tau, std::uint64_t steps, std::uint64_t paths,
                           std::uint64_t seed, MakeAcc&& make_acc, Visit&& visit) {
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (paths < 1) throw std::invalid_argument("paths must be >= 1");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument("horizon must be finite and >= 0");
  const double dt = tau / static_cast<double>(steps);
  const double decay = std::exp(-dt);
  const double diffusion = std::sqrt(-std::expm1(-2.0 * dt));
  const std::uint64_t shards = std::min(kShards, paths);
  std::vector<Acc> accs;
  accs.reserve(shards);
  for (std::uint64_t s = 0; s < shards; ++s) accs.push_back(make_acc());
  for_each_shard(shards, [&](std::uint64_t s) {
    Eigen::VectorXd x(n);
    Eigen::VectorXd xi(n);
    Acc& acc = accs[s];
    for (std::uint64_t p = s; p < paths; p += shards) {
      Rng rng(derive_seed(seed, p));
      rng.fill_normal(x);
      acc.begin_path();
      if (!visit(acc, 0, x)) {
        acc.end_path();
        continue;
      }
      for (std::uint64_t i = 1; i <= steps; ++i) {
        rng.fill_normal(xi);
        x = decay * x + diffusion * xi;
        if (!visit(acc, i, x)) break;
      }
      acc.end_path();
    }
  });
  return accs;
}

struct PairCounter {
  bool alive_a = true;
  bool alive_b = true;
  std::uint64_t hits_a = 0;
  std::uint64_t hits_b = 0;
  std::int64_t diff_sum = 0;  // sum of (1_b - 1_a)
  std::uint64_t diff_sq = 0;

  void begin_path() { alive_a = alive_b = true; }
  void end_path() {
    hits_a += alive_a;
    hits_b += alive_b;
    const int d = static_cast<int>(alive_b) - static_cast<int>(alive_a);
    diff_sum += d;
    diff_sq += static_cast<std::uint64_t>(d * d);
  }
};

struct OccupationCounter {
  bool alive_a = true;
  bool alive_b = true;
  std::uint64_t count_a = 0;  // per-path counters
  std::uint64_t count_b = 0;
  std::uint64_t sum_a = 0, sum_b = 0;
  long double sq_a = 0, sq_b = 0, sq_diff = 0;

  void begin_path() {
    alive_a = alive_b = true;
    count_a = count_b = 0;
  }
  void end_path() {
    sum_a += count_a;
    sum_b += count_b;
    sq_a += static_cast<long double>(count_a) * count_a;
    sq_b += static_cast<long double>(count_b) * count_b;
    const long double d = static_cast<long double>(count_b) - static_cast<long double>(count_a);
    sq_diff += d * d;
  }
};

double sample_se(long double sum, long double sum_sq, std::uint64_t n) {
  if (n < 2) return 0.0;
  const long double mean = sum / n;
  const long double var = std::max<long double>(0.0L, (sum_sq - n * mean * mean) / (n - 1));
  return static_cast<double>(std::sqrt(var / n));
}

void require_positive_time(double t, const char* who) {
  if (!(t > 0.0)) throw std::domain_error(std::string(who) + ": time must be positive");
}

// (P_t 1_s, 1 - P_t 1_s) in closed form, each accurate in its own tail.
std::optional<std::pair<double, double>> semigroup_exact_pair(const SetExpr& s, double t,
                                                              const Eigen::VectorXd& x) {
  const double decay = std::exp(-t);
  const double sd = std::sqrt(-std::expm1(-2.0 * t));
  switch (s.kind()) {
    case SetExpr::Kind::halfspace: {
      const HalfSpace& h = s.as_halfspace();
      if (h.offset == kInf) return std::pair{1.0, 0.0};
      if (h.offset == -kInf) return std::pair{0.0, 1.0};
      const double arg = (h.offset - decay * h.normal.dot(x)) / sd;
      return std::pair{std_normal_cdf(arg), std_normal_sf(arg)};
    }
    case SetExpr::Kind::ball: {
      const Ball& b = s.as_ball();
      const double r2 = (b.radius / sd) * (b.radius / sd);
      const double lambda = ((decay * x - b.center) / sd).squaredNorm();
      const double dof = static_cast<double>(s.dimension());
      if (lambda == 0.0) {
        return std::pair{boost::math::gamma_p(0.5 * dof, 0.5 * r2),
                         boost::math::gamma_q(0.5 * dof, 0.5 * r2)};
      }
      const boost::math::non_central_chi_squared dist(dof, lambda);
      return std::pair{boost::math::cdf(dist, r2), boost::math::cdf(boost::math::complement(dist, r2))};
    }
    case SetExpr::Kind::box: {
      const AxisBox& b = s.as_box();
      double p = 1.0;
      for (Eigen::Index i = 0; i < b.lo.size(); ++i) {
        const double m = decay * x(i);
        p *= std::max(0.0, std_normal_cdf((b.hi(i) - m) / sd) - std_normal_cdf((b.lo(i) - m) / sd));
      }
      return std::pair{p, 1.0 - p};
    }
    case SetExpr::Kind::complement: {
      const auto inner = semigroup_exact_pair(s.children().front(), t, x);
      if (!inner) return std::nullopt;
      return std::pair{inner->second, inner->first};
    }
    default:
      return std::nullopt;
  }
}

// quantile(P), using whichever tail is better resolved.
double transformed(const std::pair<double, double>& pq) {
  return pq.first <= 0.5 ? std_normal_quantile(pq.first) : -std_normal_quantile(pq.second);
}

}  // namespace

KroneckerSampler::KroneckerSampler(const CorrelationMatrix& m, Eigen::Index n)
    : q_(cholesky(m.matrix()).lower), n_(n), z_(m.dim(), n) {
  if (n < 1) throw std::invalid_argument("KroneckerSampler: dimension must be >= 1");
}

void KroneckerSampler::draw(Rng& rng, Eigen::MatrixXd& out) {
  for (Eigen::Index i = 0; i < z_.rows(); ++i) {
    for (Eigen::Index c = 0; c < n_; ++c) z_(i, c) = rng.normal();
  }
  out.noalias() = q_.triangularView<Eigen::Lower>() * z_;
}

Eigen::MatrixXd sample_joint(const CorrelationMatrix& m, Eigen::Index n, std::uint64_t seed) {
  KroneckerSampler sampler(m, n);
  Rng rng(seed);
  Eigen::MatrixXd out;
  sampler.draw(rng, out);
  return out;
}

OUPath simulate_path(Eigen::Index n, std::span<const double> grid, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("simulate_path: dimension must be >= 1");
  if (grid.empty() || grid.front() != 0.0) {
    throw std::invalid_argument("simulate_path: grid must start at 0");
  }
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (!(grid[j] >= grid[j - 1]) || !std::isfinite(grid[j])) {
      throw std::invalid_argument("simulate_path: grid must be nondecreasing and finite");
    }
  }
  OUPath path{{grid.begin(), grid.end()}, Eigen::MatrixXd(static_cast<Eigen::Index>(grid.size()), n), seed};
  Rng rng(seed);
  Eigen::VectorXd x(n);
  rng.fill_normal(x);
  path.states.row(0) = x.transpose();
  Eigen::VectorXd xi(n);
  for (std::size_t j = 1; j < grid.size(); ++j) {
    const double dt = grid[j] - grid[j - 1];
    rng.fill_normal(xi);
    x = std::exp(-dt) * x + std::sqrt(-std::expm1(-2.0 * dt)) * xi;
    path.states.row(static_cast<Eigen::Index>(j)) = x.transpose();
  }
  return path;
}

std::vector<double> uniform_grid(double tau, std::uint64_t steps) {
  if (steps < 1) throw std::invalid_argument("uniform_grid: steps must be >= 1");
  std::vector<double> grid(steps + 1);
  for (std::uint64_t i = 0; i <= steps; ++i) {
    grid[i] = tau * static_cast<double>(i) / static_cast<double>(steps);
  }
  return grid;
}

PairedExit exit_survival_paired(const SetExpr& a, const SetExpr& b, double tau, std::uint64_t steps,
                                std::uint64_t paths, std::uint64_t seed) {
  if (a.dimension() != b.dimension()) throw std::invalid_argument("exit_survival: dimension mismatch");
  auto accs = run_paths<PairCounter>(
      a.dimension(), tau, steps, paths, seed, [] { return PairCounter{}; },
      [&](PairCounter& acc, std::uint64_t, const Eigen::VectorXd& x) {
        if (acc.alive_a && !a.contains(x)) acc.alive_a = false;
        if (acc.alive_b && !b.contains(x)) acc.alive_b = false;
        return acc.alive_a || acc.alive_b;
      });
  std::uint64_t hits_a = 0, hits_b = 0, diff_sq = 0;
  std::int64_t diff_sum = 0;
  for (const auto& acc : accs) {
    hits_a += acc.hits_a;
    hits_b += acc.hits_b;
    diff_sum += acc.diff_sum;
    diff_sq += acc.diff_sq;
  }
  PairedExit out;
  out.a = {tau, steps, Estimate::binomial(hits_a, paths, seed)};
  out.b = {tau, steps, Estimate::binomial(hits_b, paths, seed)};
  out.difference_se = sample_se(diff_sum, diff_sq, paths);
  return out;
}

ExitTimeEstimate exit_survival(const SetExpr& s, double tau, std::uint64_t steps,
                               std::uint64_t paths, std::uint64_t seed) {
  return exit_survival_paired(s, s, tau, steps, paths, seed).a;
}

PairedOccupation occupation_paired(const SetExpr& a1, const SetExpr& a2, const SetExpr& b1,
                                   const SetExpr& b2, double tau, std::uint64_t steps,
                                   std::uint64_t paths, std::uint64_t seed) {
  const Eigen::Index n = a1.dimension();
  if (a2.dimension() != n || b1.dimension() != n || b2.dimension() != n) {
    throw std::invalid_argument("occupation: dimension mismatch");
  }
  auto accs = run_paths<OccupationCounter>(
      n, tau, steps, paths, seed, [] { return OccupationCounter{}; },
      [&](OccupationCounter& acc, std::uint64_t i, const Eigen::VectorXd& x) {
        // Index i counts when X_{t_j} in A1 for all j < i and X_{t_i} in A2.
        if (i >= 1) {
          if (acc.alive_a && a2.contains(x)) ++acc.count_a;
          if (acc.alive_b && b2.contains(x)) ++acc.count_b;
        }
        if (acc.alive_a && !a1.contains(x)) acc.alive_a = false;
        if (acc.alive_b && !b1.contains(x)) acc.alive_b = false;
        return acc.alive_a || acc.alive_b;
      });
  std::uint64_t sum_a = 0, sum_b = 0;
  long double sq_a = 0, sq_b = 0, sq_diff = 0;
  for (const auto& acc : accs) {
    sum_a += acc.sum_a;
    sum_b += acc.sum_b;
    sq_a += acc.sq_a;
    sq_b += acc.sq_b;
    sq_diff += acc.sq_diff;
  }
  const double dt = tau / static_cast<double>(steps);
  const double np = static_cast<double>(paths);
  PairedOccupation out;
  out.a = {tau, steps, {dt * static_cast<double>(sum_a) / np, dt * sample_se(sum_a, sq_a, paths), paths, seed}};
  out.b = {tau, steps, {dt * static_cast<double>(sum_b) / np, dt * sample_se(sum_b, sq_b, paths), paths, seed}};
  out.difference_se = dt * sample_se(static_cast<long double>(sum_b) - static_cast<long double>(sum_a), sq_diff, paths);
  return out;
}

OccupationEstimate occupation(const SetExpr& a1, const SetExpr& a2, double tau, std::uint64_t steps,
                              std::uint64_t paths, std::uint64_t seed) {
  return occupation_paired(a1, a2, a1, a2, tau, steps, paths, seed).a;
}

Estimate semigroup_apply(const SetExpr& s, double t, const Eigen::VectorXd& x,
                         std::uint64_t samples, std::uint64_t seed) {
  require_positive_time(t, "semigroup_apply");
  if (x.size() != s.dimension()) throw std::invalid_argument("semigroup_apply: dimension mismatch");
  if (samples < 1) throw std::invalid_argument("semigroup_apply: samples must be >= 1");
  const double decay = std::exp(-t);
  const double sd = std::sqrt(-std::expm1(-2.0 * t));
  const Eigen::VectorXd base = decay * x;
  const std::uint64_t shards = std::min(kShards, samples);
  std::vector<std::uint64_t> hits(shards, 0);
  for_each_shard(shards, [&](std::uint64_t sh) {
    const std::uint64_t count = samples / shards + (sh < samples % shards ? 1 : 0);
    Rng rng(derive_seed(seed, sh));
    Eigen::VectorXd y(x.size());
    std::uint64_t h = 0;
    for (std::uint64_t j = 0; j < count; ++j) {
      rng.fill_normal(y);
      h += s.contains(base + sd * y) ? 1 : 0;
    }
    hits[sh] = h;
  });
  return Estimate::binomial(std::accumulate(hits.begin(), hits.end(), std::uint64_t{0}), samples, seed);
}

double semigroup_halfspace_closed(double c, double t, double u) {
  require_positive_time(t, "semigroup_halfspace_closed");
  if (c == kInf) return 1.0;
  if (c == -kInf) return 0.0;
  return std_normal_cdf((c - std::exp(-t) * u) / std::sqrt(-std::expm1(-2.0 * t)));
}

std::optional<double> semigroup_exact(const SetExpr& s, double t, const Eigen::VectorXd& x) {
  require_positive_time(t, "semigroup_exact");
  if (x.size() != s.dimension()) throw std::invalid_argument("semigroup_exact: dimension mismatch");
  const auto pq = semigroup_exact_pair(s, t, x);
  if (!pq) return std::nullopt;
  return pq->first;
}

double gradient_bound_check(const SetExpr& s, double t, std::uint64_t probe_points,
                            std::uint64_t seed) {
  require_positive_time(t, "gradient_bound_check");
  if (probe_points < 1) throw std::invalid_argument("gradient_bound_check: need at least one probe");
  const Eigen::Index n = s.dimension();
  const double bound = k_t(t);
  const bool closed = semigroup_exact_pair(s, t, Eigen::VectorXd::Zero(n)).has_value();
  // Monte-Carlo differences reuse one seed per probe across the stencil, so
  // the same driving samples enter both sides.
  constexpr std::uint64_t kMcSamples = 400'000;
  const double h = closed ? 1e-5 : 0.1;

  Rng rng(seed);
  double worst = 0.0;
  Eigen::VectorXd x(n);
  for (std::uint64_t p = 0; p < probe_points; ++p) {
    rng.fill_normal(x);
    const std::uint64_t probe_seed = derive_seed(seed, p);
    auto w = [&](const Eigen::VectorXd& y) -> std::optional<double> {
      std::pair<double, double> pq;
      if (closed) {
        pq = *semigroup_exact_pair(s, t, y);
      } else {
        const double v = semigroup_apply(s, t, y, kMcSamples, probe_seed).value;
        pq = {v, 1.0 - v};
      }
      if (pq.first < 1e-12 || pq.second < 1e-12) return std::nullopt;
      return transformed(pq);
    };
    Eigen::VectorXd grad(n);
    bool usable = true;
    for (Eigen::Index d = 0; d < n && usable; ++d) {
      Eigen::VectorXd up = x, down = x;
      up(d) += h;
      down(d) -= h;
      const auto wu = w(up);
      const auto wd = w(down);
      if (!wu || !wd) {
        usable = false;
        break;
      }
      grad(d) = (*wu - *wd) / (2.0 * h);
    }
    if (usable) worst = std::max(worst, grad.norm() / bound);
  }
  return worst;
}

}  // namespace noisestab
