#pragma once

// Finite-difference oracle for derivatives of J. Each stencil point is
// evaluated with the same lattice, shifts and variable order, so the
// estimator is a smooth function of x; the difference quotient is formed per
// randomized shift and the spread across shifts gives its standard error.

#include <cmath>
#include <cstdint>
#include <vector>

#include "noisestab/j_functional.hpp"

namespace oracle {

struct FdValue {
  double value = 0.0;
  double se = 0.0;
};

inline noisestab::QmcOptions fd_options(std::uint64_t points_per_shift = 1 << 17) {
  noisestab::QmcOptions o;
  o.fixed_points = points_per_shift;
  o.reorder = false;
  o.shifts = 12;
  return o;
}

inline std::vector<double> per_shift_j(const noisestab::JQuery& base, const Eigen::VectorXd& x,
                                       const noisestab::QmcOptions& options, std::uint64_t seed) {
  const noisestab::JQuery q(x, base.m);
  const auto r = noisestab::j_value_detail(q, options, seed);
  if (r.shift_means.empty()) return std::vector<double>(options.shifts, r.estimate.value);
  return r.shift_means;
}

template <typename Combine>
FdValue combine_stencil(const std::vector<std::vector<double>>& columns, Combine&& combine) {
  const std::size_t shifts = columns.front().size();
  std::vector<double> per(shifts);
  std::vector<double> point(columns.size());
  for (std::size_t s = 0; s < shifts; ++s) {
    for (std::size_t c = 0; c < columns.size(); ++c) point[c] = columns[c][s];
    per[s] = combine(point);
  }
  double mean = 0.0;
  for (double v : per) mean += v;
  mean /= static_cast<double>(shifts);
  double ss = 0.0;
  for (double v : per) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (shifts - 1.0) / shifts)};
}

/// Central difference of J in coordinate i.
inline FdValue fd_gradient(const noisestab::JQuery& q, Eigen::Index i, double h,
                           std::uint64_t seed, const noisestab::QmcOptions& options = fd_options()) {
  Eigen::VectorXd up = q.x, down = q.x;
  up(i) += h;
  down(i) -= h;
  return combine_stencil({per_shift_j(q, up, options, seed), per_shift_j(q, down, options, seed)},
                         [h](const std::vector<double>& v) { return (v[0] - v[1]) / (2.0 * h); });
}

/// Four-point central difference of d_i d_j J, i != j.
inline FdValue fd_mixed(const noisestab::JQuery& q, Eigen::Index i, Eigen::Index j, double h,
                        std::uint64_t seed, const noisestab::QmcOptions& options = fd_options()) {
  auto at = [&](double si, double sj) {
    Eigen::VectorXd x = q.x;
    x(i) += si * h;
    x(j) += sj * h;
    return per_shift_j(q, x, options, seed);
  };
  return combine_stencil({at(1, 1), at(1, -1), at(-1, 1), at(-1, -1)},
                         [h](const std::vector<double>& v) {
                           return (v[0] - v[1] - v[2] + v[3]) / (4.0 * h * h);
                         });
}

/// Second central difference of d_i^2 J.
inline FdValue fd_diag(const noisestab::JQuery& q, Eigen::Index i, double h, std::uint64_t seed,
                       const noisestab::QmcOptions& options = fd_options()) {
  Eigen::VectorXd up = q.x, down = q.x;
  up(i) += h;
  down(i) -= h;
  return combine_stencil(
      {per_shift_j(q, up, options, seed), per_shift_j(q, q.x, options, seed),
       per_shift_j(q, down, options, seed)},
      [h](const std::vector<double>& v) { return (v[0] - 2.0 * v[1] + v[2]) / (h * h); });
}

/// |closed - fd| <= max(rel * |fd|, 3 * combined SE).
inline bool derivative_agrees(double closed, double closed_se, const FdValue& fd, double rel = 1e-3) {
  const double tol = std::max(rel * std::abs(fd.value), 3.0 * std::hypot(closed_se, fd.se));
  return std::abs(closed - fd.value) <= tol;
}

}  // namespace oracle
