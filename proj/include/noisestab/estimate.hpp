#pragma once

#include <cmath>
#include <cstdint>

namespace noisestab {

/// A Monte-Carlo (or exact) value with its standard error. Every statistical
/// claim in the library is made through this type. Exact values carry
/// std_error == 0.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;

  static Estimate exact(double v) { return {v, 0.0, 0, 0}; }

  /// Hit frequency with the binomial standard error sqrt(p(1-p)/n). When no
  /// sample (or every sample) hits, p in the error is replaced by 1/(n+2) so a
  /// rare event never reports a zero error.
  static Estimate binomial(std::uint64_t hits, std::uint64_t n, std::uint64_t seed) {
    const double dn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / dn;
    const double pe = hits == 0 || hits == n ? 1.0 / (dn + 2.0) : p;
    return {p, std::sqrt(pe * (1.0 - pe) / dn), n, seed};
  }
};

/// sqrt(a^2 + b^2) for independent errors.
inline double combined_se(double a, double b) { return std::hypot(a, b); }

inline double combined_se(const Estimate& a, const Estimate& b) {
  return combined_se(a.std_error, b.std_error);
}

}  // namespace noisestab
