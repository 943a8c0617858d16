#pragma once

// Scalar standard-normal special functions.

namespace noisestab {

/// Standard normal CDF. Total on the extended reals.
double std_normal_cdf(double z);

/// Upper tail 1 - Phi(z), accurate far into the right tail.
double std_normal_sf(double z);

double std_normal_pdf(double z);

/// Inverse CDF. Returns -inf at 0 and +inf at 1; throws std::domain_error
/// outside [0, 1] or on NaN.
///
/// Wichura's AS241 rational approximation refined by one Halley step
/// against the CDF, so that cdf(quantile(p)) == p to about 1e-15.
double std_normal_quantile(double p);

/// Gaussian isoperimetric profile I(x) = pdf(quantile(x)), zero at 0 and 1.
double isoperimetric_profile(double x);

/// (e^{2t} - 1)^{-1/2}: the slope of quantile(P_t 1_H) for a half-space H.
/// Throws std::domain_error for t <= 0.
double k_t(double t);

namespace detail {
// AS241 without refinement (relative error ~1e-16 in the central region).
// Used in hot loops where p is already a computed probability.
double quantile_as241(double p);
}  // namespace detail

}  // namespace noisestab
