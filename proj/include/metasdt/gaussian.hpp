#pragma once

namespace metasdt {

/// Standard normal CDF, evaluated through std::erfc so that the lower tail
/// keeps full relative precision. Absolute error is below 1e-15.
double normal_cdf(double x);

/// Upper tail 1 - normal_cdf(x) without cancellation.
double normal_sf(double x);

/// Inverse of the standard normal CDF (Wichura's AS241, PPND16), relative
/// accuracy about 1e-16 over the whole open interval. Throws
/// std::domain_error when p is not strictly inside (0, 1); callers are
/// expected to correct zero or saturated counts first.
double normal_quantile(double p);

/// Probability mass of N(mean, sd^2) on [lo, hi). Either bound may be
/// infinite. Computed on whichever tail keeps precision.
double normal_interval(double lo, double hi, double mean, double sd);

}  // namespace metasdt
