#pragma once

namespace dpl {

struct GaussianParams {
  double mean = 0.0;
  double variance = 1.0;  // > 0; callers pass the floored variance
};

inline constexpr GaussianParams kStandardNormal{0.0, 1.0};

// Deviation from the mean in standard deviations.
struct StandardScore {
  double z = 0.0;
};

// Search interval in standard-score units, plus the factor used to widen it.
struct Bracket {
  double lo = -10.0;
  double hi = 10.0;
  double factor = 10.0;
};

// (x - mean) / sqrt(variance)
StandardScore standard_score(double x, const GaussianParams& params);

// Error function from its Maclaurin-type series
//   erf(z) = 2z e^{-z^2}/sqrt(pi) * sum_k (2z^2)^k / (1*3*...*(2k+1)),
// saturated to +-1 for |z| > 6.
double erf_approx(double z);

// Normal CDF built on erf_approx.
double cdf(double x, const GaussianParams& params);

// Bracket for the standard-normal quantile of q, widened by bracket.factor
// until F(lo) <= q <= F(hi).
Bracket expand_bracket(double q, Bracket start = {});

// Standard score z with F_std(z) = q, found with Brent's method inside
// bracket. Iterates until the z-interval is below z_tol, then checks that
// |F_std(z) - q| <= prob_tol. Throws BracketError if the bracket does not
// enclose q and NumericalError if either tolerance cannot be met within the
// iteration budget.
StandardScore find_root_bracketed(double q, const Bracket& bracket, double prob_tol = 1e-9,
                                  double z_tol = 1e-10, int max_iterations = 200);

// Percent-point function (inverse CDF). Throws InvalidArgument unless
// 0 < q < 1 and variance > 0.
double ppf(double q, const GaussianParams& params);

} // namespace dpl
