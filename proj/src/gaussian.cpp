#include "dpl/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include "dpl/error.hpp"

namespace dpl {

namespace {

constexpr double kErfSaturation = 6.0;
// The series needs ~102 terms at |z| = 6.
constexpr int kErfMaxTerms = 128;
constexpr long double kErfRelTol = 1e-19L;

// Negative z is reflected so that F(-z) = 1 - F(z) holds exactly.
double standard_cdf(double z) {
  if (z < 0.0) return 1.0 - 0.5 * (1.0 + erf_approx(-z / std::numbers::sqrt2));
  return 0.5 * (1.0 + erf_approx(z / std::numbers::sqrt2));
}

} // namespace

StandardScore standard_score(double x, const GaussianParams& params) {
  return {(x - params.mean) / std::sqrt(params.variance)};
}

double erf_approx(double z) {
  if (std::isnan(z)) return z;
  if (std::fabs(z) > kErfSaturation) return std::copysign(1.0, z);

  // extended accumulation keeps the rounded result monotone near saturation
  const long double zl = z;
  const long double two_z2 = 2.0L * zl * zl;
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int k = 1; k < kErfMaxTerms; ++k) {
    term *= two_z2 / static_cast<long double>(2 * k + 1);
    if (term < kErfRelTol * sum) break;
    sum += term;
  }
  const double value =
      static_cast<double>(2.0L * zl * std::exp(-zl * zl) * std::numbers::inv_sqrtpi_v<long double> * sum);
  // round-off can push the saturated tail a hair past 1
  if (value > 1.0) return 1.0;
  if (value < -1.0) return -1.0;
  return value;
}

double cdf(double x, const GaussianParams& params) {
  return standard_cdf(standard_score(x, params).z);
}

Bracket expand_bracket(double q, Bracket b) {
  const double f = b.factor;
  while (standard_cdf(b.lo) - q > 0.0) {
    b.hi = b.lo;
    b.lo *= f;
  }
  while (standard_cdf(b.hi) - q < 0.0) {
    b.lo = b.hi;
    b.hi *= f;
  }
  return b;
}

StandardScore find_root_bracketed(double q, const Bracket& bracket, double prob_tol, double z_tol,
                                  int max_iterations) {
  auto g = [q](double z) { return standard_cdf(z) - q; };

  double a = bracket.lo;
  double b = bracket.hi;
  double fa = g(a);
  double fb = g(b);
  if (!(a <= b) || fa > 0.0 || fb < 0.0) {
    std::ostringstream msg;
    msg << "find_root_bracketed: [" << a << ", " << b << "] does not bracket q=" << q << " (F(lo)-q=" << fa
        << ", F(hi)-q=" << fb << ")";
    throw BracketError(msg.str());
  }
  if (fa == 0.0) return {a};
  if (fb == 0.0) return {b};

  constexpr double eps = std::numeric_limits<double>::epsilon();
  double c = a;
  double fc = fa;
  double d = b - a;
  double e = d;

  for (int iter = 0; iter < max_iterations; ++iter) {
    if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }

    const double tol1 = 2.0 * eps * std::fabs(b) + 0.5 * z_tol;
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0) {
      if (std::fabs(fb) > prob_tol) {
        std::ostringstream msg;
        msg << "find_root_bracketed: converged at z=" << b << " but |F(z)-q|=" << std::fabs(fb);
        throw NumericalError(msg.str());
      }
      return {b};
    }

    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      // interpolation: secant when only two distinct points, else inverse quadratic
      const double s = fb / fa;
      double p = 0.0;
      double r = 0.0;
      if (a == c) {
        p = 2.0 * xm * s;
        r = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double rb = fb / fc;
        p = s * (2.0 * xm * qa * (qa - rb) - (b - a) * (rb - 1.0));
        r = (qa - 1.0) * (rb - 1.0) * (s - 1.0);
      }
      if (p > 0.0) r = -r;
      p = std::fabs(p);
      const double min1 = 3.0 * xm * r - std::fabs(tol1 * r);
      const double min2 = std::fabs(e * r);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / r;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }

    a = b;
    fa = fb;
    b += std::fabs(d) > tol1 ? d : std::copysign(tol1, xm);
    fb = g(b);
  }
  throw NumericalError("find_root_bracketed: no convergence within " + std::to_string(max_iterations) +
                       " iterations");
}

double ppf(double q, const GaussianParams& params) {
  if (!(q > 0.0 && q < 1.0)) {
    throw InvalidArgument("ppf: q must lie in (0, 1), got " + std::to_string(q));
  }
  if (!(params.variance > 0.0) || !std::isfinite(params.variance) || !std::isfinite(params.mean)) {
    throw InvalidArgument("ppf: variance must be positive and finite");
  }
  const Bracket bracket = expand_bracket(q);
  const StandardScore root = find_root_bracketed(q, bracket);
  return root.z * std::sqrt(params.variance) + params.mean;
}

} // namespace dpl
