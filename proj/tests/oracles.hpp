#pragma once

// Independent numerical oracles for the test suites. Everything here is
// computed from first principles in long double -- Taylor/asymptotic series
// for erf, bisection for inverses, adaptive Simpson for integrals -- and
// deliberately shares no code with the library implementation it checks.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracle {

// erf via its Maclaurin series for small |x| and the continued-fraction
// complement for large |x|; absolute error far below 1e-18 in long double.
inline long double erf_series(long double x) {
  const long double two_over_sqrt_pi = 1.1283791670955125738961589L;
  long double ax = std::fabs(x);
  if (ax < 0.5e-9L) return two_over_sqrt_pi * x;
  // The alternating series cancels catastrophically past |x| ~ 3, so switch
  // to the complement's continued fraction there.
  if (ax <= 3.0L) {
    // erf(x) = 2/sqrt(pi) * sum_n (-1)^n x^(2n+1) / (n! (2n+1))
    long double term = x;
    long double sum = x;
    long double x2 = x * x;
    for (int n = 1; n < 400; ++n) {
      term *= -x2 / n;
      long double add = term / (2 * n + 1);
      sum += add;
      if (std::fabs(add) < 1e-25L * std::fabs(sum)) break;
    }
    return two_over_sqrt_pi * sum;
  }
  // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
  // evaluated bottom-up with a fixed depth; converges fast for x > 3.
  long double cf = 0.0L;
  for (int k = 160; k >= 1; --k) {
    long double a_k = 0.5L * k;
    cf = a_k / (ax + cf);
  }
  long double erfc_val =
      std::exp(-ax * ax) / std::sqrt(3.14159265358979323846264338328L) /
      (ax + cf);
  long double e = 1.0L - erfc_val;
  return x < 0 ? -e : e;
}

inline long double normal_cdf(long double x) {
  const long double inv_sqrt2 = 0.70710678118654752440084436210L;
  return 0.5L * (1.0L + erf_series(x * inv_sqrt2));
}

inline long double normal_pdf(long double x) {
  const long double inv_sqrt_2pi = 0.39894228040143267793994605993L;
  return inv_sqrt_2pi * std::exp(-0.5L * x * x);
}

// Quantile by pure bisection on the oracle CDF.
inline long double normal_quantile(long double p) {
  if (!(p > 0.0L && p < 1.0L)) throw std::domain_error("oracle quantile domain");
  long double lo = -45.0L, hi = 45.0L;
  for (int i = 0; i < 220; ++i) {
    long double mid = 0.5L * (lo + hi);
    if (normal_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5L * (lo + hi);
}

inline long double normal_cdf_sigma(long double x, long double sigma) {
  return normal_cdf(x / sigma);
}

// Certified Gaussian lower bound evaluated entirely through the oracle:
// Phi_sigma(Phi_sigma^-1(beta) - r).
inline long double gaussian_lower(long double beta, long double sigma,
                                  long double r) {
  if (beta <= 0.0L) return 0.0L;
  if (beta >= 1.0L) return 1.0L;
  return normal_cdf(normal_quantile(beta) - r / sigma);
}

// Adaptive Simpson quadrature.
inline long double simpson(const std::function<long double(long double)>& f,
                           long double a, long double b, long double fa,
                           long double fb, long double fm, long double eps,
                           int depth) {
  long double m = 0.5L * (a + b);
  long double lm = 0.5L * (a + m), rm = 0.5L * (m + b);
  long double flm = f(lm), frm = f(rm);
  long double whole = (b - a) / 6.0L * (fa + 4.0L * fm + fb);
  long double left = (m - a) / 6.0L * (fa + 4.0L * flm + fm);
  long double right = (b - m) / 6.0L * (fm + 4.0L * frm + fb);
  if (depth <= 0 || std::fabs(left + right - whole) < 15.0L * eps) {
    return left + right + (left + right - whole) / 15.0L;
  }
  return simpson(f, a, m, fa, fm, flm, eps / 2, depth - 1) +
         simpson(f, m, b, fm, fb, frm, eps / 2, depth - 1);
}

inline long double integrate(const std::function<long double(long double)>& f,
                             long double a, long double b,
                             long double eps = 1e-14L) {
  long double m = 0.5L * (a + b);
  return simpson(f, a, b, f(a), f(b), f(m), eps, 48);
}

}  // namespace oracle
