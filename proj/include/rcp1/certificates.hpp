#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace rcp1 {

// ---------------------------------------------------------------------------
// Smoothing schemes and threat balls
// ---------------------------------------------------------------------------

enum class Scheme { Gaussian, Laplace, Uniform };

// Additive isotropic smoothing noise. `param` is the Gaussian sigma, the
// Laplace scale, or the uniform half-width; strictly positive and finite.
struct SmoothingSpec {
  Scheme scheme;
  double param;

  static SmoothingSpec gaussian(double sigma);
  static SmoothingSpec laplace(double scale);
  static SmoothingSpec uniform(double half_width);

  std::string describe() const;
};

enum class Norm { L1, L2 };

// Perturbation ball: all points within `radius` of the clean input in the
// given norm. Supported certificate pairs: (Gaussian, L2), (Gaussian, L1 --
// covered by the L2 form, conservative for d > 1), (Laplace, L1),
// (Uniform, L1). Everything here is symmetric, so ball and inverted ball
// coincide.
struct ThreatModel {
  Norm norm;
  double radius = 0.0;

  static ThreatModel l2(double radius);
  static ThreatModel l1(double radius);
};

// Certified probability bound. `vacuous` marks a bound that carries no
// information (lower bound clamped to 0, or upper bound saturated at 1,
// while the clean value was informative); callers must fall back to the
// full prediction set in that case.
struct CertifiedBound {
  double value = 0.0;
  bool vacuous = false;
};

// ---------------------------------------------------------------------------
// Mean-constrained binary certificates
// ---------------------------------------------------------------------------
//
// lower_bound(beta, ...) is the smallest possible smoothed value of any
// binary function at the worst point of the ball, given that its smoothed
// value at the clean point is beta. upper_bound is the symmetric largest
// value; it is implemented as 1 - lower_bound(1 - beta) and the closed
// forms below keep that identity exact.
//
//   Gaussian (sigma), L2/L1 radius r:  Phi(Phi^-1(beta) - r/sigma)
//   Laplace (scale), L1 radius r:      exact likelihood-ratio solution,
//                                      piecewise in beta (see .cpp)
//   Uniform (half-width a), L1 r:      max(0, beta - r/(2a))
//
// All three are the exact Neyman-Pearson optima for their scheme, hence
// convex and nondecreasing in beta and mutually inverse across the
// upper/lower pair.

CertifiedBound lower_bound(double beta, const SmoothingSpec& smoothing,
                           const ThreatModel& threat);
CertifiedBound upper_bound(double beta, const SmoothingSpec& smoothing,
                           const ThreatModel& threat);

// ---------------------------------------------------------------------------
// Differential (Omega / F) certificate engine
// ---------------------------------------------------------------------------
//
// Omega(p) bounds the growth rate of any smoothed binary function whose
// current value is p; F(beta) integrates 1/Omega from beta to 1/2. Sliding
// along F by the radius gives certified bounds for arbitrary smoothing
// schemes. Tight for Gaussian and uniform; valid but looser than the exact
// certificate for Laplace.

// Growth bound at p in (0, 1).
double omega(double p, const SmoothingSpec& smoothing);

// F(beta) = integral_beta^{1/2} 1/Omega(p) dp, beta in (0, 1/2]; F(1/2) = 0.
double f_integral(double beta, const SmoothingSpec& smoothing);

// sup{ beta' : F(beta') >= F(beta) - r } and its dual infimum; closed form
// per scheme, saturating (with the vacuous flag) when the slide leaves the
// range of F.
CertifiedBound omega_upper(double beta, const SmoothingSpec& smoothing,
                           double radius);
CertifiedBound omega_lower(double beta, const SmoothingSpec& smoothing,
                           double radius);

// Bisection fallback for schemes with no closed-form F inverse: solves the
// omega_upper supremum given any strictly decreasing F on (0, 1), to
// absolute tolerance 1e-10 (at most 200 halvings), rounding toward the
// conservative side.
double omega_upper_bisect(const std::function<double(double)>& f_of_beta,
                          double beta, double radius);

// ---------------------------------------------------------------------------
// Region-based knapsack oracle
// ---------------------------------------------------------------------------

// Discretized pair of smoothing measures over regions of constant
// likelihood ratio. `ratio[t] = q_mass[t] / p_mass[t]` sorted strictly
// decreasing; +inf is allowed for regions with p_mass == 0. Both mass
// vectors are nonnegative and sum to 1 within 1e-9. Construction sorts and
// merges duplicate-ratio regions instead of rejecting them.
struct RegionSystem {
  std::vector<double> p_mass;
  std::vector<double> q_mass;
  std::vector<double> ratio;

  static RegionSystem make(std::vector<double> p_mass,
                           std::vector<double> q_mass);
};

// Exact solution of  min h.q  s.t.  h.p = beta, h in [0,1]^T : fills
// regions greedily from the smallest ratio upward. Piecewise linear and
// convex in beta.
double knapsack_lower(double beta, const RegionSystem& regions);

// N equal-p-quantile slabs of the Gaussian pair N(0, sigma) vs N(radius,
// sigma), with exact slab masses. Slab-constant classifiers are a
// restriction of the continuous problem, so knapsack_lower on this system
// upper-bounds the closed form, with equality at the slab knots.
RegionSystem gaussian_shift_regions(std::size_t n_regions, double sigma,
                                    double radius);

// ---------------------------------------------------------------------------
// Confidence certificate (bounded losses)
// ---------------------------------------------------------------------------

// Range [lo, hi] of a bounded loss, lo < hi.
struct RiskBounds {
  double lo = 0.0;
  double hi = 1.0;
};

// Largest worst-case expectation of an [lo, hi]-valued function over the
// ball, given its clean expectation beta. Gaussian smoothing only:
//   lo + (hi - lo) * Phi_sigma(Phi_sigma^-1((beta - lo)/(hi - lo)) + r).
// With [lo, hi] = [0, 1] this coincides with upper_bound.
double confidence_upper(double beta, const RiskBounds& bounds,
                        const SmoothingSpec& smoothing, double radius);

}  // namespace rcp1
