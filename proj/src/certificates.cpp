#include "rcp1/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rcp1/errors.hpp"
#include "rcp1/normal.hpp"

namespace rcp1 {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw DomainError("beta must be in [0, 1]");
  }
}

void check_radius(double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw DomainError("radius must be finite and >= 0");
  }
}

void check_supported(const SmoothingSpec& smoothing,
                     const ThreatModel& threat) {
  check_radius(threat.radius);
  bool ok = false;
  switch (smoothing.scheme) {
    case Scheme::Gaussian:
      ok = true;  // L2 exact; L1 ball is contained in the L2 ball.
      break;
    case Scheme::Laplace:
    case Scheme::Uniform:
      ok = threat.norm == Norm::L1;
      break;
  }
  if (!ok) {
    throw UnsupportedCertificate("unsupported (scheme, norm) pair: " +
                                 smoothing.describe() + " with " +
                                 (threat.norm == Norm::L1 ? "l1" : "l2"));
  }
}

double gaussian_lower(double beta, double sigma, double radius) {
  if (beta <= 0.0) return 0.0;
  if (beta >= 1.0) return 1.0;
  return normal_cdf(normal_quantile(beta) - radius / sigma);
}

// Exact Laplace-L1 certificate. In one dimension the likelihood ratio of
// Laplace(r, s) against Laplace(0, s) is constant below 0, exponential on
// (0, r) and constant above r; solving the binary program over those
// regions gives three branches (E = exp(-r/s)):
//   beta <= 1/2:            beta * E
//   1/2 < beta < 1 - E/2:   E / (4 (1 - beta))
//   beta >= 1 - E/2:        1 - (1 - beta) / E
// The pieces meet with matching slopes, so the bound is convex and C^1.
double laplace_lower(double beta, double scale, double radius) {
  if (beta <= 0.0) return 0.0;
  if (beta >= 1.0) return 1.0;
  double e = std::exp(-radius / scale);
  if (beta <= 0.5) return beta * e;
  if (beta < 1.0 - 0.5 * e) return e / (4.0 * (1.0 - beta));
  return 1.0 - (1.0 - beta) / e;
}

// Exact Uniform-L1 certificate on (0, 1): shifting Uniform[-a, a]^d by an L1
// step of length r moves at most r/(2a) probability mass.
double uniform_lower(double beta, double half_width, double radius) {
  return std::max(0.0, beta - radius / (2.0 * half_width));
}

double lower_value(double beta, const SmoothingSpec& smoothing,
                   double radius) {
  // beta exactly 0 or 1 short-circuits per contract; no quantile arithmetic.
  if (beta <= 0.0) return 0.0;
  if (beta >= 1.0) return 1.0;
  switch (smoothing.scheme) {
    case Scheme::Gaussian:
      return gaussian_lower(beta, smoothing.param, radius);
    case Scheme::Laplace:
      return laplace_lower(beta, smoothing.param, radius);
    case Scheme::Uniform:
      return uniform_lower(beta, smoothing.param, radius);
  }
  throw Error("unreachable scheme");
}

double check_param(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(what) + " must be finite and > 0");
  }
  return value;
}

}  // namespace

SmoothingSpec SmoothingSpec::gaussian(double sigma) {
  return {Scheme::Gaussian, check_param(sigma, "gaussian sigma")};
}

SmoothingSpec SmoothingSpec::laplace(double scale) {
  return {Scheme::Laplace, check_param(scale, "laplace scale")};
}

SmoothingSpec SmoothingSpec::uniform(double half_width) {
  return {Scheme::Uniform, check_param(half_width, "uniform half-width")};
}

std::string SmoothingSpec::describe() const {
  switch (scheme) {
    case Scheme::Gaussian:
      return "gaussian(sigma=" + std::to_string(param) + ")";
    case Scheme::Laplace:
      return "laplace(scale=" + std::to_string(param) + ")";
    case Scheme::Uniform:
      return "uniform(half_width=" + std::to_string(param) + ")";
  }
  return "?";
}

ThreatModel ThreatModel::l2(double radius) {
  check_radius(radius);
  return {Norm::L2, radius};
}

ThreatModel ThreatModel::l1(double radius) {
  check_radius(radius);
  return {Norm::L1, radius};
}

CertifiedBound lower_bound(double beta, const SmoothingSpec& smoothing,
                           const ThreatModel& threat) {
  check_beta(beta);
  check_supported(smoothing, threat);
  double v = lower_value(beta, smoothing, threat.radius);
  return {v, v <= 0.0 && beta > 0.0 && threat.radius > 0.0};
}

CertifiedBound upper_bound(double beta, const SmoothingSpec& smoothing,
                           const ThreatModel& threat) {
  check_beta(beta);
  check_supported(smoothing, threat);
  double v = 1.0 - lower_value(1.0 - beta, smoothing, threat.radius);
  return {v, v >= 1.0 && beta < 1.0 && threat.radius > 0.0};
}

double omega(double p, const SmoothingSpec& smoothing) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("omega argument must be in (0, 1)");
  }
  switch (smoothing.scheme) {
    case Scheme::Gaussian:
      // phi_sigma(Phi_sigma^-1(1 - p)) = phi(Phi^-1(1 - p)) / sigma.
      return normal_pdf(normal_quantile(1.0 - p)) / smoothing.param;
    case Scheme::Laplace:
      return p / smoothing.param;
    case Scheme::Uniform:
      return 1.0 / (2.0 * smoothing.param);
  }
  throw Error("unreachable scheme");
}

namespace {

// F extended to (0, 1); strictly decreasing, F(1/2) = 0.
double f_extended(double beta, const SmoothingSpec& smoothing) {
  switch (smoothing.scheme) {
    case Scheme::Gaussian:
      return normal_quantile(1.0 - beta, smoothing.param);
    case Scheme::Laplace:
      return smoothing.param * std::log(0.5 / beta);
    case Scheme::Uniform:
      return 2.0 * smoothing.param * (0.5 - beta);
  }
  throw Error("unreachable scheme");
}

// Inverse of the extended F; clamped into [0, 1].
double f_inverse(double t, const SmoothingSpec& smoothing) {
  switch (smoothing.scheme) {
    case Scheme::Gaussian:
      return 1.0 - normal_cdf(t, smoothing.param);
    case Scheme::Laplace:
      return 0.5 * std::exp(-t / smoothing.param);
    case Scheme::Uniform:
      return std::clamp(0.5 - t / (2.0 * smoothing.param), 0.0, 1.0);
  }
  throw Error("unreachable scheme");
}

// Infimum of F as beta -> 1: the saturation point for the upper slide.
double f_at_one(const SmoothingSpec& smoothing) {
  switch (smoothing.scheme) {
    case Scheme::Gaussian:
      return -kInf;
    case Scheme::Laplace:
      return -smoothing.param * std::log(2.0);
    case Scheme::Uniform:
      return -smoothing.param;
  }
  throw Error("unreachable scheme");
}

}  // namespace

double f_integral(double beta, const SmoothingSpec& smoothing) {
  if (!(beta > 0.0 && beta <= 0.5)) {
    throw DomainError("f_integral argument must be in (0, 1/2]");
  }
  return f_extended(beta, smoothing);
}

CertifiedBound omega_upper(double beta, const SmoothingSpec& smoothing,
                           double radius) {
  check_beta(beta);
  check_radius(radius);
  if (beta <= 0.0) return {0.0, false};
  if (beta >= 1.0) return {1.0, false};
  if (radius == 0.0) return {beta, false};
  double target = f_extended(beta, smoothing) - radius;
  if (target <= f_at_one(smoothing)) return {1.0, true};
  return {std::min(1.0, f_inverse(target, smoothing)), false};
}

CertifiedBound omega_lower(double beta, const SmoothingSpec& smoothing,
                           double radius) {
  CertifiedBound up = omega_upper(1.0 - beta, smoothing, radius);
  return {1.0 - up.value, up.vacuous};
}

double omega_upper_bisect(const std::function<double(double)>& f_of_beta,
                          double beta, double radius) {
  check_beta(beta);
  check_radius(radius);
  if (beta <= 0.0) return 0.0;
  if (beta >= 1.0) return 1.0;
  if (radius == 0.0) return beta;
  const double target = f_of_beta(beta) - radius;
  // Invariant: F(lo) >= target; hi is 1 or violates the constraint. F is
  // never evaluated at 1 itself, where it may diverge.
  double lo = beta;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-10; ++i) {
    double mid = 0.5 * (lo + hi);
    if (f_of_beta(mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // lo still satisfies the constraint: never above the true supremum.
  return lo;
}

RegionSystem RegionSystem::make(std::vector<double> p_mass,
                                std::vector<double> q_mass) {
  if (p_mass.size() != q_mass.size()) {
    throw ShapeError("region mass vectors must have equal length");
  }
  if (p_mass.empty()) throw DomainError("region system must be nonempty");
  double p_sum = 0.0, q_sum = 0.0;
  for (std::size_t i = 0; i < p_mass.size(); ++i) {
    if (!(p_mass[i] >= 0.0) || !(q_mass[i] >= 0.0) ||
        !std::isfinite(p_mass[i]) || !std::isfinite(q_mass[i])) {
      throw ValueError("region masses must be finite and nonnegative");
    }
    p_sum += p_mass[i];
    q_sum += q_mass[i];
  }
  if (std::fabs(p_sum - 1.0) > 1e-9 || std::fabs(q_sum - 1.0) > 1e-9) {
    throw ValueError("region masses must each sum to 1");
  }

  std::vector<std::size_t> order(p_mass.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto ratio_of = [&](std::size_t i) {
    return p_mass[i] > 0.0 ? q_mass[i] / p_mass[i] : kInf;
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ratio_of(a) > ratio_of(b);
  });

  RegionSystem out;
  for (std::size_t i : order) {
    double c = ratio_of(i);
    if (!out.ratio.empty() && out.ratio.back() == c) {
      out.p_mass.back() += p_mass[i];  // merge duplicate ratios
      out.q_mass.back() += q_mass[i];
    } else {
      out.p_mass.push_back(p_mass[i]);
      out.q_mass.push_back(q_mass[i]);
      out.ratio.push_back(c);
    }
  }
  return out;
}

double knapsack_lower(double beta, const RegionSystem& regions) {
  check_beta(beta);
  // Regions are sorted by decreasing ratio; the minimizer fills from the
  // back (smallest q per unit of p) until the p budget is spent.
  double need = beta;
  double value = 0.0;
  for (std::size_t i = regions.p_mass.size(); i-- > 0 && need > 0.0;) {
    double p = regions.p_mass[i];
    if (p <= 0.0) continue;
    if (p <= need) {
      value += regions.q_mass[i];
      need -= p;
    } else {
      value += regions.q_mass[i] * (need / p);
      need = 0.0;
    }
  }
  return std::min(value, 1.0);
}

RegionSystem gaussian_shift_regions(std::size_t n_regions, double sigma,
                                    double radius) {
  if (n_regions < 2) throw DomainError("need at least 2 regions");
  check_param(sigma, "sigma");
  check_radius(radius);
  // Slab k spans the (k/N, (k+1)/N] p-quantile band; masses are exact CDF
  // differences, so slab-constant classifiers restrict the continuous
  // problem and the discrete bound is exact at the knots.
  std::vector<double> p(n_regions), q(n_regions);
  double prev_p = 0.0, prev_q = 0.0;
  for (std::size_t k = 0; k + 1 < n_regions; ++k) {
    double u = static_cast<double>(k + 1) / static_cast<double>(n_regions);
    double z = normal_quantile(u, sigma);
    double cum_q = normal_cdf(z - radius, sigma);
    p[k] = u - prev_p;
    q[k] = cum_q - prev_q;
    prev_p = u;
    prev_q = cum_q;
  }
  p[n_regions - 1] = 1.0 - prev_p;
  q[n_regions - 1] = 1.0 - prev_q;
  return RegionSystem::make(std::move(p), std::move(q));
}

double confidence_upper(double beta, const RiskBounds& bounds,
                        const SmoothingSpec& smoothing, double radius) {
  if (!(bounds.lo < bounds.hi) || !std::isfinite(bounds.lo) ||
      !std::isfinite(bounds.hi)) {
    throw DomainError("risk bounds must be finite with lo < hi");
  }
  if (!(beta >= bounds.lo && beta <= bounds.hi)) {
    throw DomainError("beta must be within the risk bounds");
  }
  if (smoothing.scheme != Scheme::Gaussian) {
    throw UnsupportedCertificate(
        "confidence certificate requires gaussian smoothing");
  }
  check_radius(radius);
  double span = bounds.hi - bounds.lo;
  double t = (beta - bounds.lo) / span;
  double up = 1.0 - gaussian_lower(1.0 - t, smoothing.param, radius);
  return bounds.lo + span * up;
}

}  // namespace rcp1
