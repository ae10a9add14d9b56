#include "rcp1/rng.hpp"

#include <cmath>

#include "rcp1/errors.hpp"
#include "rcp1/normal.hpp"

namespace rcp1 {
namespace {

uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double to_unit(uint64_t bits) {
  // 53 random mantissa bits in [0, 1); nudge 0 to the smallest step.
  double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return u > 0.0 ? u : 0x1.0p-53;
}

}  // namespace

uint64_t mix_key(uint64_t a, uint64_t b) {
  return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)) ^ b);
}

uint64_t RandomStream::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double RandomStream::next_uniform() { return to_unit(next_u64()); }

double RandomStream::next_gaussian() {
  return normal_quantile(next_uniform());
}

double RandomStream::next_laplace(double scale) {
  double u = next_uniform() - 0.5;
  return -scale * std::copysign(std::log(1.0 - 2.0 * std::fabs(u)), u);
}

double RandomStream::next_uniform_sym(double half_width) {
  return half_width * (2.0 * next_uniform() - 1.0);
}

double RandomStream::next_gamma(double shape) {
  if (!(shape > 0.0)) throw DomainError("gamma shape must be > 0");
  if (shape < 1.0) {
    // Boost to shape+1 and scale back.
    double u = next_uniform();
    return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze.
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = next_gaussian();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = next_uniform();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RandomStream::next_beta(double a, double b) {
  double x = next_gamma(a);
  double y = next_gamma(b);
  return x / (x + y);
}

double uniform_at(uint64_t key, uint64_t counter) {
  return to_unit(splitmix64(mix_key(key, counter)));
}

}  // namespace rcp1
