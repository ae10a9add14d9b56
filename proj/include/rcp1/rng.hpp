#pragma once

#include <cstdint>

namespace rcp1 {

// Counter-based splittable RNG (splitmix64 core).
//
// Every stream is identified by a 64-bit key; substreams are derived with
// mix_key so draws depend only on (seed, indices, role), never on call
// order. Trials, rows and noise coordinates therefore replay in isolation.

uint64_t mix_key(uint64_t a, uint64_t b);

class RandomStream {
 public:
  explicit RandomStream(uint64_t key) : state_(mix_key(key, 0x6a09e667f3bcc909ULL)) {}

  RandomStream fork(uint64_t index) const {
    return RandomStream(mix_key(state_, index));
  }

  uint64_t next_u64();
  // Uniform on (0, 1); never returns an exact 0 or 1.
  double next_uniform();
  double next_gaussian();                     // N(0, 1)
  double next_laplace(double scale);          // Laplace(0, scale)
  double next_uniform_sym(double half_width); // Uniform[-a, a]
  double next_gamma(double shape);            // Gamma(shape, 1), shape > 0
  double next_beta(double a, double b);       // Beta(a, b)

 private:
  uint64_t state_;
};

// One value at (key, counter), independent of any stream state.
double uniform_at(uint64_t key, uint64_t counter);

}  // namespace rcp1
