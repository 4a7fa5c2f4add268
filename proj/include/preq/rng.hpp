#pragma once

#include <cmath>
#include <cstdint>

#include "preq/matrix.hpp"

namespace preq {

/// SplitMix64 finalizer (Vigna). Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

/// Deterministic per-sample random stream. Substream k derives its state by
/// mixing (seed, k), so sample k's draws never depend on worker count or on
/// how many samples were generated before it.
///
/// Draw order contract (relied on for bit-exact regeneration): a Gaussian
/// ensemble sample draws its n complex components in index order; an SDE path
/// draws the n components of xi_0 first, then n components per time step.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t stream)
      : state_(mix64(seed ^ mix64(stream * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  /// Uniform in (0, 1]: 53 random bits, never exactly zero.
  double next_unit() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  /// Standard real normal, Marsaglia polar method (second value cached).
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Circularly-symmetric standard complex normal: z = (x + iy)/sqrt(2) with
  /// x, y independent standard normals, so E|z|^2 = 1 and E[z^2] = 0.
  Complex next_complex_normal() {
    const double x = next_normal();
    const double y = next_normal();
    return Complex(x * 0.7071067811865476, y * 0.7071067811865476);
  }

  /// n iid standard complex normals, component index order.
  ComplexVector next_complex_normal_vector(Eigen::Index n) {
    ComplexVector z(n);
    for (Eigen::Index j = 0; j < n; ++j) z(j) = next_complex_normal();
    return z;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace preq
