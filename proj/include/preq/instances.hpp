#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "preq/matrix.hpp"
#include "preq/operators.hpp"
#include "preq/rng.hpp"
#include "preq/superop.hpp"

namespace preq {

/// Seeded test-instance factories. Each kind draws from its own substream so
/// instances of different kinds built from one seed stay decorrelated.
namespace instance_stream {
inline constexpr std::uint64_t kMatrix = 0x6d61747269780000ull;
inline constexpr std::uint64_t kHermitian = 0x6865726d00000000ull;
inline constexpr std::uint64_t kPsd = 0x7073640000000000ull;
inline constexpr std::uint64_t kDensity = 0x64656e7300000000ull;
inline constexpr std::uint64_t kGksl = 0x676b736c00000000ull;
inline constexpr std::uint64_t kBasis = 0x6261736973000000ull;
}  // namespace instance_stream

namespace detail {

inline ComplexMatrix fill_gaussian(Eigen::Index n, SubstreamRng& rng, double scale) {
  ComplexMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      g(i, j) = Complex(scale * rng.next_normal(), scale * rng.next_normal());
  return g;
}

}  // namespace detail

/// Dense complex matrix with independent N(0, scale^2) real and imaginary
/// parts. The default scale keeps e^{At} desk-scale over unit horizons.
inline ComplexMatrix random_matrix(Eigen::Index n, std::uint64_t seed, double scale = 0.5) {
  HilbertDim dim(n);
  SubstreamRng rng(seed, instance_stream::kMatrix);
  return detail::fill_gaussian(dim.value(), rng, scale);
}

inline HermitianOperator random_hermitian(Eigen::Index n, std::uint64_t seed, double scale = 0.5) {
  HilbertDim dim(n);
  SubstreamRng rng(seed, instance_stream::kHermitian);
  const ComplexMatrix g = detail::fill_gaussian(dim.value(), rng, scale);
  return HermitianOperator(0.5 * (g + g.adjoint()));
}

/// Gram matrix G G^dagger / n: PSD with O(1) eigenvalues.
inline PositiveOperator random_psd(Eigen::Index n, std::uint64_t seed) {
  HilbertDim dim(n);
  SubstreamRng rng(seed, instance_stream::kPsd);
  const ComplexMatrix g = detail::fill_gaussian(dim.value(), rng, 1.0);
  ComplexMatrix b = (g * g.adjoint()) / static_cast<double>(dim.value());
  return PositiveOperator(0.5 * (b + b.adjoint()));
}

inline DensityOperator random_density(Eigen::Index n, std::uint64_t seed) {
  HilbertDim dim(n);
  SubstreamRng rng(seed, instance_stream::kDensity);
  const ComplexMatrix g = detail::fill_gaussian(dim.value(), rng, 1.0);
  ComplexMatrix b = g * g.adjoint();
  b = 0.5 * (b + b.adjoint());
  return normalize_trace(PositiveOperator(b)).density;
}

/// Random GKSL data: one Hamiltonian, `jumps` jump operators with rates in
/// [0.2, 1.2).
inline GKSLSpec random_gksl(Eigen::Index n, int jumps, std::uint64_t seed) {
  HilbertDim dim(n);
  if (jumps < 1) throw Error("random_gksl: needs at least one jump operator");
  SubstreamRng herm_rng(seed, instance_stream::kHermitian);
  const ComplexMatrix g = detail::fill_gaussian(dim.value(), herm_rng, 0.5);
  HermitianOperator h(0.5 * (g + g.adjoint()));
  std::vector<GKSLJump> ops;
  ops.reserve(static_cast<std::size_t>(jumps));
  SubstreamRng rng(seed, instance_stream::kGksl);
  for (int j = 0; j < jumps; ++j) {
    GKSLJump jump;
    jump.op = detail::fill_gaussian(dim.value(), rng, 0.5);
    jump.rate = 0.2 + rng.next_unit();
    ops.push_back(std::move(jump));
  }
  return GKSLSpec(std::move(h), std::move(ops));
}

/// Unitary from the QR factorization of a Gaussian matrix; columns form an
/// orthonormal basis.
inline ComplexMatrix random_orthonormal_basis(Eigen::Index n, std::uint64_t seed) {
  HilbertDim dim(n);
  SubstreamRng rng(seed, instance_stream::kBasis);
  const ComplexMatrix g = detail::fill_gaussian(dim.value(), rng, 1.0);
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  return q;
}

}  // namespace preq
