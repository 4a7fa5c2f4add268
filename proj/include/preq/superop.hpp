#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "preq/errors.hpp"
#include "preq/matrix.hpp"
#include "preq/operators.hpp"

namespace preq {

inline constexpr double kOrthonormalTol = 1e-10;

/// Column-stacking vectorization. Under it the map X -> A X B is represented
/// by the matrix (B^T kron A); asserted by construction tests.
inline ComplexVector vec(const ComplexMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

inline ComplexMatrix unvec(const ComplexVector& v, Eigen::Index n) {
  if (v.size() != n * n) throw DimensionMismatch("unvec: size " + std::to_string(v.size()));
  return Eigen::Map<const ComplexMatrix>(v.data(), n, n);
}

/// A linear map on n x n matrices, stored as its n^2 x n^2 matrix in the
/// fixed vectorization. Immutable after construction.
class Superoperator {
 public:
  Superoperator(HilbertDim dim, ComplexMatrix m, std::string label)
      : dim_(dim), m_(std::move(m)), label_(std::move(label)) {
    const Eigen::Index nn = dim_.value() * dim_.value();
    if (m_.rows() != nn || m_.cols() != nn)
      throw DimensionMismatch("Superoperator '" + label_ + "': matrix must be " +
                              std::to_string(nn) + "x" + std::to_string(nn));
    if (!all_finite(m_)) throw Error("Superoperator '" + label_ + "': non-finite entries");
  }

  static Superoperator Zero(HilbertDim dim) {
    const Eigen::Index nn = dim.value() * dim.value();
    return Superoperator(dim, ComplexMatrix::Zero(nn, nn), "zero");
  }

  static Superoperator Identity(HilbertDim dim) {
    const Eigen::Index nn = dim.value() * dim.value();
    return Superoperator(dim, ComplexMatrix::Identity(nn, nn), "identity");
  }

  /// Vectorize, multiply, un-vectorize.
  ComplexMatrix apply(const ComplexMatrix& m) const {
    if (m.rows() != dim_.value() || m.cols() != dim_.value())
      throw DimensionMismatch("Superoperator::apply: operand is " + std::to_string(m.rows()) +
                              "x" + std::to_string(m.cols()) + ", generator dim " +
                              std::to_string(dim_.value()));
    return unvec(m_ * vec(m), dim_.value());
  }

  HilbertDim dim() const { return dim_; }
  const ComplexMatrix& matrix() const { return m_; }
  const std::string& label() const { return label_; }

 private:
  HilbertDim dim_;
  ComplexMatrix m_;
  std::string label_;
};

/// B -> -i[H, B]: the von Neumann generator.
inline Superoperator build_commutator(const HermitianOperator& h) {
  const Eigen::Index n = h.dim();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const Complex mi(0.0, -1.0);
  ComplexMatrix m = mi * (kron(id, h.matrix()) - kron(h.matrix().transpose(), id));
  return Superoperator(HilbertDim(n), std::move(m), "commutator");
}

/// B -> A B + B A^dagger for general (usually non-Hermitian) A.
inline Superoperator build_similarity(const ComplexMatrix& a) {
  require_square_finite(a, "build_similarity");
  const Eigen::Index n = a.rows();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  ComplexMatrix m = kron(id, a) + kron(a.conjugate(), id);
  return Superoperator(HilbertDim(n), std::move(m), "similarity");
}

struct GKSLJump {
  ComplexMatrix op;
  double rate = 0.0;
};

/// Hamiltonian plus jump operators with nonnegative rates (hbar = 1).
struct GKSLSpec {
  GKSLSpec(HermitianOperator hamiltonian_, std::vector<GKSLJump> jumps_)
      : hamiltonian(std::move(hamiltonian_)), jumps(std::move(jumps_)) {
    for (const auto& j : jumps) {
      require_square_finite(j.op, "GKSLSpec jump");
      if (j.op.rows() != hamiltonian.dim())
        throw DimensionMismatch("GKSLSpec: jump dim " + std::to_string(j.op.rows()) +
                                " vs Hamiltonian dim " + std::to_string(hamiltonian.dim()));
      if (!(j.rate >= 0.0))
        throw Error("GKSLSpec: jump rate must be nonnegative, got " + std::to_string(j.rate));
    }
  }

  HermitianOperator hamiltonian;
  std::vector<GKSLJump> jumps;
};

/// Lindblad form with explicit rates:
///   L B = -i[H,B] + sum_k rate_k (L_k B L_k^dagger - 1/2 {L_k^dagger L_k, B}).
/// Trace-preserving and completely positive by construction.
inline Superoperator build_gksl(const GKSLSpec& spec) {
  const Eigen::Index n = spec.hamiltonian.dim();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const Complex mi(0.0, -1.0);
  ComplexMatrix m =
      mi * (kron(id, spec.hamiltonian.matrix()) - kron(spec.hamiltonian.matrix().transpose(), id));
  for (const auto& j : spec.jumps) {
    const ComplexMatrix ll = j.op.adjoint() * j.op;
    m += j.rate * (kron(j.op.conjugate(), j.op) -
                   0.5 * (kron(id, ll) + kron(ll.transpose(), id)));
  }
  return Superoperator(HilbertDim(n), std::move(m), "gksl");
}

/// dB/dt = linear(B) + sigma: the covariance flow of a linear SDE.
class AffineGenerator {
 public:
  AffineGenerator(Superoperator linear, HermitianOperator sigma)
      : linear_(std::move(linear)), sigma_(std::move(sigma)) {
    if (sigma_.dim() != linear_.dim().value())
      throw DimensionMismatch("AffineGenerator: sigma dim " + std::to_string(sigma_.dim()) +
                              " vs linear dim " + std::to_string(linear_.dim().value()));
  }

  ComplexMatrix evaluate(const ComplexMatrix& b) const { return linear_.apply(b) + sigma_.matrix(); }

  HilbertDim dim() const { return linear_.dim(); }
  const Superoperator& linear() const { return linear_; }
  const ComplexMatrix& sigma() const { return sigma_.matrix(); }

 private:
  Superoperator linear_;
  HermitianOperator sigma_;
};

inline AffineGenerator build_affine(Superoperator linear, HermitianOperator sigma) {
  return AffineGenerator(std::move(linear), std::move(sigma));
}

/// True iff Tr(L E_ab) vanishes over the whole matrix-unit basis. Exactly the
/// case where the nonlinear density flow collapses to the linear one.
inline bool check_trace_preserving(const Superoperator& l, double tol) {
  const Eigen::Index n = l.dim().value();
  double worst = 0.0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      worst = std::max(worst, std::abs(l.apply(matrix_unit(n, a, b)).trace()));
  return worst <= tol;
}

/// Orthonormal basis as matrix columns; identity = standard basis.
inline void require_orthonormal(const ComplexMatrix& basis) {
  require_square_finite(basis, "basis");
  const double defect =
      max_norm(ComplexMatrix(basis.adjoint() * basis -
                             ComplexMatrix::Identity(basis.rows(), basis.cols())));
  if (defect > kOrthonormalTol)
    throw NotOrthonormal("basis Gram deviation " + std::to_string(defect));
}

/// Hilbert-Schmidt matrix elements of L over basis matrix units
/// u_km = e_k e_m^dagger:  values(k,m,i,j) = <L u_km, u_ij>_HS = Tr((L u_km)^dagger u_ij).
/// These are the coefficients of the Gaussian-measure evolution equation; the
/// contraction identity in moments.hpp is their defining test.
class CoefficientTensor {
 public:
  CoefficientTensor(HilbertDim dim, std::vector<Complex> values)
      : dim_(dim), values_(std::move(values)) {
    const auto n = static_cast<std::size_t>(dim_.value());
    if (values_.size() != n * n * n * n)
      throw DimensionMismatch("CoefficientTensor: wrong value count");
  }

  Complex at(Eigen::Index k, Eigen::Index m, Eigen::Index i, Eigen::Index j) const {
    const Eigen::Index n = dim_.value();
    return values_[static_cast<std::size_t>(((k * n + m) * n + i) * n + j)];
  }

  HilbertDim dim() const { return dim_; }
  const std::vector<Complex>& values() const { return values_; }

 private:
  HilbertDim dim_;
  std::vector<Complex> values_;
};

inline CoefficientTensor coefficient_tensor(const Superoperator& l, const ComplexMatrix& basis) {
  if (basis.rows() != l.dim().value())
    throw DimensionMismatch("coefficient_tensor: basis dim vs generator dim");
  require_orthonormal(basis);
  const Eigen::Index n = l.dim().value();
  std::vector<Complex> values;
  values.reserve(static_cast<std::size_t>(n * n * n * n));
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index m = 0; m < n; ++m) {
      const ComplexMatrix lu = l.apply(basis.col(k) * basis.col(m).adjoint());
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          values.push_back(hs_inner(lu, basis.col(i) * basis.col(j).adjoint()));
    }
  }
  return CoefficientTensor(l.dim(), std::move(values));
}

inline CoefficientTensor coefficient_tensor(const Superoperator& l) {
  return coefficient_tensor(l, ComplexMatrix::Identity(l.dim().value(), l.dim().value()));
}

/// Choi matrix of a map Phi given as a Superoperator: J = sum_ab E_ab kron Phi(E_ab).
/// Phi is completely positive iff J is PSD.
inline ComplexMatrix choi_matrix(const Superoperator& phi) {
  const Eigen::Index n = phi.dim().value();
  ComplexMatrix j = ComplexMatrix::Zero(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      j += kron(matrix_unit(n, a, b), phi.apply(matrix_unit(n, a, b)));
  return j;
}

}  // namespace preq
