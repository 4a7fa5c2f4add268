#pragma once

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "preq/errors.hpp"

namespace preq {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Dimension of the state space. All operators in one computation share it.
class HilbertDim {
 public:
  explicit HilbertDim(Eigen::Index n) : n_(n) {
    if (n < 1) throw Error("HilbertDim must be >= 1, got " + std::to_string(n));
  }
  Eigen::Index value() const { return n_; }
  friend bool operator==(HilbertDim a, HilbertDim b) { return a.n_ == b.n_; }
  friend bool operator!=(HilbertDim a, HilbertDim b) { return a.n_ != b.n_; }

 private:
  Eigen::Index n_;
};

inline double max_norm(const ComplexMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

inline void require_square_finite(const ComplexMatrix& m, const std::string& what) {
  if (m.rows() != m.cols())
    throw Error(what + ": expected a square matrix, got " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()));
  if (m.rows() < 1) throw Error(what + ": matrix is empty");
  if (!all_finite(m)) throw Error(what + ": matrix has non-finite entries");
}

inline void require_same_dim(const ComplexMatrix& x, const ComplexMatrix& y, const std::string& what) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw DimensionMismatch(what + ": dimensions " + std::to_string(x.rows()) + "x" +
                            std::to_string(x.cols()) + " vs " + std::to_string(y.rows()) + "x" +
                            std::to_string(y.cols()));
}

/// Hilbert-Schmidt inner product Tr(X^dagger Y): conjugate-linear in the first
/// slot, linear in the second. The one convention used everywhere, including
/// the coefficient tensor.
inline Complex hs_inner(const ComplexMatrix& x, const ComplexMatrix& y) {
  require_same_dim(x, y, "hs_inner");
  return (x.adjoint() * y).trace();
}

/// Matrix unit |e_a><e_b| in the standard basis.
inline ComplexMatrix matrix_unit(Eigen::Index n, Eigen::Index a, Eigen::Index b) {
  ComplexMatrix m = ComplexMatrix::Zero(n, n);
  m(a, b) = Complex(1.0, 0.0);
  return m;
}

/// Kronecker product, dense. Dimensions here are tiny (n^2 <= 256).
inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace preq
