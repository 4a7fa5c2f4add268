#pragma once

#include <cmath>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "preq/errors.hpp"
#include "preq/matrix.hpp"

namespace preq {

// Validation tolerances, all relative to (1 + max-norm): eigensolver noise in
// double precision sits well below these.
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPositiveTol = 1e-10;
inline constexpr double kUnitTraceTol = 1e-10;
inline constexpr double kTraceFloor = 1e-14;

inline double hermiticity_defect(const ComplexMatrix& m) {
  return max_norm(ComplexMatrix(m - m.adjoint()));
}

/// Smallest eigenvalue of the Hermitian part of m.
inline double min_eigenvalue(const ComplexMatrix& m) {
  ComplexMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// An n x n complex matrix within the Hermiticity tolerance. Immutable.
class HermitianOperator {
 public:
  explicit HermitianOperator(ComplexMatrix m) : m_(std::move(m)) {
    require_square_finite(m_, "HermitianOperator");
    const double defect = hermiticity_defect(m_);
    if (defect > kHermitianTol * (1.0 + max_norm(m_)))
      throw NotHermitian("HermitianOperator: |M - M^dagger| = " + std::to_string(defect));
  }

  const ComplexMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  ComplexMatrix m_;
};

/// Hermitian with smallest eigenvalue >= -kPositiveTol * (1 + max-norm).
class PositiveOperator : public HermitianOperator {
 public:
  explicit PositiveOperator(ComplexMatrix m) : HermitianOperator(std::move(m)) {
    min_eig_ = min_eigenvalue(matrix());
    if (min_eig_ < -kPositiveTol * (1.0 + max_norm(matrix())))
      throw NotPositive("PositiveOperator: min eigenvalue = " + std::to_string(min_eig_));
  }

  double smallest_eigenvalue() const { return min_eig_; }

 private:
  double min_eig_ = 0.0;
};

/// Positive with unit trace: the quantum-state carrier.
class DensityOperator : public PositiveOperator {
 public:
  explicit DensityOperator(ComplexMatrix m) : PositiveOperator(std::move(m)) {
    const double tr = matrix().trace().real();
    if (std::abs(tr - 1.0) > kUnitTraceTol)
      throw Error("DensityOperator: trace = " + std::to_string(tr) + ", expected 1");
  }
};

struct PositivityCheck {
  bool positive = false;
  double min_eigenvalue = 0.0;
};

/// True iff the smallest eigenvalue clears -tol * (1 + max-norm).
inline PositivityCheck is_positive(const HermitianOperator& m, double tol = kPositiveTol) {
  const double lo = min_eigenvalue(m.matrix());
  return {lo >= -tol * (1.0 + max_norm(m.matrix())), lo};
}

struct TraceNormalized {
  DensityOperator density;
  double trace = 0.0;
};

/// B -> B / Tr B. The returned trace is the dispersion of the associated
/// zero-mean Gaussian field.
inline TraceNormalized normalize_trace(const PositiveOperator& b) {
  const double tr = b.matrix().trace().real();
  if (tr <= kTraceFloor)
    throw DegenerateTrace("normalize_trace: trace = " + std::to_string(tr));
  return {DensityOperator(b.matrix() / tr), tr};
}

/// Hermitian PSD square root via eigendecomposition. Eigenvalues within the
/// PSD tolerance below zero are clamped to zero; covariance trajectories graze
/// the boundary.
inline ComplexMatrix sqrt_psd(const PositiveOperator& b) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (b.matrix() + b.matrix().adjoint()));
  const double floor = -kPositiveTol * (1.0 + max_norm(b.matrix()));
  Eigen::VectorXd lam = solver.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) < floor)
      throw NotPositive("sqrt_psd: eigenvalue " + std::to_string(lam(i)) + " below tolerance");
    if (lam(i) < 0.0) lam(i) = 0.0;
  }
  const ComplexMatrix& v = solver.eigenvectors();
  ComplexMatrix s = v * lam.cwiseSqrt().asDiagonal() * v.adjoint();
  return 0.5 * (s + s.adjoint());
}

}  // namespace preq
