#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "preq/errors.hpp"
#include "preq/matrix.hpp"
#include "preq/operators.hpp"
#include "preq/superop.hpp"

namespace preq {

/// Max over (i, j) of the defect in the moment evolution law
///
///   d/dt <B e_i, e_j> = sum_{k,m} <B e_k, e_m> c_{km,ij},
///
/// where c is the coefficient tensor of the generator in the given
/// orthonormal basis. The left side is evaluated directly as
/// <(L B) e_i, e_j>; for Hermitian B and a Hermiticity-preserving generator
/// the two sides agree identically, so the residual measures only rounding.
inline double moment_evolution_residual(const Superoperator& l, const HermitianOperator& b,
                                        const ComplexMatrix& basis) {
  const Eigen::Index n = l.dim().value();
  if (b.dim() != n) throw DimensionMismatch("moment_evolution_residual: B dim vs generator");
  require_orthonormal(basis);
  if (basis.rows() != n) throw DimensionMismatch("moment_evolution_residual: basis dim");

  const CoefficientTensor tensor = coefficient_tensor(l, basis);
  ComplexMatrix moments(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index m = 0; m < n; ++m)
      moments(k, m) = (basis.col(m).adjoint() * b.matrix() * basis.col(k))(0);

  const ComplexMatrix lb = l.apply(b.matrix());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex contracted(0.0, 0.0);
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index m = 0; m < n; ++m) contracted += moments(k, m) * tensor.at(k, m, i, j);
      const Complex direct = (basis.col(j).adjoint() * lb * basis.col(i))(0);
      worst = std::max(worst, std::abs(contracted - direct));
    }
  }
  return worst;
}

inline double moment_evolution_residual(const Superoperator& l, const HermitianOperator& b) {
  return moment_evolution_residual(l, b, ComplexMatrix::Identity(l.dim().value(), l.dim().value()));
}

/// Affine variant: both sides pick up the inhomogeneous term <Sigma e_i, e_j>,
/// added through different evaluation paths so agreement is still informative.
inline double moment_evolution_residual(const AffineGenerator& gen, const HermitianOperator& b,
                                        const ComplexMatrix& basis) {
  const Eigen::Index n = gen.dim().value();
  if (b.dim() != n) throw DimensionMismatch("moment_evolution_residual: B dim vs generator");
  require_orthonormal(basis);
  if (basis.rows() != n) throw DimensionMismatch("moment_evolution_residual: basis dim");

  const CoefficientTensor tensor = coefficient_tensor(gen.linear(), basis);
  ComplexMatrix moments(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index m = 0; m < n; ++m)
      moments(k, m) = (basis.col(m).adjoint() * b.matrix() * basis.col(k))(0);

  const ComplexMatrix flow = gen.evaluate(b.matrix());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex contracted(0.0, 0.0);
      for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index m = 0; m < n; ++m) contracted += moments(k, m) * tensor.at(k, m, i, j);
      contracted += (basis.col(j).adjoint() * gen.sigma() * basis.col(i))(0);
      const Complex direct = (basis.col(j).adjoint() * flow * basis.col(i))(0);
      worst = std::max(worst, std::abs(contracted - direct));
    }
  }
  return worst;
}

inline double moment_evolution_residual(const AffineGenerator& gen, const HermitianOperator& b) {
  return moment_evolution_residual(gen, b,
                                   ComplexMatrix::Identity(gen.dim().value(), gen.dim().value()));
}

/// Centered 1D Gaussian density with variance v.
inline double gaussian_pdf_1d(double x, double v) {
  if (!(v > 0.0)) throw Error("gaussian_pdf_1d: variance must be positive");
  return std::exp(-x * x / (2.0 * v)) / std::sqrt(2.0 * M_PI * v);
}

/// d/dt of the density when the variance follows v(t), expressed through the
/// logarithmic derivative.
inline double gaussian_pdf_time_derivative(double x, double v, double vdot) {
  const double p = gaussian_pdf_1d(x, v);
  return p * (-vdot / (2.0 * v) + x * x * vdot / (2.0 * v * v));
}

/// d^2/dx^2 of the density, grouped as p (x^2/v - 1) / v.
inline double gaussian_pdf_second_derivative(double x, double v) {
  const double p = gaussian_pdf_1d(x, v);
  return p * (x * x / v - 1.0) / v;
}

/// Residual of the 1D field-density equation
///
///   d p/dt = (1/2) v'(t) d^2 p/dx^2,  v(t) = b0 e^{rate t},
///
/// maximized over the sample points. Both sides are evaluated through
/// separate closed forms, so the residual reflects rounding only.
inline double density_pde_residual_1d(double rate, double b0, double t,
                                      const std::vector<double>& xs) {
  if (!(b0 > 0.0)) throw Error("density_pde_residual_1d: b0 must be positive");
  if (!std::isfinite(rate) || !std::isfinite(t)) throw Error("density_pde_residual_1d: bad inputs");
  if (xs.empty()) throw Error("density_pde_residual_1d: needs at least one point");
  const double v = b0 * std::exp(rate * t);
  const double vdot = rate * v;
  double worst = 0.0;
  for (double x : xs) {
    if (!std::isfinite(x)) throw Error("density_pde_residual_1d: non-finite point");
    const double lhs = gaussian_pdf_time_derivative(x, v, vdot);
    const double rhs = 0.5 * vdot * gaussian_pdf_second_derivative(x, v);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

}  // namespace preq
