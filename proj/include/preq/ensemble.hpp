#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "preq/errors.hpp"
#include "preq/matrix.hpp"
#include "preq/operators.hpp"
#include "preq/parallel.hpp"
#include "preq/rng.hpp"

namespace preq {

/// Monte Carlo estimate with its standard error (sample std dev / sqrt(N)).
struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
  Eigen::Index samples = 0;
};

/// Zero-mean circularly symmetric complex Gaussian sample set with its
/// generating covariance, one column per draw. Column k is regenerated from
/// substream k alone, so the set is independent of block layout and worker
/// count.
class GaussianEnsemble {
 public:
  GaussianEnsemble(PositiveOperator covariance, ComplexMatrix samples, std::uint64_t seed)
      : covariance_(std::move(covariance)), samples_(std::move(samples)), seed_(seed) {
    if (samples_.cols() < 1) throw Error("GaussianEnsemble: needs at least one sample");
    if (samples_.rows() != covariance_.dim())
      throw DimensionMismatch("GaussianEnsemble: sample dim vs covariance dim");
    if (!all_finite(samples_)) throw Error("GaussianEnsemble: non-finite sample");
  }

  const PositiveOperator& covariance() const { return covariance_; }
  Eigen::Index dim() const { return samples_.rows(); }
  Eigen::Index count() const { return samples_.cols(); }
  std::uint64_t seed() const { return seed_; }
  const ComplexMatrix& samples() const { return samples_; }
  ComplexMatrix::ConstColXpr sample(Eigen::Index k) const {
    if (k < 0 || k >= samples_.cols()) throw IndexError("GaussianEnsemble::sample: index");
    return samples_.col(k);
  }

 private:
  PositiveOperator covariance_;
  ComplexMatrix samples_;
  std::uint64_t seed_;
};

/// Draw N samples phi = sqrt(B) z, z a standard complex normal vector, so
/// that E[phi phi^dagger] = B. Sample k consumes exactly dim complex normals
/// from SubstreamRng(seed, k) in component order.
inline GaussianEnsemble sample_gaussian(const PositiveOperator& b, Eigen::Index count,
                                        std::uint64_t seed, int workers = 1) {
  if (count < 1) throw Error("sample_gaussian: count must be >= 1");
  const Eigen::Index n = b.dim();
  const ComplexMatrix root = sqrt_psd(b);
  ComplexMatrix samples(n, count);
  for_each_block(count, workers, [&](Eigen::Index, Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index k = begin; k < end; ++k) {
      SubstreamRng rng(seed, static_cast<std::uint64_t>(k));
      samples.col(k) = root * rng.next_complex_normal_vector(n);
    }
  });
  return GaussianEnsemble(b, std::move(samples), seed);
}

/// f_A(phi) = <A phi, phi> = phi^dagger A phi, real for Hermitian A.
class QuadraticObservable {
 public:
  explicit QuadraticObservable(HermitianOperator op) : op_(std::move(op)) {}

  static QuadraticObservable identity(Eigen::Index n) {
    return QuadraticObservable(HermitianOperator(ComplexMatrix::Identity(n, n)));
  }

  double evaluate(const Eigen::Ref<const ComplexVector>& phi) const {
    if (phi.size() != op_.dim()) throw DimensionMismatch("QuadraticObservable::evaluate");
    return (phi.adjoint() * op_.matrix() * phi)(0).real();
  }

  const HermitianOperator& op() const { return op_; }
  Eigen::Index dim() const { return op_.dim(); }

 private:
  HermitianOperator op_;
};

namespace detail {

struct MomentSums {
  double s1 = 0.0;
  double s2 = 0.0;
};

/// Per-sample functional averaged over the ensemble with fixed-block
/// accumulation: partial sums per block, combined in block index order, so
/// the result is bitwise stable across worker counts.
template <typename Fn>
EstimateWithError blockwise_mean(const GaussianEnsemble& ensemble, int workers, Fn&& fn) {
  const Eigen::Index count = ensemble.count();
  std::vector<MomentSums> slots(static_cast<std::size_t>(block_count(count)));
  for_each_block(count, workers, [&](Eigen::Index block, Eigen::Index begin, Eigen::Index end) {
    MomentSums acc;
    for (Eigen::Index k = begin; k < end; ++k) {
      const double f = fn(k);
      acc.s1 += f;
      acc.s2 += f * f;
    }
    slots[static_cast<std::size_t>(block)] = acc;
  });
  MomentSums total;
  for (const MomentSums& s : slots) {
    total.s1 += s.s1;
    total.s2 += s.s2;
  }
  const double nd = static_cast<double>(count);
  const double mean = total.s1 / nd;
  double variance = 0.0;
  if (count > 1) variance = std::max(0.0, (total.s2 - nd * mean * mean) / (nd - 1.0));
  return {mean, std::sqrt(variance / nd), count};
}

}  // namespace detail

/// Ensemble mean of f_A with standard error.
inline EstimateWithError classical_average(const GaussianEnsemble& ensemble,
                                           const QuadraticObservable& obs, int workers = 1) {
  if (obs.dim() != ensemble.dim()) throw DimensionMismatch("classical_average: observable dim");
  return detail::blockwise_mean(ensemble, workers,
                                [&](Eigen::Index k) { return obs.evaluate(ensemble.sample(k)); });
}

/// Ensemble mean of the squared field norm; identical code path to
/// classical_average with the identity observable.
inline EstimateWithError dispersion(const GaussianEnsemble& ensemble, int workers = 1) {
  return classical_average(ensemble, QuadraticObservable::identity(ensemble.dim()), workers);
}

/// Tr(rho A), real up to rounding for Hermitian arguments.
inline double quantum_average(const DensityOperator& rho, const HermitianOperator& obs) {
  if (rho.dim() != obs.dim()) throw DimensionMismatch("quantum_average: dims");
  return (rho.matrix() * obs.matrix()).trace().real();
}

/// The quantum expectation recovered from classical field statistics:
/// ratio = <f_A>_mu / E||phi||^2, with a delta-method standard error that
/// accounts for the correlation between numerator and denominator, paired
/// with the operator-side value Tr(rho A) at rho = B / Tr B.
struct ScalingBridge {
  EstimateWithError classical_mean;
  EstimateWithError field_dispersion;
  EstimateWithError ratio;
  double quantum_reference = 0.0;
};

inline ScalingBridge scaling_bridge(const GaussianEnsemble& ensemble,
                                    const QuadraticObservable& obs, int workers = 1) {
  if (obs.dim() != ensemble.dim()) throw DimensionMismatch("scaling_bridge: observable dim");
  const Eigen::Index count = ensemble.count();

  struct CrossSums {
    double sf = 0.0, sg = 0.0, sff = 0.0, sgg = 0.0, sfg = 0.0;
  };
  std::vector<CrossSums> slots(static_cast<std::size_t>(block_count(count)));
  for_each_block(count, workers, [&](Eigen::Index block, Eigen::Index begin, Eigen::Index end) {
    CrossSums acc;
    for (Eigen::Index k = begin; k < end; ++k) {
      const auto phi = ensemble.sample(k);
      const double f = obs.evaluate(phi);
      const double g = phi.squaredNorm();
      acc.sf += f;
      acc.sg += g;
      acc.sff += f * f;
      acc.sgg += g * g;
      acc.sfg += f * g;
    }
    slots[static_cast<std::size_t>(block)] = acc;
  });
  CrossSums total;
  for (const CrossSums& s : slots) {
    total.sf += s.sf;
    total.sg += s.sg;
    total.sff += s.sff;
    total.sgg += s.sgg;
    total.sfg += s.sfg;
  }

  const double nd = static_cast<double>(count);
  const double mf = total.sf / nd;
  const double mg = total.sg / nd;
  if (std::abs(mg) < kTraceFloor) throw DegenerateTrace("scaling_bridge: vanishing dispersion");

  double vf = 0.0, vg = 0.0, cfg = 0.0;
  if (count > 1) {
    vf = std::max(0.0, (total.sff - nd * mf * mf) / (nd - 1.0));
    vg = std::max(0.0, (total.sgg - nd * mg * mg) / (nd - 1.0));
    cfg = (total.sfg - nd * mf * mg) / (nd - 1.0);
  }
  const double r = mf / mg;
  const double var_ratio =
      std::max(0.0, (vf - 2.0 * r * cfg + r * r * vg) / (mg * mg)) / nd;

  ScalingBridge out;
  out.classical_mean = {mf, std::sqrt(vf / nd), count};
  out.field_dispersion = {mg, std::sqrt(vg / nd), count};
  out.ratio = {r, std::sqrt(var_ratio), count};
  out.quantum_reference =
      quantum_average(normalize_trace(ensemble.covariance()).density, obs.op());
  return out;
}

/// (1/N) sum phi phi^dagger, Hermitized; the mean is not subtracted because
/// the model fixes it at zero. Block-deterministic like the scalar averages.
inline HermitianOperator empirical_covariance(const GaussianEnsemble& ensemble, int workers = 1) {
  const Eigen::Index n = ensemble.dim();
  const Eigen::Index count = ensemble.count();
  std::vector<ComplexMatrix> slots(static_cast<std::size_t>(block_count(count)),
                                   ComplexMatrix::Zero(n, n));
  for_each_block(count, workers, [&](Eigen::Index block, Eigen::Index begin, Eigen::Index end) {
    ComplexMatrix acc = ComplexMatrix::Zero(n, n);
    for (Eigen::Index k = begin; k < end; ++k) {
      const auto phi = ensemble.sample(k);
      acc.noalias() += phi * phi.adjoint();
    }
    slots[static_cast<std::size_t>(block)] = std::move(acc);
  });
  ComplexMatrix total = ComplexMatrix::Zero(n, n);
  for (const ComplexMatrix& s : slots) total += s;
  total /= static_cast<double>(count);
  return HermitianOperator(0.5 * (total + total.adjoint()));
}

}  // namespace preq
