#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "preq/dynamics.hpp"
#include "preq/errors.hpp"
#include "preq/matrix.hpp"
#include "preq/operators.hpp"
#include "preq/parallel.hpp"
#include "preq/rng.hpp"
#include "preq/superop.hpp"

namespace preq {

/// Piecewise-constant drift: A(t) = a on [previous boundary, until).
struct DriftSegment {
  double until = 0.0;
  ComplexMatrix a;
};

/// Linear SDE d phi = A(t) phi dt + sqrt(Sigma) dW, phi_0 ~ Gaussian(0, B0).
/// An empty drift list means pure additive noise (Brownian covariance flow).
class SDESpec {
 public:
  SDESpec(PositiveOperator b0, PositiveOperator sigma, std::vector<DriftSegment> drift = {})
      : b0_(std::move(b0)), sigma_(std::move(sigma)), drift_(std::move(drift)) {
    if (sigma_.dim() != b0_.dim()) throw DimensionMismatch("SDESpec: Sigma dim vs B0 dim");
    double prev = -std::numeric_limits<double>::infinity();
    for (const DriftSegment& seg : drift_) {
      require_square_finite(seg.a, "SDESpec drift");
      if (seg.a.rows() != b0_.dim()) throw DimensionMismatch("SDESpec: drift dim vs B0 dim");
      if (!std::isfinite(seg.until) || !(seg.until > prev))
        throw ConfigError("SDESpec: drift boundaries must be finite and strictly increasing");
      prev = seg.until;
    }
  }

  static SDESpec brownian(PositiveOperator b0, PositiveOperator sigma) {
    return SDESpec(std::move(b0), std::move(sigma));
  }

  Eigen::Index dim() const { return b0_.dim(); }
  const PositiveOperator& initial_covariance() const { return b0_; }
  const PositiveOperator& diffusion() const { return sigma_; }
  const std::vector<DriftSegment>& drift() const { return drift_; }

  ComplexMatrix drift_at(double t) const {
    if (drift_.empty()) return ComplexMatrix::Zero(dim(), dim());
    for (const DriftSegment& seg : drift_)
      if (t < seg.until) return seg.a;
    throw ConfigError("SDESpec::drift_at: t is past the last drift boundary");
  }

 private:
  PositiveOperator b0_;
  PositiveOperator sigma_;
  std::vector<DriftSegment> drift_;
};

namespace detail {

/// Segment index per integration step. Interior drift boundaries must sit on
/// grid points, otherwise a step would straddle a drift change.
inline std::vector<std::uint32_t> segment_schedule(const SDESpec& spec, const TimeGrid& grid) {
  if (spec.drift().empty()) return {};
  const double atol = 1e-9 * std::max({1.0, std::abs(grid.t0), std::abs(grid.t1)});
  for (const DriftSegment& seg : spec.drift()) {
    if (seg.until >= grid.t1 - atol) continue;
    if (seg.until <= grid.t0 + atol) continue;
    const auto j = static_cast<Eigen::Index>(std::llround((seg.until - grid.t0) / grid.dt()));
    if (j < 0 || j > static_cast<Eigen::Index>(grid.steps) ||
        std::abs(seg.until - grid.time(j)) > atol)
      throw ConfigError("drift boundary " + std::to_string(seg.until) +
                        " does not sit on a grid point");
  }
  std::vector<std::uint32_t> schedule(static_cast<std::size_t>(grid.steps));
  std::size_t seg = 0;
  for (int k = 0; k < grid.steps; ++k) {
    const double tk = grid.time(k);
    while (seg < spec.drift().size() && spec.drift()[seg].until <= tk + atol) ++seg;
    if (seg == spec.drift().size())
      throw ConfigError("drift segments end before the grid does");
    schedule[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(seg);
  }
  return schedule;
}

/// Euler-Maruyama walk of one path. Draw order per path: dim complex normals
/// for the initial value, then dim per step, matching the substream contract.
/// Visit fires at every grid index with the current field value.
template <int N, typename Visit>
void walk_one_path(const Eigen::Matrix<Complex, N, N>& root_b0,
                   const Eigen::Matrix<Complex, N, N>& root_sigma,
                   const std::vector<Eigen::Matrix<Complex, N, N>>& drift,
                   const std::vector<std::uint32_t>& schedule, const TimeGrid& grid,
                   std::uint64_t seed, std::uint64_t path, Visit&& visit) {
  using Vec = Eigen::Matrix<Complex, N, 1>;
  const Eigen::Index n = root_sigma.rows();
  SubstreamRng rng(seed, path);
  Vec z(n), phi(n), incr(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.next_complex_normal();
  phi.noalias() = root_b0 * z;
  visit(Eigen::Index{0}, phi);
  const double dt = grid.dt();
  const double sqdt = std::sqrt(dt);
  for (int k = 0; k < grid.steps; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.next_complex_normal();
    incr.noalias() = root_sigma * z;
    incr *= sqdt;
    if (!schedule.empty()) incr.noalias() += dt * (drift[schedule[static_cast<std::size_t>(k)]] * phi);
    phi += incr;
    visit(static_cast<Eigen::Index>(k) + 1, phi);
  }
}

/// Small dimensions get fixed-size kernels; the path loop is the hot spot.
template <typename Fn>
void dispatch_dim(Eigen::Index n, Fn&& fn) {
  switch (n) {
    case 1: fn(std::integral_constant<int, 1>{}); return;
    case 2: fn(std::integral_constant<int, 2>{}); return;
    case 3: fn(std::integral_constant<int, 3>{}); return;
    default: fn(std::integral_constant<int, Eigen::Dynamic>{}); return;
  }
}

/// Runs `visit_path(path_index, visit)` over all paths through the shared
/// walker, so every consumer sees bitwise-identical field values.
template <typename PerPath>
void walk_all_paths(const SDESpec& spec, const TimeGrid& grid, Eigen::Index count,
                    std::uint64_t seed, int workers, PerPath&& per_path) {
  const Eigen::Index n = spec.dim();
  const ComplexMatrix root_b0_dyn = sqrt_psd(spec.initial_covariance());
  const ComplexMatrix root_sigma_dyn = sqrt_psd(spec.diffusion());
  const std::vector<std::uint32_t> schedule = segment_schedule(spec, grid);
  dispatch_dim(n, [&](auto tag) {
    constexpr int N = decltype(tag)::value;
    using Mat = Eigen::Matrix<Complex, N, N>;
    Mat root_b0 = root_b0_dyn;
    Mat root_sigma = root_sigma_dyn;
    std::vector<Mat> drift;
    drift.reserve(spec.drift().size());
    for (const DriftSegment& seg : spec.drift()) drift.push_back(Mat(seg.a));
    for_each_block(count, workers, [&](Eigen::Index block, Eigen::Index begin, Eigen::Index end) {
      for (Eigen::Index p = begin; p < end; ++p) {
        per_path(block, p, [&](auto&& visit) {
          walk_one_path<N>(root_b0, root_sigma, drift, schedule, grid, seed,
                           static_cast<std::uint64_t>(p), visit);
        });
      }
    });
  });
}

}  // namespace detail

/// Full path storage: one n x N frame per grid point. Regenerable from
/// (spec, grid, seed, N). Only for modest ensembles; the streaming summary
/// covers acceptance-scale runs.
class PathEnsemble {
 public:
  PathEnsemble(SDESpec spec, TimeGrid grid, std::uint64_t seed, std::vector<ComplexMatrix> frames)
      : spec_(std::move(spec)), grid_(grid), seed_(seed), frames_(std::move(frames)) {
    if (static_cast<Eigen::Index>(frames_.size()) != grid_.points())
      throw Error("PathEnsemble: frame count vs grid points");
    if (frames_.empty() || frames_.front().cols() < 1) throw Error("PathEnsemble: empty");
  }

  const SDESpec& spec() const { return spec_; }
  const TimeGrid& grid() const { return grid_; }
  std::uint64_t seed() const { return seed_; }
  Eigen::Index dim() const { return spec_.dim(); }
  Eigen::Index count() const { return frames_.front().cols(); }

  const ComplexMatrix& frame(Eigen::Index k) const {
    if (k < 0 || k >= static_cast<Eigen::Index>(frames_.size()))
      throw IndexError("PathEnsemble::frame: index");
    return frames_[static_cast<std::size_t>(k)];
  }

  ComplexVector value(Eigen::Index k, Eigen::Index path) const {
    const ComplexMatrix& f = frame(k);
    if (path < 0 || path >= f.cols()) throw IndexError("PathEnsemble::value: path index");
    return f.col(path);
  }

 private:
  SDESpec spec_;
  TimeGrid grid_;
  std::uint64_t seed_;
  std::vector<ComplexMatrix> frames_;
};

inline PathEnsemble simulate_linear_sde(const SDESpec& spec, const TimeGrid& grid,
                                        Eigen::Index count, std::uint64_t seed, int workers = 1) {
  if (count < 1) throw Error("simulate_linear_sde: count must be >= 1");
  const Eigen::Index n = spec.dim();
  const double bytes = 16.0 * static_cast<double>(n) * static_cast<double>(count) *
                       static_cast<double>(grid.points());
  if (bytes > 2e9)
    throw Error("simulate_linear_sde: ensemble would need > 2 GB; use sde_covariance_summary");
  std::vector<ComplexMatrix> frames(static_cast<std::size_t>(grid.points()),
                                    ComplexMatrix(n, count));
  detail::walk_all_paths(spec, grid, count, seed, workers,
                         [&](Eigen::Index, Eigen::Index p, auto&& run) {
                           run([&](Eigen::Index k, const auto& phi) {
                             frames[static_cast<std::size_t>(k)].col(p) = phi;
                           });
                         });
  return PathEnsemble(spec, grid, seed, std::move(frames));
}

inline PathEnsemble simulate_brownian(const PositiveOperator& sigma, const PositiveOperator& b0,
                                      const TimeGrid& grid, Eigen::Index count, std::uint64_t seed,
                                      int workers = 1) {
  return simulate_linear_sde(SDESpec::brownian(b0, sigma), grid, count, seed, workers);
}

/// Hermitized (1/N) sum phi phi^dagger over the ensemble at grid index k.
inline ComplexMatrix empirical_covariance_at(const PathEnsemble& paths, Eigen::Index k,
                                             int workers = 1) {
  const ComplexMatrix& f = paths.frame(k);
  const Eigen::Index n = f.rows();
  const Eigen::Index count = f.cols();
  std::vector<ComplexMatrix> slots(static_cast<std::size_t>(block_count(count)),
                                   ComplexMatrix::Zero(n, n));
  for_each_block(count, workers, [&](Eigen::Index block, Eigen::Index begin, Eigen::Index end) {
    ComplexMatrix acc = ComplexMatrix::Zero(n, n);
    for (Eigen::Index p = begin; p < end; ++p) acc.noalias() += f.col(p) * f.col(p).adjoint();
    slots[static_cast<std::size_t>(block)] = std::move(acc);
  });
  ComplexMatrix total = ComplexMatrix::Zero(n, n);
  for (const ComplexMatrix& s : slots) total += s;
  total /= static_cast<double>(count);
  return 0.5 * (total + total.adjoint());
}

/// Empirical covariances at selected grid indices, computed without storing
/// paths. Matches empirical_covariance_at on a stored ensemble bit for bit:
/// same walker, same block layout, same reduction order.
struct CovarianceSummary {
  TimeGrid grid;
  std::vector<Eigen::Index> indices;
  std::vector<ComplexMatrix> covariances;
  Eigen::Index count = 0;
};

inline CovarianceSummary sde_covariance_summary(const SDESpec& spec, const TimeGrid& grid,
                                                Eigen::Index count, std::uint64_t seed,
                                                const std::vector<Eigen::Index>& indices,
                                                int workers = 1) {
  if (count < 1) throw Error("sde_covariance_summary: count must be >= 1");
  if (indices.empty()) throw Error("sde_covariance_summary: needs at least one index");
  Eigen::Index prev = -1;
  for (Eigen::Index k : indices) {
    if (k <= prev) throw Error("sde_covariance_summary: indices must be strictly increasing");
    if (k < 0 || k >= grid.points()) throw IndexError("sde_covariance_summary: index off grid");
    prev = k;
  }
  const Eigen::Index n = spec.dim();
  std::vector<Eigen::Index> slot_of(static_cast<std::size_t>(grid.points()), -1);
  for (std::size_t s = 0; s < indices.size(); ++s)
    slot_of[static_cast<std::size_t>(indices[s])] = static_cast<Eigen::Index>(s);

  const Eigen::Index blocks = block_count(count);
  std::vector<ComplexMatrix> acc(static_cast<std::size_t>(blocks) * indices.size(),
                                 ComplexMatrix::Zero(n, n));
  detail::walk_all_paths(
      spec, grid, count, seed, workers, [&](Eigen::Index block, Eigen::Index, auto&& run) {
        ComplexMatrix* base = acc.data() + static_cast<std::size_t>(block) * indices.size();
        run([&](Eigen::Index k, const auto& phi) {
          const Eigen::Index slot = slot_of[static_cast<std::size_t>(k)];
          if (slot >= 0) base[slot].noalias() += phi * phi.adjoint();
        });
      });

  CovarianceSummary out{grid, indices, {}, count};
  out.covariances.reserve(indices.size());
  for (std::size_t s = 0; s < indices.size(); ++s) {
    ComplexMatrix total = ComplexMatrix::Zero(n, n);
    for (Eigen::Index b = 0; b < blocks; ++b)
      total += acc[static_cast<std::size_t>(b) * indices.size() + s];
    total /= static_cast<double>(count);
    out.covariances.push_back(0.5 * (total + total.adjoint()));
  }
  return out;
}

/// Covariance ODE dB/dt = A(t) B + B A(t)^dagger + Sigma matched to the SDE.
/// Exact stepping re-exponentiates once per drift segment.
inline OperatorTrajectory ou_covariance_ode(const SDESpec& spec, const TimeGrid& grid,
                                            PropagationMethod method = PropagationMethod::exact) {
  const Eigen::Index n = spec.dim();
  const std::vector<std::uint32_t> schedule = detail::segment_schedule(spec, grid);

  std::vector<AffineGenerator> generators;
  if (schedule.empty()) {
    generators.push_back(build_affine(build_similarity(ComplexMatrix::Zero(n, n)),
                                      HermitianOperator(spec.diffusion().matrix())));
  } else {
    generators.reserve(spec.drift().size());
    for (const DriftSegment& seg : spec.drift())
      generators.push_back(build_affine(build_similarity(seg.a),
                                        HermitianOperator(spec.diffusion().matrix())));
  }

  const Eigen::Index nn = n * n;
  const double dt = grid.dt();
  std::vector<ComplexMatrix> steppers(generators.size());
  std::vector<ComplexVector> inhoms(generators.size());
  std::vector<bool> ready(generators.size(), false);
  auto stepper_for = [&](std::size_t g) {
    if (!ready[g]) {
      ComplexMatrix embedded = ComplexMatrix::Zero(nn + 1, nn + 1);
      embedded.topLeftCorner(nn, nn) = generators[g].linear().matrix();
      embedded.block(0, nn, nn, 1) = vec(generators[g].sigma());
      const ComplexMatrix e = ComplexMatrix(dt * embedded).exp();
      steppers[g] = e.topLeftCorner(nn, nn);
      inhoms[g] = e.block(0, nn, nn, 1);
      ready[g] = true;
    }
  };

  std::vector<ComplexMatrix> values;
  values.reserve(static_cast<std::size_t>(grid.points()));
  std::vector<PositivityWarning> warnings;
  ComplexMatrix b = spec.initial_covariance().matrix();
  values.push_back(b);
  detail::record_positivity(warnings, b, grid.t0);
  for (int k = 0; k < grid.steps; ++k) {
    const std::size_t g = schedule.empty() ? 0 : schedule[static_cast<std::size_t>(k)];
    if (method == PropagationMethod::exact) {
      stepper_for(g);
      b = unvec(ComplexVector(steppers[g] * vec(b) + inhoms[g]), n);
    } else {
      auto field = [&](const ComplexMatrix& m) { return generators[g].evaluate(m); };
      b = rk4_step(field, b, dt);
    }
    values.push_back(b);
    detail::record_positivity(warnings, b, grid.time(k + 1));
  }
  return OperatorTrajectory(grid, TrajectoryKind::covariance, std::move(values),
                            std::move(warnings));
}

}  // namespace preq
