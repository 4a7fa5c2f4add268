#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>

#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace preq;
using testsupport::diag2;
using testsupport::entry_diff;
using testsupport::pauli_z;

namespace {

PositiveOperator psd_id(Eigen::Index n) { return PositiveOperator(ComplexMatrix::Identity(n, n)); }
PositiveOperator psd_zero(Eigen::Index n) { return PositiveOperator(ComplexMatrix::Zero(n, n)); }

}  // namespace

TEST_CASE("sde spec validation") {
  REQUIRE_THROWS_AS(SDESpec(psd_id(2), psd_id(3)), DimensionMismatch);
  REQUIRE_THROWS_AS(SDESpec(psd_id(2), psd_id(2), {{0.5, diag2(1, 1)}, {0.5, diag2(1, 1)}}),
                    ConfigError);
  REQUIRE_THROWS_AS(SDESpec(psd_id(2), psd_id(2), {{0.5, ComplexMatrix::Zero(3, 3)}}),
                    DimensionMismatch);

  const SDESpec spec(psd_id(2), psd_id(2), {{0.5, diag2(1, 0)}, {2.0, diag2(0, 1)}});
  REQUIRE(entry_diff(spec.drift_at(0.1), diag2(1, 0)) == 0.0);
  REQUIRE(entry_diff(spec.drift_at(0.5), diag2(0, 1)) == 0.0);
  REQUIRE(entry_diff(spec.drift_at(1.9), diag2(0, 1)) == 0.0);
  REQUIRE_THROWS_AS(spec.drift_at(2.5), ConfigError);

  const SDESpec pure = SDESpec::brownian(psd_id(2), psd_id(2));
  REQUIRE(max_norm(pure.drift_at(3.0)) == 0.0);
}

TEST_CASE("drift boundaries must sit on grid points") {
  const SDESpec misaligned(psd_id(2), psd_id(2), {{0.35, diag2(1, 0)}, {10.0, diag2(0, 1)}});
  REQUIRE_THROWS_AS(sde_covariance_summary(misaligned, TimeGrid(0.0, 1.0, 10), 8, 1, {0}),
                    ConfigError);

  const SDESpec short_drift(psd_id(2), psd_id(2), {{0.5, diag2(1, 0)}});
  REQUIRE_THROWS_AS(sde_covariance_summary(short_drift, TimeGrid(0.0, 1.0, 10), 8, 1, {0}),
                    ConfigError);

  const SDESpec aligned(psd_id(2), psd_id(2), {{0.3, diag2(1, 0)}, {10.0, diag2(0, 1)}});
  REQUIRE_NOTHROW(sde_covariance_summary(aligned, TimeGrid(0.0, 1.0, 10), 8, 1, {0}));
}

TEST_CASE("paths regenerate bit for bit") {
  const SDESpec spec(random_psd(2, 150), random_psd(2, 151), {{10.0, random_matrix(2, 152)}});
  const TimeGrid grid(0.0, 1.0, 20);
  const PathEnsemble a = simulate_linear_sde(spec, grid, 256, 31);
  const PathEnsemble b = simulate_linear_sde(spec, grid, 256, 31);
  for (Eigen::Index k = 0; k < grid.points(); ++k)
    REQUIRE(entry_diff(a.frame(k), b.frame(k)) == 0.0);

  const PathEnsemble par = simulate_linear_sde(spec, grid, 256, 31, 4);
  for (Eigen::Index k = 0; k < grid.points(); ++k)
    REQUIRE(entry_diff(a.frame(k), par.frame(k)) == 0.0);

  const PathEnsemble shifted = simulate_linear_sde(spec, grid, 256, 32);
  REQUIRE(entry_diff(a.frame(0), shifted.frame(0)) > 0.0);
}

TEST_CASE("without noise and drift every path is frozen") {
  const PathEnsemble paths =
      simulate_linear_sde(SDESpec::brownian(random_psd(2, 153), psd_zero(2)),
                          TimeGrid(0.0, 1.0, 10), 64, 33);
  for (Eigen::Index k = 1; k <= 10; ++k)
    REQUIRE(entry_diff(paths.frame(k), paths.frame(0)) == 0.0);
}

TEST_CASE("brownian covariance grows linearly") {
  const TimeGrid grid(0.0, 2.0, 100);
  const Eigen::Index count = 20000;
  const PathEnsemble paths =
      simulate_brownian(PositiveOperator(diag2(1, 0)), psd_id(2), grid, count, 35);
  const ComplexMatrix expect = diag2(3, 1);
  const double bound = 5.0 * max_norm(expect) / std::sqrt(static_cast<double>(count));
  REQUIRE(entry_diff(empirical_covariance_at(paths, grid.points() - 1), expect) <= bound);

  const ComplexMatrix mid = empirical_covariance_at(paths, 50);
  REQUIRE(entry_diff(mid, diag2(2, 1)) <= bound);
}

TEST_CASE("a zero initial covariance starts every path at the origin") {
  const TimeGrid grid(0.0, 1.0, 50);
  const Eigen::Index count = 20000;
  const PathEnsemble paths = simulate_brownian(psd_id(2), psd_zero(2), grid, count, 37);
  REQUIRE(max_norm(paths.frame(0)) == 0.0);
  const double bound = 5.0 / std::sqrt(static_cast<double>(count));
  REQUIRE(entry_diff(empirical_covariance_at(paths, grid.points() - 1),
                     ComplexMatrix::Identity(2, 2)) <= bound);
}

TEST_CASE("initial value and first increment are uncorrelated") {
  const TimeGrid grid(0.0, 1.0, 4);
  const Eigen::Index count = 20000;
  const PathEnsemble paths = simulate_brownian(psd_id(2), psd_id(2), grid, count, 39);
  ComplexMatrix cross = ComplexMatrix::Zero(2, 2);
  for (Eigen::Index p = 0; p < count; ++p) {
    const ComplexVector incr = paths.value(1, p) - paths.value(0, p);
    cross += paths.value(0, p) * incr.adjoint();
  }
  cross /= static_cast<double>(count);
  REQUIRE(max_norm(cross) <= 5.0 / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("noiseless drift follows the matrix exponential") {
  const ComplexMatrix a = random_matrix(2, 154, 0.5);
  const TimeGrid grid(0.0, 1.0, 1000);
  const SDESpec spec(random_psd(2, 155), psd_zero(2), {{10.0, a}});
  const PathEnsemble paths = simulate_linear_sde(spec, grid, 8, 41);
  const ComplexMatrix flow = ComplexMatrix(1.0 * a).exp();
  for (Eigen::Index p = 0; p < paths.count(); ++p) {
    const ComplexVector expect = flow * paths.value(0, p);
    const double err = (paths.value(grid.points() - 1, p) - expect).cwiseAbs().maxCoeff();
    REQUIRE(err <= 20.0 * grid.dt() * (1.0 + expect.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("unitary drift conserves the field norm to first order") {
  const ComplexMatrix a = Complex(0, -1) * pauli_z();
  const TimeGrid grid(0.0, 1.0, 1000);
  const SDESpec spec(random_psd(2, 156), psd_zero(2), {{10.0, a}});
  const PathEnsemble paths = simulate_linear_sde(spec, grid, 8, 43);
  for (Eigen::Index p = 0; p < paths.count(); ++p) {
    const double before = paths.value(0, p).squaredNorm();
    const double after = paths.value(grid.points() - 1, p).squaredNorm();
    REQUIRE(std::abs(after - before) <= 10.0 * grid.dt() * (1.0 + before));
  }
}

TEST_CASE("streaming summary matches stored ensemble covariances bit for bit") {
  const SDESpec spec(random_psd(2, 157), random_psd(2, 158),
                     {{0.5, random_matrix(2, 159)}, {10.0, random_matrix(2, 160)}});
  const TimeGrid grid(0.0, 1.0, 50);
  const Eigen::Index count = 3000;
  const std::vector<Eigen::Index> indices{0, 25, 50};

  const PathEnsemble paths = simulate_linear_sde(spec, grid, count, 45);
  const CovarianceSummary summary = sde_covariance_summary(spec, grid, count, 45, indices);
  REQUIRE(summary.count == count);
  for (std::size_t s = 0; s < indices.size(); ++s)
    REQUIRE(entry_diff(summary.covariances[s], empirical_covariance_at(paths, indices[s])) == 0.0);

  const CovarianceSummary par = sde_covariance_summary(spec, grid, count, 45, indices, 4);
  for (std::size_t s = 0; s < indices.size(); ++s)
    REQUIRE(entry_diff(summary.covariances[s], par.covariances[s]) == 0.0);
}

TEST_CASE("summary index lists are validated") {
  const SDESpec spec = SDESpec::brownian(psd_id(2), psd_id(2));
  const TimeGrid grid(0.0, 1.0, 10);
  REQUIRE_THROWS_AS(sde_covariance_summary(spec, grid, 8, 1, {}), Error);
  REQUIRE_THROWS_AS(sde_covariance_summary(spec, grid, 8, 1, {3, 3}), Error);
  REQUIRE_THROWS_AS(sde_covariance_summary(spec, grid, 8, 1, {11}), IndexError);
}

TEST_CASE("oversized ensembles are refused up front") {
  REQUIRE_THROWS_AS(
      simulate_linear_sde(SDESpec::brownian(psd_id(2), psd_id(2)), TimeGrid(0.0, 1.0, 1000),
                          1000000, 1),
      Error);
}

TEST_CASE("covariance ode without drift is the straight line") {
  const SDESpec spec = SDESpec::brownian(psd_id(2), PositiveOperator(diag2(1, 0)));
  const OperatorTrajectory traj = ou_covariance_ode(spec, TimeGrid(0.0, 2.0, 8));
  REQUIRE(entry_diff(traj.back(), diag2(3, 1)) <= 1e-12);
  REQUIRE(entry_diff(traj.at(4), diag2(2, 1)) <= 1e-12);
}

TEST_CASE("covariance ode without noise matches the similarity closed form") {
  const ComplexMatrix a = random_matrix(2, 161, 0.5);
  const PositiveOperator b0 = random_psd(2, 162);
  const SDESpec spec(b0, psd_zero(2), {{10.0, a}});
  const TimeGrid grid(0.0, 2.0, 200);
  const OperatorTrajectory traj = ou_covariance_ode(spec, grid);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < grid.points(); k += 20)
    worst = std::max(worst,
                     entry_diff(traj.at(k), closed_form_similarity(a, b0, grid.time(k)).matrix()));
  REQUIRE(worst <= 1e-10);
}

TEST_CASE("covariance ode exact and rk4 agree across drift switches") {
  const SDESpec spec(random_psd(2, 163), random_psd(2, 164),
                     {{0.5, random_matrix(2, 165)}, {10.0, random_matrix(2, 166)}});
  const TimeGrid grid(0.0, 1.0, 1000);
  const OperatorTrajectory exact = ou_covariance_ode(spec, grid, PropagationMethod::exact);
  const OperatorTrajectory rk4 = ou_covariance_ode(spec, grid, PropagationMethod::rk4);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < grid.points(); ++k)
    worst = std::max(worst, entry_diff(exact.at(k), rk4.at(k)));
  REQUIRE(worst <= 1e-6);
}

TEST_CASE("hamiltonian drift with diffusion grows the trace linearly") {
  const ComplexMatrix a = Complex(0, -1) * random_hermitian(2, 167).matrix();
  const PositiveOperator sigma = random_psd(2, 168);
  const PositiveOperator b0 = random_psd(2, 169);
  const SDESpec spec(b0, sigma, {{10.0, a}});
  const TimeGrid grid(0.0, 2.0, 200);
  const OperatorTrajectory traj = ou_covariance_ode(spec, grid);
  const double expect = b0.matrix().trace().real() + 2.0 * sigma.matrix().trace().real();
  REQUIRE(std::abs(traj.back().trace().real() - expect) <= 1e-10);
  REQUIRE(std::abs(traj.back().trace().imag()) <= 1e-12);
}

TEST_CASE("empirical sde covariance tracks the ode") {
  const ComplexMatrix a = random_matrix(2, 170, 0.5);
  const SDESpec spec(random_psd(2, 171), random_psd(2, 172), {{10.0, a}});
  const TimeGrid grid(0.0, 1.0, 500);
  const Eigen::Index count = 20000;
  const CovarianceSummary summary =
      sde_covariance_summary(spec, grid, count, 47, {250, 500});
  const OperatorTrajectory ode = ou_covariance_ode(spec, grid);
  for (std::size_t s = 0; s < summary.indices.size(); ++s) {
    const ComplexMatrix& ref = ode.at(summary.indices[s]);
    const double bound =
        5.0 * max_norm(ref) / std::sqrt(static_cast<double>(count)) + 10.0 * grid.dt();
    REQUIRE(entry_diff(summary.covariances[s], ref) <= bound);
  }
}
