#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "landau/degiorgi.hpp"
#include "landau/solver.hpp"
#include "oracles.hpp"

using namespace landau;

namespace {

constexpr double pi = std::numbers::pi;

Trajectory stationary(const ScalarField& f, const std::vector<double>& times, double gamma) {
  Trajectory t;
  t.grid = f.grid;
  t.gamma = gamma;
  for (double s : times) t.snapshots.push_back({s, f});
  return t;
}

ScalarField random_field(GridPtr g, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScalarField f(g);
  for (auto& x : f.values) x = u(rng) * u(rng);
  return f;
}

}  // namespace

TEST(DeGiorgi, TruncationAboveMaxIsZero) {
  auto g = make_grid(8, 2.0);
  std::mt19937 rng(1);
  ScalarField f = random_field(g, rng);
  EXPECT_EQ(level_truncate(f, f.max()).max(), 0.0);
  EXPECT_THROW(level_truncate(f, -0.1), DomainError);
}

TEST(DeGiorgi, LevelFluxAtZeroLevelAndWeightIsTheField) {
  auto g = make_grid(8, 2.0);
  std::mt19937 rng(2);
  ScalarField f = random_field(g, rng);
  ScalarField F = level_flux(f, 0.0, 2.0, 0.0);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(F.values[i], f.values[i]);
}

TEST(DeGiorgi, PointwisePowerBoundBetweenLevels) {
  // f_ℓ^+ ≤ (ℓ−k)^{−α}(f_k^+)^{1+α} wherever f > ℓ > k
  auto g = make_grid(8, 2.0);
  std::mt19937 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    ScalarField f = random_field(g, rng);
    const double k = 0.1 * f.max(), ell = 0.4 * f.max();
    ScalarField fl = level_truncate(f, ell), fk = level_truncate(f, k);
    for (double alpha : {0.0, 1.0, 2.0})
      for (std::size_t i = 0; i < f.size(); ++i)
        EXPECT_LE(fl.values[i], std::pow(ell - k, -alpha) * std::pow(fk.values[i], 1.0 + alpha) + 1e-12);
  }
}

TEST(DeGiorgi, EnergyFunctionalOfZeroTrajectoryIsZero) {
  ScalarField z(make_grid(8, 2.0));
  EXPECT_EQ(energy_functional(stationary(z, {0.0, 1.0}, -2.0), 0.0, 0.0, 1.0, 2.0, -2.0, 1.0), 0.0);
}

TEST(DeGiorgi, EnergyFunctionalOfStationaryMaxwellianMatchesRadialQuadrature) {
  using boost::math::quadrature::gauss_kronrod;
  ScalarField M = discretize_initial(Maxwellian{}, make_grid(32, 8.0));
  const double tau = 0.5;
  Trajectory t = stationary(M, {0.0, 0.25, tau}, -2.0);
  // F = ⟨v⟩^{−1}M, radial; ∫|∇F|² = ∫4πr²F'(r)² dr
  auto dF = [](double r) {
    double m = oracle::unit_maxwellian_radial(r), w = std::sqrt(1.0 + r * r);
    return m * (-r / (w * w * w) - r / w);
  };
  double grad = gauss_kronrod<double, 61>::integrate([&](double r) { return 4.0 * pi * r * r * dF(r) * dF(r); }, 0.0, 12.0);
  double lp = 0.5 * std::pow(4.0 * pi, -1.5);
  double want = lp + tau * grad;
  EXPECT_NEAR(energy_functional(t, 0.0, 0.0, tau, 2.0, -2.0, 1.0), want, 0.03 * want);
}

TEST(DeGiorgi, EnergyFunctionalIsNonincreasingInLevel) {
  auto g = make_grid(8, 3.0);
  std::mt19937 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Trajectory t;
    t.grid = g;
    for (int s = 0; s < 4; ++s) t.snapshots.push_back({0.25 * s, random_field(g, rng)});
    double prev = std::numeric_limits<double>::infinity();
    for (double ell : {0.0, 0.1, 0.3, 0.6}) {
      double E = energy_functional(t, ell, 0.0, 0.75, 2.0, -2.0, 0.5);
      EXPECT_LE(E, prev);
      prev = E;
    }
  }
}

TEST(DeGiorgi, EnergyFunctionalNeedsOrderedWindow) {
  ScalarField z(make_grid(8, 2.0));
  EXPECT_THROW(energy_functional(stationary(z, {0.0, 1.0}, -2.0), 0.0, 1.0, 0.5, 2.0, -2.0, 1.0), DomainError);
}

TEST(DeGiorgi, LevelAndTimeSequences) {
  EXPECT_DOUBLE_EQ(level_n(1.0, 0), 0.0);
  EXPECT_DOUBLE_EQ(level_n(1.0, 3), 0.875);
  EXPECT_DOUBLE_EQ(time_n(1.0, 0), 0.5);
  EXPECT_DOUBLE_EQ(time_n(1.0, 2), 0.875);
}

TEST(DeGiorgi, ThresholdsFromClosedForms) {
  auto e = exponents::compute(3, -2.5, 2.0, 3.2);
  Thresholds t = threshold_K(1.0, 1.0, 1.0, e);
  EXPECT_DOUBLE_EQ(t.K1, 1.0);
  Thresholds t2 = threshold_K(1.0, 1.0, 2.0, e);
  EXPECT_NEAR(t2.K1 / t.K1, std::pow(2.0, 1.0 / (2.0 - 3.2)), 1e-14);
  auto c = exponents::compute(3, -3.0, 2.0, 3.2);
  Thresholds tc = threshold_K(1.0, 1.0, 0.5, c);
  EXPECT_NEAR(tc.K1, std::pow(0.5, -5.0 / 6.0), 1e-12);
  EXPECT_TRUE(std::isnan(tc.K3));
  EXPECT_THROW(threshold_K(0.0, 1.0, 1.0, e), DomainError);
}

TEST(DeGiorgi, IterateAboveTheMaximumDecaysImmediately) {
  ScalarField M = discretize_initial(Maxwellian{}, make_grid(16, 8.0));
  LevelSetParams P;
  P.p = 2.0;
  P.gamma = -3.0;
  P.t_star = 0.5;
  P.T = 1.0;
  P.n_levels = 4;
  // ℓ₁ = K/2 ≥ max f, so every level after the first is empty
  P.K = 2.0 * M.max();
  Trajectory t = stationary(M, degiorgi_snapshot_times(P.t_star, P.T, P.n_levels, 8), -3.0);
  auto e = exponents::compute(3, -3.0, 2.0, 3.2);
  LevelSetReport r = iterate(t, P, e);
  EXPECT_GT(r.energies[0], 0.0);
  for (int n = 1; n <= P.n_levels; ++n) EXPECT_EQ(r.energies[n], 0.0);
  EXPECT_EQ(r.verdict, DecayVerdict::decay_confirmed);
  EXPECT_DOUBLE_EQ(r.levels[3], 0.875 * P.K);
}

TEST(DeGiorgi, IterateRejectsShortTrajectoryAndBadP) {
  ScalarField M = discretize_initial(Maxwellian{}, make_grid(8, 4.0));
  LevelSetParams P;
  P.gamma = -3.0;
  P.t_star = 0.5;
  P.T = 1.0;
  auto e = exponents::compute(3, -3.0, 2.0, 3.2);
  EXPECT_THROW(iterate(stationary(M, {0.5, 0.75}, -3.0), P, e), DomainError);
  P.p = 1.2;  // below d/2 for Coulomb
  EXPECT_THROW(iterate(stationary(M, {0.0, 1.0}, -3.0), P, exponents::compute(3, -3.0, 1.2, 2.5)), AdmissibilityError);
}

TEST(DeGiorgi, EnergyInequalityAboveMaximumIsTrivial) {
  ScalarField M = discretize_initial(Maxwellian{}, make_grid(8, 4.0));
  auto rep = energy_inequality_check(stationary(M, {0.0, 0.5, 1.0}, -2.0), 2.0 * M.max(), 2.0, Potential(-2.0), 0.1);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].lhs, 0.0);
  EXPECT_EQ(rep.rows[0].rhs, 0.0);
  EXPECT_TRUE(rep.holds);
}

TEST(DeGiorgi, LevelSetCsvHeader) { EXPECT_STREQ(kLevelSetCsvHeader, "n,ell_n,t_n,E_n,E_star_n"); }
