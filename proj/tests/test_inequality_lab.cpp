#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "landau/inequality_lab.hpp"
#include "landau/solver.hpp"
#include "oracles.hpp"

using namespace landau;

namespace {

// Unit Maxwellian sampled on a grid of half-width L·δ and dilated by δ.
ScalarField dilated_maxwellian(int n, double L, double delta, double amplitude = 1.0) {
  return ScalarField::sample(make_grid(n, L * delta), [&](std::span<const double> v) {
    double r2 = 0.0;
    for (double x : v) r2 += x * x;
    return amplitude * oracle::unit_maxwellian_radial(std::sqrt(r2) / delta);
  });
}

constexpr double kHlsExponent = 6.0 / 5.0;  // 1/q + 1/3 + 1/r = 2 with q = r

}  // namespace

TEST(InequalityLab, HlsGaussianPairMatchesClosedForm) {
  ScalarField M = dilated_maxwellian(16, 6.0, 1.0);
  InequalityCase c = hls_check(M, M, 1.0, kHlsExponent, kHlsExponent);
  EXPECT_NEAR(c.lhs, oracle::hls_gaussian_pair(), 0.02 * oracle::hls_gaussian_pair());
}

TEST(InequalityLab, HlsEmpiricalConstantIsScaleInvariant) {
  const double base = hls_check(dilated_maxwellian(16, 6.0, 1.0), dilated_maxwellian(16, 6.0, 1.0), 1.0, kHlsExponent,
                                kHlsExponent)
                          .empirical_constant;
  for (double delta : {0.5, 2.0, 3.0}) {
    ScalarField g = dilated_maxwellian(16, 6.0, delta, 7.0);
    double c = hls_check(g, g, 1.0, kHlsExponent, kHlsExponent).empirical_constant;
    EXPECT_NEAR(c, base, 1e-12 * base) << "delta=" << delta;
  }
}

TEST(InequalityLab, HlsRejectsMismatchedExponents) {
  ScalarField M = dilated_maxwellian(8, 4.0, 1.0);
  EXPECT_THROW(hls_check(M, M, 1.0, 2.0, 2.0), AdmissibilityError);
  EXPECT_THROW(hls_check(M, M, 3.0, 1.5, 1.5), AdmissibilityError);
}

TEST(InequalityLab, ZeroFunctionGivesZeroConstant) {
  ScalarField z(make_grid(8, 4.0));
  ScalarField M = dilated_maxwellian(8, 4.0, 1.0);
  EXPECT_EQ(hls_check(z, M, 1.0, kHlsExponent, kHlsExponent).empirical_constant, 0.0);
  EXPECT_EQ(sobolev_check(z).empirical_constant, 0.0);
}

TEST(InequalityLab, GaussianSobolevRatioBelowSharpConstant) {
  ScalarField M = dilated_maxwellian(32, 8.0, 1.0);
  InequalityCase c = sobolev_check(M);
  EXPECT_GT(c.empirical_constant, 0.5 * sharp_sobolev_constant(3));
  EXPECT_LT(c.empirical_constant, sharp_sobolev_constant(3));
}

TEST(InequalityLab, CoulombLevelBoundUsesCubicIntegral) {
  ScalarField M = discretize_initial(Maxwellian{}, make_grid(32, 8.0));
  // ℓ → 0: ∫(M_ℓ^+)^{p+1} with p = 2 is ∫M³
  InequalityCase c = level_hls_bounds(M, 0.0, 1e-14, 2.0, 3.2, Potential(-3.0));
  EXPECT_NEAR(c.lhs, oracle::maxwellian_cubed_integral(), 0.01 * oracle::maxwellian_cubed_integral());
  EXPECT_GT(c.empirical_constant, 0.0);
  EXPECT_THROW(level_hls_bounds(M, 0.5, 0.2, 2.0, 3.2, Potential(-3.0)), DomainError);
}

TEST(InequalityLab, LevelBoundIsZeroAboveTheMaximum) {
  ScalarField M = discretize_initial(Maxwellian{}, make_grid(16, 8.0));
  InequalityCase c = level_hls_bounds(M, 0.0, 2.0 * M.max(), 2.0, 2.8, Potential(-2.0));
  EXPECT_EQ(c.lhs, 0.0);
  EXPECT_EQ(c.empirical_constant, 0.0);
}

TEST(InequalityLab, PredictedPoincareSlopes) {
  // γ = −2, q = 2: s = 1/4, slope −s/(1−s) = −1/3
  EXPECT_NEAR(poincare_s(3, -2.0, 2.0), 0.25, 1e-15);
  EXPECT_NEAR(poincare_predicted_slope(3, -2.0, 2.0), -1.0 / 3.0, 1e-15);
  EXPECT_NEAR(poincare_predicted_slope(3, -3.0, 2.5), -1.5, 1e-15);
}

TEST(InequalityLab, LogLogSlopeOfPowerLaw) {
  std::vector<double> x = {0.5, 0.1, 0.02}, y;
  for (double e : x) y.push_back(3.0 * std::pow(e, -0.7));
  EXPECT_NEAR(loglog_slope(x, y), -0.7, 1e-12);
}

TEST(InequalityLab, TripleInterpolationOnTestFamily) {
  auto e = exponents::compute(3, -2.5, 2.0, 2.9);
  ASSERT_TRUE(e.thetas_admissible);
  for (const ScalarField& g : test_function_family(make_grid(16, 6.0), 6)) {
    InequalityCase c = triple_interpolation_check(g, e);
    EXPECT_GT(c.lhs, 0.0);
    EXPECT_TRUE(std::isfinite(c.empirical_constant));
    EXPECT_GT(c.empirical_constant, 0.0);
  }
}

TEST(InequalityLab, CsvHeader) { EXPECT_STREQ(kInequalityCsvHeader, "name,lhs,empirical_constant,parameters,rhs_structure"); }
