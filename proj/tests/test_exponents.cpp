#include <gtest/gtest.h>

#include <cmath>

#include "exponent_sweep.hpp"
#include "landau/exponents.hpp"

using namespace landau;
using namespace landau::exponents;

TEST(Exponents, SweepIdentitiesHoldToRounding) {
  sweep::Result r = sweep::exponent_identities(100);
  EXPECT_EQ(r.points, 100);
  EXPECT_LT(r.worst, 1e-12) << r.worst_name;
}

TEST(Exponents, CoulombReferencePoint) {
  ExponentSet e = compute(3, -3.0, 2.0, 3.2);
  // κ_q = 3·3·1/(2·5 − 3.2·3) = 9/0.4
  EXPECT_NEAR(e.kappa_q, 22.5, 1e-12);
  EXPECT_TRUE(e.coulomb);
  EXPECT_TRUE(e.q_in_interval);
  EXPECT_TRUE(e.theorem_constraint);
}

TEST(Exponents, QIntervalForCoulomb) {
  Interval I = q_interval(3, -3.0, 2.0);
  EXPECT_DOUBLE_EQ(I.lo, 3.0);
  EXPECT_NEAR(I.hi, 10.0 / 3.0, 1e-15);
  EXPECT_FALSE(I.contains(3.0));
  EXPECT_TRUE(I.contains(I.midpoint()));
}

TEST(Exponents, TheoremConstraintTruthTable) {
  EXPECT_TRUE(theorem_constraint(3, -3.0));
  EXPECT_FALSE(theorem_constraint(3, -2.0));
}

TEST(Exponents, ProdiSerrinPairing) {
  // γ = −2: 2/r + 3/q = 3
  EXPECT_NEAR(prodi_serrin_q(3, -2.0, 2.0), 1.5, 1e-15);
  EXPECT_NEAR(prodi_serrin_r(3, -2.0, 1.5), 2.0, 1e-15);
  EXPECT_LT(prodi_serrin_defect(3, -2.0, 1.5, 2.0), 1e-15);
  // γ = −1, r = 1: q = 3/2 lies on the boundary case r = 1, allowed
  EXPECT_NO_THROW(prodi_serrin_q(3, -1.0, 1.0));
  EXPECT_THROW(prodi_serrin_q(3, -1.0, 0.5), AdmissibilityError);
}

TEST(Exponents, DeGiorgiRange) {
  Interval I = degiorgi_p_range(3, -2.5);
  EXPECT_NEAR(I.lo, 3.0 / 2.5, 1e-15);
  EXPECT_NEAR(I.hi, 6.0, 1e-15);
  EXPECT_THROW(degiorgi_p_range(3, -1.0), AdmissibilityError);
  EXPECT_TRUE(std::isinf(degiorgi_p_range(3, -3.0).hi));
}

TEST(Exponents, GatesNameTheConstraint) {
  EXPECT_THROW(compute(3, -3.5, 2.0, 3.2), AdmissibilityError);
  EXPECT_THROW(compute(3, -2.0, 1.0, 3.2), AdmissibilityError);
  try {
    q_interval(3, -2.0, 0.9);
    FAIL();
  } catch (const AdmissibilityError& e) {
    EXPECT_NE(std::string(e.what()).find("p > 1"), std::string::npos);
  }
}

TEST(Exponents, InadmissibleQIsReportedNotThrown) {
  ExponentSet e = compute(3, -3.0, 2.0, 5.0);
  EXPECT_FALSE(e.q_in_interval);
  EXPECT_TRUE(std::isnan(e.kappa_q));
  EXPECT_NE(e.notes.find("κ_q"), std::string::npos);
}

TEST(Exponents, JsonUsesNullForUndefinedValues) {
  auto j = to_json(compute(3, -3.0, 2.0, 5.0));
  EXPECT_TRUE(j["kappa_q"].is_null());
  EXPECT_EQ(j["d"], 3);
}
