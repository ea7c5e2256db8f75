#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "landau/functionals.hpp"
#include "landau/solver.hpp"

using namespace landau;

namespace {

SolverConfig bimaxwellian_config(int n, double L, double gamma) {
  BiMaxwellian b;
  b.u1 = {1.5, 0.0, 0.0};
  b.u2 = {-1.5, 0.0, 0.0};
  return SolverConfig{.pot = Potential(gamma), .grid = make_grid(n, L), .t_end = 0.0, .snapshot_times = {}, .initial = b};
}

}  // namespace

TEST(Solver, InitialDatumHasExactDiscreteMoments) {
  auto cfg = bimaxwellian_config(16, 6.0, -2.0);
  ScalarField f = discretize_initial(cfg.initial, cfg.grid);
  EXPECT_NEAR(integrate(f, 0.0), 1.0, 1e-13);
  // energy of ½M(u₁,1) + ½M(u₂,1) with |u| = 1.5: 3 + 2.25
  double e = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) e += f.values[i] * cfg.grid->radius_squared(i);
  EXPECT_NEAR(e * cfg.grid->cell_volume(), 5.25, 1e-12);
}

TEST(Solver, MassIsConservedToRoundingPerStep) {
  auto cfg = bimaxwellian_config(16, 6.0, -1.0);
  ScalarField f = discretize_initial(cfg.initial, cfg.grid);
  for (int s = 0; s < 3; ++s) {
    ScalarField g = step(f, cfg);
    EXPECT_NEAR(integrate(g, 0.0), integrate(f, 0.0), 1e-13);
    f = std::move(g);
  }
}

TEST(Solver, MaxwellianResidualShrinksUnderRefinement) {
  double prev = 0.0;
  for (int n : {16, 32}) {
    ScalarField M = discretize_initial(Maxwellian{}, make_grid(n, 8.0));
    double res = rhs(M, coefficient_fields(M, Potential(-2.0))).max_abs() / M.max_abs();
    if (prev > 0.0) {
      EXPECT_GT(std::log2(prev / res), 1.7);
    }
    prev = res;
  }
}

TEST(Solver, RhsOfBimaxwellianHasZeroMassAndMomentum) {
  auto cfg = bimaxwellian_config(16, 6.0, -2.0);
  ScalarField f = discretize_initial(cfg.initial, cfg.grid);
  ScalarField r = rhs(f, coefficient_fields(f, cfg.pot));
  EXPECT_NEAR(integrate(r, 0.0), 0.0, 1e-13);
  ScalarField vx = ScalarField::sample(cfg.grid, [](std::span<const double> v) { return v[0]; });
  EXPECT_NEAR(inner(r, vx), 0.0, 1e-12);
}

TEST(Solver, StableDtMatchesEigenOracle) {
  auto cfg = bimaxwellian_config(16, 6.0, -1.0);
  ScalarField f = discretize_initial(cfg.initial, cfg.grid);
  CoefficientFields cf = coefficient_fields(f, cfg.pot);
  double lmax = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    Eigen::Matrix3d m;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) m(a, b) = cf.A.at(a, b, i);
    lmax = std::max(lmax, Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(m).eigenvalues().maxCoeff());
  }
  const double h = cfg.grid->spacing();
  const double ref = cfg.dt_safety * h * h / (6.0 * lmax);
  // power iteration only ever underestimates λ_max, so dt can only come out larger
  const double dt = stable_dt(f, cf, cfg);
  EXPECT_GE(dt, ref * (1.0 - 1e-12));
  EXPECT_LE(dt, 1.01 * ref);
}

TEST(Solver, NegativeSpikeIsReportedAsBlowUp) {
  auto cfg = bimaxwellian_config(16, 6.0, -2.0);
  cfg.t_end = 0.5;
  ScalarField f = discretize_initial(cfg.initial, cfg.grid);
  f.values[f.size() / 2 + 3] = -0.5 * f.max();
  Trajectory traj = run(cfg, f);
  ASSERT_TRUE(traj.blowup.has_value());
  EXPECT_NE(traj.blowup->find("blow-up"), std::string::npos);
}

TEST(Solver, ValidateCollectsEveryViolation) {
  SolverConfig cfg{.pot = Potential(-2.0), .grid = make_grid(8, 4.0), .dt_safety = 2.0, .t_end = 1.0,
                   .snapshot_times = {0.5, 0.2}, .initial = Maxwellian{1.0, -1.0}};
  try {
    cfg.validate();
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    std::string w = e.what();
    EXPECT_NE(w.find("dt_safety"), std::string::npos);
    EXPECT_NE(w.find("sorted"), std::string::npos);
    EXPECT_NE(w.find("T > 0"), std::string::npos);
  }
}

TEST(Solver, RunStoresRequestedSnapshotsAndDecreasesEntropy) {
  auto cfg = bimaxwellian_config(16, 6.0, -1.0);
  cfg.t_end = 0.2;
  cfg.snapshot_times = {0.0, 0.1, 0.2};
  Trajectory traj = run(cfg);
  ASSERT_FALSE(traj.blowup.has_value());
  ASSERT_EQ(traj.snapshots.size(), 3u);
  EXPECT_DOUBLE_EQ(traj.snapshots.back().time, 0.2);
  for (std::size_t i = 1; i < traj.records.size(); ++i) {
    EXPECT_LE(traj.records[i].entropy, traj.records[i - 1].entropy + 1e-10);
    EXPECT_NEAR(traj.records[i].mass, traj.records[0].mass, 1e-12);
  }
}

TEST(Solver, TrajectoryRoundTripsThroughDisk) {
  auto cfg = bimaxwellian_config(8, 6.0, -2.0);
  cfg.t_end = 0.05;
  cfg.snapshot_times = {0.0, 0.05};
  Trajectory traj = run(cfg);
  auto dir = std::filesystem::temp_directory_path() / "landau_traj_roundtrip";
  std::filesystem::remove_all(dir);
  write_trajectory(traj, dir);
  Trajectory back = read_trajectory(dir);
  ASSERT_EQ(back.snapshots.size(), traj.snapshots.size());
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    EXPECT_EQ(back.snapshots[i].time, traj.snapshots[i].time);
    EXPECT_EQ(back.snapshots[i].field.values, traj.snapshots[i].field.values);
  }
  EXPECT_EQ(back.gamma, -2.0);
  std::filesystem::remove_all(dir);
}
