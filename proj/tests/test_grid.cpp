#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "landau/grid.hpp"
#include "landau/snapshot.hpp"

using namespace landau;

TEST(Grid, CellCentredNodes) {
  auto g = make_grid(8, 2.0);
  EXPECT_DOUBLE_EQ(g->spacing(), 0.5);
  EXPECT_DOUBLE_EQ(g->node(0), -1.75);
  EXPECT_DOUBLE_EQ(g->node(7), 1.75);
  EXPECT_EQ(g->size(), 512u);
  // axis 0 is the slowest index
  EXPECT_EQ(g->index(64, 0), 1);
  EXPECT_EQ(g->index(64, 2), 0);
  EXPECT_EQ(g->index(1, 2), 1);
}

TEST(Grid, RejectsOddOrTinyGrids) {
  EXPECT_THROW(make_grid(7, 1.0), DomainError);
  EXPECT_THROW(make_grid(6, 1.0), DomainError);
  EXPECT_THROW(make_grid(8, 0.0), DomainError);
}

TEST(Grid, IntegratesGaussianMoments) {
  auto g = make_grid(32, 8.0);
  ScalarField M = ScalarField::sample(g, [](std::span<const double> v) {
    return std::pow(2.0 * std::numbers::pi, -1.5) * std::exp(-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
  });
  EXPECT_NEAR(integrate(M, 0.0), 1.0, 1e-10);
  // ∫⟨v⟩²M = 1 + 3
  EXPECT_NEAR(integrate(M, 2.0), 4.0, 1e-9);
  // ∫⟨v⟩⁴M = 1 + 2·3 + 15
  EXPECT_NEAR(integrate(M, 4.0), 22.0, 1e-8);
}

TEST(Grid, FourthOrderDerivativesExactOnCubicsInTheInterior) {
  auto g = make_grid(16, 2.0);
  ScalarField f = ScalarField::sample(g, [](std::span<const double> v) { return v[0] * v[0] * v[0] - 2.0 * v[1] * v[2]; });
  VectorField gr = gradient_fourth_order(f);
  ScalarField lap = laplacian_fourth_order(f);
  for (std::size_t i = 0; i < g->size(); ++i) {
    bool interior = true;
    for (int a = 0; a < 3; ++a) interior = interior && g->index(i, a) >= 2 && g->index(i, a) <= 13;
    if (!interior) continue;
    const double x = g->coord(i, 0), z = g->coord(i, 2);
    EXPECT_NEAR(gr.components[0][i], 3.0 * x * x, 1e-11);
    EXPECT_NEAR(gr.components[1][i], -2.0 * z, 1e-11);
    EXPECT_NEAR(lap.values[i], 6.0 * x, 1e-10);
  }
}

TEST(Grid, DivergenceOfGradientMatchesLaplacianForGaussian) {
  auto g = make_grid(32, 6.0);
  ScalarField f = ScalarField::sample(g, [](std::span<const double> v) { return std::exp(-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])); });
  ScalarField a = divergence_fourth_order(gradient_fourth_order(f));
  ScalarField b = laplacian_fourth_order(f);
  double err = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) err = std::max(err, std::abs(a.values[i] - b.values[i]));
  EXPECT_LT(err, 0.05 * b.max_abs());
}

TEST(Snapshot, RoundTripIsBitExact) {
  auto g = make_grid(8, 3.0);
  ScalarField f = ScalarField::sample(g, [](std::span<const double> v) { return std::sin(v[0]) + 1e-300 * v[1]; });
  auto path = std::filesystem::temp_directory_path() / "landau_snapshot_roundtrip.bin";
  write_snapshot(path, f, -2.0, 0.125);
  Snapshot s = read_snapshot(path);
  EXPECT_EQ(s.header.n, 8);
  EXPECT_EQ(s.header.L, 3.0);
  EXPECT_EQ(s.header.gamma, -2.0);
  EXPECT_EQ(s.header.time, 0.125);
  EXPECT_EQ(s.scalar(g).values, f.values);
  std::filesystem::remove(path);
}

TEST(Snapshot, BadMagicIsAnIoError) {
  auto path = std::filesystem::temp_directory_path() / "landau_snapshot_bad.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTASNAPSHOT";
  }
  EXPECT_THROW(read_snapshot(path), IoError);
  std::filesystem::remove(path);
}
