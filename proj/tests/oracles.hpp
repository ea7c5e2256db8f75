#pragma once

// Reference values computed without the library's convolution or FFT paths:
// radial quadratures, closed forms and brute-force sums.

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "landau/grid.hpp"
#include "landau/kernels.hpp"

namespace oracle {

inline double unit_maxwellian_radial(double r) { return std::pow(2.0 * std::numbers::pi, -1.5) * std::exp(-0.5 * r * r); }

/// ∫ |v − w|^β M(w) dw for the unit Maxwellian in d = 3, by the angular closed form
/// ∫_{−1}^{1} (s² + r² − 2 s r μ)^{β/2} dμ = (|s+r|^{β+2} − |s−r|^{β+2}) / ((β+2) s r)
/// (log form at β = −2).
inline double power_convolution_maxwellian(double beta, double s) {
  using boost::math::quadrature::gauss_kronrod;
  auto inner = [&](double r) {
    if (r == 0.0) return 0.0;
    double ang = beta == -2.0 ? std::log((s + r) / std::abs(s - r)) / (s * r)
                              : (std::pow(s + r, beta + 2.0) - std::pow(std::abs(s - r), beta + 2.0)) / ((beta + 2.0) * s * r);
    return 2.0 * std::numbers::pi * r * r * unit_maxwellian_radial(r) * ang;
  };
  // split at the kink r = s
  return gauss_kronrod<double, 61>::integrate(inner, 0.0, s, 12, 1e-13) +
         gauss_kronrod<double, 61>::integrate(inner, s, 12.0, 12, 1e-13);
}

/// c_β[M](v) = −(d−1)(d+β)(|·|^β ∗ M)(v), d = 3.
inline double c_maxwellian(double beta, double s) { return -2.0 * (3.0 + beta) * power_convolution_maxwellian(beta, s); }

/// ∫∫ M(x)M(y)/|x−y| for two unit Maxwellians: E|Z|^{−1}, Z ~ N(0, 2I) in d = 3.
inline double hls_gaussian_pair() { return 1.0 / std::sqrt(std::numbers::pi); }

/// ∫ M³ for the unit Maxwellian in d = 3: (2π)^{−3}·3^{−3/2}.
inline double maxwellian_cubed_integral() { return std::pow(2.0 * std::numbers::pi, -3.0) * std::pow(3.0, -1.5); }

/// Padded-lattice flat index of a node offset (offset o ↦ o mod 2n per axis, axis 0 slowest).
inline std::size_t padded_index(const std::vector<int>& off, int n) {
  const int N = 2 * n;
  std::size_t p = 0;
  for (int o : off) p = p * N + static_cast<std::size_t>(o >= 0 ? o : o + N);
  return p;
}

/// Σ_j [K̄(i−j) f_j − m(i−j)·∇f_j + ½ s(i−j) Δf_j] h^d by explicit double loop.
inline std::vector<double> direct_convolution(const landau::ScalarField& f, const landau::KernelTable& t, bool corrected) {
  const landau::Grid& g = *f.grid;
  const int d = g.dim(), n = g.points();
  landau::VectorField grad = landau::gradient_fourth_order(f);
  landau::ScalarField lap = landau::laplacian_fourth_order(f);
  std::vector<double> out(g.size(), 0.0);
  std::vector<int> off(d);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      for (int a = 0; a < d; ++a) off[a] = g.index(i, a) - g.index(j, a);
      std::size_t p = padded_index(off, n);
      acc += t.average[p] * f.values[j];
      if (corrected) {
        for (int a = 0; a < d; ++a) acc -= t.first[a][p] * grad.components[a][j];
        acc += 0.5 * t.second[p] * lap.values[j];
      }
    }
    out[i] = acc * g.cell_volume();
  }
  return out;
}

/// ½ΣΣ f_i f_j |z|^{γ+2} |Π(z)(∇log f_i − ∇log f_j)|² h^{2d}, z = v_i − v_j, with the
/// log-gradient supplied analytically.
inline double entropy_dissipation_double_sum(const landau::ScalarField& f, const std::vector<std::array<double, 3>>& grad_log,
                                             double gamma) {
  const landau::Grid& g = *f.grid;
  const std::size_t N = g.size();
  std::vector<std::array<double, 3>> X(N);
  for (std::size_t i = 0; i < N; ++i)
    for (int a = 0; a < 3; ++a) X[i][a] = g.coord(i, a);
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double row = 0.0;
    for (std::size_t j = i + 1; j < N; ++j) {
      double z2 = 0, zw = 0, w2 = 0;
      for (int a = 0; a < 3; ++a) {
        const double z = X[i][a] - X[j][a], w = grad_log[i][a] - grad_log[j][a];
        z2 += z * z;
        zw += z * w;
        w2 += w * w;
      }
      row += f.values[j] * std::pow(z2, 0.5 * (gamma + 2.0)) * (w2 - zw * zw / z2);
    }
    sum += f.values[i] * row;
  }
  return sum * g.cell_volume() * g.cell_volume();
}

/// Equal-weight two-Gaussian mixture ½M(u,T) + ½M(−u,T), u along axis 0, sampled
/// pointwise together with its exact log-gradient.
struct SampledMixture {
  landau::ScalarField f;
  std::vector<std::array<double, 3>> grad_log;
};

inline SampledMixture two_gaussian_mixture(landau::GridPtr grid, double u, double T) {
  SampledMixture m{landau::ScalarField(grid), std::vector<std::array<double, 3>>(grid->size())};
  const double norm = 0.5 * std::pow(2.0 * std::numbers::pi * T, -1.5);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const double x = grid->coord(i, 0), y = grid->coord(i, 1), z = grid->coord(i, 2);
    const double g1 = norm * std::exp(-0.5 * ((x - u) * (x - u) + y * y + z * z) / T);
    const double g2 = norm * std::exp(-0.5 * ((x + u) * (x + u) + y * y + z * z) / T);
    m.f.values[i] = g1 + g2;
    m.grad_log[i] = {(-(x - u) * g1 - (x + u) * g2) / (T * (g1 + g2)), -y / T, -z / T};
  }
  return m;
}

}  // namespace oracle
