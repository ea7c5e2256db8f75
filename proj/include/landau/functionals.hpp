#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "landau/error.hpp"
#include "landau/exponents.hpp"
#include "landau/grid.hpp"
#include "landau/kernels.hpp"
#include "landau/trajectory.hpp"

namespace landau {

/// Number of fields whose negative entries were zeroed inside a p-th power.
inline std::atomic<long>& clipped_power_warnings() {
  static std::atomic<long> count{0};
  return count;
}

namespace detail {
inline double positive_power(double x, double p) { return x > 0.0 ? std::pow(x, p) : 0.0; }
inline void count_negative(const ScalarField& f) {
  if (f.min() < 0.0) clipped_power_warnings()++;
}
}  // namespace detail

/// m_k = ∫ f ⟨v⟩^k.
inline double moment(const ScalarField& f, double k) { return integrate(f, k); }

/// M_{k,p} = ∫ (f⁺)^p ⟨v⟩^k.
inline double weighted_lp(const ScalarField& f, double k, double p) {
  if (!(p >= 1.0)) throw DomainError("weighted_lp: p ≥ 1 required");
  detail::count_negative(f);
  const Grid& g = *f.grid;
  const auto& w = g.weight(k);
  Accumulator acc;
  for (std::size_t i = 0; i < g.size(); ++i) acc.add(detail::positive_power(f.values[i], p) * w[i]);
  return acc.value() * g.cell_volume();
}

/// ⟨v⟩^{k/2} (f⁺)^{p/2}.
inline ScalarField weighted_root(const ScalarField& f, double k, double p) {
  const Grid& g = *f.grid;
  const auto& w = g.weight(0.5 * k);
  ScalarField out(f.grid);
  for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = w[i] * detail::positive_power(f.values[i], 0.5 * p);
  return out;
}

/// D_{k,p} = ∫ |∇(⟨v⟩^{k/2} f^{p/2})|².
inline double dissipation(const ScalarField& f, double k, double p) {
  detail::count_negative(f);
  return gradient_energy(weighted_root(f, k, p));
}

/// H(f) = ∫ f log f with 0 log 0 = 0.
inline double entropy(const ScalarField& f) {
  detail::count_negative(f);
  Accumulator acc;
  for (double x : f.values)
    if (x > 0.0) acc.add(x * std::log(x));
  return acc.value() * f.grid->cell_volume();
}

struct EntropyDissipation {
  double value;  ///< max(raw, 0)
  double raw;
};

/// 𝒟 = 4∫ A∇√f·∇√f + ∫ c_γ[f] f (the same as ∫ A∇f·∇f/f + ∫ c f, but without
/// dividing by f, which ruins the tails on coarse grids).
inline EntropyDissipation entropy_dissipation(const ScalarField& f, const CoefficientFields& coeffs) {
  const Grid& g = *f.grid;
  require_same_grid(g, *coeffs.A.grid, "entropy_dissipation");
  const int d = g.dim();
  ScalarField root(f.grid);
  for (std::size_t i = 0; i < g.size(); ++i) root.values[i] = detail::positive_power(f.values[i], 0.5);
  VectorField grad = gradient_fourth_order(root);
  Accumulator acc;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double quad = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) quad += coeffs.A.at(a, b, i) * grad.components[a][i] * grad.components[b][i];
    acc.add(4.0 * quad + coeffs.c.values[i] * std::max(f.values[i], 0.0));
  }
  double raw = acc.value() * g.cell_volume();
  return {std::max(raw, 0.0), raw};
}

inline EntropyDissipation entropy_dissipation(const ScalarField& f, const Potential& pot) {
  return entropy_dissipation(f, coefficient_fields(f, pot));
}

struct FisherCheck {
  double lhs;
  double rhs_raw;
  double ratio;
};

/// lhs = ∫|∇√f|²⟨v⟩^γ, rhs_raw = 1 + 𝒟(f).
inline FisherCheck fisher_check(const ScalarField& f, const Potential& pot) {
  const Grid& g = *f.grid;
  ScalarField root(f.grid);
  for (std::size_t i = 0; i < g.size(); ++i) root.values[i] = detail::positive_power(f.values[i], 0.5);
  VectorField grad = gradient_fourth_order(root);
  const auto& w = g.weight(pot.gamma);
  Accumulator acc;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) s += grad.components[a][i] * grad.components[a][i];
    acc.add(s * w[i]);
  }
  double lhs = acc.value() * g.cell_volume();
  double rhs = 1.0 + (f.max() > 0.0 ? entropy_dissipation(f, pot).value : 0.0);
  return {lhs, rhs, lhs / rhs};
}

namespace detail {
inline Eigen::MatrixXd node_matrix(const MatrixField& A, std::size_t node) {
  const int d = A.grid->dim();
  Eigen::MatrixXd m(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) m(a, b) = A.at(a, b, node);
  return m;
}
}  // namespace detail

struct Coercivity {
  double K0;
  std::size_t argmin;  ///< minimising node (the refined minimum lies within one cell of it)
  bool failed;  ///< K₀ ≤ 0: the source density is not a valid nonnegative f
};

namespace detail {

/// Four-point Lagrange stencil along one axis: first node index and weights, or
/// nullopt when x lies outside the node range.
inline std::optional<std::pair<int, std::array<double, 4>>> cubic_stencil(const Grid& g, double x) {
  const int n = g.points();
  const double h = g.spacing();
  if (x < g.node(0) || x > g.node(n - 1)) return std::nullopt;
  int i0 = std::clamp(static_cast<int>(std::floor((x - g.node(0)) / h)) - 1, 0, n - 4);
  std::array<double, 4> w;
  for (int j = 0; j < 4; ++j) {
    w[j] = 1.0;
    for (int m = 0; m < 4; ++m)
      if (m != j) w[j] *= (x - g.node(i0 + m)) / (g.node(i0 + j) - g.node(i0 + m));
  }
  return std::make_pair(i0, w);
}

/// eigmin(A(v))/⟨v⟩^γ with A interpolated to v by tensor cubic Lagrange.
inline std::optional<double> interpolated_ratio(const MatrixField& A, std::span<const double> v, double gamma) {
  const Grid& g = *A.grid;
  const int d = g.dim();
  std::vector<std::pair<int, std::array<double, 4>>> st;
  double r2 = 0.0;
  for (int a = 0; a < d; ++a) {
    auto s = cubic_stencil(g, v[a]);
    if (!s) return std::nullopt;
    st.push_back(*s);
    r2 += v[a] * v[a];
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  int total = 1;
  for (int a = 0; a < d; ++a) total *= 4;
  for (int t = 0; t < total; ++t) {
    std::size_t flat = 0;
    double w = 1.0;
    for (int a = 0, rem = t; a < d; ++a, rem /= 4) {
      flat += static_cast<std::size_t>(st[a].first + rem % 4) * g.stride(a);
      w *= st[a].second[rem % 4];
    }
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) m(a, b) += w * A.at(a, b, flat);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) / std::pow(1.0 + r2, 0.5 * gamma);
}

}  // namespace detail

/// K₀ = min over v of eigmin(A[f](v))/⟨v⟩^γ. The node minimum is refined on a
/// h/4 lattice within one cell of the minimising node, with A interpolated to
/// fourth order: the cell-centred grid has no node at the origin, where the
/// minimum usually sits, and the node value alone converges only like h².
inline Coercivity coercivity_estimate(const CoefficientFields& coeffs, const Potential& pot) {
  const Grid& g = *coeffs.A.grid;
  const auto& w = g.weight(pot.gamma);
  std::vector<double> ratio(g.size());
  parallel_for(g.size(), [&](std::size_t i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(detail::node_matrix(coeffs.A, i), Eigen::EigenvaluesOnly);
    ratio[i] = es.eigenvalues()(0) / w[i];
  });
  auto it = std::min_element(ratio.begin(), ratio.end());
  Coercivity c{*it, static_cast<std::size_t>(it - ratio.begin()), false};
  const int d = g.dim();
  const double h = g.spacing();
  int total = 1;
  for (int a = 0; a < d; ++a) total *= 9;
  std::vector<double> v(d);
  for (int t = 0; t < total; ++t) {
    for (int a = 0, rem = t; a < d; ++a, rem /= 9) v[a] = g.coord(c.argmin, a) + 0.25 * h * (rem % 9 - 4);
    if (auto r = detail::interpolated_ratio(coeffs.A, v, pot.gamma)) c.K0 = std::min(c.K0, *r);
  }
  c.failed = !(c.K0 > 0.0);
  return c;
}

inline double mass_in_ball(const ScalarField& f, double R) {
  if (!(R > 0.0)) throw DomainError("mass_in_ball: R > 0 required");
  const Grid& g = *f.grid;
  Accumulator acc;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.radius_squared(i) <= R * R) acc.add(f.values[i]);
  return acc.value() * g.cell_volume();
}

inline double mass_on_set(const ScalarField& f, const std::vector<bool>& mask) {
  if (mask.size() != f.size()) throw GridMismatchError("mass_on_set: mask size differs from grid");
  Accumulator acc;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (mask[i]) acc.add(f.values[i]);
  return acc.value() * f.grid->cell_volume();
}

/// ‖⟨·⟩^{|γ|} f‖_{L^q}; q = ∞ gives the weighted sup norm.
inline double weighted_norm(const ScalarField& f, double q, double gamma) {
  if (std::isinf(q)) {
    const auto& w = f.grid->weight(std::abs(gamma));
    double m = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::max(f.values[i], 0.0) * w[i]);
    return m;
  }
  return std::pow(weighted_lp(f, q * std::abs(gamma), q), 1.0 / q);
}

struct TimeIntegral {
  double value;
  double max_gap;  ///< largest spacing between consecutive snapshots used
};

/// Trapezoid ∫ ‖⟨·⟩^{|γ|} f(s)‖_q^r ds over the snapshots.
inline TimeIntegral prodi_serrin_integral(const Trajectory& traj, double q, double r, const Potential& pot) {
  if (exponents::prodi_serrin_defect(pot.d, pot.gamma, q, r) > 1e-9)
    throw AdmissibilityError("Prodi-Serrin integral: the pair violates 2/r + d/q = d+2+γ");
  if (traj.snapshots.empty()) return {0.0, 0.0};
  std::vector<double> vals;
  for (const auto& s : traj.snapshots) vals.push_back(std::pow(weighted_norm(s.field, q, pot.gamma), r));
  TimeIntegral out{0.0, 0.0};
  for (std::size_t j = 1; j < vals.size(); ++j) {
    double dt = traj.snapshots[j].time - traj.snapshots[j - 1].time;
    out.value += 0.5 * dt * (vals[j] + vals[j - 1]);
    out.max_gap = std::max(out.max_gap, dt);
  }
  return out;
}

/// max(u⋆, (d(p−1)/(a t))^{d(p−1)/2}) with u⋆ = (2C/a)^{d(p−1)/(2+d(p−1))}: the bound
/// on any y with y' ≤ C − a y^{1+2/(d(p−1))}.
inline double ode_envelope(double C, double a, double p, int d, double t) {
  if (!(C > 0.0) || !(a > 0.0) || !(t > 0.0) || !(p > 1.0)) throw DomainError("ode_envelope: C, a, t > 0 and p > 1 required");
  double e = d * (p - 1.0);
  double ustar = std::pow(2.0 * C / a, e / (2.0 + e));
  return std::max(ustar, std::pow(e / (a * t), 0.5 * e));
}

struct MomentGrowth {
  double k;
  double C;                     ///< max of m_k(t)/(1+t) over the fit window
  std::vector<double> times;
  std::vector<double> moments;
  std::vector<double> margins;  ///< C(1+t) − m_k(t)
  double min_margin;
};

/// Fits C in m_k(t) ≤ C(1+t) on snapshots with t ≤ fit_until and reports the
/// margin C(1+t) − m_k(t) on every snapshot.
inline MomentGrowth moment_growth_check(const Trajectory& traj, double k, double fit_until) {
  if (traj.snapshots.empty()) throw DomainError("moment_growth_check: empty trajectory");
  MomentGrowth out{k, 0.0, {}, {}, {}, std::numeric_limits<double>::infinity()};
  for (const auto& s : traj.snapshots) {
    out.times.push_back(s.time);
    out.moments.push_back(moment(s.field, k));
  }
  for (std::size_t i = 0; i < out.times.size(); ++i)
    if (out.times[i] <= fit_until) out.C = std::max(out.C, out.moments[i] / (1.0 + out.times[i]));
  for (std::size_t i = 0; i < out.times.size(); ++i) {
    out.margins.push_back(out.C * (1.0 + out.times[i]) - out.moments[i]);
    out.min_margin = std::min(out.min_margin, out.margins.back());
  }
  return out;
}

struct FunctionalReport {
  std::string name;
  double value = 0.0;
  std::map<std::string, double> parameters;
  std::string grid;
};

/// Writes rows as CSV: name,value,<union of parameter names>,grid.
inline void write_functional_csv(const std::string& path, const std::vector<FunctionalReport>& rows) {
  std::vector<std::string> cols;
  for (const auto& r : rows)
    for (const auto& [k, v] : r.parameters)
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
  std::sort(cols.begin(), cols.end());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(17);
  out << "name,value";
  for (const auto& c : cols) out << ',' << c;
  out << ",grid\n";
  for (const auto& r : rows) {
    out << r.name << ',' << r.value;
    for (const auto& c : cols) {
      out << ',';
      auto it = r.parameters.find(c);
      if (it != r.parameters.end()) out << it->second;
    }
    out << ",\"" << r.grid << "\"\n";
  }
}

}  // namespace landau
