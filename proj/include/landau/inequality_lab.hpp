#pragma once

// Fitted-constant checks of the functional inequalities: HLS, Sobolev, triple
// interpolation, level-set HLS bounds and the ε-Poincaré family.

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "landau/degiorgi.hpp"
#include "landau/error.hpp"
#include "landau/exponents.hpp"
#include "landau/functionals.hpp"
#include "landau/kernels.hpp"

namespace landau {

struct InequalityCase {
  std::string name;
  std::map<std::string, double> parameters;
  double lhs = 0.0;
  std::vector<std::pair<std::string, double>> rhs_structure;
  double empirical_constant = 0.0;

  double term(const std::string& key) const {
    for (const auto& [k, v] : rhs_structure)
      if (k == key) return v;
    throw DomainError("inequality case '" + name + "' has no term '" + key + "'");
  }
};

namespace detail {
inline double lp_norm(const ScalarField& g, double q) {
  if (std::isinf(q)) return std::max(g.max(), 0.0);
  return std::pow(weighted_lp(g, 0.0, q), 1.0 / q);
}
inline double ratio_or_zero(double num, double den) { return num == 0.0 ? 0.0 : num / den; }
}  // namespace detail

/// ∫∫ g(x)|x−y|^{−λ}h(y) against ‖g‖_q‖h‖_r, with 1/q + λ/d + 1/r = 2.
inline InequalityCase hls_check(const ScalarField& g, const ScalarField& h, double lambda, double q, double r) {
  require_same_grid(*g.grid, *h.grid, "hls_check");
  const int d = g.grid->dim();
  if (!(lambda > 0.0 && lambda < d)) throw AdmissibilityError("HLS: 0 < λ < d violated");
  if (!(q > 1.0 && r > 1.0)) throw AdmissibilityError("HLS: q, r > 1 required");
  if (std::abs(1.0 / q + lambda / d + 1.0 / r - 2.0) > 1e-9) throw AdmissibilityError("HLS: 1/q + λ/d + 1/r = 2 violated");
  InequalityCase c;
  c.name = "hls";
  c.parameters = {{"lambda", lambda}, {"q", q}, {"r", r}};
  c.lhs = inner(g, convolve_power(h, -lambda));
  double ng = detail::lp_norm(g, q), nh = detail::lp_norm(h, r);
  c.rhs_structure = {{"norm_g_q", ng}, {"norm_h_r", nh}};
  c.empirical_constant = detail::ratio_or_zero(c.lhs, ng * nh);
  return c;
}

/// Which level-set HLS bound: `main` bounds −∫c_γ[f_ℓ^+](f_ℓ^+)^p
/// (Coulomb: ∫(f_ℓ^+)^{p+1}); `lower` the same with p−1.
enum class LevelBound { main, lower };

/// −∫c_γ[f_ℓ^+](f_ℓ^+)^m against (ℓ−k)^{m+1−(2d+γ)q/d}‖f_k^+‖_q^{q(2d+γ)/d}, m = p or p−1;
/// Coulomb: ∫(f_ℓ^+)^{p±1} against (ℓ−k)^{p±1−q}‖f_k^+‖_q^q.
inline InequalityCase level_hls_bounds(const ScalarField& f, double k, double ell, double p, double q, const Potential& pot,
                                       LevelBound which = LevelBound::main) {
  if (!(k >= 0.0 && k < ell)) throw DomainError("level_hls_bounds: 0 ≤ k < ℓ required");
  const int d = pot.d;
  const double gamma = pot.gamma;
  InequalityCase c;
  c.parameters = {{"k", k}, {"ell", ell}, {"p", p}, {"q", q}, {"gamma", gamma}};
  ScalarField fl = level_truncate(f, ell), fk = level_truncate(f, k);
  if (pot.coulomb()) {
    if (!(q > p + 1.0)) throw AdmissibilityError("level HLS bound (Coulomb): q > p+1 violated");
    const double m = which == LevelBound::main ? p + 1.0 : p - 1.0;
    c.name = which == LevelBound::main ? "level_hls_coulomb_p_plus_1" : "level_hls_coulomb_p_minus_1";
    c.lhs = weighted_lp(fl, 0.0, m);
    double power = std::pow(ell - k, m - q);
    double norm = weighted_lp(fk, 0.0, q);
    c.rhs_structure = {{"level_gap_power", power}, {"norm_fk_q_pow", norm}};
    c.empirical_constant = detail::ratio_or_zero(c.lhs, power * norm);
    return c;
  }
  const double s = (2.0 * d + gamma) / d;
  if (!(q > (p + 1.0) / s)) throw AdmissibilityError("level HLS bound: q > (p+1)d/(2d+γ) violated");
  const double m = which == LevelBound::main ? p : p - 1.0;
  c.name = which == LevelBound::main ? "level_hls_p" : "level_hls_p_minus_1";
  ScalarField cf = c_operator(fl, gamma);
  Accumulator acc;
  for (std::size_t i = 0; i < fl.size(); ++i)
    if (fl.values[i] > 0.0) acc.add(-cf.values[i] * std::pow(fl.values[i], m));
  c.lhs = acc.value() * f.grid->cell_volume();
  double power = std::pow(ell - k, m + 1.0 - s * q);
  double norm = std::pow(detail::lp_norm(fk, q), q * s);
  c.rhs_structure = {{"level_gap_power", power}, {"norm_fk_q_pow", norm}};
  c.empirical_constant = detail::ratio_or_zero(c.lhs, power * norm);
  return c;
}

/// Sharp constant S_d of ‖g‖_{2d/(d−2)}² ≤ S_d‖∇g‖₂².
inline double sharp_sobolev_constant(int d) {
  if (d < 3) throw DomainError("Sobolev embedding into L^{2d/(d−2)} needs d ≥ 3");
  return 1.0 / (std::numbers::pi * d * (d - 2.0)) * std::pow(std::tgamma(d) / std::tgamma(0.5 * d), 2.0 / d);
}

/// ‖g‖_{2d/(d−2)}² against ∫|∇g|².
inline InequalityCase sobolev_check(const ScalarField& g) {
  const int d = g.grid->dim();
  if (d < 3) throw DomainError("sobolev_check needs d ≥ 3");
  const double exponent = 2.0 * d / (d - 2.0);
  InequalityCase c;
  c.name = "sobolev";
  c.parameters = {{"exponent", exponent}, {"sharp_constant", sharp_sobolev_constant(d)}};
  double n = detail::lp_norm(g, exponent);
  c.lhs = n * n;
  double grad = gradient_energy(g);
  c.rhs_structure = {{"grad_energy", grad}};
  c.empirical_constant = detail::ratio_or_zero(c.lhs, grad);
  return c;
}

/// ‖g‖_q^q against ‖⟨·⟩^s g‖₁^{qθ₁}‖g‖_p^{qθ₂}‖∇(⟨·⟩^{γ/2}g^{p/2})‖₂^{2θ₃q/p}.
inline InequalityCase triple_interpolation_check(const ScalarField& g, const exponents::ExponentSet& e,
                                                 exponents::ThetaMode mode = exponents::ThetaMode::grad_normalized) {
  exponents::Thetas t = exponents::triple_thetas(e.d, e.gamma, e.p, e.q, mode);
  const double p = e.p, q = e.q;
  InequalityCase c;
  c.name = "triple_interpolation";
  c.parameters = {{"p", p}, {"q", q}, {"gamma", e.gamma}, {"theta1", t.theta1}, {"theta2", t.theta2},
                  {"theta3", t.theta3}, {"s", t.s}};
  c.lhs = weighted_lp(g, 0.0, q);
  ScalarField gp(g.grid);
  for (std::size_t i = 0; i < g.size(); ++i) gp.values[i] = std::max(g.values[i], 0.0);
  double m1 = moment(gp, t.s);
  double np = detail::lp_norm(g, p);
  double grad = dissipation(g, e.gamma, p);
  double product = std::pow(m1, q * t.theta1) * std::pow(np, q * t.theta2) * std::pow(grad, t.theta3 * q / p);
  c.rhs_structure = {{"weighted_l1", m1}, {"norm_p", np}, {"grad_energy", grad}, {"product", product}};
  c.empirical_constant = detail::ratio_or_zero(c.lhs, product);
  return c;
}

/// s = (d − q(d+γ))/(2q) of the ε-Poincaré inequality.
inline double poincare_s(int d, double gamma, double q) { return (d - q * (d + gamma)) / (2.0 * q); }

/// Predicted slope of log C₀(ε) against log ε: −s/(1−s), or −d/(2q−d) for Coulomb.
inline double poincare_predicted_slope(int d, double gamma, double q) {
  if (gamma == -static_cast<double>(d)) return -d / (2.0 * q - d);
  double s = poincare_s(d, gamma, q);
  return -s / (1.0 - s);
}

/// −∫φ²c_γ[g] against ε∫|∇(⟨v⟩^{γ/2}φ)|² + C₀·(‖g‖₁ + ε^{−s/(1−s)}‖g‖_{L^q_{q|γ|}}^{1/(1−s)})∫φ²⟨v⟩^γ
/// (Coulomb: C₀ε^{−d/(2q−d)}‖g‖_{L^q_{qd}}^{2q/(2q−d)}∫φ²⟨v⟩^{−d}). The empirical
/// constant is C₀(ε) = max(lhs − ε·grad, 0)/∫φ²⟨v⟩^γ; `C0_normalized` divides it
/// by the g-dependent factor as well.
inline InequalityCase eps_poincare(const ScalarField& phi, const ScalarField& g, const Potential& pot, double epsilon, double q) {
  require_same_grid(*phi.grid, *g.grid, "eps_poincare");
  const int d = pot.d;
  const double gamma = pot.gamma;
  if (!(epsilon > 0.0)) throw DomainError("eps_poincare: ε > 0 required");
  if (pot.coulomb()) {
    if (!(q > 0.5 * d)) throw AdmissibilityError("ε-Poincaré (Coulomb): q > d/2 violated");
  } else if (!(q > d / (d + 2.0 + gamma) && q < d / (d + gamma))) {
    throw AdmissibilityError("ε-Poincaré: d/(d+2+γ) < q < d/(d+γ) violated");
  }
  const Grid& G = *phi.grid;
  InequalityCase c;
  c.name = pot.coulomb() ? "eps_poincare_coulomb" : "eps_poincare";
  ScalarField cg = c_operator(g, gamma);
  Accumulator acc, wacc;
  const auto& w = G.weight(gamma);
  for (std::size_t i = 0; i < G.size(); ++i) {
    double p2 = phi.values[i] * phi.values[i];
    acc.add(-p2 * cg.values[i]);
    wacc.add(p2 * w[i]);
  }
  c.lhs = acc.value() * G.cell_volume();
  const double weighted = wacc.value() * G.cell_volume();
  ScalarField wphi(phi.grid);
  const auto& half = G.weight(0.5 * gamma);
  for (std::size_t i = 0; i < G.size(); ++i) wphi.values[i] = half[i] * phi.values[i];
  const double grad = gradient_energy(wphi);
  const double gnorm = weighted_norm(g, q, gamma);
  const double g1 = integrate(g, 0.0);
  double factor;
  double s = 0.0;
  if (pot.coulomb()) {
    factor = std::pow(epsilon, -d / (2.0 * q - d)) * std::pow(gnorm, 2.0 * q / (2.0 * q - d));
  } else {
    s = poincare_s(d, gamma, q);
    factor = g1 + std::pow(epsilon, -s / (1.0 - s)) * std::pow(gnorm, 1.0 / (1.0 - s));
  }
  c.parameters = {{"epsilon", epsilon}, {"q", q}, {"gamma", gamma}, {"s", s}};
  const double C0 = weighted > 0.0 ? std::max(c.lhs - epsilon * grad, 0.0) / weighted : 0.0;
  c.rhs_structure = {{"grad_term", grad},          {"weighted_phi", weighted}, {"norm_g_1", g1},
                     {"norm_g_q_weighted", gnorm}, {"g_factor", factor},       {"C0_normalized", detail::ratio_or_zero(C0, factor)}};
  c.empirical_constant = C0;
  return c;
}

/// The γ = −2 variant with a moment of order α > 2 in place of the L^q norm:
/// C₀ = max(lhs − ε·grad, 0)/(exp((m_α(g)/ε)^{α/(α−2)})∫φ²⟨v⟩^{−2}).
inline InequalityCase eps_poincare_critical(const ScalarField& phi, const ScalarField& g, double epsilon, double alpha) {
  require_same_grid(*phi.grid, *g.grid, "eps_poincare_critical");
  if (!(alpha > 2.0)) throw AdmissibilityError("critical ε-Poincaré: moment order α > 2 violated");
  if (!(epsilon > 0.0)) throw DomainError("eps_poincare_critical: ε > 0 required");
  const Grid& G = *phi.grid;
  const double gamma = -2.0;
  ScalarField cg = c_operator(g, gamma);
  Accumulator acc, wacc;
  const auto& w = G.weight(gamma);
  for (std::size_t i = 0; i < G.size(); ++i) {
    double p2 = phi.values[i] * phi.values[i];
    acc.add(-p2 * cg.values[i]);
    wacc.add(p2 * w[i]);
  }
  InequalityCase c;
  c.name = "eps_poincare_critical";
  c.lhs = acc.value() * G.cell_volume();
  const double weighted = wacc.value() * G.cell_volume();
  ScalarField wphi(phi.grid);
  const auto& half = G.weight(-1.0);
  for (std::size_t i = 0; i < G.size(); ++i) wphi.values[i] = half[i] * phi.values[i];
  const double grad = gradient_energy(wphi);
  const double m = moment(g, alpha);
  const double factor = std::exp(std::pow(m / epsilon, alpha / (alpha - 2.0)));
  c.parameters = {{"epsilon", epsilon}, {"alpha", alpha}, {"gamma", gamma}};
  const double C0 = weighted > 0.0 ? std::max(c.lhs - epsilon * grad, 0.0) / weighted : 0.0;
  c.rhs_structure = {{"grad_term", grad}, {"weighted_phi", weighted}, {"moment", m}, {"g_factor", factor},
                     {"C0_normalized", detail::ratio_or_zero(C0, factor)}};
  c.empirical_constant = C0;
  return c;
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope: need ≥ 2 matching points");
  double mx = 0, my = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("loglog_slope: values must be positive");
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

struct PoincareTrend {
  std::vector<double> epsilons;
  std::vector<double> C0;      ///< sup over the dilation family
  std::vector<double> widths;  ///< maximising width δ per ε
  double amplitude = 1.0;
  double slope = 0.0;
  double predicted = 0.0;
  std::vector<InequalityCase> cases;  ///< the maximising case per ε
};

/// The best constant C₀(ε) over the family φ_δ = e^{−|v|²/(2δ²)}, g_δ = a·δ^{−d/q}e^{−|v|²/(2δ²)}
/// (‖g_δ‖_q fixed), each δ on its own grid of n points and half-width 6δ. For fixed
/// (φ, g) C₀ is affine in ε; the power law only appears through the sup over the
/// family. The amplitude a is chosen so the maximiser for the largest ε sits near
/// δ = 0.1, where ⟨v⟩ ≈ 1 on the support.
inline PoincareTrend eps_poincare_trend(const Potential& pot, double q, const std::vector<double>& epsilons, int n = 32,
                                        int iterations = 24) {
  const int d = pot.d;
  auto evaluate = [&](double delta, double amp, double eps) {
    GridPtr grid = make_grid(n, 6.0 * delta, d);
    const double sig2 = delta * delta;
    const double scale = amp * std::pow(delta, -d / q);
    ScalarField phi = ScalarField::sample(grid, [&](std::span<const double> v) {
      double r2 = 0.0;
      for (double x : v) r2 += x * x;
      return std::exp(-0.5 * r2 / sig2);
    });
    ScalarField g = phi;
    g *= scale;
    return eps_poincare(phi, g, pot, eps, q);
  };
  PoincareTrend out;
  out.epsilons = epsilons;
  out.predicted = poincare_predicted_slope(d, pot.gamma, q);
  if (epsilons.empty()) return out;
  // calibrate: with ⟨v⟩ ≈ 1, C₀(δ) = A·a·δ^{−μ} − ε·B·δ^{−2}, maximal at δ^{2−μ} = 2εB/(μAa)
  const double mu = pot.coulomb() ? d / q : 2.0 * poincare_s(d, pot.gamma, q);
  {
    InequalityCase c = evaluate(0.1, 1.0, 1.0);
    double W = c.term("weighted_phi");
    double A = c.lhs / W * std::pow(0.1, mu);
    double B = c.term("grad_term") / W * 0.01;
    double eps_max = *std::max_element(epsilons.begin(), epsilons.end());
    out.amplitude = 2.0 * eps_max * B / (mu * A * std::pow(0.1, 2.0 - mu));
  }
  for (double eps : epsilons) {
    const double guess = 0.1 * std::pow(eps / *std::max_element(epsilons.begin(), epsilons.end()), 1.0 / (2.0 - mu));
    double lo = std::log(guess) - std::log(8.0), hi = std::log(guess) + std::log(8.0);
    const double phi_g = 0.5 * (std::sqrt(5.0) - 1.0);
    auto value = [&](double x) { return evaluate(std::exp(x), out.amplitude, eps); };
    double x1 = hi - phi_g * (hi - lo), x2 = lo + phi_g * (hi - lo);
    InequalityCase c1 = value(x1), c2 = value(x2);
    for (int it = 0; it < iterations; ++it) {
      if (c1.empirical_constant >= c2.empirical_constant) {
        hi = x2;
        x2 = x1;
        c2 = c1;
        x1 = hi - phi_g * (hi - lo);
        c1 = value(x1);
      } else {
        lo = x1;
        x1 = x2;
        c1 = c2;
        x2 = lo + phi_g * (hi - lo);
        c2 = value(x2);
      }
    }
    const bool first = c1.empirical_constant >= c2.empirical_constant;
    out.C0.push_back(first ? c1.empirical_constant : c2.empirical_constant);
    out.widths.push_back(std::exp(first ? x1 : x2));
    out.cases.push_back(first ? c1 : c2);
  }
  out.slope = loglog_slope(out.epsilons, out.C0);
  return out;
}

/// Deterministic test functions: products of two Gaussians (random centres and
/// widths) times ⟨v⟩^m, m = i mod 3.
inline std::vector<ScalarField> test_function_family(GridPtr grid, int count = 20, unsigned seed = 20240611u) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> centre(-1.5, 1.5), width(0.6, 1.6);
  const int d = grid->dim();
  std::vector<ScalarField> out;
  for (int i = 0; i < count; ++i) {
    std::vector<double> c1(d), c2(d);
    for (auto& x : c1) x = centre(rng);
    for (auto& x : c2) x = centre(rng);
    double w1 = width(rng), w2 = width(rng);
    int m = i % 3;
    out.push_back(ScalarField::sample(grid, [&](std::span<const double> v) {
      double a = 0, b = 0, r2 = 0;
      for (int k = 0; k < d; ++k) {
        a += (v[k] - c1[k]) * (v[k] - c1[k]);
        b += (v[k] - c2[k]) * (v[k] - c2[k]);
        r2 += v[k] * v[k];
      }
      return std::pow(1.0 + r2, 0.5 * m) * std::exp(-0.5 * a / (w1 * w1) - 0.5 * b / (w2 * w2));
    }));
  }
  return out;
}

inline const char* kInequalityCsvHeader = "name,lhs,empirical_constant,parameters,rhs_structure";

/// One row per case; parameters and rhs terms as "key=value" lists joined by ';'.
inline void write_inequality_csv(const std::string& path, const std::vector<InequalityCase>& cases) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << kInequalityCsvHeader << '\n';
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  for (const auto& c : cases) {
    out << c.name << ',' << num(c.lhs) << ',' << num(c.empirical_constant) << ",\"";
    bool first = true;
    for (const auto& [k, v] : c.parameters) {
      out << (first ? "" : ";") << k << '=' << num(v);
      first = false;
    }
    out << "\",\"";
    first = true;
    for (const auto& [k, v] : c.rhs_structure) {
      out << (first ? "" : ";") << k << '=' << num(v);
      first = false;
    }
    out << "\"\n";
  }
}

}  // namespace landau
