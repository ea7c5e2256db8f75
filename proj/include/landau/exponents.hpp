#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "landau/error.hpp"

namespace landau::exponents {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {
inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}
inline void check_gamma(int d, double gamma) {
  if (d < 2) throw AdmissibilityError("dimension d must be >= 2");
  if (!(gamma >= -d && gamma < 0.0)) throw AdmissibilityError("γ ∈ [−d,0) violated: γ=" + fmt(gamma) + ", d=" + std::to_string(d));
}
inline bool is_coulomb(int d, double gamma) { return gamma == -static_cast<double>(d); }
}  // namespace detail

struct Interval {
  double lo;
  double hi;
  bool contains(double x) const { return x > lo && x < hi; }
  double midpoint() const { return 0.5 * (lo + hi); }
};

/// κ_q = |γ|d(p−1)/(p(2d+γ+2) − q(2d+γ)).
inline double kappa_q(int d, double gamma, double p, double q) {
  double den = p * (2.0 * d + gamma + 2.0) - q * (2.0 * d + gamma);
  if (!(den > 0.0)) throw AdmissibilityError("κ_q needs p(2d+γ+2) − q(2d+γ) > 0, got " + detail::fmt(den));
  return std::abs(gamma) * d * (p - 1.0) / den;
}

/// s_q = |γ|d(p−1)/(p(d+2) − qd).
inline double s_q(int d, double gamma, double p, double q) {
  double den = p * (d + 2.0) - q * d;
  if (!(den > 0.0)) throw AdmissibilityError("s_q needs p(d+2) − qd > 0, got " + detail::fmt(den));
  return std::abs(gamma) * d * (p - 1.0) / den;
}

/// α_q = (qd − pd − 2)/(d(p−1)).
inline double alpha_q(int d, double p, double q) { return (q * d - p * d - 2.0) / (d * (p - 1.0)); }

/// β_q = (q(2d+γ) − (p+1)d − (γ+2))/(d(p−1)).
inline double beta_q(int d, double gamma, double p, double q) {
  return (q * (2.0 * d + gamma) - (p + 1.0) * d - (gamma + 2.0)) / (d * (p - 1.0));
}

/// ν_k = max((2k − γd(p−1))/(2p), (k+γ)/p).
inline double nu_k(int d, double gamma, double p, double k) {
  return std::max((2.0 * k - gamma * d * (p - 1.0)) / (2.0 * p), (k + gamma) / p);
}

/// c₀ = 2K₀(p−1)/p².
inline double c0(double K0, double p) { return 2.0 * K0 * (p - 1.0) / (p * p); }

/// K(p) = (p−1)K₀/p.
inline double Kp(double K0, double p) { return (p - 1.0) * K0 / p; }

/// C₀ = c₀γ²/2, the lower-order constant of the level-set energy inequality.
inline double C0_energy(double c0v, double gamma) { return 0.5 * c0v * gamma * gamma; }

/// C_{k,γ,p} = max(p−1, 2k/(γ+1+d), d²k²/((d−1)(d+γ+2))).
inline double C_kgp(int d, double gamma, double p, double k) {
  return std::max({p - 1.0, 2.0 * k / (gamma + 1.0 + d), d * d * k * k / ((d - 1.0) * (d + gamma + 2.0))});
}

/// Prodi-Serrin pairing 2/r + d/q = d+2+γ solved for q (∞ when the right side vanishes).
inline double prodi_serrin_q(int d, double gamma, double r) {
  detail::check_gamma(d, gamma);
  if (!(r >= 1.0) || !std::isfinite(r)) throw AdmissibilityError("Prodi-Serrin: 1 ≤ r < ∞ violated, r=" + detail::fmt(r));
  double den = d + 2.0 + gamma - 2.0 / r;
  if (std::abs(den) < 1e-14) return kInf;
  if (den < 0.0) throw AdmissibilityError("Prodi-Serrin: 2/r + d/q = d+2+γ has no q > 0 for r=" + detail::fmt(r));
  double q = d / den;
  if (!(q > 1.0)) throw AdmissibilityError("Prodi-Serrin: 1 < q violated, q=" + detail::fmt(q));
  if (r > 1.0) {
    double lo = d / (d + gamma + 2.0);
    double hi = detail::is_coulomb(d, gamma) ? kInf : d / (d + gamma);
    if (!(q > lo && q < hi))
      throw AdmissibilityError("Prodi-Serrin: d/(d+γ+2) < q < d/(d+γ) violated, q=" + detail::fmt(q));
  }
  return q;
}

/// Inverse pairing: r from q (q may be ∞).
inline double prodi_serrin_r(int d, double gamma, double q) {
  detail::check_gamma(d, gamma);
  if (!(q > 1.0)) throw AdmissibilityError("Prodi-Serrin: 1 < q violated, q=" + detail::fmt(q));
  double den = d + 2.0 + gamma - (std::isinf(q) ? 0.0 : d / q);
  if (!(den > 0.0)) throw AdmissibilityError("Prodi-Serrin: 2/r + d/q = d+2+γ has no finite r for q=" + detail::fmt(q));
  double r = 2.0 / den;
  if (!(r >= 1.0 - 1e-12)) throw AdmissibilityError("Prodi-Serrin: 1 ≤ r violated, r=" + detail::fmt(r));
  return r;
}

/// |2/r + d/q − (d+2+γ)|, with d/∞ = 0.
inline double prodi_serrin_defect(int d, double gamma, double q, double r) {
  return std::abs(2.0 / r + (std::isinf(q) ? 0.0 : d / q) - (d + 2.0 + gamma));
}

/// De Giorgi exponent range max(1, d/(d+γ+2), 1+(d+γ)/d) < p < d/(d+γ); (d/2, ∞) at γ = −d.
inline Interval degiorgi_p_range(int d, double gamma) {
  detail::check_gamma(d, gamma);
  if (detail::is_coulomb(d, gamma)) return {0.5 * d, kInf};
  double lo = std::max({1.0, d / (d + gamma + 2.0), 1.0 + (d + gamma) / d});
  double hi = d / (d + gamma);
  if (!(lo < hi))
    throw AdmissibilityError("De Giorgi range empty: max(1, d/(d+γ+2), 1+(d+γ)/d) = " + detail::fmt(lo) +
                             " ≥ d/(d+γ) = " + detail::fmt(hi));
  return {lo, hi};
}

/// max(p+2/d, (d(p+1)+(2+γ)^+)/(2d+γ)) < q < p + 2p/(2d+γ); Coulomb: p+1 < q < p(1+2/d).
inline Interval q_interval(int d, double gamma, double p) {
  detail::check_gamma(d, gamma);
  if (!(p > 1.0)) throw AdmissibilityError("q interval needs p > 1, got p=" + detail::fmt(p));
  Interval I;
  if (detail::is_coulomb(d, gamma)) {
    I = {p + 1.0, p * (1.0 + 2.0 / d)};
  } else {
    double w = 2.0 * d + gamma;
    I = {std::max(p + 2.0 / d, (d * (p + 1.0) + std::max(2.0 + gamma, 0.0)) / w), p + 2.0 * p / w};
  }
  if (!(I.lo < I.hi))
    throw AdmissibilityError("q interval empty for p=" + detail::fmt(p) + ": lower " + detail::fmt(I.lo) + " ≥ upper " + detail::fmt(I.hi));
  return I;
}

/// [(d+γ)+2][1+(d+γ)/d] < d.
inline bool theorem_constraint(int d, double gamma) { return ((d + gamma) + 2.0) * (1.0 + (d + gamma) / d) < d; }

enum class ThetaMode { grad_normalized, lp_normalized };

struct Thetas {
  double theta1;
  double theta2;
  double theta3;
  double s;
};

/// Solves θ₁+θ₂+θ₃ = 1, θ₁ + θ₂/p + θ₃(d−2)/(pd) = 1/q, sθ₁ + (γ/p)θ₃ = 0 with θ₃
/// pinned by the mode: dp/(q(2d+γ)) (gradient term to power one) or p/q.
inline Thetas triple_thetas(int d, double gamma, double p, double q, ThetaMode mode) {
  detail::check_gamma(d, gamma);
  if (!(p > 1.0) || !(q > p)) throw AdmissibilityError("triple interpolation needs 1 < p < q");
  Thetas t{};
  t.theta3 = mode == ThetaMode::grad_normalized ? d * p / (q * (2.0 * d + gamma)) : p / q;
  t.theta2 = (1.0 - t.theta3 - 1.0 / q + t.theta3 * (d - 2.0) / (p * d)) / (1.0 - 1.0 / p);
  t.theta1 = 1.0 - t.theta2 - t.theta3;
  const char* names[3] = {"θ₁", "θ₂", "θ₃"};
  double vals[3] = {t.theta1, t.theta2, t.theta3};
  for (int i = 0; i < 3; ++i)
    if (!(vals[i] > 0.0 && vals[i] < 1.0))
      throw AdmissibilityError(std::string("triple interpolation: 0 < ") + names[i] + " < 1 violated (" + names[i] + " = " + detail::fmt(vals[i]) + ")");
  t.s = -(gamma / p) * t.theta3 / t.theta1;
  return t;
}

/// Ratio Q = max(2^{(q−p+1)/α}, 2^{(q(2d+γ)−pd)/(dβ)}, 2^p) of the comparison sequence E₀Q^{−n};
/// Coulomb: 2^{d(q−p+1)(p−1)/(d(q−p)−2)}.
inline double degiorgi_Q(int d, double gamma, double p, double q) {
  if (detail::is_coulomb(d, gamma)) return std::pow(2.0, d * (q - p + 1.0) * (p - 1.0) / (d * (q - p) - 2.0));
  double a = alpha_q(d, p, q), b = beta_q(d, gamma, p, q);
  if (!(a > 0.0) || !(b > 0.0)) throw AdmissibilityError("De Giorgi ratio needs α_q > 0 and β_q > 0");
  return std::max({std::pow(2.0, (q - p + 1.0) / a), std::pow(2.0, (q * (2.0 * d + gamma) - p * d) / (d * b)), std::pow(2.0, p)});
}

/// (p(d+2) − dq)/(d(p−1)), the power of max(1, sup m_{κ_q}) defining y_q.
inline double y_q_power(int d, double p, double q) { return (p * (d + 2.0) - d * q) / (d * (p - 1.0)); }

/// Every derived exponent for one parameter tuple, with admissibility verdicts.
struct ExponentSet {
  int d = 3;
  double gamma = -3.0;
  double p = 2.0;
  double q = 3.2;
  std::optional<double> r;
  double k = 0.0;
  double K0 = 1.0;

  double kappa_q = 0, s_q = 0, alpha_q = 0, beta_q = 0, nu_k = 0, nu_0 = 0;
  double theta1 = 0, theta2 = 0, theta3 = 0, theta_s = 0;
  double c0 = 0, Kp = 0, C_kgp = 0, Q = 0;
  bool coulomb = false;
  bool p_in_degiorgi_range = false;
  bool q_in_interval = false;
  bool thetas_admissible = false;
  bool theorem_constraint = false;
  std::optional<double> prodi_serrin_q;
  std::string notes;
};

/// Evaluates all formulas. Inadmissible combinations are reported in the verdict
/// fields and notes; only γ outside [−d,0) or p ≤ 1 throws.
inline ExponentSet compute(int d, double gamma, double p, double q, double k = 0.0, std::optional<double> r = std::nullopt,
                           double K0 = 1.0) {
  detail::check_gamma(d, gamma);
  if (!(p > 1.0)) throw AdmissibilityError("p > 1 violated, p=" + detail::fmt(p));
  ExponentSet e;
  e.d = d;
  e.gamma = gamma;
  e.p = p;
  e.q = q;
  e.r = r;
  e.k = k;
  e.K0 = K0;
  e.coulomb = detail::is_coulomb(d, gamma);
  std::string notes;
  auto note = [&](const std::string& s) { notes += (notes.empty() ? "" : "; ") + s; };
  try {
    e.kappa_q = kappa_q(d, gamma, p, q);
  } catch (const AdmissibilityError& ex) {
    e.kappa_q = std::numeric_limits<double>::quiet_NaN();
    note(ex.what());
  }
  try {
    e.s_q = s_q(d, gamma, p, q);
  } catch (const AdmissibilityError& ex) {
    e.s_q = std::numeric_limits<double>::quiet_NaN();
    note(ex.what());
  }
  e.alpha_q = alpha_q(d, p, q);
  e.beta_q = beta_q(d, gamma, p, q);
  e.nu_k = nu_k(d, gamma, p, k);
  e.nu_0 = nu_k(d, gamma, p, 0.0);
  e.c0 = exponents::c0(K0, p);
  e.Kp = exponents::Kp(K0, p);
  e.C_kgp = exponents::C_kgp(d, gamma, p, k);
  e.theorem_constraint = exponents::theorem_constraint(d, gamma);
  try {
    e.p_in_degiorgi_range = degiorgi_p_range(d, gamma).contains(p);
    if (!e.p_in_degiorgi_range) note("p outside the De Giorgi range");
  } catch (const AdmissibilityError& ex) {
    note(ex.what());
  }
  try {
    e.q_in_interval = q_interval(d, gamma, p).contains(q);
    if (!e.q_in_interval) note("q outside the open q interval");
  } catch (const AdmissibilityError& ex) {
    note(ex.what());
  }
  try {
    Thetas t = triple_thetas(d, gamma, p, q, ThetaMode::grad_normalized);
    e.theta1 = t.theta1;
    e.theta2 = t.theta2;
    e.theta3 = t.theta3;
    e.theta_s = t.s;
    e.thetas_admissible = true;
  } catch (const AdmissibilityError& ex) {
    note(ex.what());
  }
  try {
    e.Q = degiorgi_Q(d, gamma, p, q);
  } catch (const AdmissibilityError& ex) {
    e.Q = std::numeric_limits<double>::quiet_NaN();
    note(ex.what());
  }
  if (r) {
    try {
      e.prodi_serrin_q = prodi_serrin_q(d, gamma, *r);
    } catch (const AdmissibilityError& ex) {
      note(ex.what());
    }
  }
  e.notes = notes;
  return e;
}

/// Non-finite values become null.
inline nlohmann::json to_json(const ExponentSet& e) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  auto opt = [&](const std::optional<double>& x) { return x ? num(*x) : nlohmann::json(nullptr); };
  return {{"d", e.d},
          {"gamma", e.gamma},
          {"p", e.p},
          {"q", e.q},
          {"r", opt(e.r)},
          {"k", e.k},
          {"K0", e.K0},
          {"kappa_q", num(e.kappa_q)},
          {"s_q", num(e.s_q)},
          {"alpha_q", num(e.alpha_q)},
          {"beta_q", num(e.beta_q)},
          {"nu_k", num(e.nu_k)},
          {"nu_0", num(e.nu_0)},
          {"theta1", num(e.theta1)},
          {"theta2", num(e.theta2)},
          {"theta3", num(e.theta3)},
          {"theta_s", num(e.theta_s)},
          {"c0", num(e.c0)},
          {"K_p", num(e.Kp)},
          {"C_kgp", num(e.C_kgp)},
          {"Q", num(e.Q)},
          {"coulomb", e.coulomb},
          {"p_in_degiorgi_range", e.p_in_degiorgi_range},
          {"q_in_interval", e.q_in_interval},
          {"thetas_admissible", e.thetas_admissible},
          {"theorem_constraint", e.theorem_constraint},
          {"prodi_serrin_q", opt(e.prodi_serrin_q)},
          {"notes", e.notes}};
}

}  // namespace landau::exponents
