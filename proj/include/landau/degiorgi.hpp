#pragma once

// Level-set truncations and the De Giorgi iteration over a stored trajectory.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "landau/error.hpp"
#include "landau/exponents.hpp"
#include "landau/functionals.hpp"
#include "landau/kernels.hpp"
#include "landau/parallel.hpp"
#include "landau/trajectory.hpp"

namespace landau {

/// f_ℓ^+ = max(f − ℓ, 0).
inline ScalarField level_truncate(const ScalarField& f, double ell) {
  if (!(ell >= 0.0)) throw DomainError("level_truncate: ℓ ≥ 0 required");
  ScalarField out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) out.values[i] = std::max(f.values[i] - ell, 0.0);
  return out;
}

/// F_ℓ = ⟨v⟩^{γ/2}(f_ℓ^+)^{p/2}.
inline ScalarField level_flux(const ScalarField& f, double ell, double p, double gamma) {
  if (!(p >= 1.0)) throw DomainError("level_flux: p ≥ 1 required");
  return weighted_root(level_truncate(f, ell), gamma, p);
}

namespace detail {

struct LevelTerms {
  double lp;    ///< (1/p)‖f_ℓ^+‖_p^p
  double grad;  ///< ‖∇F_ℓ‖₂²
};

inline LevelTerms level_terms(const ScalarField& f, double ell, double p, double gamma) {
  ScalarField fl = level_truncate(f, ell);
  if (!(fl.max() > 0.0)) return {0.0, 0.0};
  return {weighted_lp(fl, 0.0, p) / p, gradient_energy(weighted_root(fl, gamma, p))};
}

inline constexpr double kTimeTol = 1e-9;

}  // namespace detail

/// E_ℓ(T₁,T₂) = sup_t [(1/p)‖f_ℓ^+(t)‖_p^p + c₀∫_{T₁}^t ‖∇F_ℓ‖₂²], the sup taken over
/// snapshots with T₁ ≤ t ≤ T₂ and the time integral by trapezoids from the first of them.
inline double energy_functional(const Trajectory& traj, double ell, double T1, double T2, double p, double gamma, double c0) {
  if (!(T1 < T2)) throw DomainError("energy_functional: T1 < T2 required");
  const double tol = detail::kTimeTol * std::max(1.0, std::abs(T2));
  std::vector<const TimedField*> window;
  for (const auto& s : traj.snapshots)
    if (s.time >= T1 - tol && s.time <= T2 + tol) window.push_back(&s);
  if (window.empty()) throw DomainError("energy_functional: no snapshots in [" + std::to_string(T1) + ", " + std::to_string(T2) + "]");
  std::vector<detail::LevelTerms> terms(window.size());
  parallel_for(window.size(), [&](std::size_t i) { terms[i] = detail::level_terms(window[i]->field, ell, p, gamma); });
  double best = terms[0].lp, integral = 0.0;
  for (std::size_t i = 1; i < window.size(); ++i) {
    integral += 0.5 * (window[i]->time - window[i - 1]->time) * (terms[i].grad + terms[i - 1].grad);
    best = std::max(best, terms[i].lp + c0 * integral);
  }
  return best;
}

struct EnergyInequalityRow {
  double time;
  double lhs;           ///< d/dt (1/p)‖f_ℓ^+‖_p^p + c₀‖∇F_ℓ‖₂²
  double rhs;           ///< sum of the three terms below
  double c_term_p;      ///< −(p−1)/p ∫ c_γ[f](f_ℓ^+)^p
  double c_term_pm1;    ///< −ℓ ∫ c_γ[f](f_ℓ^+)^{p−1}
  double weight_term;   ///< C₀ ∫⟨v⟩^{γ−2}(f_ℓ^+)^p
  double margin;        ///< lhs − rhs, ≤ 0 when the inequality holds
};

struct EnergyInequalityReport {
  double ell, p, gamma, K0, c0, C0;
  std::vector<EnergyInequalityRow> rows;
  bool holds = true;
};

/// The differential energy inequality for f_ℓ^+ at every interior snapshot,
/// time derivative by centred differences, with c₀ = 2K₀(p−1)/p² and C₀ = c₀γ²/2.
inline EnergyInequalityReport energy_inequality_check(const Trajectory& traj, double ell, double p, const Potential& pot, double K0) {
  if (!(p > 1.0)) throw DomainError("energy_inequality_check: p > 1 required");
  if (!(ell >= 0.0)) throw DomainError("energy_inequality_check: ℓ ≥ 0 required");
  EnergyInequalityReport rep{ell, p, pot.gamma, K0, exponents::c0(K0, p), 0.0, {}, true};
  rep.C0 = exponents::C0_energy(rep.c0, pot.gamma);
  const auto& snaps = traj.snapshots;
  const std::size_t m = snaps.size();
  std::vector<double> lp(m);
  parallel_for(m, [&](std::size_t i) { lp[i] = weighted_lp(level_truncate(snaps[i].field, ell), 0.0, p) / p; });
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const ScalarField& f = snaps[i].field;
    const Grid& g = *f.grid;
    ScalarField fl = level_truncate(f, ell);
    EnergyInequalityRow row{};
    row.time = snaps[i].time;
    double grad = fl.max() > 0.0 ? gradient_energy(weighted_root(fl, pot.gamma, p)) : 0.0;
    row.lhs = (lp[i + 1] - lp[i - 1]) / (snaps[i + 1].time - snaps[i - 1].time) + rep.c0 * grad;
    if (fl.max() > 0.0) {
      ScalarField c = c_operator(f, pot.gamma);
      const auto& w = g.weight(pot.gamma - 2.0);
      Accumulator a1, a2, a3;
      for (std::size_t j = 0; j < g.size(); ++j) {
        double x = fl.values[j];
        if (!(x > 0.0)) continue;
        double xp = std::pow(x, p);
        a1.add(c.values[j] * xp);
        a2.add(c.values[j] * std::pow(x, p - 1.0));
        a3.add(w[j] * xp);
      }
      const double hd = g.cell_volume();
      row.c_term_p = -(p - 1.0) / p * a1.value() * hd;
      row.c_term_pm1 = -ell * a2.value() * hd;
      row.weight_term = rep.C0 * a3.value() * hd;
    }
    row.rhs = row.c_term_p + row.c_term_pm1 + row.weight_term;
    row.margin = row.lhs - row.rhs;
    if (row.margin > 0.0) rep.holds = false;
    rep.rows.push_back(row);
  }
  return rep;
}

struct LevelSetParams {
  double p = 2.0;
  double gamma = -3.0;
  double K = 1.0;
  double t_star = 0.5;
  double T = 1.0;
  int n_levels = 8;
  double c0 = 1.0;
  /// The theorem's p range is empty for some γ (e.g. γ = −1 in d = 3); runs there
  /// can opt out of the check and are flagged in the report.
  bool enforce_p_range = true;

  void validate(int d) const {
    std::string errs;
    auto bad = [&](const std::string& s) { errs += (errs.empty() ? "" : "; ") + s; };
    if (!(t_star > 0.0 && t_star < T)) bad("0 < t_star < T violated");
    if (!(K > 0.0)) bad("K > 0 violated");
    if (!(n_levels >= 1)) bad("n_levels ≥ 1 violated");
    if (!(c0 > 0.0)) bad("c0 > 0 violated");
    if (enforce_p_range) {
      try {
        if (!exponents::degiorgi_p_range(d, gamma).contains(p)) bad("p outside the De Giorgi p range");
      } catch (const AdmissibilityError& e) {
        bad(e.what());
      }
    }
    if (!errs.empty()) throw AdmissibilityError("level-set parameters: " + errs);
  }
};

/// Levels ℓ_n = K(1 − 2^{−n}).
inline double level_n(double K, int n) { return K * (1.0 - std::ldexp(1.0, -n)); }

/// Times t_n = t_*(1 − 2^{−(n+1)}).
inline double time_n(double t_star, int n) { return t_star * (1.0 - std::ldexp(1.0, -(n + 1))); }

/// Snapshot schedule for De Giorgi runs: `count` uniform times in [t_*/2, T] plus every t_n.
inline std::vector<double> degiorgi_snapshot_times(double t_star, double T, int n_levels = 8, int count = 64) {
  std::vector<double> ts;
  for (int i = 0; i < count; ++i) ts.push_back(0.5 * t_star + (T - 0.5 * t_star) * i / (count - 1));
  for (int n = 0; n <= n_levels; ++n) ts.push_back(time_n(t_star, n));
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), ts.end());
  return ts;
}

struct Thresholds {
  bool coulomb = false;
  double y_q = 1.0;
  double K1 = 0.0;
  double K2 = 0.0;
  double K3 = std::numeric_limits<double>::quiet_NaN();  ///< absent in the Coulomb case
  double C = 1.0;

  double K() const { return coulomb ? std::max(K1, K2) : std::max({K1, K2, K3}); }
};

/// K₁, K₂, K₃ (or K̃₁, K̃₂ for Coulomb) with y_q = max(1, m_κ sup)^{(p(d+2)−dq)/(d(p−1))}.
inline Thresholds threshold_K(double E0, double m_kappa_sup, double t_star, const exponents::ExponentSet& e, double C = 1.0) {
  if (!(E0 > 0.0)) throw DomainError("threshold_K: E0 > 0 required");
  if (!(t_star > 0.0)) throw DomainError("threshold_K: t_star > 0 required");
  const int d = e.d;
  const double p = e.p, q = e.q, gamma = e.gamma;
  if (!(q > p)) throw AdmissibilityError("threshold_K: q > p required");
  Thresholds t;
  t.coulomb = e.coulomb;
  t.C = C;
  t.y_q = std::pow(std::max(1.0, m_kappa_sup), exponents::y_q_power(d, p, q));
  if (e.coulomb) {
    const double a = (d * (q - p) - 2.0) / (d * (p - 1.0));
    t.K1 = C * std::pow(t.y_q, 1.0 / (q - p)) * std::pow(E0, a / (q - p)) * std::pow(t_star, 1.0 / (p - q));
    t.K2 = std::max(1.0, C * std::pow(t.y_q, 1.0 / (q - 1.0 - p)) * std::pow(E0, a / (q - 1.0 - p)));
  } else {
    const double den = (2.0 * d + gamma) * q - d * (1.0 + p);
    t.K1 = C * std::pow(t.y_q, 1.0 / (q - p)) * std::pow(E0, e.alpha_q / (q - p)) * std::pow(t_star, 1.0 / (p - q));
    t.K2 = C * std::pow(t.y_q, d / den) * std::pow(E0, d * e.beta_q / den);
    t.K3 = C * std::pow(E0, 1.0 / p);
  }
  return t;
}

/// Right-hand side of the one-step recursion E_{n+1} ≤ C·R_n with C = 1.
inline double recursion_bound(int n, double En, double K, double t_star, double y_q, const exponents::ExponentSet& e) {
  const int d = e.d;
  const double p = e.p, q = e.q, gamma = e.gamma;
  const double m = n + 1.0;
  if (e.coulomb) {
    const double a = (d * (q - p) - 2.0) / (d * (p - 1.0));
    return y_q * std::pow(K, p - q) * std::pow(2.0, m * (q - p + 1.0)) * (1.0 / t_star + (1.0 + K * K) / K) *
           std::pow(En, 1.0 + a);
  }
  const double s = (2.0 * d + gamma) / d;
  return y_q * (std::pow(K, p - q) / t_star * std::pow(2.0, m * (q - p + 1.0)) * std::pow(En, 1.0 + e.alpha_q) +
                std::pow(K, 1.0 + p - s * q) * std::pow(2.0, (q * s - p) * m) * std::pow(En, 1.0 + e.beta_q)) +
         std::pow(K, -2.0 * p / d) * std::pow(2.0, m * 2.0 * p / d) * std::pow(En, (d + 2.0) / d);
}

enum class DecayVerdict { decay_confirmed, decay_failed };

inline const char* to_string(DecayVerdict v) { return v == DecayVerdict::decay_confirmed ? "decay_confirmed" : "decay_failed"; }

struct LevelSetReport {
  LevelSetParams params;
  std::vector<double> levels;
  std::vector<double> times;
  std::vector<double> energies;
  std::vector<double> comparison;  ///< E₀Q^{−n}
  double Q = 0.0;
  std::optional<double> Q_fit;     ///< absent when fewer than two E_n are positive
  std::optional<double> C_fit;     ///< minimal C making the recursion hold for all n with E_n > 0
  double m_kappa_sup = 0.0;
  Thresholds thresholds;
  DecayVerdict verdict = DecayVerdict::decay_failed;
  std::string notes;
};

/// E_n = E_{ℓ_n}(t_n, T) for n = 0..n_levels, the comparison sequence, the fitted
/// decay ratio and recursion constant, and the thresholds from E₀.
inline LevelSetReport iterate(const Trajectory& traj, const LevelSetParams& params, const exponents::ExponentSet& e,
                              double threshold_constant = 1.0) {
  params.validate(e.d);
  if (e.p != params.p || e.gamma != params.gamma) throw AdmissibilityError("iterate: exponent set differs from level-set parameters");
  const double tol = detail::kTimeTol * std::max(1.0, params.T);
  if (traj.snapshots.empty() || traj.start_time() > 0.5 * params.t_star + tol || traj.end_time() < params.T - tol)
    throw DomainError("iterate: trajectory must cover [t_star/2, T] = [" + std::to_string(0.5 * params.t_star) + ", " +
                      std::to_string(params.T) + "], have [" + std::to_string(traj.start_time()) + ", " +
                      std::to_string(traj.end_time()) + "]");
  LevelSetReport rep;
  rep.params = params;
  const int N = params.n_levels;
  for (int n = 0; n <= N; ++n) {
    rep.levels.push_back(level_n(params.K, n));
    rep.times.push_back(time_n(params.t_star, n));
  }
  rep.energies.assign(N + 1, 0.0);
  for (int n = 0; n <= N; ++n)
    rep.energies[n] = energy_functional(traj, rep.levels[n], rep.times[n], params.T, params.p, params.gamma, params.c0);

  std::string notes;
  auto note = [&](const std::string& s) { notes += (notes.empty() ? "" : "; ") + s; };
  if (!params.enforce_p_range && !e.p_in_degiorgi_range) note("p outside the theorem's p range");
  if (!e.q_in_interval) note("q outside the q interval");

  const double E0 = rep.energies[0];
  try {
    rep.Q = exponents::degiorgi_Q(e.d, e.gamma, e.p, e.q);
  } catch (const AdmissibilityError& ex) {
    rep.Q = std::numeric_limits<double>::quiet_NaN();
    note(ex.what());
  }
  for (int n = 0; n <= N; ++n) rep.comparison.push_back(E0 * std::pow(rep.Q, -n));

  // least squares of log E_n on n over the leading run of positive values
  std::vector<double> xs, ys;
  for (int n = 0; n <= N && rep.energies[n] > 0.0; ++n) {
    xs.push_back(n);
    ys.push_back(std::log(rep.energies[n]));
  }
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= xs.size();
    my /= xs.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    rep.Q_fit = std::exp(-sxy / sxx);
  }

  for (const auto& s : traj.snapshots)
    if (s.time >= 0.5 * params.t_star - tol && s.time <= params.T + tol && std::isfinite(e.kappa_q))
      rep.m_kappa_sup = std::max(rep.m_kappa_sup, moment(s.field, e.kappa_q));
  if (!std::isfinite(e.kappa_q)) note("κ_q undefined; y_q uses m_κ = 1");

  if (E0 > 0.0) {
    rep.thresholds = threshold_K(E0, rep.m_kappa_sup, params.t_star, e, threshold_constant);
    double cfit = 0.0;
    bool any = false;
    for (int n = 0; n < N; ++n) {
      if (!(rep.energies[n] > 0.0)) break;
      double R = recursion_bound(n, rep.energies[n], params.K, params.t_star, rep.thresholds.y_q, e);
      if (R > 0.0 && std::isfinite(R)) {
        cfit = std::max(cfit, rep.energies[n + 1] / R);
        any = true;
      }
    }
    if (any) rep.C_fit = cfit;
  } else {
    note("E0 = 0: thresholds not evaluated");
  }

  bool monotone = true;
  for (int n = 1; n <= N; ++n)
    if (rep.energies[n] > rep.energies[n - 1] * (1.0 + 1e-12)) monotone = false;
  rep.verdict = (monotone && rep.energies[N] <= 0.01 * E0) ? DecayVerdict::decay_confirmed : DecayVerdict::decay_failed;
  rep.notes = notes;
  return rep;
}

namespace detail {
inline nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }
inline nlohmann::json number_or_null(const std::optional<double>& x) {
  return x ? number_or_null(*x) : nlohmann::json(nullptr);
}
}  // namespace detail

inline nlohmann::json to_json(const LevelSetReport& r) {
  using detail::number_or_null;
  nlohmann::json th = {{"coulomb", r.thresholds.coulomb}, {"y_q", r.thresholds.y_q}, {"C", r.thresholds.C},
                       {"K1", number_or_null(r.thresholds.K1)}, {"K2", number_or_null(r.thresholds.K2)},
                       {"K3", number_or_null(r.thresholds.K3)}, {"K", number_or_null(r.thresholds.K())}};
  std::vector<nlohmann::json> comp;
  for (double x : r.comparison) comp.push_back(number_or_null(x));
  return {{"params",
           {{"p", r.params.p}, {"gamma", r.params.gamma}, {"K", r.params.K}, {"t_star", r.params.t_star},
            {"T", r.params.T}, {"n_levels", r.params.n_levels}, {"c0", r.params.c0}}},
          {"levels", r.levels},
          {"times", r.times},
          {"energies", r.energies},
          {"comparison", comp},
          {"Q", number_or_null(r.Q)},
          {"Q_fit", number_or_null(r.Q_fit)},
          {"C_fit", number_or_null(r.C_fit)},
          {"m_kappa_sup", r.m_kappa_sup},
          {"thresholds", th},
          {"verdict", to_string(r.verdict)},
          {"notes", r.notes}};
}

inline const char* kLevelSetCsvHeader = "n,ell_n,t_n,E_n,E_star_n";

inline void write_level_set_csv(const std::string& path, const LevelSetReport& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << kLevelSetCsvHeader << '\n';
  char buf[160];
  for (std::size_t n = 0; n < r.levels.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", n, r.levels[n], r.times[n], r.energies[n], r.comparison[n]);
    out << buf;
  }
}

}  // namespace landau
