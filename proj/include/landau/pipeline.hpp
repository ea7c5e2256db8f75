#pragma once

// L^p appearance, the M_{k,p} balance and the end-to-end chain
// Prodi-Serrin integral → L^p → dissipation budget → De Giorgi → L^∞.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "landau/degiorgi.hpp"
#include "landau/error.hpp"
#include "landau/exponents.hpp"
#include "landau/functionals.hpp"
#include "landau/solver.hpp"

namespace landau {

struct LpAppearance {
  double p, k;
  double sup_value;            ///< sup over snapshots of M_{k,p}
  double fitted_exponent;      ///< log-log slope of the upper envelope on the window
  double theoretical_exponent; ///< −d(p−1)/2
  double window_lo, window_hi;
  std::size_t window_points;
  std::vector<double> times;   ///< all snapshots with t > 0
  std::vector<double> values;  ///< M_{k,p}(t)
  std::vector<double> margins; ///< M_{k,p}(t)·min(1, t^{d(p−1)/2})
  double margin_max, margin_median;

  bool exponent_ok(double slack = 0.3) const { return fitted_exponent >= theoretical_exponent - slack; }
  bool margin_finite() const { return std::isfinite(margin_max); }
  bool margin_within(double factor = 2.0) const { return margin_max <= factor * margin_median; }
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace detail

/// Fits the upper envelope sup_{s≥t} M_{k,p}(s) on [t₁, t₂] against t on log-log axes.
/// Needs at least four snapshots inside the window.
inline LpAppearance lp_appearance_check(const Trajectory& traj, double p, double k, const exponents::ExponentSet& e,
                                        double t1, double t2 = 0.1) {
  if (!(p > 1.0)) throw DomainError("lp_appearance_check: p > 1 required");
  if (!(t1 > 0.0 && t1 < t2)) throw DomainError("lp_appearance_check: 0 < t1 < t2 required");
  const int d = e.d;
  const double half = 0.5 * d * (p - 1.0);
  LpAppearance out{p, k, 0.0, 0.0, -half, t1, t2, 0, {}, {}, {}, 0.0, 0.0};
  std::vector<double> all(traj.snapshots.size());
  parallel_for(all.size(), [&](std::size_t i) { all[i] = weighted_lp(traj.snapshots[i].field, k, p); });
  for (std::size_t i = 0; i < all.size(); ++i) {
    out.sup_value = std::max(out.sup_value, all[i]);
    double t = traj.snapshots[i].time;
    if (!(t > 0.0)) continue;
    out.times.push_back(t);
    out.values.push_back(all[i]);
    out.margins.push_back(all[i] * std::min(1.0, std::pow(t, half)));
  }
  const double tol = detail::kTimeTol * std::max(1.0, t2);
  std::vector<double> wt, wv;
  for (std::size_t i = 0; i < out.times.size(); ++i)
    if (out.times[i] >= t1 - tol && out.times[i] <= t2 + tol) {
      wt.push_back(out.times[i]);
      wv.push_back(out.values[i]);
    }
  out.window_points = wt.size();
  if (wt.size() < 4)
    throw DomainError("lp_appearance_check: " + std::to_string(wt.size()) + " snapshots in the early window [" +
                      std::to_string(t1) + ", " + std::to_string(t2) + "], need at least 4");
  std::vector<double> lx(wt.size()), ly(wt.size());
  double run = 0.0;
  for (std::size_t j = wt.size(); j-- > 0;) {
    run = std::max(run, wv[j]);
    lx[j] = std::log(wt[j]);
    ly[j] = std::log(run);
  }
  out.fitted_exponent = detail::least_squares_slope(lx, ly);
  out.margin_max = out.margins.empty() ? 0.0 : *std::max_element(out.margins.begin(), out.margins.end());
  out.margin_median = detail::median(out.margins);
  return out;
}

struct LpBalanceRow {
  double time;
  double lhs;    ///< dM_{k,p}/dt + 2K(p)D_{k+γ,p}
  double rhs;    ///< K(p)(k+γ)²M_{k+γ,p} − C_{k,γ,p}Σ_i∫⟨v⟩^{k−i}c_{γ+i}[f]f^p
  double scale;  ///< largest magnitude among the individual terms
  double margin; ///< rhs − lhs
};

struct LpBalance {
  double p, k, K0, Kp, C_kgp;
  std::vector<LpBalanceRow> rows;

  double worst_relative_margin() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) w = std::min(w, r.scale > 0.0 ? r.margin / r.scale : 0.0);
    return w;
  }
};

/// Both sides of the M_{k,p} evolution inequality at interior snapshots
/// (centred time difference). K0 is the coercivity constant to use.
inline LpBalance lp_balance_check(const Trajectory& traj, double p, double k, const Potential& pot, double K0) {
  if (!(p > 1.0)) throw DomainError("lp_balance_check: p > 1 required");
  if (!(k >= 0.0)) throw DomainError("lp_balance_check: k ≥ 0 required");
  const int d = pot.d;
  const double gamma = pot.gamma;
  LpBalance out{p, k, K0, exponents::Kp(K0, p), exponents::C_kgp(d, gamma, p, k), {}};
  const auto& snaps = traj.snapshots;
  const std::size_t m = snaps.size();
  std::vector<double> M(m);
  parallel_for(m, [&](std::size_t i) { M[i] = weighted_lp(snaps[i].field, k, p); });
  for (std::size_t i = 1; i + 1 < m; ++i) {
    const ScalarField& f = snaps[i].field;
    const Grid& g = *f.grid;
    const double dMdt = (M[i + 1] - M[i - 1]) / (snaps[i + 1].time - snaps[i - 1].time);
    const double diss = 2.0 * out.Kp * dissipation(f, k + gamma, p);
    const double weight = out.Kp * (k + gamma) * (k + gamma) * weighted_lp(f, k + gamma, p);
    double source = 0.0, biggest = std::max({std::abs(dMdt), diss, weight});
    for (int j = 0; j <= 2; ++j) {
      ScalarField c = c_operator(f, gamma + j);
      const auto& w = g.weight(k - j);
      Accumulator acc;
      for (std::size_t n = 0; n < g.size(); ++n) acc.add(w[n] * c.values[n] * detail::positive_power(f.values[n], p));
      double term = -out.C_kgp * acc.value() * g.cell_volume();
      source += term;
      biggest = std::max(biggest, std::abs(term));
    }
    LpBalanceRow row{snaps[i].time, dMdt + diss, weight + source, biggest, 0.0};
    row.margin = row.rhs - row.lhs;
    out.rows.push_back(row);
  }
  return out;
}

struct PipelineParams {
  double p = 2.0;
  double q = 0.0;  ///< De Giorgi exponent; 0 selects the midpoint of the q interval
  /// Prodi-Serrin time exponent; the space exponent follows from 2/r + d/q = d+2+γ.
  /// 0 picks r so that the space exponent sits mid-range (twice its lower bound for γ = −d).
  double r = 0.0;
  double k = 0.0;
  double t_star = 0.1;
  std::optional<double> K;     ///< level height; default 1.05·sup_{[t*,T]} max f
  int n_levels = 8;
  double window_lo = 0.0;      ///< early L^p window; 0 selects 3·dt₀
  double window_hi = 0.1;
  std::vector<double> table_ps = {1.5, 2.0, 3.0};
  std::string scenario = "scenario";
};

struct StageResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct LpTableRow {
  double p;
  double sup_value;
  double fitted_exponent;
  double theoretical_exponent;
};

struct PipelineReport {
  std::string scenario;
  PipelineParams params;
  std::optional<exponents::ExponentSet> exponents;
  std::optional<double> q_ps;
  bool pair_admissible = false;
  std::optional<double> prodi_serrin_integral;
  std::optional<LpAppearance> lp;
  std::vector<LpTableRow> lp_table;
  std::optional<double> dissipation_budget;
  std::optional<LevelSetReport> level_sets;
  std::optional<double> linf_sup;           ///< sup over snapshots in [t*, T] of max f
  std::vector<double> finite_moments_at_0;  ///< moment orders with finite m_s(0) on the grid
  std::vector<StageResult> stages;
  bool passed = false;
};

namespace detail {

inline std::vector<double> pipeline_snapshot_times(double t_end, double t_star, int n_levels, double lo, double hi) {
  std::vector<double> ts = degiorgi_snapshot_times(t_star, t_end, n_levels, 64);
  for (int i = 0; i < 32; ++i) ts.push_back(t_end * i / 31.0);
  hi = std::min(hi, t_end);
  if (lo > 0.0 && lo < hi)
    for (int i = 0; i < 16; ++i) ts.push_back(lo * std::pow(hi / lo, i / 15.0));
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), ts.end());
  std::vector<double> out;
  for (double t : ts)
    if (t >= 0.0 && t <= t_end) out.push_back(t);
  return out;
}

}  // namespace detail

/// Runs the chain in order and stops at the first failing stage. Stage-0 rejects
/// (p, q, r, k) that violate the exponent constraints, naming the constraint.
/// Errors raised inside a stage are re-thrown with the stage name prefixed.
inline PipelineReport run_pipeline(SolverConfig cfg, const PipelineParams& pp, Trajectory* keep = nullptr) {
  PipelineReport rep;
  rep.scenario = pp.scenario;
  rep.params = pp;
  const int d = cfg.pot.d;
  const double gamma = cfg.pot.gamma;
  auto stage = [&](const std::string& name, bool ok, const std::string& detail) {
    rep.stages.push_back({name, ok, detail});
    return ok;
  };
  auto tagged = [](const std::string& name, auto&& fn) {
    try {
      return fn();
    } catch (const BlowUpError& e) {
      throw BlowUpError("[" + name + "] " + e.what(), e.time(), e.sup_norm());
    } catch (const AdmissibilityError& e) {
      throw AdmissibilityError("[" + name + "] " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("[" + name + "] " + e.what());
    }
  };

  // stage 0: admissibility
  PipelineParams P = pp;
  {
    std::string errs;
    auto bad = [&](const std::string& s) { errs += (errs.empty() ? "" : "; ") + s; };
    if (!(P.p > 1.0)) bad("p > 1 violated");
    if (!(P.k >= 0.0)) bad("k ≥ 0 violated");
    if (!(P.t_star > 0.0 && P.t_star < cfg.t_end)) bad("0 < t_star < T violated");
    if (P.p > 1.0) {
      try {
        exponents::Interval I = exponents::q_interval(d, gamma, P.p);
        if (P.q == 0.0) P.q = 0.5 * (I.lo + I.hi);
        if (!I.contains(P.q))
          bad("q interval violated: q=" + exponents::detail::fmt(P.q) + " ∉ (" + exponents::detail::fmt(I.lo) + ", " +
              exponents::detail::fmt(I.hi) + ")");
      } catch (const AdmissibilityError& e) {
        bad(e.what());
      }
    }
    if (P.r == 0.0) {
      const double qlo = std::max(1.0, d / (d + gamma + 2.0));
      const double qmid = exponents::detail::is_coulomb(d, gamma) ? 2.0 * qlo : 0.5 * (qlo + d / (d + gamma));
      P.r = exponents::prodi_serrin_r(d, gamma, qmid);
    }
    try {
      rep.q_ps = exponents::prodi_serrin_q(d, gamma, P.r);
    } catch (const AdmissibilityError& e) {
      bad(std::string("Prodi-Serrin pairing: ") + e.what());
    }
    if (!errs.empty()) throw AdmissibilityError("[admissibility] " + errs);
    rep.params = P;
    rep.pair_admissible = true;
    stage("admissibility", true,
          "q=" + exponents::detail::fmt(P.q) + ", (q_PS, r)=(" + exponents::detail::fmt(*rep.q_ps) + ", " +
              exponents::detail::fmt(P.r) + ")");
  }

  // stage 1: solver run
  ScalarField f0 = tagged("solver", [&] { return discretize_initial(cfg.initial, cfg.grid); });
  CoefficientFields c0 = coefficient_fields(f0, cfg.pot);
  const double dt0 = stable_dt(f0, c0, cfg);
  for (double s : {0.0, 2.0, 4.0, 6.0, 8.0})
    if (std::isfinite(moment(f0, s))) rep.finite_moments_at_0.push_back(s);
  const double lo = P.window_lo > 0.0 ? P.window_lo : 3.0 * dt0;
  if (!(lo < P.window_hi))
    throw DomainError("[lp_appearance] early window empty: start " + std::to_string(lo) + " (3·dt₀ unless set) ≥ window_hi " +
                      std::to_string(P.window_hi) + "; refine the grid or raise window_hi");
  rep.params.window_lo = lo;
  if (cfg.snapshot_times.empty())
    cfg.snapshot_times = detail::pipeline_snapshot_times(cfg.t_end, P.t_star, P.n_levels, lo, P.window_hi);
  Trajectory traj = tagged("solver", [&] { return run(cfg, f0); });
  struct Keep {
    Trajectory* dst;
    Trajectory& src;
    ~Keep() {
      if (dst) *dst = std::move(src);
    }
  } guard{keep, traj};
  if (!stage("solver", !traj.blowup, traj.blowup.value_or(std::to_string(traj.snapshots.size()) + " snapshots"))) return rep;

  // stage 2: Prodi-Serrin integral
  TimeIntegral ps = tagged("prodi_serrin", [&] { return prodi_serrin_integral(traj, *rep.q_ps, P.r, cfg.pot); });
  rep.prodi_serrin_integral = ps.value;
  if (!stage("prodi_serrin", std::isfinite(ps.value), "integral " + std::to_string(ps.value))) return rep;

  // stage 3: L^p appearance
  exponents::ExponentSet e = exponents::compute(d, gamma, P.p, P.q, P.k, P.r);
  rep.lp = tagged("lp_appearance", [&] { return lp_appearance_check(traj, P.p, P.k, e, lo, P.window_hi); });
  std::vector<double> ps_list = P.table_ps;
  if (std::find(ps_list.begin(), ps_list.end(), P.p) == ps_list.end()) ps_list.push_back(P.p);
  std::sort(ps_list.begin(), ps_list.end());
  for (double pv : ps_list) {
    LpAppearance a = tagged("lp_appearance", [&] { return lp_appearance_check(traj, pv, 0.0, e, lo, P.window_hi); });
    rep.lp_table.push_back({pv, a.sup_value, a.fitted_exponent, a.theoretical_exponent});
  }
  const bool lp_ok = std::isfinite(rep.lp->sup_value) && rep.lp->exponent_ok() && rep.lp->margin_finite();
  if (!stage("lp_appearance", lp_ok,
             "slope " + std::to_string(rep.lp->fitted_exponent) + " vs " + std::to_string(rep.lp->theoretical_exponent)))
    return rep;

  // stage 4: dissipation budget ∫ D_{k+γ,p} over [t*/2, T]
  {
    const double tol = detail::kTimeTol * std::max(1.0, cfg.t_end);
    std::vector<std::pair<double, double>> pts;
    for (const auto& s : traj.snapshots)
      if (s.time >= 0.5 * P.t_star - tol) pts.push_back({s.time, dissipation(s.field, P.k + gamma, P.p)});
    double budget = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) budget += 0.5 * (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second);
    rep.dissipation_budget = budget;
    if (!stage("dissipation_budget", std::isfinite(budget) && pts.size() >= 2, std::to_string(budget))) return rep;
  }

  // stage 5: De Giorgi
  double sup_max = 0.0, K0 = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.snapshots) {
    if (s.time >= P.t_star - detail::kTimeTol) sup_max = std::max(sup_max, s.field.max());
    if (s.time >= 0.5 * P.t_star - detail::kTimeTol) {
      Coercivity c = coercivity_estimate(coefficient_fields(s.field, cfg.pot), cfg.pot);
      K0 = std::min(K0, c.K0);
    }
  }
  if (!(K0 > 0.0)) {
    stage("degiorgi", false, "coercivity constant K0 = " + std::to_string(K0) + " ≤ 0");
    return rep;
  }
  LevelSetParams lsp;
  lsp.p = P.p;
  lsp.gamma = gamma;
  lsp.K = P.K.value_or(1.05 * sup_max);
  lsp.t_star = P.t_star;
  lsp.T = cfg.t_end;
  lsp.n_levels = P.n_levels;
  lsp.c0 = exponents::c0(K0, P.p);
  try {
    lsp.enforce_p_range = exponents::degiorgi_p_range(d, gamma).contains(P.p);
  } catch (const AdmissibilityError&) {
    lsp.enforce_p_range = false;
  }
  e = exponents::compute(d, gamma, P.p, P.q, P.k, P.r, K0);
  rep.exponents = e;
  rep.level_sets = tagged("degiorgi", [&] { return iterate(traj, lsp, e); });
  if (!stage("degiorgi", rep.level_sets->verdict == DecayVerdict::decay_confirmed, to_string(rep.level_sets->verdict)))
    return rep;

  // stage 6: L^∞ on [t*, T]
  rep.linf_sup = sup_max;
  rep.passed = stage("linf", std::isfinite(sup_max) && sup_max <= lsp.K, "sup max f = " + std::to_string(sup_max));
  return rep;
}

inline nlohmann::json to_json(const LpAppearance& a) {
  return {{"p", a.p},
          {"k", a.k},
          {"sup_value", a.sup_value},
          {"fitted_exponent", detail::number_or_null(a.fitted_exponent)},
          {"theoretical_exponent", a.theoretical_exponent},
          {"window", {a.window_lo, a.window_hi}},
          {"window_points", a.window_points},
          {"margin_max", detail::number_or_null(a.margin_max)},
          {"margin_median", detail::number_or_null(a.margin_median)}};
}

inline nlohmann::json to_json(const PipelineReport& r) {
  using detail::number_or_null;
  nlohmann::json j;
  j["scenario"] = r.scenario;
  j["params"] = {{"p", r.params.p},         {"q", r.params.q},           {"r", r.params.r},
                 {"k", r.params.k},         {"t_star", r.params.t_star}, {"n_levels", r.params.n_levels},
                 {"window_lo", r.params.window_lo}, {"window_hi", r.params.window_hi}};
  j["prodi_serrin"] = {{"q", r.q_ps ? number_or_null(*r.q_ps) : nlohmann::json(nullptr)},
                       {"r", r.params.r},
                       {"admissible", r.pair_admissible},
                       {"integral", r.prodi_serrin_integral ? number_or_null(*r.prodi_serrin_integral) : nlohmann::json(nullptr)}};
  j["lp_appearance"] = r.lp ? to_json(*r.lp) : nlohmann::json(nullptr);
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : r.lp_table)
    table.push_back({{"p", row.p},
                     {"sup_M0p", row.sup_value},
                     {"fitted_exponent", number_or_null(row.fitted_exponent)},
                     {"theoretical_exponent", row.theoretical_exponent}});
  j["lp_table"] = table;
  j["dissipation_budget"] = r.dissipation_budget ? number_or_null(*r.dissipation_budget) : nlohmann::json(nullptr);
  j["level_sets"] = r.level_sets ? to_json(*r.level_sets) : nlohmann::json(nullptr);
  j["linf_sup"] = r.linf_sup ? number_or_null(*r.linf_sup) : nlohmann::json(nullptr);
  j["finite_moments_at_0"] = r.finite_moments_at_0;
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : r.stages) st.push_back({{"stage", s.name}, {"passed", s.passed}, {"detail", s.detail}});
  j["stages"] = st;
  j["passed"] = r.passed;
  return j;
}

inline const char* kLpSeriesCsvHeader = "t,M_kp,margin";

inline void write_lp_series_csv(const std::filesystem::path& path, const LpAppearance& a) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << kLpSeriesCsvHeader << '\n';
  char buf[128];
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", a.times[i], a.values[i], a.margins[i]);
    out << buf;
  }
}

inline const char* kLpTableCsvHeader = "p,sup_M0p,fitted_exponent,theoretical_exponent";

inline void write_lp_table_csv(const std::filesystem::path& path, const std::vector<LpTableRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << kLpTableCsvHeader << '\n';
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.p, r.sup_value, r.fitted_exponent, r.theoretical_exponent);
    out << buf;
  }
}

}  // namespace landau
