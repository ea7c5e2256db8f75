#pragma once

// Run configuration for the command-line driver: JSON in, validated struct out.

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "landau/error.hpp"
#include "landau/exponents.hpp"
#include "landau/solver.hpp"

namespace landau {

/// Raised for configuration problems; the message lists every violation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string subcommand;
  int d = 3;
  double gamma = -2.0;
  int n = 32;
  double L = 8.0;
  double t_end = 1.0;
  double dt_safety = 0.4;
  int snapshot_count = 11;  ///< uniform snapshots over [0, t_end] when snapshot_times is empty
  std::vector<double> snapshot_times;
  nlohmann::json initial = {{"kind", "maxwellian"}};
  std::string out_dir;
  unsigned seed = 20240611u;
  double p = 2.0;
  double q = 0.0;  ///< 0: midpoint of the q interval
  double r = 0.0;  ///< 0: automatic Prodi-Serrin pairing
  double k = 0.0;
  double t_star = 0.1;
  std::optional<double> K;
  int n_levels = 8;
  std::vector<double> epsilons = {0.5, 0.1, 0.02};
  double window_lo = 0.0;
  double window_hi = 0.1;
  std::string trajectory;
  std::string scenario = "scenario";

  Potential potential() const { return Potential(gamma, d); }
  InitialCondition initial_condition() const;
  SolverConfig solver_config() const;
};

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "d",         "gamma",   "n",        "L",      "t_end",       "dt_safety", "snapshot_count", "snapshot_times",
      "initial",   "out_dir", "seed",     "p",      "q",           "r",         "k",              "t_star",
      "K",         "n_levels", "epsilons", "window", "trajectory", "scenario"};
  return keys;
}

inline InitialCondition RunConfig::initial_condition() const {
  const std::string kind = initial.value("kind", "maxwellian");
  if (kind == "maxwellian") return Maxwellian{initial.value("rho", 1.0), initial.value("T", 1.0)};
  if (kind == "narrow_gaussian") return NarrowGaussian{initial.value("rho", 1.0), initial.value("T", 0.01)};
  if (kind == "bimaxwellian") {
    BiMaxwellian b;
    b.rho1 = initial.value("rho1", 0.5);
    b.rho2 = initial.value("rho2", 0.5);
    b.T1 = initial.value("T1", 1.0);
    b.T2 = initial.value("T2", 1.0);
    b.u1 = initial.value("u1", std::vector<double>{1.5, 0.0, 0.0});
    b.u2 = initial.value("u2", std::vector<double>{-1.5, 0.0, 0.0});
    return b;
  }
  if (kind == "from_file") return FromFile{initial.at("path").get<std::string>()};
  throw ConfigError("initial.kind: unknown kind '" + kind + "'");
}

inline SolverConfig RunConfig::solver_config() const {
  SolverConfig cfg{.pot = potential(),
                   .grid = make_grid(n, L, d),
                   .dt_safety = dt_safety,
                   .t_end = t_end,
                   .snapshot_times = {},
                   .initial = initial_condition()};
  if (!snapshot_times.empty()) {
    cfg.snapshot_times = snapshot_times;
  } else if (snapshot_count >= 2) {
    for (int i = 0; i < snapshot_count; ++i) cfg.snapshot_times.push_back(t_end * i / (snapshot_count - 1));
  }
  return cfg;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = {{"d", c.d},
                      {"gamma", c.gamma},
                      {"n", c.n},
                      {"L", c.L},
                      {"t_end", c.t_end},
                      {"dt_safety", c.dt_safety},
                      {"snapshot_count", c.snapshot_count},
                      {"snapshot_times", c.snapshot_times},
                      {"initial", c.initial},
                      {"out_dir", c.out_dir},
                      {"seed", c.seed},
                      {"p", c.p},
                      {"q", c.q},
                      {"r", c.r},
                      {"k", c.k},
                      {"t_star", c.t_star},
                      {"K", c.K ? nlohmann::json(*c.K) : nlohmann::json(nullptr)},
                      {"n_levels", c.n_levels},
                      {"epsilons", c.epsilons},
                      {"window", {c.window_lo, c.window_hi}},
                      {"trajectory", c.trajectory},
                      {"scenario", c.scenario}};
  return j;
}

/// Validates a JSON configuration for the given subcommand. Unknown keys, type
/// errors and every violated constraint are collected into one ConfigError.
inline RunConfig parse_config(const nlohmann::json& j, const std::string& subcommand) {
  std::vector<std::string> errs;
  auto bad = [&](const std::string& s) { errs.push_back(s); };
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!config_keys().count(key)) bad("unknown key '" + key + "'");

  RunConfig c;
  c.subcommand = subcommand;
  auto get = [&](const char* key, auto& dst) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    try {
      j.at(key).get_to(dst);
    } catch (const nlohmann::json::exception&) {
      bad(std::string(key) + ": wrong type");
    }
  };
  get("d", c.d);
  get("gamma", c.gamma);
  get("n", c.n);
  get("L", c.L);
  get("t_end", c.t_end);
  get("dt_safety", c.dt_safety);
  get("snapshot_count", c.snapshot_count);
  get("snapshot_times", c.snapshot_times);
  get("out_dir", c.out_dir);
  get("seed", c.seed);
  get("p", c.p);
  get("q", c.q);
  get("r", c.r);
  get("k", c.k);
  get("t_star", c.t_star);
  get("n_levels", c.n_levels);
  get("epsilons", c.epsilons);
  get("trajectory", c.trajectory);
  get("scenario", c.scenario);
  if (j.contains("K") && !j.at("K").is_null()) {
    double K = 0.0;
    get("K", K);
    c.K = K;
  }
  if (j.contains("window")) {
    std::vector<double> w;
    get("window", w);
    if (w.size() == 2) {
      c.window_lo = w[0];
      c.window_hi = w[1];
    } else {
      bad("window: expected [lo, hi]");
    }
  }
  if (j.contains("initial")) {
    if (!j.at("initial").is_object()) {
      bad("initial: expected an object");
    } else {
      c.initial = j.at("initial");
      static const std::set<std::string> ikeys = {"kind", "rho", "T", "rho1", "u1", "T1", "rho2", "u2", "T2", "path"};
      for (const auto& [key, _] : c.initial.items())
        if (!ikeys.count(key)) bad("unknown key 'initial." + key + "'");
    }
  }

  // physics gates
  if (!(c.d >= 2)) bad("d ≥ 2");
  const bool gamma_ok = c.gamma >= -c.d && c.gamma < 0.0;
  if (!gamma_ok) bad("γ ∈ [−d,0) violated: γ=" + exponents::detail::fmt(c.gamma) + ", d=" + std::to_string(c.d));
  if (!(c.n >= 8 && c.n % 2 == 0)) bad("n even and ≥ 8 violated");
  if (!(c.L > 0.0)) bad("L > 0 violated");
  if (!(c.t_end >= 0.0)) bad("t_end ≥ 0 violated");
  if (!(c.dt_safety > 0.0 && c.dt_safety <= 1.0)) bad("dt_safety ∈ (0,1] violated");
  for (std::size_t i = 0; i < c.snapshot_times.size(); ++i) {
    if (c.snapshot_times[i] < 0.0 || c.snapshot_times[i] > c.t_end) bad("snapshot_times must lie in [0, t_end]");
    if (i && c.snapshot_times[i] < c.snapshot_times[i - 1]) bad("snapshot_times must be sorted");
  }
  if (!(c.p > 1.0)) bad("p > 1 violated");
  if (!(c.k >= 0.0)) bad("k ≥ 0 violated");
  if (!(c.n_levels >= 1)) bad("n_levels ≥ 1 violated");
  if (c.K && !(*c.K > 0.0)) bad("K > 0 violated");
  for (double e : c.epsilons)
    if (!(e > 0.0)) bad("epsilons must be > 0");
  try {
    (void)c.initial_condition();
  } catch (const std::exception& e) {
    bad(std::string("initial: ") + e.what());
  }

  const bool needs_levels = subcommand == "degiorgi" || subcommand == "pipeline";
  if (gamma_ok && c.p > 1.0 && (needs_levels || c.q != 0.0)) {
    try {
      exponents::Interval I = exponents::q_interval(c.d, c.gamma, c.p);
      if (c.q != 0.0 && !I.contains(c.q))
        bad("q interval violated: q=" + exponents::detail::fmt(c.q) + " ∉ (" + exponents::detail::fmt(I.lo) + ", " +
            exponents::detail::fmt(I.hi) + ")");
    } catch (const AdmissibilityError& e) {
      bad(e.what());
    }
  }
  if (gamma_ok && c.r != 0.0) {
    try {
      (void)exponents::prodi_serrin_q(c.d, c.gamma, c.r);
    } catch (const AdmissibilityError& e) {
      bad(e.what());
    }
  }
  if (needs_levels && !(c.t_star > 0.0 && c.t_star < c.t_end) && subcommand == "pipeline") bad("0 < t_star < t_end violated");
  if (subcommand == "degiorgi" && !(c.t_star > 0.0)) bad("t_star > 0 violated");
  if (subcommand != "exponents" && c.out_dir.empty()) bad("out_dir missing");
  if ((subcommand == "degiorgi" || subcommand == "diagnose") && c.trajectory.empty()) bad("trajectory missing");

  if (!errs.empty()) {
    std::string msg = "invalid configuration: ";
    for (std::size_t i = 0; i < errs.size(); ++i) msg += (i ? "; " : "") + errs[i];
    throw ConfigError(msg);
  }
  return c;
}

}  // namespace landau
