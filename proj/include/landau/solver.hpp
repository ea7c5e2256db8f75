#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "landau/error.hpp"
#include "landau/functionals.hpp"
#include "landau/grid.hpp"
#include "landau/kernels.hpp"
#include "landau/snapshot.hpp"
#include "landau/trajectory.hpp"

namespace landau {

struct Maxwellian {
  double rho = 1.0;
  double T = 1.0;
};

struct BiMaxwellian {
  double rho1 = 0.5;
  std::vector<double> u1;
  double T1 = 1.0;
  double rho2 = 0.5;
  std::vector<double> u2;
  double T2 = 1.0;
};

/// A Maxwellian with T ≪ 1: concentrated data for the small-time L^p regime.
struct NarrowGaussian {
  double rho = 1.0;
  double T = 0.01;
};

struct FromFile {
  std::string path;
};

using InitialCondition = std::variant<Maxwellian, BiMaxwellian, NarrowGaussian, FromFile>;

struct SolverConfig {
  Potential pot;
  GridPtr grid;
  double dt_safety = 0.4;
  double t_end = 1.0;
  std::vector<double> snapshot_times;
  InitialCondition initial = Maxwellian{};

  void validate() const {
    std::string errs;
    auto bad = [&](const std::string& s) { errs += (errs.empty() ? "" : "; ") + s; };
    if (!grid) bad("grid missing");
    if (grid && grid->dim() != pot.d) bad("grid dimension differs from potential dimension");
    if (!(dt_safety > 0.0 && dt_safety <= 1.0)) bad("dt_safety ∈ (0,1] violated");
    if (!(t_end >= 0.0)) bad("t_end ≥ 0 violated");
    for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
      if (snapshot_times[i] < 0.0 || snapshot_times[i] > t_end) bad("snapshot_times must lie in [0, t_end]");
      if (i && snapshot_times[i] < snapshot_times[i - 1]) bad("snapshot_times must be sorted");
    }
    if (const auto* m = std::get_if<Maxwellian>(&initial)) {
      if (!(m->T > 0.0) || !(m->rho > 0.0)) bad("maxwellian needs ρ > 0, T > 0");
    } else if (const auto* b = std::get_if<BiMaxwellian>(&initial)) {
      if (!(b->T1 > 0.0) || !(b->T2 > 0.0)) bad("bimaxwellian temperatures must be > 0");
      if (!(b->rho1 > 0.0) || !(b->rho2 > 0.0)) bad("bimaxwellian densities must be > 0");
    } else if (const auto* n = std::get_if<NarrowGaussian>(&initial)) {
      if (!(n->T > 0.0) || !(n->rho > 0.0)) bad("narrow_gaussian needs ρ > 0, T > 0");
    }
    if (!errs.empty()) throw DomainError("invalid solver config: " + errs);
  }
};

namespace detail {

inline double gaussian(std::span<const double> v, const std::vector<double>& u, double rho, double T) {
  const int d = static_cast<int>(v.size());
  double r2 = 0.0;
  for (int a = 0; a < d; ++a) {
    double x = v[a] - (u.empty() ? 0.0 : u[a]);
    r2 += x * x;
  }
  return rho * std::pow(2.0 * std::numbers::pi * T, -0.5 * d) * std::exp(-0.5 * r2 / T);
}

// Multiplies f by a polynomial 1 + a·v + b|v|² ... so that the discrete mass,
// momentum and second moment hit the targets exactly.
inline void match_moments(ScalarField& f, double mass, double energy) {
  const Grid& g = *f.grid;
  const int d = g.dim(), m = d + 2;
  auto basis = [&](std::size_t i, int l) {
    if (l == 0) return 1.0;
    if (l <= d) return g.coord(i, l - 1);
    return g.radius_squared(i);
  };
  for (int iter = 0; iter < 3; ++iter) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd cur = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (int k = 0; k < m; ++k) {
        cur(k) += f.values[i] * basis(i, k);
        for (int l = 0; l < m; ++l) G(k, l) += f.values[i] * basis(i, k) * basis(i, l);
      }
    }
    Eigen::VectorXd target = Eigen::VectorXd::Zero(m);
    target(0) = mass / g.cell_volume();
    target(m - 1) = energy / g.cell_volume();
    Eigen::VectorXd x = G.ldlt().solve(target - cur);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double mult = 1.0;
      for (int l = 0; l < m; ++l) mult += x(l) * basis(i, l);
      f.values[i] *= mult;
    }
  }
}

}  // namespace detail

/// Samples the initial datum and normalizes it to discrete (ρ_in, 0, E_in).
inline ScalarField discretize_initial(const InitialCondition& ic, GridPtr grid) {
  const int d = grid->dim();
  ScalarField f(grid);
  double mass = 0.0, energy = 0.0;
  if (const auto* m = std::get_if<Maxwellian>(&ic)) {
    f = ScalarField::sample(grid, [&](std::span<const double> v) { return detail::gaussian(v, {}, m->rho, m->T); });
    mass = m->rho;
    energy = m->rho * d * m->T;
  } else if (const auto* n = std::get_if<NarrowGaussian>(&ic)) {
    f = ScalarField::sample(grid, [&](std::span<const double> v) { return detail::gaussian(v, {}, n->rho, n->T); });
    mass = n->rho;
    energy = n->rho * d * n->T;
  } else if (const auto* b = std::get_if<BiMaxwellian>(&ic)) {
    std::vector<double> u1 = b->u1, u2 = b->u2;
    u1.resize(d, 0.0);
    u2.resize(d, 0.0);
    mass = b->rho1 + b->rho2;
    // Galilean shift to zero mean velocity.
    std::vector<double> U(d);
    for (int a = 0; a < d; ++a) U[a] = (b->rho1 * u1[a] + b->rho2 * u2[a]) / mass;
    double e1 = 0.0, e2 = 0.0;
    for (int a = 0; a < d; ++a) {
      u1[a] -= U[a];
      u2[a] -= U[a];
      e1 += u1[a] * u1[a];
      e2 += u2[a] * u2[a];
    }
    energy = b->rho1 * (e1 + d * b->T1) + b->rho2 * (e2 + d * b->T2);
    f = ScalarField::sample(grid, [&](std::span<const double> v) {
      return detail::gaussian(v, u1, b->rho1, b->T1) + detail::gaussian(v, u2, b->rho2, b->T2);
    });
  } else {
    const auto& path = std::get<FromFile>(ic).path;
    Snapshot s = read_snapshot(path);
    if (s.header.d != d || s.header.n != grid->points() || s.header.L != grid->extent())
      throw GridMismatchError("initial snapshot grid differs from configured grid: " + path);
    f = s.scalar(grid);
    mass = integrate(f, 0.0);
    if (!(mass > 0.0)) throw DomainError("initial snapshot has nonpositive mass: " + path);
    double p2 = 0.0;
    for (int a = 0; a < d; ++a) {
      ScalarField va = ScalarField::sample(grid, [&](std::span<const double> v) { return v[a]; });
      double pa = inner(f, va);
      p2 += pa * pa;
    }
    energy = integrate(f, 2.0) - mass - p2 / mass;
  }
  if (!(f.max() > 0.0)) throw DomainError("initial datum vanishes on the grid");
  const double fmax = f.max();
  detail::match_moments(f, mass, energy);
  if (!f.finite() || f.min() < -1e-12 * fmax)
    throw DomainError("initial datum is not resolved on this grid: moment normalization produced negative values; "
                      "refine n or adjust L");
  return f;
}

/// Discrete ∇·(A∇f − b f) in flux form. Face values of A, b and f use 4-point
/// interpolation and the normal derivative the 4-point difference where both
/// neighbours exist (2-point otherwise); transverse derivatives are face
/// interpolations of the cell gradient. Outer faces carry zero flux.
inline ScalarField rhs(const ScalarField& f, const CoefficientFields& coeffs, int order = 4) {
  const Grid& g = *f.grid;
  require_same_grid(g, *coeffs.A.grid, "rhs");
  require_same_grid(g, *coeffs.b.grid, "rhs");
  const int d = g.dim(), n = g.points();
  const double h = g.spacing();
  VectorField grad = order == 4 ? gradient_fourth_order(f) : gradient(f);
  std::vector<std::vector<double>> flux(d, std::vector<double>(g.size(), 0.0));
  for (int a = 0; a < d; ++a) {
    const std::size_t s = g.stride(a);
    auto& F = flux[a];
    parallel_for(g.size(), [&](std::size_t i) {
      const int ia = g.index(i, a);
      if (ia == n - 1) return;
      const std::size_t j = i + s;
      const bool wide = order == 4 && ia >= 1 && ia <= n - 3;
      auto face = [&](const std::vector<double>& u) {
        return wide ? (-u[i - s] + 9.0 * u[i] + 9.0 * u[j] - u[j + s]) / 16.0 : 0.5 * (u[i] + u[j]);
      };
      double val = 0.0;
      for (int b = 0; b < d; ++b) {
        double Aab = face(coeffs.A.components[MatrixField::packed(a, b, d)]);
        double Gb;
        if (b == a)
          Gb = wide ? (f.values[i - s] - 27.0 * f.values[i] + 27.0 * f.values[j] - f.values[j + s]) / (24.0 * h)
                    : (f.values[j] - f.values[i]) / h;
        else
          Gb = face(grad.components[b]);
        val += Aab * Gb;
      }
      val -= face(coeffs.b.components[a]) * face(f.values);
      F[i] = val;
    });
  }
  ScalarField out(f.grid);
  parallel_for(g.size(), [&](std::size_t i) {
    double acc = 0.0;
    for (int a = 0; a < d; ++a) {
      const std::size_t s = g.stride(a);
      int ia = g.index(i, a);
      if (ia < n - 1) acc += flux[a][i];
      if (ia > 0) acc -= flux[a][i - s];
    }
    out.values[i] = acc / h;
  });
  return out;
}

/// Largest eigenvalue of a symmetric matrix by power iteration. Near-isotropic A
/// converges slowly; 20 steps leave the Rayleigh quotient under 1% low, which the
/// dt safety factor absorbs.
inline double power_iteration_max_eigenvalue(const MatrixField& A, std::size_t node, int max_steps = 20) {
  const int d = A.grid->dim();
  std::vector<double> x(d), y(d);
  for (int a = 0; a < d; ++a) x[a] = 1.0 / (1.0 + a);  // generic start, not orthogonal to any axis
  double lambda = 0.0;
  for (int it = 0; it < max_steps; ++it) {
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) return 0.0;
    for (double& v : x) v /= nrm;
    for (int a = 0; a < d; ++a) {
      y[a] = 0.0;
      for (int b = 0; b < d; ++b) y[a] += A.at(a, b, node) * x[b];
    }
    double next = 0.0;
    for (int a = 0; a < d; ++a) next += x[a] * y[a];
    const bool settled = it > 0 && std::abs(next - lambda) <= 1e-12 * std::abs(next);
    lambda = next;
    if (settled) break;
    x = y;
  }
  return lambda;
}

/// dt = safety·h²/(2d·λ_max), floored at 1e−12.
inline double stable_dt(const MatrixField& A, double dt_safety) {
  const Grid& g = *A.grid;
  std::vector<double> lam(g.size());
  parallel_for(g.size(), [&](std::size_t i) { lam[i] = power_iteration_max_eigenvalue(A, i); });
  double lmax = 0.0;
  for (double l : lam) lmax = std::max(lmax, l);
  if (!(lmax > 0.0)) return std::numeric_limits<double>::infinity();
  double h = g.spacing();
  return std::max(dt_safety * h * h / (2.0 * g.dim() * lmax), 1e-12);
}

inline double stable_dt(const ScalarField& f, const CoefficientFields& coeffs, const SolverConfig& cfg) {
  require_same_grid(*f.grid, *coeffs.A.grid, "stable_dt");
  return stable_dt(coeffs.A, cfg.dt_safety);
}

struct StepResult {
  ScalarField field;
  double dt;
};

namespace detail {
inline void check_state(const ScalarField& f, double t) {
  if (!f.finite()) throw BlowUpError("blow-up detected: non-finite values at t=" + std::to_string(t), t, f.max_abs());
  double mx = f.max(), mn = f.min();
  if (mn < -1e-3 * mx)
    throw BlowUpError("blow-up detected: min f = " + std::to_string(mn) + " < −1e−3·max f at t=" + std::to_string(t) +
                          ", ‖f‖∞=" + std::to_string(f.max_abs()),
                      t, f.max_abs());
}
}  // namespace detail

/// One Heun (SSP-RK2) step; coefficients are recomputed at the second stage.
/// `coeffs` must belong to f; dt is min(stable_dt, dt_cap).
inline StepResult advance(const ScalarField& f, const CoefficientFields& coeffs, const SolverConfig& cfg, double t = 0.0,
                          double dt_cap = std::numeric_limits<double>::infinity()) {
  if (!f.finite()) throw BlowUpError("blow-up detected: non-finite input at t=" + std::to_string(t), t, f.max_abs());
  const double dt = std::min(stable_dt(f, coeffs, cfg), dt_cap);
  ScalarField k1 = rhs(f, coeffs);
  ScalarField stage(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) stage.values[i] = f.values[i] + dt * k1.values[i];
  detail::check_state(stage, t + dt);
  ScalarField k2 = rhs(stage, coefficient_fields(stage, cfg.pot));
  ScalarField out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) out.values[i] = f.values[i] + 0.5 * dt * (k1.values[i] + k2.values[i]);
  detail::check_state(out, t + dt);
  return {std::move(out), dt};
}

inline ScalarField step(const ScalarField& f, const SolverConfig& cfg) {
  return advance(f, coefficient_fields(f, cfg.pot), cfg).field;
}

/// Record for state f (with its coefficients) at time t; dt is the step leaving t.
inline DiagnosticRecord diagnose_state(const ScalarField& f, const CoefficientFields& coeffs, double t, double dt) {
  const Grid& g = *f.grid;
  DiagnosticRecord r;
  r.time = t;
  r.dt = dt;
  r.mass = integrate(f, 0.0);
  r.momentum.assign(g.dim(), 0.0);
  for (int a = 0; a < g.dim(); ++a) {
    Accumulator acc;
    for (std::size_t i = 0; i < g.size(); ++i) acc.add(f.values[i] * g.coord(i, a));
    r.momentum[a] = acc.value() * g.cell_volume();
  }
  {
    Accumulator acc;
    for (std::size_t i = 0; i < g.size(); ++i) acc.add(f.values[i] * g.radius_squared(i));
    r.energy = acc.value() * g.cell_volume();
  }
  r.entropy = entropy(f);
  r.min_f = f.min();
  r.max_f = f.max();
  r.dissipation = entropy_dissipation(f, coeffs).value;
  return r;
}

struct RunOptions {
  /// Called after every accepted step with (time, field); may be empty.
  std::function<void(double, const ScalarField&)> on_step;
  /// Also store the state after every k-th step as a snapshot (0 = off).
  int snapshot_every = 0;
};

/// Integrates from the given initial field to cfg.t_end. Snapshots are taken at
/// the accepted step nearest each requested time; the initial state is always
/// stored. Blow-up ends the run and is reported in the trajectory.
inline Trajectory run(const SolverConfig& cfg, ScalarField f, const RunOptions& opts = {}) {
  cfg.validate();
  require_same_grid(*f.grid, *cfg.grid, "run");
  Trajectory traj;
  traj.grid = cfg.grid;
  traj.gamma = cfg.pot.gamma;
  double t = 0.0;
  traj.snapshots.push_back({0.0, f});
  std::size_t next = 0;
  while (next < cfg.snapshot_times.size() && cfg.snapshot_times[next] <= 0.0) ++next;
  auto store = [&](double time, const ScalarField& field) {
    if (time > traj.snapshots.back().time) traj.snapshots.push_back({time, field});
  };
  CoefficientFields coeffs = coefficient_fields(f, cfg.pot);
  long steps = 0;
  const double tiny = 1e-12 * std::max(1.0, cfg.t_end);
  try {
    while (t < cfg.t_end - tiny) {
      StepResult sr = advance(f, coeffs, cfg, t, cfg.t_end - t);
      traj.records.push_back(diagnose_state(f, coeffs, t, sr.dt));
      double t_new = (cfg.t_end - t - sr.dt <= tiny) ? cfg.t_end : t + sr.dt;
      // requested times crossed by this step go to whichever end is nearer
      while (next < cfg.snapshot_times.size() && cfg.snapshot_times[next] <= t_new + tiny) {
        double s = cfg.snapshot_times[next];
        if (s - t < t_new - s)
          store(t, f);
        else
          store(t_new, sr.field);
        ++next;
      }
      f = std::move(sr.field);
      t = t_new;
      ++steps;
      if (opts.snapshot_every > 0 && steps % opts.snapshot_every == 0) store(t, f);
      if (opts.on_step) opts.on_step(t, f);
      coeffs = coefficient_fields(f, cfg.pot);
    }
    traj.records.push_back(diagnose_state(f, coeffs, t, 0.0));
  } catch (const BlowUpError& e) {
    traj.blowup = e.what();
  }
  return traj;
}

inline Trajectory run(const SolverConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  return run(cfg, discretize_initial(cfg.initial, cfg.grid), opts);
}

inline const char* kRecordCsvHeader = "t,dt,mass,px,py,pz,energy,entropy,diss,min_f,max_f";

/// Per-step records as CSV (momentum columns px,py,pz; absent components are 0).
inline void write_records_csv(const std::filesystem::path& path, const std::vector<DiagnosticRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << kRecordCsvHeader << '\n';
  char buf[64];
  auto put = [&](double x, bool last = false) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf << (last ? '\n' : ',');
  };
  for (const auto& r : records) {
    put(r.time);
    put(r.dt);
    put(r.mass);
    for (int a = 0; a < 3; ++a) put(a < static_cast<int>(r.momentum.size()) ? r.momentum[a] : 0.0);
    put(r.energy);
    put(r.entropy);
    put(r.dissipation);
    put(r.min_f);
    put(r.max_f, true);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

/// Writes records.csv and snapshots/snap_NNNNNN.bin under dir; returns the files written.
inline std::vector<std::string> write_trajectory(const Trajectory& traj, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "snapshots", ec);
  if (ec) throw IoError("cannot create " + (dir / "snapshots").string() + ": " + ec.message());
  std::vector<std::string> files;
  write_records_csv(dir / "records.csv", traj.records);
  files.push_back("records.csv");
  for (std::size_t j = 0; j < traj.snapshots.size(); ++j) {
    char name[64];
    std::snprintf(name, sizeof name, "snap_%06zu.bin", j);
    write_snapshot(dir / "snapshots" / name, traj.snapshots[j].field, traj.gamma, traj.snapshots[j].time);
    files.push_back(std::string("snapshots/") + name);
  }
  return files;
}

/// Loads the snapshots of a trajectory directory (sorted by time); records are not restored.
inline Trajectory read_trajectory(const std::filesystem::path& dir) {
  const auto sdir = dir / "snapshots";
  if (!std::filesystem::is_directory(sdir)) throw IoError("no trajectory at " + dir.string() + " (missing snapshots/)");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(sdir))
    if (e.path().extension() == ".bin") files.push_back(e.path());
  if (files.empty()) throw IoError("no snapshots under " + sdir.string());
  std::sort(files.begin(), files.end());
  Trajectory traj;
  for (const auto& p : files) {
    Snapshot s = read_snapshot(p);
    if (!traj.grid) {
      traj.grid = make_grid(s.header.n, s.header.L, s.header.d);
      traj.gamma = s.header.gamma;
    }
    traj.snapshots.push_back({s.header.time, s.scalar(traj.grid)});
  }
  std::sort(traj.snapshots.begin(), traj.snapshots.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
  return traj;
}

}  // namespace landau
