// Command-line driver: run | exponents | diagnose | degiorgi | inequalities | pipeline.
// Exit codes: 0 success, 1 physics-stage failure, 2 usage or configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "landau/config.hpp"
#include "landau/degiorgi.hpp"
#include "landau/exponents.hpp"
#include "landau/functionals.hpp"
#include "landau/inequality_lab.hpp"
#include "landau/pipeline.hpp"
#include "landau/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace landau;

namespace {

constexpr int kOk = 0, kPhysics = 1, kUsage = 2;

class Manifest {
 public:
  explicit Manifest(const RunConfig& cfg) : dir_(cfg.out_dir), subcommand_(cfg.subcommand) {}

  void add(const std::string& rel, const std::string& kind, const std::string& schema = "") {
    json e = {{"path", rel}, {"kind", kind}};
    if (!schema.empty()) e["schema"] = schema;
    files_.push_back(e);
  }

  fs::path path(const std::string& rel) const { return dir_ / rel; }

  void write_json(const std::string& rel, const json& j, const std::string& kind) {
    std::ofstream out(path(rel));
    if (!out) throw IoError("cannot write " + path(rel).string());
    out << j.dump(2) << '\n';
    add(rel, kind);
  }

  void finish(int status) {
    json m = {{"subcommand", subcommand_}, {"status", status}, {"files", files_}};
    std::ofstream out(dir_ / "manifest.json");
    out << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::string subcommand_;
  json files_ = json::array();
};

// records.csv plus snapshots/snap_NNNNNN.bin under the output directory.
void write_trajectory_outputs(Manifest& man, const Trajectory& traj) {
  for (const auto& f : write_trajectory(traj, man.path(""))) {
    if (fs::path(f).extension() == ".csv")
      man.add(f, "records", kRecordCsvHeader);
    else
      man.add(f, "snapshot");
  }
}

int cmd_exponents(const RunConfig& c) {
  const double q = c.q != 0.0 ? c.q : exponents::q_interval(c.d, c.gamma, c.p).midpoint();
  std::optional<double> r;
  if (c.r != 0.0) r = c.r;
  exponents::ExponentSet e = exponents::compute(c.d, c.gamma, c.p, q, c.k, r);
  json j = exponents::to_json(e);
  std::cout << j.dump(2) << '\n';
  if (!c.out_dir.empty()) {
    Manifest man(c);
    man.write_json("exponents.json", j, "exponents");
    man.finish(kOk);
  }
  return kOk;
}

int cmd_run(const RunConfig& c, Manifest& man) {
  Trajectory traj = run(c.solver_config());
  write_trajectory_outputs(man, traj);
  if (traj.blowup) {
    std::cerr << *traj.blowup << '\n';
    return kPhysics;
  }
  return kOk;
}

inline const char* kDiagnosticsCsvHeader = "t,mass,energy,entropy,entropy_dissipation,M_0p,D_gamma_p,m4,K0,max_f,min_f";

int cmd_diagnose(const RunConfig& c, Manifest& man) {
  Trajectory traj = read_trajectory(c.trajectory);
  const Potential pot(traj.gamma, traj.grid->dim());
  std::ofstream out(man.path("diagnostics.csv"));
  if (!out) throw IoError("cannot write diagnostics.csv");
  out << kDiagnosticsCsvHeader << '\n';
  char buf[512];
  bool failed = false;
  for (const auto& s : traj.snapshots) {
    CoefficientFields cf = coefficient_fields(s.field, pot);
    Coercivity co = coercivity_estimate(cf, pot);
    failed = failed || co.failed;
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.time,
                  moment(s.field, 0.0), integrate(s.field, 2.0) - moment(s.field, 0.0), entropy(s.field),
                  entropy_dissipation(s.field, cf).value, weighted_lp(s.field, 0.0, c.p),
                  dissipation(s.field, pot.gamma, c.p), moment(s.field, 4.0), co.K0, s.field.max(), s.field.min());
    out << buf;
  }
  man.add("diagnostics.csv", "diagnostics", kDiagnosticsCsvHeader);
  return failed ? kPhysics : kOk;
}

int cmd_degiorgi(const RunConfig& c, Manifest& man) {
  Trajectory traj = read_trajectory(c.trajectory);
  const Potential pot(traj.gamma, traj.grid->dim());
  const double q = c.q != 0.0 ? c.q : exponents::q_interval(pot.d, pot.gamma, c.p).midpoint();
  double sup_max = 0.0, K0 = std::numeric_limits<double>::infinity();
  for (const auto& s : traj.snapshots) {
    if (s.time >= c.t_star) sup_max = std::max(sup_max, s.field.max());
    if (s.time >= 0.5 * c.t_star) K0 = std::min(K0, coercivity_estimate(coefficient_fields(s.field, pot), pot).K0);
  }
  if (!(K0 > 0.0)) {
    std::cerr << "coercivity constant K0 ≤ 0 on the trajectory\n";
    return kPhysics;
  }
  LevelSetParams lsp;
  lsp.p = c.p;
  lsp.gamma = pot.gamma;
  lsp.K = c.K.value_or(1.05 * sup_max);
  lsp.t_star = c.t_star;
  lsp.T = traj.end_time();
  lsp.n_levels = c.n_levels;
  lsp.c0 = exponents::c0(K0, c.p);
  try {
    lsp.enforce_p_range = exponents::degiorgi_p_range(pot.d, pot.gamma).contains(c.p);
  } catch (const AdmissibilityError&) {
    lsp.enforce_p_range = false;
  }
  exponents::ExponentSet e = exponents::compute(pot.d, pot.gamma, c.p, q, c.k, std::nullopt, K0);
  LevelSetReport rep = iterate(traj, lsp, e);
  write_level_set_csv(man.path("level_sets.csv").string(), rep);
  man.add("level_sets.csv", "level_sets", kLevelSetCsvHeader);
  man.write_json("level_sets.json", to_json(rep), "level_sets_report");
  return rep.verdict == DecayVerdict::decay_confirmed ? kOk : kPhysics;
}

int cmd_inequalities(const RunConfig& c, Manifest& man) {
  const Potential pot = c.potential();
  GridPtr grid = make_grid(c.n, c.L, c.d);
  std::vector<InequalityCase> cases;
  const std::vector<ScalarField> family = test_function_family(grid, 20, c.seed);
  const ScalarField M = discretize_initial(Maxwellian{}, grid);

  const double hls_q = 2.0 * c.d / (2.0 * c.d - 1.0);
  cases.push_back(hls_check(M, M, 1.0, hls_q, hls_q));
  for (std::size_t i = 0; i < family.size(); ++i) {
    InequalityCase s = sobolev_check(family[i]);
    s.name += "#" + std::to_string(i);
    cases.push_back(s);
  }
  const double q = c.q != 0.0 ? c.q : exponents::q_interval(c.d, pot.gamma, c.p).midpoint();
  exponents::ExponentSet e = exponents::compute(c.d, pot.gamma, c.p, q);
  if (e.thetas_admissible)
    for (std::size_t i = 0; i < family.size(); ++i) {
      InequalityCase t = triple_interpolation_check(family[i], e);
      t.name += "#" + std::to_string(i);
      cases.push_back(t);
    }
  for (double frac : {0.2, 0.4, 0.6}) {
    double ell = frac * M.max();
    cases.push_back(level_hls_bounds(M, 0.5 * ell, ell, c.p, q, pot, LevelBound::main));
  }
  if (pot.gamma > -c.d) {
    const double qp = 0.5 * (std::max(1.0, c.d / (c.d + 2.0 + pot.gamma)) + c.d / (c.d + pot.gamma));
    for (double eps : c.epsilons) cases.push_back(eps_poincare(M, M, pot, eps, qp));
    PoincareTrend tr = eps_poincare_trend(pot, qp, c.epsilons);
    for (auto& t : tr.cases) cases.push_back(t);
  } else {
    const double qp = 0.5 * c.d + 1.0;
    for (double eps : c.epsilons) cases.push_back(eps_poincare(M, M, pot, eps, qp));
    PoincareTrend tr = eps_poincare_trend(pot, qp, c.epsilons);
    for (auto& t : tr.cases) cases.push_back(t);
  }
  write_inequality_csv(man.path("inequalities.csv").string(), cases);
  man.add("inequalities.csv", "inequalities", kInequalityCsvHeader);
  return kOk;
}

int cmd_pipeline(const RunConfig& c, Manifest& man) {
  SolverConfig cfg = c.solver_config();
  cfg.snapshot_times.clear();  // the pipeline builds its own schedule
  PipelineParams pp;
  pp.p = c.p;
  pp.q = c.q;
  pp.r = c.r;
  pp.k = c.k;
  pp.t_star = c.t_star;
  pp.K = c.K;
  pp.n_levels = c.n_levels;
  pp.window_lo = c.window_lo;
  pp.window_hi = c.window_hi;
  pp.scenario = c.scenario;
  Trajectory traj;
  PipelineReport rep = run_pipeline(cfg, pp, &traj);
  write_trajectory_outputs(man, traj);
  if (rep.lp) {
    write_lp_series_csv(man.path("lp_series.csv"), *rep.lp);
    man.add("lp_series.csv", "lp_series", kLpSeriesCsvHeader);
    write_lp_table_csv(man.path("lp_table.csv"), rep.lp_table);
    man.add("lp_table.csv", "lp_table", kLpTableCsvHeader);
  }
  if (rep.level_sets) {
    write_level_set_csv(man.path("level_sets.csv").string(), *rep.level_sets);
    man.add("level_sets.csv", "level_sets", kLevelSetCsvHeader);
  }
  man.write_json("pipeline.json", to_json(rep), "pipeline_report");
  return rep.passed ? kOk : kPhysics;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Landau equation solver and regularity diagnostics"};
  app.require_subcommand(1);

  std::string config_path, out_dir, initial_kind, trajectory;
  unsigned seed = 0;
  int d = 0, n = 0, n_levels = 0, snapshot_count = 0;
  double gamma = 0, L = 0, t_end = 0, dt_safety = 0, p = 0, q = 0, r = 0, k = 0, t_star = 0, K = 0;
  std::vector<double> eps;

  std::vector<CLI::App*> subs;
  for (const char* name : {"run", "exponents", "diagnose", "degiorgi", "inequalities", "pipeline"}) {
    CLI::App* s = app.add_subcommand(name);
    s->add_option("--config", config_path, "JSON configuration file");
    s->add_option("--out-dir", out_dir, "output directory");
    s->add_option("--seed", seed, "seed for random test-function families");
    s->add_option("--d", d, "velocity dimension");
    s->add_option("--gamma", gamma, "potential exponent γ ∈ [−d,0)");
    s->add_option("--n", n, "grid points per axis");
    s->add_option("--L", L, "grid half-width");
    s->add_option("--t-end", t_end, "final time");
    s->add_option("--dt-safety", dt_safety, "time-step safety factor");
    s->add_option("--snapshots", snapshot_count, "number of uniform snapshots");
    s->add_option("--initial", initial_kind, "maxwellian | bimaxwellian | narrow_gaussian");
    s->add_option("--p", p);
    s->add_option("--q", q);
    s->add_option("--r", r);
    s->add_option("--k", k);
    s->add_option("--t-star", t_star);
    s->add_option("--K", K, "level height for the De Giorgi iteration");
    s->add_option("--n-levels", n_levels);
    s->add_option("--eps", eps, "ε ladder for the ε-Poincaré battery");
    s->add_option("--trajectory", trajectory, "directory of stored snapshots");
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  CLI::App* sub = nullptr;
  for (auto* s : subs)
    if (s->parsed()) sub = s;
  const std::string name = sub->get_name();

  RunConfig cfg;
  try {
    json j = config_path.empty() ? json::object() : load_config_file(config_path);
    auto over = [&](const char* flag, const char* key, auto value) {
      if (sub->count(flag)) j[key] = value;
    };
    over("--out-dir", "out_dir", out_dir);
    over("--seed", "seed", seed);
    over("--d", "d", d);
    over("--gamma", "gamma", gamma);
    over("--n", "n", n);
    over("--L", "L", L);
    over("--t-end", "t_end", t_end);
    over("--dt-safety", "dt_safety", dt_safety);
    over("--snapshots", "snapshot_count", snapshot_count);
    over("--p", "p", p);
    over("--q", "q", q);
    over("--r", "r", r);
    over("--k", "k", k);
    over("--t-star", "t_star", t_star);
    over("--K", "K", K);
    over("--n-levels", "n_levels", n_levels);
    over("--eps", "epsilons", eps);
    over("--trajectory", "trajectory", trajectory);
    if (sub->count("--initial")) {
      if (!j.contains("initial") || !j["initial"].is_object()) j["initial"] = json::object();
      j["initial"]["kind"] = initial_kind;
    }
    cfg = parse_config(j, name);
    if (!cfg.out_dir.empty()) {
      fs::create_directories(cfg.out_dir);
      std::ofstream echo(fs::path(cfg.out_dir) / "config.resolved.json");
      if (!echo) throw ConfigError("out_dir not writable: " + cfg.out_dir);
      echo << to_json(cfg).dump(2) << '\n';
    }
    if ((name == "degiorgi" || name == "diagnose") && !fs::is_directory(cfg.trajectory))
      throw ConfigError("trajectory directory not found: " + cfg.trajectory);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (name == "exponents") {
    try {
      return cmd_exponents(cfg);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kUsage;
    }
  }

  Manifest man(cfg);
  man.add("config.resolved.json", "config");
  int status = kOk;
  try {
    if (name == "run") status = cmd_run(cfg, man);
    else if (name == "diagnose") status = cmd_diagnose(cfg, man);
    else if (name == "degiorgi") status = cmd_degiorgi(cfg, man);
    else if (name == "inequalities") status = cmd_inequalities(cfg, man);
    else if (name == "pipeline") status = cmd_pipeline(cfg, man);
  } catch (const AdmissibilityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    status = kUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    status = kUsage;
  } catch (const Error& e) {
    std::cerr << "physics stage failed: " << e.what() << '\n';
    status = kPhysics;
  }
  man.finish(status);
  return status;
}
