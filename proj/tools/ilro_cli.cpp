#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ilro/adler.hpp"
#include "ilro/calibrate.hpp"
#include "ilro/compare.hpp"
#include "ilro/csv.hpp"
#include "ilro/errors.hpp"
#include "ilro/measure.hpp"
#include "ilro/stage.hpp"
#include "ilro/units.hpp"

namespace fs = std::filesystem;
using namespace ilro;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = "out";
  long seed = -1;       // negative keeps the config seed
  std::string k_angle;  // empty keeps the config mode
};

const char* reason_name(UnlockReason r) {
  switch (r) {
    case UnlockReason::NoRoot: return "NO_ROOT";
    case UnlockReason::AmplitudeCollapse: return "AMPLITUDE_COLLAPSE";
    case UnlockReason::MaxIter: return "MAX_ITER";
  }
  return "UNKNOWN";
}

RunConfig load_run_config(const GlobalArgs& g) {
  RunConfig rc = run_config_from_file(g.config_path);
  if (g.seed >= 0) rc.oracle.seed = static_cast<unsigned long long>(g.seed);
  if (!g.k_angle.empty()) rc.plan.k_angle_mode = parse_k_angle_mode(g.k_angle);
  return rc;
}

fs::path out_file(const GlobalArgs& g, const char* name) { return fs::path(g.out_dir) / name; }

CalibrationTable load_table(const GlobalArgs& g) {
  const fs::path csv = out_file(g, "calibration.csv");
  const fs::path sidecar = out_file(g, "calibration_params.csv");
  if (!fs::exists(csv) || !fs::exists(sidecar))
    throw PrereqError("no calibration in '" + g.out_dir + "': run calibrate first");
  CalibrationTable table = read_calibration(csv, sidecar);
  if (!g.k_angle.empty()) table.stage.k_angle_mode = parse_k_angle_mode(g.k_angle);
  return table;
}

void store_free_ref(const GlobalArgs& g, const MeasuredPoint& mp) {
  write_csv(out_file(g, "free_running.csv"),
            {"f_fr_hz", "v_osc_v", "i_osc_a", "theta_vi_deg", "theta_iv_deg",
             "harmonic_ratio", "kcl_residual"},
            {{format_double(mp.f_osc_hz), format_double(mp.v_osc_v), format_double(mp.i_osc_a),
              format_double(mp.theta_vi_deg), format_double(mp.theta_iv_deg),
              format_double(mp.harmonic_ratio), format_double(mp.kcl_residual)}});
}

MeasuredPoint load_free_ref(const GlobalArgs& g) {
  const fs::path path = out_file(g, "free_running.csv");
  if (!fs::exists(path))
    throw PrereqError("no free-running point in '" + g.out_dir + "': run calibrate first");
  CsvTable csv = read_csv(path);
  MeasuredPoint mp;
  mp.f_osc_hz = csv.number(0, csv.column("f_fr_hz"));
  mp.v_osc_v = csv.number(0, csv.column("v_osc_v"));
  mp.i_osc_a = csv.number(0, csv.column("i_osc_a"));
  mp.theta_vi_deg = csv.number(0, csv.column("theta_vi_deg"));
  mp.theta_iv_deg = csv.number(0, csv.column("theta_iv_deg"));
  return mp;
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Wide per-epsilon panel: one column of `quantity` per injection strength,
// cells empty where the row is unlocked.
void write_panel(const fs::path& path, const char* var_name, const SweepTable& table,
                 double LockSolution::*quantity) {
  std::vector<double> eps, grid;
  for (const SweepRow& r : table.rows) {
    if (eps.empty() || std::abs(eps.back() - r.epsilon) > 1e-15) eps.push_back(r.epsilon);
    if (eps.size() == 1) grid.push_back(r.sweep_var_hz);
  }
  std::vector<std::string> header{var_name};
  for (double e : eps) header.push_back("eps_" + format_double(e));

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> cells{format_double(grid[i])};
    for (std::size_t j = 0; j < eps.size(); ++j) {
      const SweepRow& r = table.rows[j * grid.size() + i];
      cells.push_back(r.outcome.locked ? format_double(r.outcome.sol.*quantity) : "");
    }
    rows.push_back(std::move(cells));
  }
  write_csv(path, header, rows);
}

SweepTable oracle_table(SweepMode mode, double fixed_hz, const std::vector<double>& eps_sorted,
                        const std::vector<double>& grid,
                        const RunConfig& rc, const MeasuredPoint& free_ref) {
  SweepTable t;
  t.mode = mode;
  t.fixed_hz = fixed_hz;
  const std::vector<double> g = sorted(grid);
  for (double e : eps_sorted) {
    std::vector<std::optional<MeasuredPoint>> rows =
        mode == SweepMode::Finj
            ? oracle_finj_sweep(rc.oracle, free_ref, e, g, rc.plan.windows)
            : oracle_ffr_sweep(rc.oracle, free_ref, e, g, fixed_hz, rc.plan.windows);
    for (std::size_t i = 0; i < g.size(); ++i)
      t.rows.push_back(oracle_sweep_row(g[i], e, rows[i]));
  }
  return t;
}

// Solver and oracle values side by side over the largest injection strength.
void write_joined_panels(const GlobalArgs& g, const SweepTable& solver,
                         const SweepTable& oracle, const StageParams& stage) {
  const double eps_max = solver.rows.empty() ? 0.0 : solver.rows.back().epsilon;
  std::vector<std::vector<std::string>> fig5, fig6, fig8;
  for (std::size_t i = 0; i < solver.rows.size(); ++i) {
    const SweepRow& s = solver.rows[i];
    const SweepRow& o = oracle.rows[i];
    if (std::abs(s.epsilon - eps_max) > 1e-15) continue;
    const std::string f = format_double(s.sweep_var_hz);
    auto cell = [](bool ok, double v) { return ok ? format_double(v) : std::string(); };
    const bool sl = s.outcome.locked, ol = o.outcome.locked;
    const LockSolution& a = s.outcome.sol;
    const LockSolution& b = o.outcome.sol;
    // the locked-ring closure gives theta_iv back: psi = 180/n + theta_vi - theta_iv
    const double theta_iv_oracle = 180.0 / stage.n_stages + b.theta_vi_deg - b.psi_deg;
    fig5.push_back({f, cell(sl, a.theta_vi_deg), cell(ol, b.theta_vi_deg),
                    cell(ol, theta_iv_oracle)});
    fig6.push_back({f, cell(sl, a.v_osc_v), cell(ol, b.v_osc_v), cell(sl, a.i_t_a),
                    cell(ol, b.i_t_a)});
    auto k_of = [&](const LockSolution& sol) {
      return k_coefficient(sol.i_t_a, std::abs(sol.theta_vi_deg), s.sweep_var_hz, sol.v_osc_v,
                           stage.c_load_f);
    };
    fig8.push_back({f, sl ? format_double(k_of(a)) : "", ol ? format_double(k_of(b)) : ""});
  }
  write_csv(out_file(g, "fig5.csv"),
            {"f_hz", "theta_vi_solver_deg", "theta_vi_oracle_deg", "theta_iv_oracle_deg"}, fig5);
  write_csv(out_file(g, "fig6.csv"),
            {"f_hz", "v_osc_solver_v", "v_osc_oracle_v", "i_t_solver_a", "i_t_oracle_a"}, fig6);
  write_csv(out_file(g, "fig8.csv"), {"f_hz", "k_solver", "k_oracle"}, fig8);
}

int cmd_calibrate(const GlobalArgs& g) {
  RunConfig rc = load_run_config(g);
  CalibrationResult r = build_calibration(rc.oracle, rc.plan);
  fs::create_directories(g.out_dir);
  write_calibration(r.table, out_file(g, "calibration.csv"), out_file(g, "calibration_params.csv"));
  store_free_ref(g, r.free_ref);

  std::vector<std::vector<std::string>> scan_rows;
  for (const ScanPoint& sp : r.scan)
    scan_rows.push_back({format_double(sp.c_f), format_double(sp.meas.f_osc_hz),
                         format_double(sp.meas.v_osc_v), format_double(sp.meas.i_osc_a),
                         format_double(sp.meas.theta_vi_deg),
                         format_double(sp.meas.theta_iv_deg)});
  write_csv(out_file(g, "fig3.csv"),
            {"c_f", "f_fr_hz", "v_osc_fr_v", "i_osc_fr_a", "theta_vi_fr_deg",
             "theta_iv_fr_deg"},
            scan_rows);

  std::printf("calibration: %zu baseline points, f_fr %s..%s Hz\n", r.table.points.size(),
              format_double(r.table.f_min()).c_str(), format_double(r.table.f_max()).c_str());
  std::printf("band eps=%s: %s..%s Hz, width %s Hz, asymmetry %s\n",
              format_double(rc.plan.epsilon).c_str(), format_double(r.band.f_lo_hz).c_str(),
              format_double(r.band.f_hi_hz).c_str(), format_double(r.band.width_hz).c_str(),
              format_double(r.band.asymmetry).c_str());
  std::printf("theta_vi law: slope %s deg/V, intercept %s deg, r2 %s\n",
              format_double(r.table.laws.theta_vi.slope).c_str(),
              format_double(r.table.laws.theta_vi.intercept).c_str(),
              format_double(r.table.laws.theta_vi.r2).c_str());
  std::printf("i_osc law: slope %s A/V, intercept %s A, r2 %s\n",
              format_double(r.table.laws.i_osc.slope).c_str(),
              format_double(r.table.laws.i_osc.intercept).c_str(),
              format_double(r.table.laws.i_osc.r2).c_str());
  return 0;
}

int cmd_solve(const GlobalArgs& g, const std::string& f_fr_txt, const std::string& f_inj_txt,
              double epsilon, bool classic) {
  RunConfig rc = load_run_config(g);
  CalibrationTable table = load_table(g);
  const double f_fr = parse_quantity(f_fr_txt, Unit::Hertz);
  const double f_inj = parse_quantity(f_inj_txt, Unit::Hertz);

  InjectionSpec inj;
  inj.epsilon = epsilon;
  inj.f_inj_hz = f_inj;
  inj.multi_phase = rc.oracle.inj.multi_phase;
  SolveOptions opts = rc.solver;
  opts.classic_closure = classic;
  LockOutcome out = solve_extended(table, f_fr, inj, table.stage, opts);

  if (out.locked) {
    const LockSolution& s = out.sol;
    std::printf("locked=1\n");
    std::printf("phi0_deg=%s\n", format_double(s.phi0_deg).c_str());
    std::printf("psi_deg=%s\n", format_double(s.psi_deg).c_str());
    std::printf("theta_vi_deg=%s\n", format_double(s.theta_vi_deg).c_str());
    std::printf("i_t_a=%s\n", format_double(s.i_t_a).c_str());
    std::printf("i_osc_a=%s\n", format_double(s.i_osc_a).c_str());
    std::printf("v_osc_v=%s\n", format_double(s.v_osc_v).c_str());
    std::printf("f_inj_hz=%s\n", format_double(s.f_inj_hz).c_str());
    std::printf("f_fr_hz=%s\n", format_double(s.f_fr_hz).c_str());
    std::printf("residual=%s\n", format_double(s.residual_norm).c_str());
  } else {
    std::printf("locked=0\nreason=%s\n", reason_name(out.reason));
  }

  fs::create_directories(g.out_dir);
  SweepTable one;
  one.mode = SweepMode::Finj;
  one.fixed_hz = f_fr;
  SweepRow row;
  row.sweep_var_hz = f_inj;
  row.epsilon = epsilon;
  row.outcome = out;
  one.rows.push_back(row);
  write_sweep_csv(one, out_file(g, "solve.csv"));
  return 0;
}

int cmd_sweep(const GlobalArgs& g, const std::string& mode_txt, bool with_oracle) {
  RunConfig rc = load_run_config(g);
  CalibrationTable table = load_table(g);
  const bool finj = mode_txt == "finj";
  const std::vector<double> eps = sorted(rc.epsilons);

  SweepTable solver_table;
  MeasuredPoint free_ref;
  if (finj) {
    free_ref = load_free_ref(g);
    solver_table =
        sweep_finj(table, free_ref.f_osc_hz, eps, table.stage, rc.f_inj_grid_hz, rc.solver);
  } else {
    solver_table = sweep_ffr(table, rc.f_inj_hz, eps, table.stage, rc.f_fr_grid_hz, rc.solver);
    if (with_oracle) free_ref = load_free_ref(g);
  }

  fs::create_directories(g.out_dir);
  const char* var_name = finj ? "f_inj_hz" : "f_fr_hz";
  write_sweep_csv(solver_table, out_file(g, finj ? "sweep_finj.csv" : "sweep_ffr.csv"));
  write_panel(out_file(g, finj ? "fig12a.csv" : "fig10a.csv"), var_name, solver_table,
              &LockSolution::phi0_deg);
  write_panel(out_file(g, finj ? "fig12b.csv" : "fig10b.csv"), var_name, solver_table,
              &LockSolution::psi_deg);

  int locked_rows = 0;
  for (const SweepRow& r : solver_table.rows) locked_rows += r.outcome.locked ? 1 : 0;
  std::printf("sweep %s: %zu rows, %d locked\n", mode_txt.c_str(), solver_table.rows.size(),
              locked_rows);

  if (with_oracle) {
    const double fixed = finj ? free_ref.f_osc_hz : rc.f_inj_hz;
    SweepTable oracle = oracle_table(finj ? SweepMode::Finj : SweepMode::Ffr, fixed, eps,
                                     finj ? rc.f_inj_grid_hz : rc.f_fr_grid_hz, rc, free_ref);
    write_oracle_sweep_csv(oracle, out_file(g, finj ? "oracle_finj.csv" : "oracle_ffr.csv"));
    if (finj) write_joined_panels(g, solver_table, oracle, table.stage);
    int oracle_locked = 0;
    for (const SweepRow& r : oracle.rows) oracle_locked += r.outcome.locked ? 1 : 0;
    std::printf("oracle co-sweep: %zu rows, %d locked\n", oracle.rows.size(), oracle_locked);
  }
  return 0;
}

int cmd_locking_range(const GlobalArgs& g, bool classic) {
  RunConfig rc = load_run_config(g);
  CalibrationTable table = load_table(g);
  MeasuredPoint free_ref = load_free_ref(g);
  SolveOptions opts = rc.solver;
  opts.classic_closure = classic;

  std::vector<std::vector<std::string>> rows, fig11, fig13;
  for (SweepMode mode : {SweepMode::Ffr, SweepMode::Finj}) {
    const bool is_ffr = mode == SweepMode::Ffr;
    const double f_ref = is_ffr ? rc.f_inj_hz : free_ref.f_osc_hz;
    for (double e : sorted(rc.epsilons)) {
      LockingRange r = locking_range(table, f_ref, e, table.stage, mode, opts);
      rows.push_back({is_ffr ? "ffr" : "finj", format_double(e), format_double(r.f_lo_hz),
                      format_double(r.f_hi_hz), format_double(r.width_hz),
                      format_double(r.asymmetry), r.lo_clamped ? "1" : "0",
                      r.hi_clamped ? "1" : "0"});
      (is_ffr ? fig11 : fig13)
          .push_back({format_double(e), format_double(r.width_hz),
                      format_double(r.asymmetry)});
      std::printf("%s eps=%s: %s..%s Hz, width %s Hz, asymmetry %s%s%s\n", is_ffr ? "ffr" : "finj",
                  format_double(e).c_str(), format_double(r.f_lo_hz).c_str(),
                  format_double(r.f_hi_hz).c_str(), format_double(r.width_hz).c_str(),
                  format_double(r.asymmetry).c_str(), r.lo_clamped ? " [lo clamped]" : "",
                  r.hi_clamped ? " [hi clamped]" : "");
    }
  }
  fs::create_directories(g.out_dir);
  write_csv(out_file(g, "locking_range.csv"),
            {"mode", "epsilon", "f_lo_hz", "f_hi_hz", "width_hz", "asymmetry", "lo_clamped",
             "hi_clamped"},
            rows);
  write_csv(out_file(g, "fig11.csv"), {"epsilon", "width_hz", "asymmetry"}, fig11);
  write_csv(out_file(g, "fig13.csv"), {"epsilon", "width_hz", "asymmetry"}, fig13);
  return 0;
}

int cmd_compare(const GlobalArgs& g, std::string solver_path, std::string reference_path) {
  RunConfig rc = load_run_config(g);
  if (solver_path.empty()) solver_path = out_file(g, "sweep_finj.csv").string();
  if (reference_path.empty()) reference_path = out_file(g, "oracle_finj.csv").string();
  if (!fs::exists(solver_path))
    throw PrereqError("no solver table at '" + solver_path + "': run sweep first");
  if (!fs::exists(reference_path))
    throw PrereqError("no reference table at '" + reference_path +
                      "': run sweep --with-oracle first");

  CompareReport rep = compare_tables(read_sweep_csv(solver_path), read_sweep_csv(reference_path));
  fs::create_directories(g.out_dir);
  write_compare_csv(rep, out_file(g, "compare.csv"));

  std::printf("rows=%d solver_locked=%d reference_locked=%d common=%d\n", rep.n_rows,
              rep.n_solver_locked, rep.n_reference_locked, rep.n_common);
  std::printf("phi0_deg: rms=%s max=%s\n", format_double(rep.phi0_deg.rms).c_str(),
              format_double(rep.phi0_deg.max_abs).c_str());
  std::printf("psi_deg: rms=%s max=%s\n", format_double(rep.psi_deg.rms).c_str(),
              format_double(rep.psi_deg.max_abs).c_str());
  std::printf("v_osc_rel: rms=%s max=%s\n", format_double(rep.v_osc_rel.rms).c_str(),
              format_double(rep.v_osc_rel.max_abs).c_str());
  std::printf("i_t_rel: rms=%s max=%s\n", format_double(rep.i_t_rel.rms).c_str(),
              format_double(rep.i_t_rel.max_abs).c_str());
  std::printf("edges: lo_dev=%s Hz hi_dev=%s Hz\n", format_double(rep.lo_edge_dev_hz).c_str(),
              format_double(rep.hi_edge_dev_hz).c_str());

  if (rep.disjoint()) {
    std::printf("warning: locked bands are disjoint\n");
    return 4;
  }
  if (!rep.pass(rc.thresholds)) {
    std::printf("comparison failed thresholds: phi0<%s psi<%s v_osc<%s i_t<%s\n",
                format_double(rc.thresholds.phi0_rms_deg).c_str(),
                format_double(rc.thresholds.psi_rms_deg).c_str(),
                format_double(rc.thresholds.v_osc_rms_rel).c_str(),
                format_double(rc.thresholds.i_t_rms_rel).c_str());
    return 4;
  }
  std::printf("comparison passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"phasor-domain laboratory for injection-locked ring oscillators"};
  app.fallthrough();
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "run configuration file")->required();
  app.add_option("--out", g.out_dir, "output directory (default: out)");
  app.add_option("--seed", g.seed, "override the oracle seed");
  app.add_option("--k-angle", g.k_angle, "closure angle: theta_vi or theta_iv")
      ->check(CLI::IsMember({"theta_vi", "theta_iv"}));

  CLI::App* cal = app.add_subcommand("calibrate", "build the stage model from oracle runs");

  CLI::App* solve = app.add_subcommand("solve", "solve a single operating point");
  std::string f_fr_txt, f_inj_txt;
  double epsilon = 0.0;
  bool solve_classic = false;
  solve->add_option("--f-fr", f_fr_txt, "free-running frequency, unit-suffixed (7GHz)")
      ->required();
  solve->add_option("--f-inj", f_inj_txt, "injection frequency, unit-suffixed")->required();
  solve->add_option("--eps", epsilon, "injection strength")->required();
  solve->add_flag("--classic", solve_classic, "constant-amplitude closure");

  CLI::App* sweep = app.add_subcommand("sweep", "sweep a frequency axis");
  std::string mode_txt;
  bool with_oracle = false;
  sweep->add_option("--mode", mode_txt, "swept axis")
      ->required()
      ->check(CLI::IsMember({"ffr", "finj"}));
  sweep->add_flag("--with-oracle", with_oracle, "co-run the oracle on the same grid");

  CLI::App* range = app.add_subcommand("locking-range", "locked-band edges per strength");
  bool range_classic = false;
  range->add_flag("--classic", range_classic, "constant-amplitude closure");

  CLI::App* cmp = app.add_subcommand("compare", "solver-vs-oracle deviation report");
  std::string solver_path, reference_path;
  cmp->add_option("--solver", solver_path, "solver sweep CSV (default out/sweep_finj.csv)");
  cmp->add_option("--reference", reference_path,
                  "reference sweep CSV (default out/oracle_finj.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cal->parsed()) return cmd_calibrate(g);
    if (solve->parsed()) return cmd_solve(g, f_fr_txt, f_inj_txt, epsilon, solve_classic);
    if (sweep->parsed()) return cmd_sweep(g, mode_txt, with_oracle);
    if (range->parsed()) return cmd_locking_range(g, range_classic);
    if (cmp->parsed()) return cmd_compare(g, solver_path, reference_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const PrereqError& e) {
    std::fprintf(stderr, "missing prerequisite: %s\n", e.what());
    return 3;
  } catch (const CompareError& e) {
    std::fprintf(stderr, "comparison error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
