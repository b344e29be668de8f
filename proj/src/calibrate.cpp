#include "ilro/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ilro/csv.hpp"
#include "ilro/errors.hpp"

namespace ilro {

namespace {

// Below this fraction of the free-running amplitude a phase-stable record is
// an injection-dragged remnant, not a locked oscillation.
constexpr double kQuenchFloor = 0.6;
constexpr double kMarchLoBound = 0.4;
constexpr double kMarchHiBound = 2.2;
// A decaying ring still produces clean zero crossings, so frequency and
// phase extraction succeed on a dead record; amplitude is the tell.
constexpr double kOscillationFloorV = 1e-3;

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("key '" + key + "' must be true or false, got '" + text + "'");
}

}  // namespace

MeasuredPoint free_running_point(OracleConfig cfg, double f_guess_hz, const RunWindows& w) {
  cfg.inj_amp_a = 0.0;
  double f = f_guess_hz;
  MeasuredPoint mp;
  for (int pass = 0; pass < 2; ++pass) {
    set_timing(cfg, f, w.settle_free, w.measure_free);
    mp = measure_operating_point(simulate(cfg));
    f = mp.f_osc_hz;
  }
  if (mp.v_osc_v < kOscillationFloorV)
    throw OracleError("ring does not sustain oscillation: |V_osc| = " +
                      format_double(mp.v_osc_v) + " V");
  return mp;
}

std::vector<ScanPoint> calibration_scan(const OracleConfig& base,
                                        const std::vector<double>& c_grid_f,
                                        double f_nominal_hz, const RunWindows& w) {
  if (c_grid_f.empty()) throw ConfigError("calibration grid is empty");
  std::vector<ScanPoint> out;
  for (double c : c_grid_f) {
    OracleConfig cfg = base;
    cfg.c_f = c;
    // frequency scales as 1/C, so the template guess maps exactly
    const double guess = f_nominal_hz * base.c_f / c;
    try {
      out.push_back({c, free_running_point(cfg, guess, w)});
    } catch (const std::exception& e) {
      throw OracleError("calibration grid point C = " + format_double(c) +
                        " F failed: " + e.what());
    }
  }
  return out;
}

std::optional<MeasuredPoint> locked_point(const OracleConfig& base, double f_inj_hz,
                                          double epsilon, const MeasuredPoint& free_ref,
                                          const RunWindows& w) {
  OracleConfig cfg = base;
  cfg.inj.epsilon = epsilon;
  cfg.inj.f_inj_hz = f_inj_hz;
  cfg.inj_amp_a = epsilon * free_ref.i_osc_a;
  set_timing(cfg, f_inj_hz, w.settle_locked, w.measure_locked);
  WaveRecord rec = simulate(cfg);
  if (!detect_lock(rec).locked) return std::nullopt;
  MeasuredPoint mp;
  try {
    mp = measure_operating_point(rec);
  } catch (const OracleError&) {
    return std::nullopt;  // zero-winding remnant state
  }
  if (mp.v_osc_v < kQuenchFloor * free_ref.v_osc_v) return std::nullopt;
  return mp;
}

namespace {

bool locks_at(const OracleConfig& base, const MeasuredPoint& free_ref, double epsilon,
              double f_hz, const RunWindows& w) {
  return locked_point(base, f_hz, epsilon, free_ref, w).has_value();
}

double march_oracle_edge(const OracleConfig& base, const MeasuredPoint& free_ref,
                         double epsilon, const RunWindows& w, double dir, double bound,
                         double tol_hz, bool* clamped) {
  const double f_fr = free_ref.f_osc_hz;
  double locked = f_fr;
  double step = 0.04 * f_fr;
  double unlocked = 0.0;
  *clamped = false;
  for (;;) {
    double probe = locked + dir * step;
    const bool at_bound = dir > 0 ? probe >= bound : probe <= bound;
    if (at_bound) probe = bound;
    if (locks_at(base, free_ref, epsilon, probe, w)) {
      locked = probe;
      if (at_bound) {
        *clamped = true;
        return bound;
      }
      step *= 1.6;
    } else {
      unlocked = probe;
      break;
    }
  }
  while (std::abs(unlocked - locked) > tol_hz) {
    const double mid = 0.5 * (locked + unlocked);
    (locks_at(base, free_ref, epsilon, mid, w) ? locked : unlocked) = mid;
  }
  return 0.5 * (locked + unlocked);
}

}  // namespace

OracleBand oracle_locking_band(const OracleConfig& base, const MeasuredPoint& free_ref,
                               double epsilon, const RunWindows& w, double edge_tol_hz) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::domain_error("oracle_locking_band: epsilon must be in (0, 1)");
  const double f_fr = free_ref.f_osc_hz;
  OracleBand band;
  band.f_lo_hz = march_oracle_edge(base, free_ref, epsilon, w, -1.0, kMarchLoBound * f_fr,
                                   edge_tol_hz, &band.lo_clamped);
  band.f_hi_hz = march_oracle_edge(base, free_ref, epsilon, w, +1.0, kMarchHiBound * f_fr,
                                   edge_tol_hz, &band.hi_clamped);
  band.width_hz = band.f_hi_hz - band.f_lo_hz;
  band.asymmetry = band.width_hz > 0.0
                       ? ((band.f_hi_hz - f_fr) - (f_fr - band.f_lo_hz)) / band.width_hz
                       : 0.0;
  return band;
}

std::vector<std::optional<MeasuredPoint>> oracle_finj_sweep(
    const OracleConfig& base, const MeasuredPoint& free_ref, double epsilon,
    const std::vector<double>& f_inj_grid_hz, const RunWindows& w) {
  std::vector<std::optional<MeasuredPoint>> out;
  out.reserve(f_inj_grid_hz.size());
  for (double f : f_inj_grid_hz) out.push_back(locked_point(base, f, epsilon, free_ref, w));
  return out;
}

std::vector<std::optional<MeasuredPoint>> oracle_ffr_sweep(
    const OracleConfig& base, const MeasuredPoint& free_ref, double epsilon,
    const std::vector<double>& f_fr_grid_hz, double f_inj_hz, const RunWindows& w) {
  std::vector<std::optional<MeasuredPoint>> out;
  out.reserve(f_fr_grid_hz.size());
  for (double f_fr : f_fr_grid_hz) {
    if (!(f_fr > 0.0)) throw std::domain_error("oracle_ffr_sweep: f_fr must be positive");
    OracleConfig cfg = base;
    cfg.c_f = base.c_f * free_ref.f_osc_hz / f_fr;
    MeasuredPoint shifted = free_ref;
    shifted.f_osc_hz = f_fr;
    out.push_back(locked_point(cfg, f_inj_hz, epsilon, shifted, w));
  }
  return out;
}

CalibrationResult build_calibration(const OracleConfig& base, const CalibrationPlan& plan) {
  if (plan.law_points < 3) throw ConfigError("law_points must be at least 3");
  if (!(plan.epsilon > 0.0 && plan.epsilon < 1.0))
    throw ConfigError("calibration epsilon must be in (0, 1)");
  if (!(plan.band_inset >= 0.0 && plan.band_inset < 0.5))
    throw ConfigError("band_inset must be in [0, 0.5)");

  CalibrationResult r;
  r.scan = calibration_scan(base, plan.c_grid_f, plan.f_nominal_hz, plan.windows);

  const ScanPoint* at_ref = nullptr;
  for (const ScanPoint& sp : r.scan)
    if (std::abs(sp.c_f - base.c_f) < 1e-21) at_ref = &sp;
  r.free_ref = at_ref ? at_ref->meas
                      : free_running_point(base, plan.f_nominal_hz, plan.windows);

  r.band = oracle_locking_band(base, r.free_ref, plan.epsilon, plan.windows, plan.edge_tol_hz);

  for (int i = 0; i < plan.law_points; ++i) {
    const double u = plan.law_points > 1 ? static_cast<double>(i) / (plan.law_points - 1) : 0.5;
    r.law_grid_hz.push_back(r.band.f_lo_hz +
                            r.band.width_hz * (plan.band_inset + (1.0 - 2.0 * plan.band_inset) * u));
  }
  for (double f : r.law_grid_hz) {
    std::optional<MeasuredPoint> mp = locked_point(base, f, plan.epsilon, r.free_ref, plan.windows);
    if (!mp)
      throw OracleError("law sweep did not lock at f_inj = " + format_double(f) +
                        " Hz inside the measured band");
    r.samples.push_back({mp->v_osc_v, mp->theta_vi_deg, mp->i_osc_a, f, base.c_f});
    r.law_meas.push_back(std::move(*mp));
  }

  r.table.laws = fit_linear_laws(r.samples);
  for (const ScanPoint& sp : r.scan)
    r.table.points.push_back({sp.meas.f_osc_hz, sp.meas.v_osc_v, sp.meas.i_osc_a,
                              sp.meas.theta_vi_deg, sp.meas.theta_iv_deg});
  std::sort(r.table.points.begin(), r.table.points.end(),
            [](const FreeRunningPoint& a, const FreeRunningPoint& b) {
              return a.f_fr_hz < b.f_fr_hz;
            });

  r.table.stage.a_vi_deg_per_v = r.table.laws.theta_vi.slope;
  r.table.stage.theta_vi_0_deg = r.table.laws.theta_vi.intercept;
  r.table.stage.g_m_a_per_v = r.table.laws.i_osc.slope;
  r.table.stage.i_osc_0_a = r.table.laws.i_osc.intercept;
  r.table.stage.theta_iv_deg = r.free_ref.theta_iv_deg;
  r.table.stage.c_load_f = base.c_f;
  r.table.stage.n_stages = base.n_stages;
  r.table.stage.k_angle_mode = plan.k_angle_mode;
  validate(r.table.stage);
  return r;
}

namespace {

std::vector<double> linspace(double lo, double hi, long n, const std::string& what) {
  if (n < 2) throw ConfigError(what + ": grid needs at least 2 points");
  if (!(hi > lo)) throw ConfigError(what + ": max must exceed min");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) /
                                              static_cast<double>(n - 1);
  return g;
}

RunConfig run_config_from(const Config& cfg) {
  RunConfig rc;

  OracleConfig& oc = rc.oracle;
  oc.n_stages = static_cast<int>(cfg.integer_or("oracle", "n_stages", oc.n_stages));
  oc.c_f = cfg.quantity("oracle", "c_load", Unit::Farad);
  oc.g_main_s = cfg.quantity("oracle", "g_main", Unit::Siemens);
  oc.i_sat_main_a = cfg.quantity("oracle", "i_sat_main", Unit::Ampere);
  oc.g_cc_s = cfg.quantity("oracle", "g_cc", Unit::Siemens);
  oc.i_sat_cc_a = cfg.quantity("oracle", "i_sat_cc", Unit::Ampere);
  oc.g_out_s = cfg.quantity("oracle", "g_out", Unit::Siemens);
  oc.ic_scale_v = cfg.quantity_or("oracle", "ic_scale", Unit::Volt, oc.ic_scale_v);
  oc.seed = static_cast<unsigned long long>(cfg.integer_or("oracle", "seed", 0));
  oc.inj.multi_phase =
      parse_bool(cfg.text_or("oracle", "multi_phase", "true"), "oracle.multi_phase");

  CalibrationPlan& plan = rc.plan;
  plan.f_nominal_hz = cfg.quantity("oracle", "f_nominal", Unit::Hertz);
  const double c_min = cfg.quantity("stage", "c_min", Unit::Farad);
  const double c_max = cfg.quantity("stage", "c_max", Unit::Farad);
  const double c_step = cfg.quantity("stage", "c_step", Unit::Farad);
  if (!(c_step > 0.0) || !(c_max >= c_min))
    throw ConfigError("stage grid needs c_max >= c_min and c_step > 0");
  for (double c = c_min; c <= c_max * (1.0 + 1e-12); c += c_step) plan.c_grid_f.push_back(c);
  plan.epsilon = cfg.quantity_or("stage", "epsilon", Unit::Scalar, plan.epsilon);
  plan.law_points = static_cast<int>(cfg.integer_or("stage", "law_points", plan.law_points));
  plan.band_inset = cfg.quantity_or("stage", "band_inset", Unit::Scalar, plan.band_inset);
  plan.edge_tol_hz = cfg.quantity_or("stage", "edge_tol", Unit::Hertz, plan.edge_tol_hz);
  RunWindows& w = plan.windows;
  w.settle_free = cfg.quantity_or("stage", "settle_free", Unit::Scalar, w.settle_free);
  w.measure_free = cfg.quantity_or("stage", "measure_free", Unit::Scalar, w.measure_free);
  w.settle_locked = cfg.quantity_or("stage", "settle_locked", Unit::Scalar, w.settle_locked);
  w.measure_locked =
      cfg.quantity_or("stage", "measure_locked", Unit::Scalar, w.measure_locked);
  plan.k_angle_mode = parse_k_angle_mode(cfg.text_or("solver", "k_angle", "theta_vi"));

  rc.epsilons = cfg.has("injection", "epsilons")
                    ? cfg.quantity_list("injection", "epsilons", Unit::Scalar)
                    : std::vector<double>{0.05, 0.10, 0.15, 0.20};
  for (double e : rc.epsilons)
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("injection.epsilons must lie in (0, 1)");
  rc.f_inj_hz = cfg.quantity_or("injection", "f_inj", Unit::Hertz, plan.f_nominal_hz);

  rc.f_fr_grid_hz = linspace(cfg.quantity("sweep", "f_fr_min", Unit::Hertz),
                             cfg.quantity("sweep", "f_fr_max", Unit::Hertz),
                             cfg.integer("sweep", "n_ffr"), "sweep.f_fr");
  rc.f_inj_grid_hz = linspace(cfg.quantity("sweep", "f_inj_min", Unit::Hertz),
                              cfg.quantity("sweep", "f_inj_max", Unit::Hertz),
                              cfg.integer("sweep", "n_finj"), "sweep.f_inj");

  rc.solver.tol = cfg.quantity_or("solver", "tol", Unit::Scalar, rc.solver.tol);
  rc.solver.max_iter =
      static_cast<int>(cfg.integer_or("solver", "max_iter", rc.solver.max_iter));

  CompareThresholds& t = rc.thresholds;
  t.phi0_rms_deg = cfg.quantity_or("compare", "phi0_rms", Unit::Degree, t.phi0_rms_deg);
  t.psi_rms_deg = cfg.quantity_or("compare", "psi_rms", Unit::Degree, t.psi_rms_deg);
  t.v_osc_rms_rel = cfg.quantity_or("compare", "v_osc_rms", Unit::Scalar, t.v_osc_rms_rel);
  t.i_t_rms_rel = cfg.quantity_or("compare", "i_t_rms", Unit::Scalar, t.i_t_rms_rel);

  cfg.finish();
  return rc;
}

}  // namespace

RunConfig run_config_from_file(const std::filesystem::path& path) {
  return run_config_from(Config::from_file(path));
}

RunConfig run_config_from_string(const std::string& text) {
  return run_config_from(Config::from_string(text));
}

}  // namespace ilro
