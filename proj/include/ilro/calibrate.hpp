#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "ilro/adler.hpp"
#include "ilro/compare.hpp"
#include "ilro/config.hpp"
#include "ilro/measure.hpp"
#include "ilro/oracle.hpp"
#include "ilro/stage.hpp"

namespace ilro {

// Window lengths in periods of the run's nominal frequency.
struct RunWindows {
  double settle_free = 300.0;
  double measure_free = 128.0;
  double settle_locked = 700.0;
  double measure_locked = 96.0;
};

// Recipe for turning oracle runs into a CalibrationTable: a free-running
// capacitance sweep for the baseline plus a locked injection sweep for the
// amplitude laws (free-running points alone have no amplitude spread to fit).
struct CalibrationPlan {
  std::vector<double> c_grid_f;
  double f_nominal_hz = 7e9;   // frequency guess at the template capacitance
  double epsilon = 0.2;        // injection strength of the law sweep
  int law_points = 13;
  double band_inset = 0.02;    // law grid margin, as a fraction of band width
  double edge_tol_hz = 1e6;
  KAngleMode k_angle_mode = KAngleMode::UseThetaVi;
  RunWindows windows;
};

struct ScanPoint {
  double c_f = 0.0;
  MeasuredPoint meas;
};

// Measured locked band on the injection-frequency axis; same asymmetry
// convention as LockingRange.
struct OracleBand {
  double f_lo_hz = 0.0;
  double f_hi_hz = 0.0;
  double width_hz = 0.0;
  double asymmetry = 0.0;
  bool lo_clamped = false;
  bool hi_clamped = false;
};

// Free-running run with a second pass re-timed on the measured frequency so
// the analysis windows hold whole periods of the actual tone.
MeasuredPoint free_running_point(OracleConfig cfg, double f_guess_hz, const RunWindows& w);

// One free-running point per grid capacitance. A failing grid point aborts
// with the offending capacitance in the message.
std::vector<ScanPoint> calibration_scan(const OracleConfig& base,
                                        const std::vector<double>& c_grid_f,
                                        double f_nominal_hz, const RunWindows& w);

// Injected run at one frequency. nullopt when the record fails lock detection
// or the oscillation quenches below 0.6 of the free-running amplitude (an
// injection-dragged state passes phase-stability checks but is not a lock).
std::optional<MeasuredPoint> locked_point(const OracleConfig& base, double f_inj_hz,
                                          double epsilon, const MeasuredPoint& free_ref,
                                          const RunWindows& w);

// Locked band by outward march from f_fr (bounded to [0.4, 2.2] f_fr) and
// bisection of each edge to edge_tol_hz.
OracleBand oracle_locking_band(const OracleConfig& base, const MeasuredPoint& free_ref,
                               double epsilon, const RunWindows& w, double edge_tol_hz = 1e6);

// locked_point at every grid frequency; unlocked entries stay nullopt.
std::vector<std::optional<MeasuredPoint>> oracle_finj_sweep(
    const OracleConfig& base, const MeasuredPoint& free_ref, double epsilon,
    const std::vector<double>& f_inj_grid_hz, const RunWindows& w);

// Free-running-axis sweep at fixed injection: each grid f_fr is reached by
// rescaling the load capacitance (f scales exactly as 1/C, and amplitude,
// current, and angles are invariant along that family).
std::vector<std::optional<MeasuredPoint>> oracle_ffr_sweep(
    const OracleConfig& base, const MeasuredPoint& free_ref, double epsilon,
    const std::vector<double>& f_fr_grid_hz, double f_inj_hz, const RunWindows& w);

struct CalibrationResult {
  CalibrationTable table;
  std::vector<ScanPoint> scan;
  MeasuredPoint free_ref;              // free-running point at the template c_f
  OracleBand band;                     // law-sweep band at plan.epsilon
  std::vector<double> law_grid_hz;
  std::vector<MeasuredPoint> law_meas;
  std::vector<CalibrationSample> samples;
};

// Full pipeline: scan, band, law sweep, least-squares fit, assembled table.
CalibrationResult build_calibration(const OracleConfig& base, const CalibrationPlan& plan);

// Fully parsed run configuration. Parsing every section up front keeps strict
// mode meaningful: a key no workflow understands is fatal regardless of the
// subcommand that loads the file.
struct RunConfig {
  OracleConfig oracle;
  CalibrationPlan plan;
  std::vector<double> epsilons;        // injection strengths for sweeps/ranges
  double f_inj_hz = 7e9;               // fixed injection on the f_fr axis
  std::vector<double> f_fr_grid_hz;    // solver sweep grid, free-running axis
  std::vector<double> f_inj_grid_hz;   // solver sweep grid, injection axis
  SolveOptions solver;
  CompareThresholds thresholds;
};

RunConfig run_config_from_file(const std::filesystem::path& path);
RunConfig run_config_from_string(const std::string& text);

}  // namespace ilro
