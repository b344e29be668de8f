#pragma once

#include <cstddef>
#include <vector>

#include "ilro/oracle.hpp"

namespace ilro {

struct Fundamental {
  double amp = 0.0;        // peak amplitude of the fitted cosine
  double phase_deg = 0.0;  // x(t) ~ amp * cos(2*pi*f*(t - t_win0) + phase)
  double mean = 0.0;
  int periods = 0;         // whole periods used by the projection
};

// Single-bin projection over the largest whole number of periods that fits
// the series (trapezoid rule, final partial step interpolated). Throws
// PrereqError when fewer than min_periods periods fit.
Fundamental extract_fundamental(const std::vector<double>& x, double dt_s, double f_hz,
                                int min_periods = 16);

struct FrequencyEstimate {
  double f_hz = 0.0;
  double stderr_hz = 0.0;
  int n_periods = 0;
};

// Mean period between interpolated positive-going zero crossings of node 0,
// with the standard error of that mean. Throws PrereqError when fewer than
// two full periods are present (no detectable oscillation).
FrequencyEstimate free_running_frequency(const WaveRecord& rec);

struct LockCheck {
  bool locked = false;
  double max_drift_deg_per_period = 0.0;  // worst block-to-block phase slope
  double trend_deg = 0.0;                 // accumulated phase over the window
};

// Splits the record into 8-period blocks of the injection tone and tracks the
// phase of node 0 against that tone. Locked means every block-to-block drift
// stays under drift_tol_deg_per_period and the accumulated trend under
// trend_tol_deg. Never throws on an unlocked waveform.
LockCheck detect_lock(const WaveRecord& rec, double drift_tol_deg_per_period = 0.5,
                      double trend_tol_deg = 2.0);

// One ring stage: input is the driving node's voltage, output the node
// itself. Angles follow the phasor solver's reporting conventions.
struct StageReading {
  double v_in_v = 0.0;
  double v_osc_v = 0.0;
  double i_main_a = 0.0;
  double i_cc_a = 0.0;
  double i_osc_a = 0.0;  // fundamental of main + cc together
  double i_t_a = 0.0;    // fundamental of main + cc + injection
  double theta_vi_deg = 0.0;
  double theta_iv_deg = 0.0;
  double phi0_deg = 0.0;  // meaningful only where injection drives the node
  double psi_deg = 0.0;
  bool driven = false;    // node receives injection current
};

struct MeasuredPoint {
  bool injected = false;
  bool locked = false;  // injected runs only; false when free-running
  double f_osc_hz = 0.0;
  double f_stderr_hz = 0.0;  // free-running runs only
  double v_osc_v = 0.0;      // ring averages; angles are circular means
  double i_main_a = 0.0;
  double i_cc_a = 0.0;
  double i_osc_a = 0.0;
  double i_t_a = 0.0;
  double theta_vi_deg = 0.0;
  double theta_iv_deg = 0.0;
  double phi0_deg = 0.0;  // averaged over driven nodes; 0 when free-running
  double psi_deg = 0.0;
  double harmonic_ratio = 0.0;  // third-over-first harmonic of node 0
  double kcl_residual = 0.0;    // max |C dv/dt + g_out v - i_t| / peak |i_t|
  std::vector<StageReading> stages;
};

// Full phasor decomposition of a settled record. Injected runs must pass
// detect_lock first (PrereqError otherwise); the ring phase progression must
// wind through a nonzero whole number of turns (OracleError otherwise).
MeasuredPoint measure_operating_point(const WaveRecord& rec);

}  // namespace ilro
