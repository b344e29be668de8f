#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "ilro/stage.hpp"

namespace ilro {

struct InjectionSpec {
  double epsilon = 0.0;   // |I_inj| / |I_osc_fr|, in [0, 1)
  double f_inj_hz = 0.0;  // > 0
  bool multi_phase = true;
};

void validate(const InjectionSpec& inj);

enum class UnlockReason { NoRoot, AmplitudeCollapse, MaxIter };

const char* unlock_reason_name(UnlockReason r);

// Locked operating point. phi0 and psi are the negated tone angles on
// I_osc-referenced axes: phi0 = -angle(I_inj), psi = -angle(I_t), matching
// what measure_operating_point reports for a locked oracle record.
struct LockSolution {
  double phi0_deg = 0.0;      // injection phase lead over the oscillator current
  double psi_deg = 0.0;       // total-current phase lead over the oscillator current
  double theta_vi_deg = 0.0;  // stage transfer angle at the locked amplitude
  double i_t_a = 0.0;
  double i_osc_a = 0.0;
  double v_osc_v = 0.0;
  double f_inj_hz = 0.0;
  double f_fr_hz = 0.0;
  double residual_norm = 0.0;
};

struct LockOutcome {
  bool locked = false;
  UnlockReason reason = UnlockReason::NoRoot;
  LockSolution sol;  // valid only when locked
};

struct SolveOptions {
  bool classic_closure = false;  // fixed amplitudes, frequency-scaled theta_VI
  double tol = 1e-10;
  int max_iter = 50;
  int max_halvings = 8;
  double jacobian_rel_step = 1e-6;
  // Continuation seed (v_osc/V_osc_fr, phi0_deg); classic-Adler seeding otherwise.
  std::optional<std::pair<double, double>> seed;
};

// Classic locked-oscillator solution with amplitudes pinned at the baseline.
LockOutcome solve_classic(const FreeRunningPoint& baseline, const InjectionSpec& inj,
                          const StageParams& p);

// Amplitude-aware solution on the calibrated table; f_fr selects the baseline.
LockOutcome solve_extended(const CalibrationTable& table, double f_fr_hz,
                           const InjectionSpec& inj, const StageParams& p,
                           const SolveOptions& opts = {});

enum class SweepMode { Ffr, Finj };

struct LockingRange {
  double f_lo_hz = 0.0;
  double f_hi_hz = 0.0;
  double width_hz = 0.0;
  double asymmetry = 0.0;  // ((f_hi - f_ref) - (f_ref - f_lo)) / width
  bool lo_clamped = false;  // edge pinned at the calibration-table boundary
  bool hi_clamped = false;
};

// Maximal contiguous locked interval around the trivial point f = f_ref
// (where f_inj = f_fr), edges located to edge_tol_hz.
LockingRange locking_range(const CalibrationTable& table, double f_ref_hz, double epsilon,
                           const StageParams& p, SweepMode mode, const SolveOptions& opts = {},
                           double edge_tol_hz = 1e6);

struct SweepRow {
  double sweep_var_hz = 0.0;
  double epsilon = 0.0;
  LockOutcome outcome;
};

struct SweepTable {
  SweepMode mode = SweepMode::Ffr;
  double fixed_hz = 0.0;  // f_inj for Ffr sweeps, f_fr for Finj sweeps
  std::vector<SweepRow> rows;  // sorted by (epsilon, sweep_var)
};

// Sweeps solve every grid point cold, then re-seed unlocked points from locked
// neighbours in a bidirectional continuation pass; results are independent of
// evaluation order.
SweepTable sweep_ffr(const CalibrationTable& table, double f_inj_hz,
                     const std::vector<double>& epsilons, const StageParams& p,
                     const std::vector<double>& f_fr_grid_hz, const SolveOptions& opts = {});
SweepTable sweep_finj(const CalibrationTable& table, double f_fr_hz,
                      const std::vector<double>& epsilons, const StageParams& p,
                      const std::vector<double>& f_inj_grid_hz, const SolveOptions& opts = {});

void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path);
SweepTable read_sweep_csv(const std::filesystem::path& path);

}  // namespace ilro
