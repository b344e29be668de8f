#pragma once

#include <filesystem>
#include <optional>

#include "ilro/adler.hpp"
#include "ilro/measure.hpp"

namespace ilro {

// Deviation ceilings for solver-vs-oracle agreement.
struct CompareThresholds {
  double phi0_rms_deg = 3.0;
  double psi_rms_deg = 2.0;
  double v_osc_rms_rel = 0.03;
  double i_t_rms_rel = 0.05;
};

struct Deviation {
  double rms = 0.0;
  double max_abs = 0.0;
};

// Per-quantity deviations over rows locked in both tables. Angles are
// absolute degrees; amplitudes are relative to the reference row.
struct CompareReport {
  int n_rows = 0;
  int n_solver_locked = 0;
  int n_reference_locked = 0;
  int n_common = 0;
  Deviation phi0_deg;
  Deviation psi_deg;
  Deviation v_osc_rel;
  Deviation i_t_rel;
  // first/last locked grid row difference, set when both sides lock anywhere
  double lo_edge_dev_hz = 0.0;
  double hi_edge_dev_hz = 0.0;

  bool disjoint() const { return n_common == 0; }
  bool pass(const CompareThresholds& t) const;
};

// Both tables must enumerate the same (epsilon, sweep_var) grid row for row;
// a mismatch throws CompareError. Zero common locked rows is reported via
// disjoint(), not thrown.
CompareReport compare_tables(const SweepTable& solver, const SweepTable& reference);

// SweepRow carrying an oracle measurement in the solved-fields slots; the
// residual column carries the KCL residual. Unlocked points stay empty.
SweepRow oracle_sweep_row(double sweep_var_hz, double epsilon,
                          const std::optional<MeasuredPoint>& mp);

// Sweep schema plus a trailing `source` column; read back with read_sweep_csv.
void write_oracle_sweep_csv(const SweepTable& table, const std::filesystem::path& path);

void write_compare_csv(const CompareReport& report, const std::filesystem::path& path);

}  // namespace ilro
