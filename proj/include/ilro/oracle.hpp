#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "ilro/adler.hpp"

namespace ilro {

// Behavioral ring model integrated in the time domain. Each of the 2N nodes
// carries a load RC (c_f, g_out_s) fed by three current branches:
//   main - saturating transconductor reading the previous node (ring path),
//   cc   - saturating transconductor reading the complementary node; for the
//          oscillating mode V_comp = -V_k, so it acts as negative resistance
//          that sustains the swing, while it damps the common mode,
//   inj  - external injection tone (zero amplitude -> free-running).
// The oscillation amplitude settles where the cc branch's effective
// transconductance has compressed down to g_out_s, and the frequency where
// the main branch's effective transconductance equals the load susceptance.
// Because the two branches compress at different rates, an amplitude change
// re-tilts the total stage current: that is the amplitude-to-phase coupling
// the phasor solver's linear angle law approximates.
struct OracleConfig {
  int n_stages = 2;  // differential stages; 2 * n_stages nodes
  double c_f = 100e-15;

  double g_main_s = 5.2e-3;
  double i_sat_main_a = 2.10e-3;
  double g_cc_s = 12.0e-3;
  double i_sat_cc_a = 0.90e-3;
  double g_out_s = 3.93e-3;

  InjectionSpec inj;           // frequency and drive topology
  double inj_amp_a = 0.0;      // per-node current amplitude; 0 -> free-running
  std::vector<double> inj_phase_offsets_deg;  // per node; empty -> defaults

  double dt_s = 0.0;
  double t_settle_s = 0.0;
  double t_measure_s = 0.0;

  unsigned long long seed = 0;  // scrambles the initial phase pattern
  double ic_scale_v = 0.05;

  int n_nodes() const { return 2 * n_stages; }
  void validate() const;  // OracleError on nonsense
};

// Node that node k cross-couples from (its differential complement) and the
// node whose voltage drives node k's main transconductor.
int comp_node(const OracleConfig& cfg, int k);
int drive_node(const OracleConfig& cfg, int k);

// Branch currents flowing into a node, recomputed from stored state. Both
// saturating branches are exactly odd in floating point, so a sign-flipped
// state produces a bitwise sign-flipped current.
double main_current(const OracleConfig& cfg, double v_drive);
double cc_current(const OracleConfig& cfg, double v_comp);
double injection_current(const OracleConfig& cfg, int node, double t_s);

// 512 samples per period of f_nominal_hz; settle/measure windows in periods.
// All three are pure products of the inputs, so halving f_nominal doubles
// every time quantity exactly.
void set_timing(OracleConfig& cfg, double f_nominal_hz, double settle_periods,
                double measure_periods);

// Node voltages sampled every dt_s over the measurement window (settle
// discarded). Branch currents are memoryless functions of the stored
// voltages; total_current_at is the sum flowing into the node's RC.
struct WaveRecord {
  OracleConfig cfg;
  double t0_s = 0.0;
  double dt_s = 0.0;
  std::vector<std::vector<double>> v;  // [node][sample]

  std::size_t n_samples() const { return v.empty() ? 0 : v[0].size(); }
  double time_at(std::size_t i) const { return t0_s + static_cast<double>(i) * dt_s; }
};

double main_current_at(const WaveRecord& rec, int node, std::size_t i);
double cc_current_at(const WaveRecord& rec, int node, std::size_t i);
double injection_current_at(const WaveRecord& rec, int node, std::size_t i);
double total_current_at(const WaveRecord& rec, int node, std::size_t i);

// Fixed-step RK4 over settle + measure; throws OracleError if a state goes
// non-finite (e.g. dt_s far above the node time constant).
WaveRecord simulate(const OracleConfig& cfg);

void write_wave_csv(const WaveRecord& rec, const std::filesystem::path& path);

}  // namespace ilro
