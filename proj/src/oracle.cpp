#include "ilro/oracle.hpp"

#include <cmath>
#include <string>

#include "ilro/angles.hpp"
#include "ilro/csv.hpp"
#include "ilro/errors.hpp"

namespace ilro {

namespace {

// copysign keeps the branch exactly odd in floating point, which in turn
// keeps the two ring halves bitwise mirrored for mirrored states.
double saturating(double g, double i_sat, double x) {
  return std::copysign(i_sat * std::tanh(g * std::fabs(x) / i_sat), x);
}

void rhs(const OracleConfig& cfg, double t, const std::vector<double>& x,
         std::vector<double>& dx) {
  const int n = cfg.n_nodes();
  for (int k = 0; k < n; ++k) {
    const double i = main_current(cfg, x[drive_node(cfg, k)]) +
                     cc_current(cfg, x[comp_node(cfg, k)]) - cfg.g_out_s * x[k] +
                     injection_current(cfg, k, t);
    dx[k] = i / cfg.c_f;
  }
}

void check_finite(const std::vector<double>& x, double t) {
  for (double s : x)
    if (!std::isfinite(s))
      throw OracleError("oracle state non-finite at t = " + format_double(t) + " s");
}

double ic_phase_deg(unsigned long long seed) {
  return wrap_angle(std::fmod(static_cast<double>(seed) * 137.507764050037854, 360.0));
}

}  // namespace

void OracleConfig::validate() const {
  auto bad = [](const std::string& m) { throw OracleError("oracle config: " + m); };
  if (n_stages < 2 || n_stages % 2 != 0) bad("n_stages must be even and at least 2");
  if (!(c_f > 0.0)) bad("c_f must be positive");
  if (!(g_main_s >= 0.0)) bad("g_main_s must be non-negative");
  if (!(g_cc_s >= 0.0)) bad("g_cc_s must be non-negative");
  if (!(g_out_s > 0.0)) bad("g_out_s must be positive");
  if (!(i_sat_main_a > 0.0)) bad("i_sat_main_a must be positive");
  if (!(i_sat_cc_a > 0.0)) bad("i_sat_cc_a must be positive");
  if (!(dt_s > 0.0)) bad("dt_s must be positive");
  if (!(t_settle_s >= 0.0)) bad("t_settle_s must be non-negative");
  if (!(t_measure_s > 0.0)) bad("t_measure_s must be positive");
  if (!(inj_amp_a >= 0.0)) bad("inj_amp_a must be non-negative");
  if (inj_amp_a > 0.0) {
    ilro::validate(inj);
    if (t_measure_s * inj.f_inj_hz < 64.0 * (1.0 - 1e-12))
      bad("t_measure_s must cover at least 64 injection periods");
  }
  if (!inj_phase_offsets_deg.empty() &&
      inj_phase_offsets_deg.size() != static_cast<std::size_t>(n_nodes()))
    bad("inj_phase_offsets_deg needs one entry per node");
  if (!(ic_scale_v > 0.0)) bad("ic_scale_v must be positive");
}

int comp_node(const OracleConfig& cfg, int k) {
  return (k + cfg.n_stages) % cfg.n_nodes();
}

int drive_node(const OracleConfig& cfg, int k) {
  return (k + cfg.n_nodes() - 1) % cfg.n_nodes();
}

double main_current(const OracleConfig& cfg, double v_drive) {
  return -saturating(cfg.g_main_s, cfg.i_sat_main_a, v_drive);
}

double cc_current(const OracleConfig& cfg, double v_comp) {
  return -saturating(cfg.g_cc_s, cfg.i_sat_cc_a, v_comp);
}

double injection_current(const OracleConfig& cfg, int node, double t_s) {
  if (cfg.inj_amp_a == 0.0) return 0.0;
  if (!cfg.inj_phase_offsets_deg.empty()) {
    const double off = cfg.inj_phase_offsets_deg[static_cast<std::size_t>(node)];
    return cfg.inj_amp_a * std::cos(2.0 * kPi * cfg.inj.f_inj_hz * t_s + deg2rad(off));
  }
  // Default patterns drive node k+N with the bitwise negation of node k so
  // injection never perturbs the differential symmetry.
  if (node >= cfg.n_stages) return -injection_current(cfg, node - cfg.n_stages, t_s);
  if (!cfg.inj.multi_phase && node != 0) return 0.0;
  const double off = 180.0 * node / cfg.n_stages;
  return cfg.inj_amp_a * std::cos(2.0 * kPi * cfg.inj.f_inj_hz * t_s + deg2rad(off));
}

void set_timing(OracleConfig& cfg, double f_nominal_hz, double settle_periods,
                double measure_periods) {
  if (!(f_nominal_hz > 0.0) || !(settle_periods >= 0.0) || !(measure_periods > 0.0))
    throw OracleError("set_timing requires a positive frequency and window");
  cfg.dt_s = 1.0 / (512.0 * f_nominal_hz);
  cfg.t_settle_s = settle_periods / f_nominal_hz;
  cfg.t_measure_s = measure_periods / f_nominal_hz;
}

WaveRecord simulate(const OracleConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_nodes();
  const long long settle = std::llround(cfg.t_settle_s / cfg.dt_s);
  const long long meas = std::llround(cfg.t_measure_s / cfg.dt_s);
  if (meas < 2) throw OracleError("oracle config: measurement window shorter than two steps");

  // Differential pairs start exactly mirrored; the dynamics preserve that, so
  // the common-mode latch state is never excited.
  std::vector<double> x(n, 0.0);
  const double phase = ic_phase_deg(cfg.seed);
  for (int k = 0; k < cfg.n_stages; ++k) {
    x[k] = cfg.ic_scale_v * cos_deg(180.0 * k / cfg.n_stages + phase);
    x[k + cfg.n_stages] = -x[k];
  }

  WaveRecord rec;
  rec.cfg = cfg;
  rec.dt_s = cfg.dt_s;
  rec.t0_s = static_cast<double>(settle) * cfg.dt_s;
  rec.v.assign(n, {});
  for (int k = 0; k < n; ++k) rec.v[k].reserve(static_cast<std::size_t>(meas) + 1);

  const double dt = cfg.dt_s;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), xt(n);
  const long long total = settle + meas;
  for (long long step = 0;; ++step) {
    if (step >= settle)
      for (int k = 0; k < n; ++k) rec.v[k].push_back(x[k]);
    if (step == total) break;
    // time as a product, never accumulated, so scaled runs stay bit-exact
    const double t = static_cast<double>(step) * dt;
    rhs(cfg, t, x, k1);
    for (int i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * dt * k1[i];
    rhs(cfg, t + 0.5 * dt, xt, k2);
    for (int i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * dt * k2[i];
    rhs(cfg, t + 0.5 * dt, xt, k3);
    for (int i = 0; i < n; ++i) xt[i] = x[i] + dt * k3[i];
    rhs(cfg, t + dt, xt, k4);
    for (int i = 0; i < n; ++i)
      x[i] += dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    if ((step & 63) == 0) check_finite(x, t + dt);
  }
  check_finite(x, static_cast<double>(total) * dt);
  return rec;
}

double main_current_at(const WaveRecord& rec, int node, std::size_t i) {
  return main_current(rec.cfg, rec.v[static_cast<std::size_t>(drive_node(rec.cfg, node))][i]);
}

double cc_current_at(const WaveRecord& rec, int node, std::size_t i) {
  return cc_current(rec.cfg, rec.v[static_cast<std::size_t>(comp_node(rec.cfg, node))][i]);
}

double injection_current_at(const WaveRecord& rec, int node, std::size_t i) {
  return injection_current(rec.cfg, node, rec.time_at(i));
}

double total_current_at(const WaveRecord& rec, int node, std::size_t i) {
  return main_current_at(rec, node, i) + cc_current_at(rec, node, i) +
         injection_current_at(rec, node, i);
}

void write_wave_csv(const WaveRecord& rec, const std::filesystem::path& path) {
  const int n = rec.cfg.n_nodes();
  std::vector<std::string> header;
  header.push_back("t_s");
  for (int k = 0; k < n; ++k) header.push_back("v" + std::to_string(k) + "_v");
  for (int k = 0; k < n; ++k) header.push_back("i_main" + std::to_string(k) + "_a");
  for (int k = 0; k < n; ++k) header.push_back("i_cc" + std::to_string(k) + "_a");
  for (int k = 0; k < n; ++k) header.push_back("i_inj" + std::to_string(k) + "_a");
  for (int k = 0; k < n; ++k) header.push_back("i_t" + std::to_string(k) + "_a");
  std::vector<std::vector<std::string>> rows;
  rows.reserve(rec.n_samples());
  for (std::size_t i = 0; i < rec.n_samples(); ++i) {
    std::vector<std::string> row;
    row.reserve(header.size());
    row.push_back(format_double(rec.time_at(i)));
    for (int k = 0; k < n; ++k) row.push_back(format_double(rec.v[k][i]));
    for (int k = 0; k < n; ++k) row.push_back(format_double(main_current_at(rec, k, i)));
    for (int k = 0; k < n; ++k) row.push_back(format_double(cc_current_at(rec, k, i)));
    for (int k = 0; k < n; ++k) row.push_back(format_double(injection_current_at(rec, k, i)));
    for (int k = 0; k < n; ++k) row.push_back(format_double(total_current_at(rec, k, i)));
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

}  // namespace ilro
