#include "ilro/measure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ilro/angles.hpp"
#include "ilro/errors.hpp"

namespace ilro {

namespace {

// Projection of x onto cos/sin of f_hz over [0, t_win]; trapezoid rule with
// the final partial step linearly interpolated. t_win must be a whole number
// of periods of the analysis fundamental for the bins to stay orthogonal.
Fundamental project(const std::vector<double>& x, double dt_s, double f_hz, double t_win) {
  std::size_t m_full = static_cast<std::size_t>(t_win / dt_s);
  double frac = t_win / dt_s - static_cast<double>(m_full);
  if (m_full >= x.size() - 1) {
    m_full = x.size() - 1;
    frac = 0.0;
  }
  const double w = 2.0 * kPi * f_hz;
  double sum = 0.0, sc = 0.0, ss = 0.0;
  double g0 = x[0], c0 = 1.0, s0 = 0.0;
  for (std::size_t i = 1; i <= m_full; ++i) {
    const double t = static_cast<double>(i) * dt_s;
    const double c1 = std::cos(w * t), s1 = std::sin(w * t);
    const double g1 = x[i];
    sum += 0.5 * (g0 + g1);
    sc += 0.5 * (g0 * c0 + g1 * c1);
    ss += 0.5 * (g0 * s0 + g1 * s1);
    g0 = g1;
    c0 = c1;
    s0 = s1;
  }
  sum *= dt_s;
  sc *= dt_s;
  ss *= dt_s;
  if (frac > 0.0) {
    const double gT = x[m_full] + frac * (x[m_full + 1] - x[m_full]);
    const double cT = std::cos(w * t_win), sT = std::sin(w * t_win);
    sum += 0.5 * (g0 + gT) * frac * dt_s;
    sc += 0.5 * (g0 * c0 + gT * cT) * frac * dt_s;
    ss += 0.5 * (g0 * s0 + gT * sT) * frac * dt_s;
  }
  Fundamental out;
  out.mean = sum / t_win;
  // remove the mean's own projection (integer periods -> cos/sin integrate to 0)
  const double a = 2.0 / t_win * sc;
  const double b = -2.0 / t_win * ss;
  out.amp = std::hypot(a, b);
  out.phase_deg = wrap_angle(rad2deg(std::atan2(b, a)));
  return out;
}

int whole_periods(std::size_t n, double dt_s, double f_hz) {
  return static_cast<int>(static_cast<double>(n - 1) * dt_s * f_hz);
}

}  // namespace

Fundamental extract_fundamental(const std::vector<double>& x, double dt_s, double f_hz,
                                int min_periods) {
  if (x.size() < 2 || !(dt_s > 0.0) || !(f_hz > 0.0))
    throw PrereqError("extract_fundamental needs a sampled series and a positive frequency");
  const int n_per = whole_periods(x.size(), dt_s, f_hz);
  if (n_per < min_periods)
    throw PrereqError("window holds " + std::to_string(n_per) + " whole periods, need " +
                      std::to_string(min_periods));
  Fundamental out = project(x, dt_s, f_hz, static_cast<double>(n_per) / f_hz);
  out.periods = n_per;
  return out;
}

FrequencyEstimate free_running_frequency(const WaveRecord& rec) {
  if (rec.n_samples() < 3) throw PrereqError("record too short for a frequency estimate");
  const std::vector<double>& x = rec.v[0];
  std::vector<double> crossings;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i - 1] <= 0.0 && x[i] > 0.0) {
      const double f = -x[i - 1] / (x[i] - x[i - 1]);
      crossings.push_back((static_cast<double>(i - 1) + f) * rec.dt_s);
    }
  if (crossings.size() < 3)
    throw PrereqError("no sustained oscillation: fewer than two full periods detected");
  std::vector<double> periods(crossings.size() - 1);
  for (std::size_t i = 0; i + 1 < crossings.size(); ++i)
    periods[i] = crossings[i + 1] - crossings[i];
  const double n = static_cast<double>(periods.size());
  double mean = 0.0;
  for (double p : periods) mean += p;
  mean /= n;
  double var = 0.0;
  for (double p : periods) var += (p - mean) * (p - mean);
  var = periods.size() > 1 ? var / (n - 1.0) : 0.0;
  FrequencyEstimate est;
  est.f_hz = 1.0 / mean;
  est.stderr_hz = est.f_hz * est.f_hz * std::sqrt(var / n);
  est.n_periods = static_cast<int>(periods.size());
  return est;
}

LockCheck detect_lock(const WaveRecord& rec, double drift_tol_deg_per_period,
                      double trend_tol_deg) {
  const OracleConfig& cfg = rec.cfg;
  if (!(cfg.inj_amp_a > 0.0) || !(cfg.inj.f_inj_hz > 0.0))
    throw PrereqError("detect_lock needs an injected record");
  const double f = cfg.inj.f_inj_hz;
  const std::size_t block = static_cast<std::size_t>(std::llround(8.0 / (f * rec.dt_s)));
  if (block < 2 || rec.n_samples() < 2 * block + 1)
    throw PrereqError("record shorter than two 8-period lock-detection blocks");
  const std::size_t n_blocks = (rec.n_samples() - 1) / block;

  std::vector<double> phase(n_blocks);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    std::vector<double> slice(rec.v[0].begin() + static_cast<std::ptrdiff_t>(b * block),
                              rec.v[0].begin() + static_cast<std::ptrdiff_t>(b * block + block + 1));
    const Fundamental fb = extract_fundamental(slice, rec.dt_s, f, 7);
    // rebase every block phase to the shared t = 0 reference of the window
    phase[b] = wrap_angle(fb.phase_deg +
                          360.0 * f * static_cast<double>(b * block) * rec.dt_s);
  }
  const double periods_per_block = static_cast<double>(block) * rec.dt_s * f;
  LockCheck out;
  double trend = 0.0;
  for (std::size_t b = 0; b + 1 < n_blocks; ++b) {
    const double d = wrap_angle(phase[b + 1] - phase[b]);
    trend += d;
    out.max_drift_deg_per_period =
        std::max(out.max_drift_deg_per_period, std::abs(d) / periods_per_block);
  }
  out.trend_deg = trend;
  out.locked = out.max_drift_deg_per_period < drift_tol_deg_per_period &&
               std::abs(trend) < trend_tol_deg;
  return out;
}

MeasuredPoint measure_operating_point(const WaveRecord& rec) {
  const OracleConfig& cfg = rec.cfg;
  const int n = cfg.n_nodes();
  if (rec.n_samples() < 3 || static_cast<int>(rec.v.size()) != n)
    throw PrereqError("record is empty or node count is inconsistent");

  MeasuredPoint mp;
  mp.injected = cfg.inj_amp_a > 0.0;
  if (mp.injected) {
    const LockCheck lc = detect_lock(rec);
    if (!lc.locked)
      throw PrereqError("injected run is not phase-locked; operating point undefined");
    mp.locked = true;
    mp.f_osc_hz = cfg.inj.f_inj_hz;
  } else {
    const FrequencyEstimate est = free_running_frequency(rec);
    mp.f_osc_hz = est.f_hz;
    mp.f_stderr_hz = est.stderr_hz;
  }
  const double f = mp.f_osc_hz;
  const std::size_t m = rec.n_samples();

  std::vector<Fundamental> fv(static_cast<std::size_t>(n));
  std::vector<Fundamental> fosc(static_cast<std::size_t>(n)), ft(static_cast<std::size_t>(n)),
      fmain(static_cast<std::size_t>(n)), fcc(static_cast<std::size_t>(n)),
      finj(static_cast<std::size_t>(n));
  std::vector<bool> driven(static_cast<std::size_t>(n), false);
  std::vector<double> imain(m), icc(m), iinj(m), iosc(m), it(m);
  double it_peak = 0.0;
  double kcl = 0.0;
  for (int k = 0; k < n; ++k) {
    fv[k] = extract_fundamental(rec.v[k], rec.dt_s, f);
    for (std::size_t i = 0; i < m; ++i) {
      imain[i] = main_current_at(rec, k, i);
      icc[i] = cc_current_at(rec, k, i);
      iinj[i] = injection_current_at(rec, k, i);
      if (iinj[i] != 0.0) driven[k] = true;
      iosc[i] = imain[i] + icc[i];
      it[i] = iosc[i] + iinj[i];
    }
    fmain[k] = extract_fundamental(imain, rec.dt_s, f);
    fcc[k] = extract_fundamental(icc, rec.dt_s, f);
    fosc[k] = extract_fundamental(iosc, rec.dt_s, f);
    ft[k] = extract_fundamental(it, rec.dt_s, f);
    if (driven[k]) finj[k] = extract_fundamental(iinj, rec.dt_s, f);
    for (std::size_t i = 0; i < m; ++i) {
      it_peak = std::max(it_peak, std::abs(it[i]));
      if (i >= 1 && i + 1 < m && i % 10 == 0) {
        const double r = cfg.c_f * (rec.v[k][i + 1] - rec.v[k][i - 1]) / (2.0 * rec.dt_s) +
                         cfg.g_out_s * rec.v[k][i] - it[i];
        kcl = std::max(kcl, std::abs(r));
      }
    }
  }
  mp.kcl_residual = it_peak > 0.0 ? kcl / it_peak : 0.0;

  // summing wrapped per-stage steps around the ring always lands on an exact
  // multiple of 360; a zero winding means a latched or injection-dragged
  // state rather than a propagating ring mode
  double turn = 0.0;
  for (int k = 0; k < n; ++k)
    turn += wrap_angle(fv[k].phase_deg - fv[drive_node(cfg, k)].phase_deg);
  if (std::abs(turn) < 180.0)
    throw OracleError("ring phase progression has zero winding: " + std::to_string(turn) + " deg");

  mp.stages.resize(static_cast<std::size_t>(n));
  double cvi_x = 0.0, cvi_y = 0.0, civ_x = 0.0, civ_y = 0.0;
  double cphi_x = 0.0, cphi_y = 0.0, cpsi_x = 0.0, cpsi_y = 0.0;
  int n_driven = 0;
  for (int k = 0; k < n; ++k) {
    StageReading& st = mp.stages[static_cast<std::size_t>(k)];
    const int d = drive_node(cfg, k);
    st.v_in_v = fv[d].amp;
    st.v_osc_v = fv[k].amp;
    st.i_main_a = fmain[k].amp;
    st.i_cc_a = fcc[k].amp;
    st.i_osc_a = fosc[k].amp;
    st.i_t_a = ft[k].amp;
    st.driven = driven[k];
    st.theta_vi_deg = wrap_angle(fosc[k].phase_deg - fv[d].phase_deg - 180.0);
    st.theta_iv_deg = wrap_angle(ft[k].phase_deg - fv[k].phase_deg);
    // phi0 and psi carry the solver's sign: negated angles of I_inj and I_t
    // on I_osc-referenced axes, so locked tables compare term by term.
    st.psi_deg = wrap_angle(fosc[k].phase_deg - ft[k].phase_deg);
    cvi_x += cos_deg(st.theta_vi_deg);
    cvi_y += sin_deg(st.theta_vi_deg);
    civ_x += cos_deg(st.theta_iv_deg);
    civ_y += sin_deg(st.theta_iv_deg);
    mp.v_osc_v += st.v_osc_v;
    mp.i_main_a += st.i_main_a;
    mp.i_cc_a += st.i_cc_a;
    mp.i_osc_a += st.i_osc_a;
    mp.i_t_a += st.i_t_a;
    if (driven[k]) {
      st.phi0_deg = wrap_angle(fosc[k].phase_deg - finj[k].phase_deg);
      cphi_x += cos_deg(st.phi0_deg);
      cphi_y += sin_deg(st.phi0_deg);
      cpsi_x += cos_deg(st.psi_deg);
      cpsi_y += sin_deg(st.psi_deg);
      ++n_driven;
    }
  }
  const double nn = static_cast<double>(n);
  mp.v_osc_v /= nn;
  mp.i_main_a /= nn;
  mp.i_cc_a /= nn;
  mp.i_osc_a /= nn;
  mp.i_t_a /= nn;
  mp.theta_vi_deg = wrap_angle(rad2deg(std::atan2(cvi_y, cvi_x)));
  mp.theta_iv_deg = wrap_angle(rad2deg(std::atan2(civ_y, civ_x)));
  if (n_driven > 0) {
    mp.phi0_deg = wrap_angle(rad2deg(std::atan2(cphi_y, cphi_x)));
    mp.psi_deg = wrap_angle(rad2deg(std::atan2(cpsi_y, cpsi_x)));
  }

  const Fundamental third =
      project(rec.v[0], rec.dt_s, 3.0 * f, static_cast<double>(fv[0].periods) / f);
  mp.harmonic_ratio = fv[0].amp > 0.0 ? third.amp / fv[0].amp : 0.0;
  return mp;
}

}  // namespace ilro
