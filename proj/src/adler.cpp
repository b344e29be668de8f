#include "ilro/adler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ilro/angles.hpp"
#include "ilro/csv.hpp"
#include "ilro/errors.hpp"
#include "ilro/phasor.hpp"

namespace ilro {

void validate(const InjectionSpec& inj) {
  if (!(inj.epsilon >= 0.0 && inj.epsilon < 1.0))
    throw std::domain_error("injection: epsilon must lie in [0, 1)");
  if (!(inj.f_inj_hz > 0.0)) throw std::domain_error("injection: f_inj must be > 0");
}

const char* unlock_reason_name(UnlockReason r) {
  switch (r) {
    case UnlockReason::NoRoot: return "no_root";
    case UnlockReason::AmplitudeCollapse: return "amplitude_collapse";
    case UnlockReason::MaxIter: return "max_iter";
  }
  return "?";
}

namespace {

double wrap_rad(double x) {
  double r = std::remainder(x, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

// Amplitude/phase closure in the reporting angle convention. Unknowns are
// x = (v_hat, phi0_rad); residuals are (phase condition, k-relation), both
// dimensionless and O(1).
struct ClosureSystem {
  const FreeRunningPoint* base;
  const StageParams* p;
  double epsilon;
  double f_ratio;  // f_inj / f_fr
  bool classic;
  KAngleMode mode;

  double psi_required_deg(double v_hat) const {
    const double half_turn = 180.0 / p->n_stages;
    if (classic)
      return half_turn - base->theta_iv_fr_deg + base->theta_vi_fr_deg * f_ratio;
    const double theta_vi = theta_vi_of_amplitude(*p, v_hat * base->v_osc_fr_v);
    return half_turn - base->theta_iv_fr_deg + theta_vi;
  }

  double i_osc_hat(double v_hat, bool* clamped = nullptr) const {
    if (classic) {
      if (clamped) *clamped = false;
      return 1.0;
    }
    return i_osc_of_amplitude(*p, v_hat * base->v_osc_fr_v, clamped) / base->i_osc_fr_a;
  }

  void eval(const double x[2], double r[2]) const {
    const double v_hat = x[0], phi = x[1];
    const double io = i_osc_hat(v_hat);
    const double re = io + epsilon * std::cos(phi);
    const double im = epsilon * std::sin(phi);
    const double psi_geom = std::atan2(im, re);
    const double i_t = std::hypot(re, im);

    r[0] = wrap_rad(psi_geom - deg2rad(psi_required_deg(v_hat)));
    if (classic) {
      r[1] = v_hat - 1.0;
    } else if (mode == KAngleMode::UseThetaIv) {
      r[1] = 1.0 - i_t / (v_hat * f_ratio);
    } else {
      const double theta_hat =
          theta_vi_of_amplitude(*p, v_hat * base->v_osc_fr_v) / base->theta_vi_fr_deg;
      r[1] = 1.0 - i_t * theta_hat / (v_hat * f_ratio);
    }
  }

  double psi_geom_deg(const double x[2]) const {
    const double io = i_osc_hat(x[0]);
    return rad2deg(std::atan2(epsilon * std::sin(x[1]), io + epsilon * std::cos(x[1])));
  }

  bool on_stable_branch(const double x[2]) const {
    return std::abs(wrap_angle(rad2deg(x[1]) - psi_geom_deg(x))) <= 90.0 + 1e-9;
  }
};

double norm_inf(const double r[2]) { return std::max(std::abs(r[0]), std::abs(r[1])); }
double norm_sq(const double r[2]) { return r[0] * r[0] + r[1] * r[1]; }

bool newton_step(const ClosureSystem& sys, const double x[2], const double r[2],
                 const SolveOptions& opts, double d[2]) {
  double jac[2][2];
  for (int j = 0; j < 2; ++j) {
    const double h = opts.jacobian_rel_step * std::max(1.0, std::abs(x[j]));
    double xp[2] = {x[0], x[1]};
    xp[j] += h;
    double rp[2];
    sys.eval(xp, rp);
    jac[0][j] = (rp[0] - r[0]) / h;
    jac[1][j] = (rp[1] - r[1]) / h;
  }
  const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
  if (!(std::abs(det) > 1e-300)) return false;
  d[0] = -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det;
  d[1] = -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det;
  return true;
}

// Damped Newton; returns true on ||r||_inf < tol within the iteration budget.
bool newton(const ClosureSystem& sys, double x[2], const SolveOptions& opts, int max_iter,
            int* iters_used = nullptr) {
  double r[2];
  sys.eval(x, r);
  for (int it = 0; it < max_iter; ++it) {
    if (iters_used) *iters_used = it;
    if (norm_inf(r) < opts.tol) return true;

    double d[2];
    if (!newton_step(sys, x, r, opts, d)) return false;

    const double r0 = norm_sq(r);
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, lambda *= 0.5) {
      double xt[2] = {x[0] + lambda * d[0], x[1] + lambda * d[1]};
      if (xt[0] <= 1e-9) continue;  // amplitude must stay positive
      double rt[2];
      sys.eval(xt, rt);
      if (norm_sq(rt) < r0 * (1.0 - 1e-4 * lambda)) {
        x[0] = xt[0];
        x[1] = xt[1];
        r[0] = rt[0];
        r[1] = rt[1];
        accepted = true;
        break;
      }
    }
    if (!accepted) return false;
  }
  if (iters_used) *iters_used = max_iter;
  double rf[2];
  sys.eval(x, rf);
  return norm_inf(rf) < opts.tol;
}

// Undamped Newton driven to machine precision; keeps the best iterate seen.
// Deterministic for a given seed, so roots do not depend on the seeding path.
bool newton_polish(const ClosureSystem& sys, double x[2], const SolveOptions& opts) {
  double r[2];
  sys.eval(x, r);
  double best[2] = {x[0], x[1]};
  double best_norm = norm_inf(r);
  for (int it = 0; it < 12 && best_norm >= 1e-15; ++it) {
    double d[2];
    if (!newton_step(sys, x, r, opts, d)) break;
    x[0] += d[0];
    x[1] += d[1];
    if (!(x[0] > 0.0)) break;
    sys.eval(x, r);
    const double n = norm_inf(r);
    if (n < best_norm) {
      best_norm = n;
      best[0] = x[0];
      best[1] = x[1];
    } else if (n > 10.0 * best_norm) {
      break;  // diverging
    }
  }
  x[0] = best[0];
  x[1] = best[1];
  return best_norm < opts.tol;
}

struct GridBest {
  double x[2];
  double score;
};

// Best few stable-branch cells of the exhaustive grid, cheapest first.
std::vector<GridBest> grid_candidates(const ClosureSystem& sys, int nv, int nphi) {
  std::vector<GridBest> all;
  all.reserve(64);
  for (int i = 0; i < nv; ++i) {
    const double v = 0.5 + (i + 0.5) * (1.0 / nv);
    for (int j = 0; j < nphi; ++j) {
      const double phi = deg2rad(-180.0 + (j + 0.5) * (360.0 / nphi));
      double x[2] = {v, phi};
      if (!sys.on_stable_branch(x)) continue;
      double r[2];
      sys.eval(x, r);
      GridBest g{{v, phi}, norm_sq(r)};
      all.push_back(g);
    }
  }
  std::sort(all.begin(), all.end(),
            [](const GridBest& a, const GridBest& b) { return a.score < b.score; });
  if (all.size() > 6) all.resize(6);
  return all;
}

// Re-solve from the rounded root with undamped Newton so the reported numbers
// do not depend on the seeding path.
void canonicalize(const ClosureSystem& sys, double x[2], const SolveOptions& opts) {
  double xc[2] = {std::nearbyint(x[0] * 1e6) / 1e6,
                  deg2rad(std::nearbyint(rad2deg(x[1]) * 1e6) / 1e6)};
  if (newton_polish(sys, xc, opts) && sys.on_stable_branch(xc) && xc[0] > 0.0) {
    x[0] = xc[0];
    x[1] = xc[1];
  }
}

LockOutcome unlocked(UnlockReason reason) {
  LockOutcome out;
  out.locked = false;
  out.reason = reason;
  return out;
}

LockOutcome package(const ClosureSystem& sys, const double x[2], const FreeRunningPoint& base,
                    const StageParams& p, const InjectionSpec& inj, double f_fr_hz,
                    const SolveOptions& opts) {
  const double v_hat = x[0];
  bool clamped = false;
  const double io = sys.i_osc_hat(v_hat, &clamped);
  if (v_hat < 0.05 || (clamped && !sys.classic)) return unlocked(UnlockReason::AmplitudeCollapse);

  double r[2];
  sys.eval(x, r);

  LockOutcome out;
  out.locked = true;
  LockSolution& s = out.sol;
  s.phi0_deg = wrap_angle(rad2deg(x[1]));
  s.psi_deg = sys.psi_geom_deg(x);
  s.theta_vi_deg = sys.classic ? base.theta_vi_fr_deg * sys.f_ratio
                               : theta_vi_of_amplitude(p, v_hat * base.v_osc_fr_v);
  const double re = io + inj.epsilon * std::cos(x[1]);
  const double im = inj.epsilon * std::sin(x[1]);
  s.i_t_a = std::hypot(re, im) * base.i_osc_fr_a;
  s.i_osc_a = io * base.i_osc_fr_a;
  s.v_osc_v = v_hat * base.v_osc_fr_v;
  s.f_inj_hz = inj.f_inj_hz;
  s.f_fr_hz = f_fr_hz;
  s.residual_norm = norm_inf(r);

  // Independent re-checks of the reported point.
  if (!(s.residual_norm < 100.0 * opts.tol))
    throw std::runtime_error("solver postcondition: residual too large");
  const Phasor sum = phasor_add(phasor_from_polar(s.i_osc_a, 0.0),
                                phasor_from_polar(inj.epsilon * base.i_osc_fr_a, s.phi0_deg));
  if (std::abs(sum.magnitude - s.i_t_a) > 1e-9 * s.i_osc_a ||
      std::abs(wrap_angle(sum.angle_deg - s.psi_deg)) > 1e-7)
    throw std::runtime_error("solver postcondition: phasor closure violated");
  if (std::abs(wrap_angle(s.psi_deg - sys.psi_required_deg(v_hat))) > 1e-5)
    throw std::runtime_error("solver postcondition: phase condition violated");
  return out;
}

LockOutcome solve_at(const CalibrationTable& table, double f_fr_hz, const InjectionSpec& inj,
                     const StageParams& p, const SolveOptions& opts) {
  validate(inj);
  validate(p);
  const FreeRunningPoint base = baseline_at(table, f_fr_hz);

  ClosureSystem sys;
  sys.base = &base;
  sys.p = &p;
  sys.epsilon = inj.epsilon;
  sys.f_ratio = inj.f_inj_hz / f_fr_hz;
  sys.classic = opts.classic_closure;
  sys.mode = p.k_angle_mode;

  if (inj.epsilon == 0.0) {
    if (std::abs(sys.f_ratio - 1.0) > 1e-12) return unlocked(UnlockReason::NoRoot);
    double x[2] = {1.0, 0.0};
    return package(sys, x, base, p, inj, f_fr_hz, opts);
  }

  double x[2];
  if (opts.seed) {
    x[0] = opts.seed->first;
    x[1] = deg2rad(opts.seed->second);
  } else {
    ClosureSystem csys = sys;
    csys.classic = true;
    const double psi_req = csys.psi_required_deg(1.0);
    x[0] = 1.0;
    if (std::abs(psi_req) <= rad2deg(std::asin(inj.epsilon)))
      x[1] = deg2rad(psi_req) + std::asin(std::sin(deg2rad(psi_req)) / inj.epsilon);
    else
      x[1] = deg2rad(90.0 * (psi_req > 0 ? 1.0 : -1.0));
  }

  if (newton(sys, x, opts, opts.max_iter) && sys.on_stable_branch(x) && x[0] > 0.0) {
    canonicalize(sys, x, opts);
    return package(sys, x, base, p, inj, f_fr_hz, opts);
  }

  // Exhaustive fallback over the amplitude/phase rectangle.
  bool hit_iteration_cap = false;
  for (const GridBest& g : grid_candidates(sys, 100, 360)) {
    double xg[2] = {g.x[0], g.x[1]};
    int used = 0;
    if (newton(sys, xg, opts, opts.max_iter, &used)) {
      if (sys.on_stable_branch(xg) && xg[0] > 0.0) {
        canonicalize(sys, xg, opts);
        return package(sys, xg, base, p, inj, f_fr_hz, opts);
      }
    } else if (used >= opts.max_iter) {
      hit_iteration_cap = true;
    }
  }
  return unlocked(hit_iteration_cap ? UnlockReason::MaxIter : UnlockReason::NoRoot);
}

}  // namespace

LockOutcome solve_classic(const FreeRunningPoint& baseline, const InjectionSpec& inj,
                          const StageParams& p) {
  validate(inj);
  validate(p);
  const double f_ratio = inj.f_inj_hz / baseline.f_fr_hz;
  const double psi_req = 180.0 / p.n_stages - baseline.theta_iv_fr_deg +
                         baseline.theta_vi_fr_deg * f_ratio;

  if (inj.epsilon == 0.0) {
    if (std::abs(psi_req) > 1e-12) return unlocked(UnlockReason::NoRoot);
  } else if (std::abs(psi_req) > rad2deg(std::asin(inj.epsilon)) + 1e-9) {
    return unlocked(UnlockReason::NoRoot);
  }

  const double psi_rad = deg2rad(psi_req);
  const double phi_rad =
      inj.epsilon == 0.0
          ? 0.0
          : psi_rad + std::asin(std::clamp(std::sin(psi_rad) / inj.epsilon, -1.0, 1.0));

  LockOutcome out;
  out.locked = true;
  LockSolution& s = out.sol;
  s.phi0_deg = wrap_angle(rad2deg(phi_rad));
  s.psi_deg = psi_req;
  s.theta_vi_deg = baseline.theta_vi_fr_deg * f_ratio;
  const double re = 1.0 + inj.epsilon * std::cos(phi_rad);
  const double im = inj.epsilon * std::sin(phi_rad);
  s.i_t_a = std::hypot(re, im) * baseline.i_osc_fr_a;
  s.i_osc_a = baseline.i_osc_fr_a;
  s.v_osc_v = baseline.v_osc_fr_v;
  s.f_inj_hz = inj.f_inj_hz;
  s.f_fr_hz = baseline.f_fr_hz;
  s.residual_norm = std::abs(wrap_rad(std::atan2(im, re) - psi_rad));
  return out;
}

LockOutcome solve_extended(const CalibrationTable& table, double f_fr_hz,
                           const InjectionSpec& inj, const StageParams& p,
                           const SolveOptions& opts) {
  return solve_at(table, f_fr_hz, inj, p, opts);
}

namespace {

// Marches outward from a locked start until unlock (or bound), then bisects.
// Returns the locked edge frequency; *clamped reports a bound hit.
double march_edge(const CalibrationTable& table, double f_ref_hz, double epsilon,
                  const StageParams& p, SweepMode mode, const SolveOptions& opts,
                  double direction, double bound_hz, double edge_tol_hz,
                  const LockOutcome& at_ref) {
  auto solve_point = [&](double f, const LockOutcome& seed_from) {
    SolveOptions o = opts;
    if (seed_from.locked)
      o.seed = {{seed_from.sol.v_osc_v / baseline_at(table, mode == SweepMode::Ffr ? f : f_ref_hz)
                                             .v_osc_fr_v,
                 seed_from.sol.phi0_deg}};
    InjectionSpec inj;
    inj.epsilon = epsilon;
    inj.f_inj_hz = mode == SweepMode::Ffr ? f_ref_hz : f;
    const double f_fr = mode == SweepMode::Ffr ? f : f_ref_hz;
    return solve_extended(table, f_fr, inj, p, o);
  };

  double f_locked = f_ref_hz;
  LockOutcome last = at_ref;
  double step = std::max(0.0025 * f_ref_hz, 2.0 * edge_tol_hz);
  double f_unlocked = 0.0;
  while (true) {
    double f_next = f_locked + direction * step;
    bool clipped = direction > 0 ? f_next >= bound_hz : f_next <= bound_hz;
    if (clipped) f_next = bound_hz;
    LockOutcome o = solve_point(f_next, last);
    if (o.locked) {
      f_locked = f_next;
      last = o;
      if (clipped) return f_locked;  // locked all the way to the bound
      step *= 1.6;
    } else {
      f_unlocked = f_next;
      break;
    }
  }

  while (std::abs(f_unlocked - f_locked) > edge_tol_hz) {
    const double mid = 0.5 * (f_locked + f_unlocked);
    LockOutcome o = solve_point(mid, last);
    if (o.locked) {
      f_locked = mid;
      last = o;
    } else {
      f_unlocked = mid;
    }
  }
  return f_locked;
}

}  // namespace

LockingRange locking_range(const CalibrationTable& table, double f_ref_hz, double epsilon,
                           const StageParams& p, SweepMode mode, const SolveOptions& opts,
                           double edge_tol_hz) {
  InjectionSpec inj;
  inj.epsilon = epsilon;
  inj.f_inj_hz = f_ref_hz;
  LockOutcome trivial = solve_extended(table, f_ref_hz, inj, p, opts);
  if (!trivial.locked)
    throw std::runtime_error("locking_range: model inconsistency, the trivial point f_inj = "
                             "f_fr = " + format_double(f_ref_hz) + " Hz is not locked");

  double lo_bound, hi_bound;
  if (mode == SweepMode::Ffr) {
    lo_bound = table.f_min();
    hi_bound = table.f_max();
  } else {
    lo_bound = 1e-3 * f_ref_hz;
    hi_bound = 4.0 * f_ref_hz;
  }

  LockingRange r;
  r.f_lo_hz = march_edge(table, f_ref_hz, epsilon, p, mode, opts, -1.0, lo_bound, edge_tol_hz,
                         trivial);
  r.f_hi_hz = march_edge(table, f_ref_hz, epsilon, p, mode, opts, +1.0, hi_bound, edge_tol_hz,
                         trivial);
  r.lo_clamped = std::abs(r.f_lo_hz - lo_bound) < 0.5 * edge_tol_hz && mode == SweepMode::Ffr;
  r.hi_clamped = std::abs(r.f_hi_hz - hi_bound) < 0.5 * edge_tol_hz && mode == SweepMode::Ffr;
  r.width_hz = r.f_hi_hz - r.f_lo_hz;
  r.asymmetry =
      r.width_hz > 0.0 ? ((r.f_hi_hz - f_ref_hz) - (f_ref_hz - r.f_lo_hz)) / r.width_hz : 0.0;
  return r;
}

namespace {

SweepTable sweep_impl(const CalibrationTable& table, double fixed_hz,
                      const std::vector<double>& epsilons, const StageParams& p,
                      const std::vector<double>& grid_hz, SweepMode mode,
                      const SolveOptions& opts) {
  std::vector<double> grid = grid_hz;
  std::sort(grid.begin(), grid.end());
  std::vector<double> eps = epsilons;
  std::sort(eps.begin(), eps.end());

  SweepTable out;
  out.mode = mode;
  out.fixed_hz = fixed_hz;

  for (double e : eps) {
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (double f : grid) {
      InjectionSpec inj;
      inj.epsilon = e;
      inj.f_inj_hz = mode == SweepMode::Ffr ? fixed_hz : f;
      const double f_fr = mode == SweepMode::Ffr ? f : fixed_hz;
      SweepRow row;
      row.sweep_var_hz = f;
      row.epsilon = e;
      row.outcome = solve_extended(table, f_fr, inj, p, opts);
      rows.push_back(row);
    }

    // Continuation: re-seed unlocked points from their locked neighbours.
    auto reseed = [&](size_t from, size_t to) {
      if (!rows[from].outcome.locked || rows[to].outcome.locked) return;
      const LockSolution& n = rows[from].outcome.sol;
      const double f = rows[to].sweep_var_hz;
      const double f_fr = mode == SweepMode::Ffr ? f : fixed_hz;
      SolveOptions o = opts;
      o.seed = {{n.v_osc_v / baseline_at(table, f_fr).v_osc_fr_v, n.phi0_deg}};
      InjectionSpec inj;
      inj.epsilon = e;
      inj.f_inj_hz = mode == SweepMode::Ffr ? fixed_hz : f;
      LockOutcome again = solve_extended(table, f_fr, inj, p, o);
      if (again.locked) rows[to].outcome = again;
    };
    for (size_t i = 1; i < rows.size(); ++i) reseed(i - 1, i);
    for (size_t i = rows.size(); i-- > 1;) reseed(i, i - 1);

    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  return out;
}

}  // namespace

SweepTable sweep_ffr(const CalibrationTable& table, double f_inj_hz,
                     const std::vector<double>& epsilons, const StageParams& p,
                     const std::vector<double>& f_fr_grid_hz, const SolveOptions& opts) {
  return sweep_impl(table, f_inj_hz, epsilons, p, f_fr_grid_hz, SweepMode::Ffr, opts);
}

SweepTable sweep_finj(const CalibrationTable& table, double f_fr_hz,
                      const std::vector<double>& epsilons, const StageParams& p,
                      const std::vector<double>& f_inj_grid_hz, const SolveOptions& opts) {
  return sweep_impl(table, f_fr_hz, epsilons, p, f_inj_grid_hz, SweepMode::Finj, opts);
}

void write_sweep_csv(const SweepTable& table, const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const SweepRow& r : table.rows) {
    std::vector<std::string> cells;
    cells.push_back(format_double(r.sweep_var_hz));
    cells.push_back(format_double(r.epsilon));
    if (r.outcome.locked) {
      const LockSolution& s = r.outcome.sol;
      cells.push_back("1");
      cells.push_back(format_double(s.phi0_deg));
      cells.push_back(format_double(s.psi_deg));
      cells.push_back(format_double(s.theta_vi_deg));
      cells.push_back(format_double(s.i_t_a));
      cells.push_back(format_double(s.i_osc_a));
      cells.push_back(format_double(s.v_osc_v));
      cells.push_back(format_double(s.residual_norm));
    } else {
      cells.push_back("0");
      for (int i = 0; i < 7; ++i) cells.push_back("");
    }
    rows.push_back(std::move(cells));
  }
  write_csv(path,
            {"sweep_var_hz", "epsilon", "locked", "phi0_deg", "psi_deg", "theta_vi_deg", "i_t_a",
             "i_osc_a", "v_osc_v", "residual"},
            rows);
}

SweepTable read_sweep_csv(const std::filesystem::path& path) {
  CsvTable csv = read_csv(path);
  SweepTable out;
  const int cf = csv.column("sweep_var_hz"), ce = csv.column("epsilon"),
            cl = csv.column("locked"), cp = csv.column("phi0_deg"), cpsi = csv.column("psi_deg"),
            cth = csv.column("theta_vi_deg"), cit = csv.column("i_t_a"),
            cio = csv.column("i_osc_a"), cv = csv.column("v_osc_v"),
            cr = csv.column("residual");
  for (size_t i = 0; i < csv.rows.size(); ++i) {
    SweepRow r;
    r.sweep_var_hz = csv.number(i, cf);
    r.epsilon = csv.number(i, ce);
    const bool locked = csv.number(i, cl) != 0.0;
    r.outcome.locked = locked;
    if (locked) {
      LockSolution& s = r.outcome.sol;
      s.phi0_deg = csv.number(i, cp);
      s.psi_deg = csv.number(i, cpsi);
      s.theta_vi_deg = csv.number(i, cth);
      s.i_t_a = csv.number(i, cit);
      s.i_osc_a = csv.number(i, cio);
      s.v_osc_v = csv.number(i, cv);
      s.residual_norm = csv.number(i, cr);
    }
    out.rows.push_back(r);
  }
  return out;
}

}  // namespace ilro
