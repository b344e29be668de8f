#include "ilro/compare.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ilro/angles.hpp"
#include "ilro/csv.hpp"
#include "ilro/errors.hpp"

namespace ilro {

namespace {

struct Accumulator {
  double sq = 0.0;
  double max_abs = 0.0;
  int n = 0;

  void add(double d) {
    sq += d * d;
    max_abs = std::max(max_abs, std::abs(d));
    ++n;
  }
  Deviation result() const { return {n > 0 ? std::sqrt(sq / n) : 0.0, max_abs}; }
};

// grids come from shared generation code or exact CSV round-trips, so only
// floating-point dust is forgiven
bool same_grid_value(double a, double b) {
  return std::abs(a - b) <= std::max(1e-6, 1e-12 * std::max(std::abs(a), std::abs(b)));
}

}  // namespace

bool CompareReport::pass(const CompareThresholds& t) const {
  if (disjoint()) return false;
  return phi0_deg.rms < t.phi0_rms_deg && psi_deg.rms < t.psi_rms_deg &&
         v_osc_rel.rms < t.v_osc_rms_rel && i_t_rel.rms < t.i_t_rms_rel;
}

CompareReport compare_tables(const SweepTable& solver, const SweepTable& reference) {
  if (solver.rows.size() != reference.rows.size())
    throw CompareError("tables do not share a grid: " + std::to_string(solver.rows.size()) +
                       " vs " + std::to_string(reference.rows.size()) + " rows");

  CompareReport rep;
  rep.n_rows = static_cast<int>(solver.rows.size());
  Accumulator phi0, psi, v_osc, i_t;
  double lo_s = 0.0, hi_s = 0.0, lo_r = 0.0, hi_r = 0.0;

  for (std::size_t i = 0; i < solver.rows.size(); ++i) {
    const SweepRow& s = solver.rows[i];
    const SweepRow& r = reference.rows[i];
    if (!same_grid_value(s.sweep_var_hz, r.sweep_var_hz) ||
        std::abs(s.epsilon - r.epsilon) > 1e-12)
      throw CompareError("tables do not share a grid: row " + std::to_string(i) + " is (" +
                         format_double(s.sweep_var_hz) + ", " + format_double(s.epsilon) +
                         ") vs (" + format_double(r.sweep_var_hz) + ", " +
                         format_double(r.epsilon) + ")");

    if (s.outcome.locked) {
      if (rep.n_solver_locked == 0) lo_s = s.sweep_var_hz;
      hi_s = s.sweep_var_hz;
      ++rep.n_solver_locked;
    }
    if (r.outcome.locked) {
      if (rep.n_reference_locked == 0) lo_r = r.sweep_var_hz;
      hi_r = r.sweep_var_hz;
      ++rep.n_reference_locked;
    }
    if (!(s.outcome.locked && r.outcome.locked)) continue;

    ++rep.n_common;
    const LockSolution& a = s.outcome.sol;
    const LockSolution& b = r.outcome.sol;
    phi0.add(wrap_angle(a.phi0_deg - b.phi0_deg));
    psi.add(wrap_angle(a.psi_deg - b.psi_deg));
    v_osc.add((a.v_osc_v - b.v_osc_v) / b.v_osc_v);
    i_t.add((a.i_t_a - b.i_t_a) / b.i_t_a);
  }

  rep.phi0_deg = phi0.result();
  rep.psi_deg = psi.result();
  rep.v_osc_rel = v_osc.result();
  rep.i_t_rel = i_t.result();
  if (rep.n_solver_locked > 0 && rep.n_reference_locked > 0) {
    rep.lo_edge_dev_hz = std::abs(lo_s - lo_r);
    rep.hi_edge_dev_hz = std::abs(hi_s - hi_r);
  }
  return rep;
}

SweepRow oracle_sweep_row(double sweep_var_hz, double epsilon,
                          const std::optional<MeasuredPoint>& mp) {
  SweepRow row;
  row.sweep_var_hz = sweep_var_hz;
  row.epsilon = epsilon;
  row.outcome.locked = mp.has_value();
  if (mp) {
    LockSolution& s = row.outcome.sol;
    s.phi0_deg = mp->phi0_deg;
    s.psi_deg = mp->psi_deg;
    s.theta_vi_deg = mp->theta_vi_deg;
    s.i_t_a = mp->i_t_a;
    s.i_osc_a = mp->i_osc_a;
    s.v_osc_v = mp->v_osc_v;
    s.f_inj_hz = mp->f_osc_hz;
    s.residual_norm = mp->kcl_residual;
  }
  return row;
}

void write_oracle_sweep_csv(const SweepTable& table, const std::filesystem::path& path) {
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
      for (int i = 0; i < 7; ++i) cells.emplace_back();
    }
    cells.push_back("oracle");
    rows.push_back(std::move(cells));
  }
  write_csv(path,
            {"sweep_var_hz", "epsilon", "locked", "phi0_deg", "psi_deg", "theta_vi_deg",
             "i_t_a", "i_osc_a", "v_osc_v", "residual", "source"},
            rows);
}

void write_compare_csv(const CompareReport& report, const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  auto quantity = [&rows](const char* name, const Deviation& d) {
    rows.push_back({name, format_double(d.rms), format_double(d.max_abs)});
  };
  quantity("phi0_deg", report.phi0_deg);
  quantity("psi_deg", report.psi_deg);
  quantity("v_osc_rel", report.v_osc_rel);
  quantity("i_t_rel", report.i_t_rel);
  rows.push_back({"lo_edge_hz", format_double(report.lo_edge_dev_hz), ""});
  rows.push_back({"hi_edge_hz", format_double(report.hi_edge_dev_hz), ""});
  rows.push_back({"n_common", std::to_string(report.n_common), ""});
  write_csv(path, {"quantity", "rms", "max_abs"}, rows);
}

}  // namespace ilro
