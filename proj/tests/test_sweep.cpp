#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "ilro/adler.hpp"
#include "ilro/angles.hpp"
#include "ilro/csv.hpp"

using namespace ilro;
namespace fs = std::filesystem;

namespace {

// Steep amplitude-to-phase conversion so locking bands stay well inside the
// test grids: theta_VI(V) = 12 - 60 V, i_osc(V) = 1.4mA + 1.5mS * V.
StageParams sweep_params() {
  StageParams p;
  p.a_vi_deg_per_v = -60.0;
  p.theta_vi_0_deg = 12.0;
  p.g_m_a_per_v = 1.5e-3;
  p.i_osc_0_a = 1.4e-3;
  p.theta_iv_deg = 78.0;
  p.c_load_f = 100e-15;
  p.n_stages = 2;
  p.k_angle_mode = KAngleMode::UseThetaIv;
  return p;
}

CalibrationTable sweep_table() {
  CalibrationTable t;
  t.stage = sweep_params();
  for (double f : {5e9, 6e9, 7e9, 8e9, 9e9})
    t.points.push_back({f, 0.4, 2e-3, -12.0, 78.0});
  return t;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("injection-frequency sweep: sorted rows, one contiguous band, smooth inside") {
  auto table = sweep_table();
  auto grid = linspace(5.5e9, 8.5e9, 121);
  auto sw = sweep_finj(table, 7e9, {0.05, 0.1}, table.stage, grid);

  REQUIRE(sw.rows.size() == 2 * grid.size());
  for (size_t i = 1; i < sw.rows.size(); ++i) {
    const auto& a = sw.rows[i - 1];
    const auto& b = sw.rows[i];
    CHECK((a.epsilon < b.epsilon ||
           (a.epsilon == b.epsilon && a.sweep_var_hz < b.sweep_var_hz)));
  }

  for (double eps : {0.05, 0.1}) {
    std::vector<const SweepRow*> rows;
    for (const auto& r : sw.rows)
      if (r.epsilon == eps) rows.push_back(&r);

    int first = -1, last = -1;
    for (size_t i = 0; i < rows.size(); ++i)
      if (rows[i]->outcome.locked) {
        if (first < 0) first = static_cast<int>(i);
        last = static_cast<int>(i);
      }
    REQUIRE(first > 0);            // unlocked flank below the band
    REQUIRE(last + 1 < static_cast<int>(rows.size()));  // and above it
    for (int i = first; i <= last; ++i) CHECK(rows[i]->outcome.locked);

    // no branch flips between neighbouring locked points (25 MHz apart)
    for (int i = first + 1; i <= last; ++i) {
      const LockSolution& a = rows[i - 1]->outcome.sol;
      const LockSolution& b = rows[i]->outcome.sol;
      CHECK(std::abs(wrap_angle(b.phi0_deg - a.phi0_deg)) < 30.0);
      CHECK(std::abs(b.v_osc_v - a.v_osc_v) / a.v_osc_v < 0.08);
    }
  }
}

TEST_CASE("larger injection locks more of the grid") {
  auto table = sweep_table();
  auto grid = linspace(5.2e9, 8.8e9, 181);
  auto sw = sweep_finj(table, 7e9, {0.02, 0.05, 0.1, 0.15}, table.stage, grid);
  int prev = -1;
  for (double eps : {0.02, 0.05, 0.1, 0.15}) {
    int count = 0;
    for (const auto& r : sw.rows)
      if (r.epsilon == eps && r.outcome.locked) ++count;
    CHECK(count > prev);
    prev = count;
  }
  CHECK(prev < static_cast<int>(grid.size()));  // even the strongest drive unlocks somewhere
}

TEST_CASE("free-running-frequency sweep reports consistent rows") {
  auto table = sweep_table();
  auto grid = linspace(5e9, 9e9, 81);
  auto sw = sweep_ffr(table, 7e9, {0.1}, table.stage, grid);
  REQUIRE(sw.rows.size() == grid.size());
  CHECK(sw.mode == SweepMode::Ffr);
  CHECK(sw.fixed_hz == 7e9);
  int locked = 0;
  for (const auto& r : sw.rows) {
    if (!r.outcome.locked) continue;
    ++locked;
    CHECK(r.outcome.sol.f_fr_hz == r.sweep_var_hz);
    CHECK(r.outcome.sol.f_inj_hz == 7e9);
    CHECK(std::abs(wrap_angle(r.outcome.sol.phi0_deg - r.outcome.sol.psi_deg)) <=
          90.0 + 1e-9);
  }
  CHECK(locked > 10);
  CHECK(locked < static_cast<int>(grid.size()));
}

TEST_CASE("locking range brackets exactly the points that lock") {
  auto table = sweep_table();
  const double eps = 0.05;
  auto lr = locking_range(table, 7e9, eps, table.stage, SweepMode::Finj);
  CHECK(lr.f_lo_hz < 7e9);
  CHECK(lr.f_hi_hz > 7e9);
  CHECK(lr.width_hz == doctest::Approx(lr.f_hi_hz - lr.f_lo_hz));
  // amplitude feedback shifts the band upward under this closure
  CHECK(lr.asymmetry > 0.01);
  CHECK(lr.asymmetry < 0.2);

  InjectionSpec inj;
  inj.epsilon = eps;
  for (double f : linspace(lr.f_lo_hz + 2e6, lr.f_hi_hz - 2e6, 41)) {
    inj.f_inj_hz = f;
    CHECK(solve_extended(table, 7e9, inj, table.stage).locked);
  }
  inj.f_inj_hz = lr.f_lo_hz - 20e6;
  CHECK(!solve_extended(table, 7e9, inj, table.stage).locked);
  inj.f_inj_hz = lr.f_hi_hz + 20e6;
  CHECK(!solve_extended(table, 7e9, inj, table.stage).locked);
}

TEST_CASE("locking range width grows strictly with injection") {
  auto table = sweep_table();
  double prev = 0.0;
  for (double eps : {0.02, 0.05, 0.1, 0.15}) {
    auto lr = locking_range(table, 7e9, eps, table.stage, SweepMode::Finj);
    CHECK(lr.width_hz > prev);
    prev = lr.width_hz;
  }
}

TEST_CASE("classic closure locking range matches the closed form") {
  auto table = sweep_table();
  SolveOptions classic;
  classic.classic_closure = true;
  const double eps = 0.1;
  auto lr = locking_range(table, 7e9, eps, table.stage, SweepMode::Finj, classic);
  // psi_required = 12 - 12 f/f_fr crosses +-arcsin(eps) at
  const double half = rad2deg(std::asin(eps)) / 12.0;
  CHECK(lr.f_lo_hz == doctest::Approx(7e9 * (1.0 - half)).epsilon(1e-3));
  CHECK(lr.f_hi_hz == doctest::Approx(7e9 * (1.0 + half)).epsilon(1e-3));
  CHECK(std::abs(lr.asymmetry) < 2e-3);
}

TEST_CASE("free-running range clamps only where the table ends") {
  auto table = sweep_table();
  // strong drive: the high-f_fr edge escapes the table, the low one stays inside
  auto lr = locking_range(table, 7e9, 0.15, table.stage, SweepMode::Ffr);
  CHECK(lr.hi_clamped);
  CHECK(lr.f_hi_hz == doctest::Approx(9e9));
  CHECK(!lr.lo_clamped);
  CHECK(lr.f_lo_hz > 5.05e9);
  CHECK(lr.f_lo_hz < 5.8e9);

  // weak drive: both edges interior
  auto lr2 = locking_range(table, 7e9, 0.02, table.stage, SweepMode::Ffr);
  CHECK(!lr2.lo_clamped);
  CHECK(!lr2.hi_clamped);
  CHECK(lr2.f_lo_hz > 5e9);
  CHECK(lr2.f_lo_hz < 7e9);
  CHECK(lr2.f_hi_hz > 7e9);
  CHECK(lr2.f_hi_hz < 9e9);
}

TEST_CASE("zero injection degenerates to a point band") {
  auto table = sweep_table();
  auto lr = locking_range(table, 7e9, 0.0, table.stage, SweepMode::Finj);
  CHECK(std::abs(lr.f_lo_hz - 7e9) <= 2e6);
  CHECK(std::abs(lr.f_hi_hz - 7e9) <= 2e6);
  CHECK(lr.width_hz < 4e6);
}

TEST_CASE("inconsistent baseline angles leave the trivial point unlocked") {
  // a table whose angles cannot close the ring: psi_required(1) = 38 degrees
  CalibrationTable table;
  table.stage = sweep_params();
  table.stage.theta_iv_deg = 40.0;
  for (double f : {5e9, 6e9, 7e9, 8e9, 9e9})
    table.points.push_back({f, 0.4, 2e-3, -12.0, 40.0});

  InjectionSpec inj;
  inj.epsilon = 0.02;
  inj.f_inj_hz = 7e9;
  CHECK(!solve_extended(table, 7e9, inj, table.stage).locked);
  CHECK_THROWS_AS(locking_range(table, 7e9, 0.02, table.stage, SweepMode::Finj),
                  std::runtime_error);
}

TEST_CASE("sweep csv round trip is byte-stable") {
  auto table = sweep_table();
  auto grid = linspace(5.5e9, 8.5e9, 31);
  auto sw = sweep_finj(table, 7e9, {0.08}, table.stage, grid);

  fs::path p1 = fs::temp_directory_path() / "ilro_sweep1.csv";
  fs::path p2 = fs::temp_directory_path() / "ilro_sweep2.csv";
  write_sweep_csv(sw, p1);

  SweepTable rd = read_sweep_csv(p1);
  REQUIRE(rd.rows.size() == sw.rows.size());
  write_sweep_csv(rd, p2);
  CHECK(slurp(p1) == slurp(p2));

  auto sw2 = sweep_finj(table, 7e9, {0.08}, table.stage, grid);
  write_sweep_csv(sw2, p2);
  CHECK(slurp(p1) == slurp(p2));

  bool saw_unlocked = false, saw_locked = false;
  CsvTable raw = read_csv(p1);
  int c_locked = raw.column("locked"), c_phi = raw.column("phi0_deg");
  for (size_t i = 0; i < raw.rows.size(); ++i) {
    if (raw.number(i, c_locked) == 0.0) {
      saw_unlocked = true;
      CHECK(raw.cell_empty(i, c_phi));
    } else {
      saw_locked = true;
      CHECK(!raw.cell_empty(i, c_phi));
    }
  }
  CHECK(saw_unlocked);
  CHECK(saw_locked);

  fs::remove(p1);
  fs::remove(p2);
}
