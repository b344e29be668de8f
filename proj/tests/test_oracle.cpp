#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ilro/angles.hpp"
#include "ilro/csv.hpp"
#include "ilro/errors.hpp"
#include "ilro/measure.hpp"
#include "ilro/oracle.hpp"

using namespace ilro;
namespace fs = std::filesystem;

namespace {

OracleConfig free_cfg(double settle = 60, double measure = 32) {
  OracleConfig cfg;
  set_timing(cfg, 7e9, settle, measure);
  return cfg;
}

OracleConfig injected_cfg(double f_inj_hz, double epsilon = 0.2) {
  OracleConfig cfg;
  cfg.inj.epsilon = epsilon;
  cfg.inj.f_inj_hz = f_inj_hz;
  cfg.inj_amp_a = epsilon * 1.6725e-3;  // eps * free-running |I_osc|
  set_timing(cfg, f_inj_hz, 200, 96);
  return cfg;
}

}  // namespace

TEST_CASE("config validation rejects nonsense") {
  OracleConfig cfg = free_cfg();
  CHECK_NOTHROW(cfg.validate());

  OracleConfig bad = cfg;
  bad.n_stages = 3;
  CHECK_THROWS_AS(bad.validate(), OracleError);
  bad.n_stages = 0;
  CHECK_THROWS_AS(bad.validate(), OracleError);

  bad = cfg;
  bad.c_f = 0.0;
  CHECK_THROWS_AS(bad.validate(), OracleError);

  bad = cfg;
  bad.dt_s = 0.0;
  CHECK_THROWS_AS(bad.validate(), OracleError);

  bad = cfg;
  bad.i_sat_cc_a = -1e-3;
  CHECK_THROWS_AS(bad.validate(), OracleError);

  bad = cfg;
  bad.inj_phase_offsets_deg = {0.0, 90.0};  // 4 nodes, 2 entries
  CHECK_THROWS_AS(bad.validate(), OracleError);

  bad = cfg;
  bad.ic_scale_v = 0.0;
  CHECK_THROWS_AS(bad.validate(), OracleError);
}

TEST_CASE("injected runs must cover 64 injection periods") {
  OracleConfig cfg = injected_cfg(7e9);
  set_timing(cfg, 7e9, 50, 63);
  CHECK_THROWS_AS(cfg.validate(), OracleError);
  set_timing(cfg, 7e9, 50, 64);
  CHECK_NOTHROW(cfg.validate());
  // the same window is fine when free-running
  cfg.inj_amp_a = 0.0;
  set_timing(cfg, 7e9, 50, 20);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("ring topology indices") {
  OracleConfig cfg;
  cfg.n_stages = 2;
  CHECK(drive_node(cfg, 0) == 3);
  CHECK(drive_node(cfg, 1) == 0);
  CHECK(drive_node(cfg, 2) == 1);
  CHECK(drive_node(cfg, 3) == 2);
  CHECK(comp_node(cfg, 0) == 2);
  CHECK(comp_node(cfg, 1) == 3);
  CHECK(comp_node(cfg, 2) == 0);
  CHECK(comp_node(cfg, 3) == 1);

  cfg.n_stages = 4;
  CHECK(drive_node(cfg, 0) == 7);
  CHECK(comp_node(cfg, 1) == 5);
}

TEST_CASE("branch currents are exactly odd") {
  OracleConfig cfg;
  for (double v : {0.01, 0.2837, 1.7}) {
    CHECK(main_current(cfg, -v) == -main_current(cfg, v));
    CHECK(cc_current(cfg, -v) == -cc_current(cfg, v));
  }
  CHECK(main_current(cfg, 0.0) == 0.0);
  // small-signal slope approaches -g; deep drive saturates at -i_sat
  CHECK(main_current(cfg, 1e-6) == doctest::Approx(-cfg.g_main_s * 1e-6).epsilon(1e-6));
  CHECK(std::abs(main_current(cfg, 10.0)) == doctest::Approx(cfg.i_sat_main_a).epsilon(1e-9));
  CHECK(std::abs(cc_current(cfg, 10.0)) == doctest::Approx(cfg.i_sat_cc_a).epsilon(1e-9));
}

TEST_CASE("injection patterns") {
  OracleConfig cfg = injected_cfg(7e9);
  const double a = cfg.inj_amp_a;
  const double w = 2.0 * kPi * cfg.inj.f_inj_hz;

  SUBCASE("multi-phase default drives every node in ring order") {
    for (double t : {0.0, 13e-12, 94e-12}) {
      CHECK(injection_current(cfg, 0, t) == doctest::Approx(a * std::cos(w * t)).epsilon(1e-12));
      CHECK(injection_current(cfg, 1, t) ==
            doctest::Approx(a * std::cos(w * t + kPi / 2.0)).epsilon(1e-12));
      CHECK(injection_current(cfg, 2, t) == -injection_current(cfg, 0, t));
      CHECK(injection_current(cfg, 3, t) == -injection_current(cfg, 1, t));
    }
  }
  SUBCASE("single-phase drives stage 0 and its mirror only") {
    cfg.inj.multi_phase = false;
    CHECK(injection_current(cfg, 0, 11e-12) != 0.0);
    CHECK(injection_current(cfg, 1, 11e-12) == 0.0);
    CHECK(injection_current(cfg, 2, 11e-12) == -injection_current(cfg, 0, 11e-12));
    CHECK(injection_current(cfg, 3, 11e-12) == 0.0);
  }
  SUBCASE("explicit per-node offsets win") {
    cfg.inj_phase_offsets_deg = {10.0, 30.0, 60.0, 90.0};
    const double t = 27e-12;
    CHECK(injection_current(cfg, 2, t) ==
          doctest::Approx(a * std::cos(w * t + deg2rad(60.0))).epsilon(1e-12));
  }
  SUBCASE("zero amplitude means no injection anywhere") {
    cfg.inj_amp_a = 0.0;
    CHECK(injection_current(cfg, 0, 1e-12) == 0.0);
  }
}

TEST_CASE("set_timing is a pure product of its inputs") {
  OracleConfig a, b;
  set_timing(a, 8e9, 100, 50);
  CHECK(a.dt_s == 1.0 / (512.0 * 8e9));
  CHECK(a.t_settle_s == 100.0 / 8e9);
  CHECK(a.t_measure_s == 50.0 / 8e9);
  // halving the frequency doubles every time quantity bit-exactly
  set_timing(b, 4e9, 100, 50);
  CHECK(b.dt_s == 2.0 * a.dt_s);
  CHECK(b.t_settle_s == 2.0 * a.t_settle_s);
  CHECK(b.t_measure_s == 2.0 * a.t_measure_s);
  CHECK_THROWS_AS(set_timing(a, 0.0, 10, 10), OracleError);
  CHECK_THROWS_AS(set_timing(a, 1e9, 10, 0.0), OracleError);
}

TEST_CASE("oscillation decays when the cross-coupled branch is weaker than the load") {
  OracleConfig cfg = free_cfg(80, 32);
  cfg.g_cc_s = 2e-3;  // below g_out_s = 3.93e-3: no net negative resistance
  WaveRecord rec = simulate(cfg);
  double vmax = 0.0;
  for (const auto& node : rec.v)
    for (double v : node) vmax = std::max(vmax, std::abs(v));
  CHECK(vmax < 1e-6);
}

TEST_CASE("default config sustains a healthy oscillation") {
  WaveRecord rec = simulate(free_cfg());
  double vmax = 0.0;
  for (double v : rec.v[0]) vmax = std::max(vmax, std::abs(v));
  CHECK(vmax > 0.2);
  FrequencyEstimate est = free_running_frequency(rec);
  CHECK(est.f_hz == doctest::Approx(6.9951e9).epsilon(0.02));
  CHECK(est.n_periods >= 30);
  CHECK(est.stderr_hz < 1e-3 * est.f_hz);
}

TEST_CASE("differential halves stay bitwise mirrored") {
  OracleConfig cfg = injected_cfg(7.2e9);
  cfg.seed = 41;
  WaveRecord rec = simulate(cfg);
  const int N = cfg.n_stages;
  for (int k = 0; k < N; ++k)
    for (std::size_t i = 0; i < rec.n_samples(); i += 7)
      CHECK(rec.v[k][i] == -rec.v[k + N][i]);
}

TEST_CASE("replay with the same seed is bitwise deterministic") {
  OracleConfig cfg = injected_cfg(7.1e9);
  cfg.seed = 7;
  WaveRecord a = simulate(cfg);
  WaveRecord b = simulate(cfg);
  REQUIRE(a.n_samples() == b.n_samples());
  for (int k = 0; k < cfg.n_nodes(); ++k)
    for (std::size_t i = 0; i < a.n_samples(); ++i) CHECK(a.v[k][i] == b.v[k][i]);
}

TEST_CASE("the seed moves the free-running phase but not the operating point") {
  OracleConfig cfg = free_cfg();
  cfg.seed = 7;
  WaveRecord a = simulate(cfg);
  cfg.seed = 99;
  WaveRecord c = simulate(cfg);
  bool any_diff = false;
  for (std::size_t i = 0; i < 64; ++i) any_diff |= (a.v[0][i] != c.v[0][i]);
  CHECK(any_diff);
  MeasuredPoint ma = measure_operating_point(a);
  MeasuredPoint mc = measure_operating_point(c);
  CHECK(ma.v_osc_v == doctest::Approx(mc.v_osc_v).epsilon(1e-6));
  CHECK(ma.f_osc_hz == doctest::Approx(mc.f_osc_hz).epsilon(1e-6));
  CHECK(ma.theta_vi_deg == doctest::Approx(mc.theta_vi_deg).epsilon(1e-5));
}

TEST_CASE("doubling C with rescaled timing replays bitwise") {
  SUBCASE("free-running") {
    OracleConfig a = free_cfg();
    WaveRecord ra = simulate(a);
    OracleConfig b = a;
    b.c_f *= 2.0;
    b.dt_s *= 2.0;
    b.t_settle_s *= 2.0;
    b.t_measure_s *= 2.0;
    WaveRecord rb = simulate(b);
    REQUIRE(ra.n_samples() == rb.n_samples());
    for (int k = 0; k < a.n_nodes(); ++k)
      for (std::size_t i = 0; i < ra.n_samples(); ++i) CHECK(ra.v[k][i] == rb.v[k][i]);
  }
  SUBCASE("injected, with the tone frequency halved") {
    OracleConfig a = injected_cfg(7.2e9);
    WaveRecord ra = simulate(a);
    OracleConfig b = a;
    b.c_f *= 2.0;
    b.dt_s *= 2.0;
    b.t_settle_s *= 2.0;
    b.t_measure_s *= 2.0;
    b.inj.f_inj_hz /= 2.0;
    WaveRecord rb = simulate(b);
    REQUIRE(ra.n_samples() == rb.n_samples());
    for (int k = 0; k < a.n_nodes(); ++k)
      for (std::size_t i = 0; i < ra.n_samples(); i += 3) CHECK(ra.v[k][i] == rb.v[k][i]);
  }
}

TEST_CASE("a time step far above the node time constant blows up loudly") {
  OracleConfig cfg = free_cfg(600, 320);
  cfg.dt_s = 1e-9;  // node tau = C/g_out ~ 25 ps
  CHECK_THROWS_AS(simulate(cfg), OracleError);
}

TEST_CASE("measurement window must hold at least two steps") {
  OracleConfig cfg = free_cfg();
  cfg.t_measure_s = cfg.dt_s * 0.5;
  CHECK_THROWS_AS(simulate(cfg), OracleError);
}

TEST_CASE("wave csv dumps every node and branch") {
  OracleConfig cfg = free_cfg(20, 2);
  WaveRecord rec = simulate(cfg);
  fs::path path = fs::temp_directory_path() / "ilro_test_wave.csv";
  write_wave_csv(rec, path);
  CsvTable t = read_csv(path);
  CHECK(t.header.size() == 1 + 5 * 4);
  CHECK(t.rows.size() == rec.n_samples());
  const int c_v2 = t.column("v2_v");
  const int c_it0 = t.column("i_t0_a");
  for (std::size_t i = 0; i < t.rows.size(); i += 257) {
    CHECK(t.number(i, c_v2) == rec.v[2][i]);
    CHECK(t.number(i, c_it0) == total_current_at(rec, 0, i));
  }
  fs::remove(path);
}
