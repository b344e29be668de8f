#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "ilro/errors.hpp"
#include "ilro/stage.hpp"

using namespace ilro;
namespace fs = std::filesystem;

namespace {

StageParams demo_params() {
  StageParams p;
  p.a_vi_deg_per_v = -10.0;
  p.theta_vi_0_deg = -8.0;  // theta_VI(0.4 V) = -12
  p.g_m_a_per_v = 1.5e-3;
  p.i_osc_0_a = 1.4e-3;     // |I_osc|(0.4 V) = 2 mA
  p.theta_iv_deg = 78.0;
  p.c_load_f = 100e-15;
  p.n_stages = 2;
  return p;
}

CalibrationTable demo_table() {
  CalibrationTable t;
  t.stage = demo_params();
  for (int i = 0; i < 6; ++i) {
    FreeRunningPoint pt;
    pt.f_fr_hz = 5e9 + i * 0.8e9;
    pt.v_osc_fr_v = 0.4 + 0.01 * i;
    pt.i_osc_fr_a = 2e-3 - 0.05e-3 * i;
    pt.theta_vi_fr_deg = -12.0 - 0.1 * i;
    pt.theta_iv_fr_deg = 78.0 + 0.05 * i;
    t.points.push_back(pt);
  }
  return t;
}

}  // namespace

TEST_CASE("parameter validation") {
  StageParams p = demo_params();
  CHECK_NOTHROW(validate(p));
  p.c_load_f = 0.0;
  CHECK_THROWS_AS(validate(p), std::domain_error);
  p = demo_params();
  p.n_stages = 3;
  CHECK_THROWS_AS(validate(p), std::domain_error);
  p.n_stages = 0;
  CHECK_THROWS_AS(validate(p), std::domain_error);
  p = demo_params();
  p.g_m_a_per_v = -1e-3;
  CHECK_THROWS_AS(validate(p), std::domain_error);
  p = demo_params();
  p.theta_iv_deg = 90.0;
  CHECK_THROWS_AS(validate(p), std::domain_error);
  p.theta_iv_deg = -5.0;
  CHECK_THROWS_AS(validate(p), std::domain_error);
}

TEST_CASE("amplitude laws") {
  StageParams p = demo_params();
  CHECK(theta_vi_of_amplitude(p, 0.4) == doctest::Approx(-12.0).epsilon(1e-12));
  CHECK(theta_vi_of_amplitude(p, 0.0) == -8.0);
  CHECK_THROWS_AS(theta_vi_of_amplitude(p, -0.1), std::domain_error);
  // never wrapped, even far outside physical range
  CHECK(theta_vi_of_amplitude(p, 100.0) == doctest::Approx(-1008.0));

  bool clamped = false;
  CHECK(i_osc_of_amplitude(p, 0.4, &clamped) == doctest::Approx(2e-3).epsilon(1e-12));
  CHECK(!clamped);
  StageParams neg = p;
  neg.i_osc_0_a = -1e-3;
  CHECK(i_osc_of_amplitude(neg, 0.1, &clamped) == 0.0);
  CHECK(clamped);
  CHECK_THROWS_AS(i_osc_of_amplitude(p, -1.0), std::domain_error);
}

TEST_CASE("k coefficient") {
  // 1 mA, 85 deg, 7 GHz, 0.4 V, 100 fF
  double k = k_coefficient(1e-3, 85.0, 7e9, 0.4, 100e-15);
  CHECK(k == doctest::Approx(0.843255).epsilon(2.5e-4));

  CHECK(k_coefficient(2e-3, 85.0, 7e9, 0.4, 100e-15) == doctest::Approx(2.0 * k));
  // invariant under joint scaling of current and voltage
  CHECK(k_coefficient(1e-3 * 3.0, 85.0, 7e9, 0.4 * 3.0, 100e-15) == doctest::Approx(k));

  CHECK_THROWS_AS(k_coefficient(0.0, 85.0, 7e9, 0.4, 100e-15), std::domain_error);
  CHECK_THROWS_AS(k_coefficient(1e-3, -85.0, 7e9, 0.4, 100e-15), std::domain_error);
  CHECK_THROWS_AS(k_coefficient(1e-3, 85.0, 0.0, 0.4, 100e-15), std::domain_error);
  CHECK_THROWS_AS(k_coefficient(1e-3, 85.0, 7e9, 0.4, -1e-15), std::domain_error);
}

TEST_CASE("law fit recovers exact linear data") {
  StageParams p = demo_params();
  std::vector<CalibrationSample> samples;
  for (double v : {0.30, 0.35, 0.40, 0.45, 0.50}) {
    CalibrationSample s;
    s.v_in_amp_v = v;
    s.theta_vi_deg = theta_vi_of_amplitude(p, v);
    s.i_osc_amp_a = i_osc_of_amplitude(p, v);
    s.f_hz = 7e9;
    s.c_f = 100e-15;
    samples.push_back(s);
  }
  FittedLaws laws = fit_linear_laws(samples);
  CHECK(laws.theta_vi.slope == doctest::Approx(p.a_vi_deg_per_v).epsilon(1e-9));
  CHECK(laws.theta_vi.intercept == doctest::Approx(p.theta_vi_0_deg).epsilon(1e-9));
  CHECK(laws.theta_vi.rms <= 1e-9);
  CHECK(laws.theta_vi.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(laws.i_osc.slope == doctest::Approx(p.g_m_a_per_v).epsilon(1e-9));
  CHECK(laws.i_osc.intercept == doctest::Approx(p.i_osc_0_a).epsilon(1e-9));
  CHECK(laws.i_osc.r2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("law fit reports honest residuals on noisy data") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 0.05);
  StageParams p = demo_params();
  std::vector<CalibrationSample> samples;
  for (int i = 0; i < 40; ++i) {
    double v = 0.25 + 0.01 * i;
    CalibrationSample s;
    s.v_in_amp_v = v;
    s.theta_vi_deg = theta_vi_of_amplitude(p, v) + noise(rng);
    s.i_osc_amp_a = i_osc_of_amplitude(p, v) * (1.0 + 0.01 * noise(rng));
    s.f_hz = 7e9;
    s.c_f = 100e-15;
    samples.push_back(s);
  }
  FittedLaws laws = fit_linear_laws(samples);
  CHECK(laws.theta_vi.slope == doctest::Approx(p.a_vi_deg_per_v).epsilon(0.05));
  CHECK(laws.theta_vi.rms > 1e-3);
  CHECK(laws.theta_vi.rms < 0.2);
  CHECK(laws.theta_vi.r2 > 0.95);
}

TEST_CASE("law fit rejects degenerate input") {
  std::vector<CalibrationSample> two(2);
  CHECK_THROWS_AS(fit_linear_laws(two), FitError);

  std::vector<CalibrationSample> flat;
  for (int i = 0; i < 5; ++i) {
    CalibrationSample s;
    s.v_in_amp_v = 0.4;  // all equal
    s.theta_vi_deg = -12.0;
    s.i_osc_amp_a = 2e-3;
    flat.push_back(s);
  }
  CHECK_THROWS_AS(fit_linear_laws(flat), FitError);
}

TEST_CASE("baseline interpolation") {
  CalibrationTable t = demo_table();

  // node-exact
  FreeRunningPoint n = baseline_at(t, t.points[2].f_fr_hz);
  CHECK(n.v_osc_fr_v == t.points[2].v_osc_fr_v);
  CHECK(n.theta_vi_fr_deg == t.points[2].theta_vi_fr_deg);

  // midpoint mean
  double fm = 0.5 * (t.points[1].f_fr_hz + t.points[2].f_fr_hz);
  FreeRunningPoint m = baseline_at(t, fm);
  CHECK(m.v_osc_fr_v ==
        doctest::Approx(0.5 * (t.points[1].v_osc_fr_v + t.points[2].v_osc_fr_v)).epsilon(1e-12));
  CHECK(m.i_osc_fr_a ==
        doctest::Approx(0.5 * (t.points[1].i_osc_fr_a + t.points[2].i_osc_fr_a)).epsilon(1e-12));

  // no extrapolation
  CHECK_THROWS_AS(baseline_at(t, 4.99e9), std::out_of_range);
  CHECK_THROWS_AS(baseline_at(t, 9.1e9), std::out_of_range);
  CHECK_THROWS_AS(baseline_at(t, 5e9 - 1e9), std::out_of_range);
}

TEST_CASE("baseline interpolation preserves monotonicity") {
  CalibrationTable t = demo_table();
  double prev_v = 0.0;
  for (int i = 0; i <= 200; ++i) {
    double f = t.f_min() + (t.f_max() - t.f_min()) * i / 200.0;
    FreeRunningPoint p = baseline_at(t, f);
    if (i) CHECK(p.v_osc_fr_v >= prev_v - 1e-15);  // table is increasing in V
    prev_v = p.v_osc_fr_v;
  }
}

TEST_CASE("calibration table io round trip") {
  CalibrationTable t = demo_table();
  t.laws.theta_vi = {-10.0, -8.0, 1e-4, 0.999};
  t.laws.i_osc = {1.5e-3, 1.4e-3, 1e-7, 0.998};

  fs::path dir = fs::temp_directory_path();
  fs::path csv = dir / "ilro_cal.csv", side = dir / "ilro_cal_stage.cfg";
  write_calibration(t, csv, side);
  CalibrationTable r = read_calibration(csv, side);

  REQUIRE(r.points.size() == t.points.size());
  for (size_t i = 0; i < t.points.size(); ++i) {
    CHECK(r.points[i].f_fr_hz == t.points[i].f_fr_hz);  // exact: shortest round-trip
    CHECK(r.points[i].v_osc_fr_v == t.points[i].v_osc_fr_v);
    CHECK(r.points[i].theta_vi_fr_deg == t.points[i].theta_vi_fr_deg);
    CHECK(r.points[i].theta_iv_fr_deg == t.points[i].theta_iv_fr_deg);
  }
  CHECK(r.stage.a_vi_deg_per_v == t.stage.a_vi_deg_per_v);
  CHECK(r.stage.theta_iv_deg == t.stage.theta_iv_deg);
  CHECK(r.stage.n_stages == t.stage.n_stages);
  CHECK(r.laws.theta_vi.rms == t.laws.theta_vi.rms);
  CHECK(r.laws.i_osc.r2 == t.laws.i_osc.r2);

  fs::remove(csv);
  fs::remove(side);

  CHECK_THROWS_AS(read_calibration(csv, side), PrereqError);
}

TEST_CASE("table invariants are enforced") {
  CalibrationTable t = demo_table();
  std::swap(t.points[0], t.points[1]);  // break ordering
  fs::path dir = fs::temp_directory_path();
  CHECK_THROWS_AS(write_calibration(t, dir / "x.csv", dir / "x.cfg"), ConfigError);

  CalibrationTable small = demo_table();
  small.points.resize(2);
  CHECK_THROWS_AS(baseline_at(small, 5.1e9), ConfigError);
}
