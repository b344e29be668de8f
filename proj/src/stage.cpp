#include "ilro/stage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "ilro/angles.hpp"
#include "ilro/config.hpp"
#include "ilro/csv.hpp"
#include "ilro/errors.hpp"

namespace ilro {

KAngleMode parse_k_angle_mode(const std::string& text) {
  if (text == "theta_vi") return KAngleMode::UseThetaVi;
  if (text == "theta_iv") return KAngleMode::UseThetaIv;
  throw ConfigError("k_angle mode must be 'theta_vi' or 'theta_iv', got '" + text + "'");
}

const char* k_angle_mode_name(KAngleMode mode) {
  return mode == KAngleMode::UseThetaVi ? "theta_vi" : "theta_iv";
}

void validate(const StageParams& p) {
  if (!(p.c_load_f > 0.0)) throw std::domain_error("stage: C_load must be > 0");
  if (p.n_stages < 2 || p.n_stages % 2 != 0)
    throw std::domain_error("stage: n_stages must be even and >= 2");
  if (!(p.g_m_a_per_v >= 0.0)) throw std::domain_error("stage: G_m must be >= 0");
  if (!(p.theta_iv_deg > 0.0 && p.theta_iv_deg < 90.0))
    throw std::domain_error("stage: theta_IV must lie in (0, 90) degrees");
}

double CalibrationTable::f_min() const {
  if (points.empty()) throw std::out_of_range("calibration table is empty");
  return points.front().f_fr_hz;
}

double CalibrationTable::f_max() const {
  if (points.empty()) throw std::out_of_range("calibration table is empty");
  return points.back().f_fr_hz;
}

double theta_vi_of_amplitude(const StageParams& p, double v_in_v) {
  if (!(v_in_v >= 0.0)) throw std::domain_error("theta_vi_of_amplitude: v_in must be >= 0");
  return p.theta_vi_0_deg + p.a_vi_deg_per_v * v_in_v;
}

double i_osc_of_amplitude(const StageParams& p, double v_in_v, bool* clamped) {
  if (!(v_in_v >= 0.0)) throw std::domain_error("i_osc_of_amplitude: v_in must be >= 0");
  double i = p.i_osc_0_a + p.g_m_a_per_v * v_in_v;
  if (clamped) *clamped = i < 0.0;
  return std::max(i, 0.0);
}

double k_coefficient(double i_t_a, double theta_deg, double f_hz, double v_osc_v, double c_f) {
  if (!(i_t_a > 0.0 && theta_deg > 0.0 && f_hz > 0.0 && v_osc_v > 0.0 && c_f > 0.0))
    throw std::domain_error("k_coefficient: all arguments must be > 0");
  return i_t_a * deg2rad(theta_deg) / (2.0 * kPi * f_hz * v_osc_v * c_f);
}

namespace {

LawFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double sx = 0, sy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("law fit: input amplitudes are rank-deficient");

  LawFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0, ss_tot = 0;
  for (size_t i = 0; i < n; ++i) {
    double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  fit.rms = std::sqrt(ss_res / n);
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

}  // namespace

FittedLaws fit_linear_laws(const std::vector<CalibrationSample>& samples) {
  if (samples.size() < 3) throw FitError("law fit: need at least 3 samples");
  std::vector<double> v, th, io;
  v.reserve(samples.size());
  for (const auto& s : samples) {
    if (!(s.v_in_amp_v > 0.0)) throw FitError("law fit: sample with non-positive amplitude");
    v.push_back(s.v_in_amp_v);
    th.push_back(s.theta_vi_deg);
    io.push_back(s.i_osc_amp_a);
  }
  std::vector<double> uniq = v;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-15; }),
             uniq.end());
  if (uniq.size() < 3) throw FitError("law fit: need at least 3 distinct amplitudes");

  FittedLaws laws;
  laws.theta_vi = ols(v, th);
  laws.i_osc = ols(v, io);
  return laws;
}

namespace {

void check_table(const CalibrationTable& t) {
  if (t.points.size() < 3) throw ConfigError("calibration table needs at least 3 rows");
  for (size_t i = 1; i < t.points.size(); ++i)
    if (!(t.points[i].f_fr_hz > t.points[i - 1].f_fr_hz))
      throw ConfigError("calibration table f_fr must be strictly increasing");
  for (const auto& p : t.points)
    if (!(p.f_fr_hz > 0 && p.v_osc_fr_v > 0 && p.i_osc_fr_a > 0 && p.theta_iv_fr_deg > 0))
      throw ConfigError("calibration row fails positivity");
}

}  // namespace

FreeRunningPoint baseline_at(const CalibrationTable& table, double f_fr_hz) {
  check_table(table);
  const auto& pts = table.points;
  if (f_fr_hz < pts.front().f_fr_hz || f_fr_hz > pts.back().f_fr_hz)
    throw std::out_of_range("baseline_at: f_fr " + format_double(f_fr_hz) +
                            " Hz outside calibrated range [" + format_double(pts.front().f_fr_hz) +
                            ", " + format_double(pts.back().f_fr_hz) + "]");
  auto hi = std::lower_bound(pts.begin(), pts.end(), f_fr_hz,
                             [](const FreeRunningPoint& p, double f) { return p.f_fr_hz < f; });
  if (hi->f_fr_hz == f_fr_hz) return *hi;  // node-exact
  auto lo = hi - 1;
  const double w = (f_fr_hz - lo->f_fr_hz) / (hi->f_fr_hz - lo->f_fr_hz);
  FreeRunningPoint out;
  out.f_fr_hz = f_fr_hz;
  out.v_osc_fr_v = lo->v_osc_fr_v + w * (hi->v_osc_fr_v - lo->v_osc_fr_v);
  out.i_osc_fr_a = lo->i_osc_fr_a + w * (hi->i_osc_fr_a - lo->i_osc_fr_a);
  out.theta_vi_fr_deg = lo->theta_vi_fr_deg + w * (hi->theta_vi_fr_deg - lo->theta_vi_fr_deg);
  out.theta_iv_fr_deg = lo->theta_iv_fr_deg + w * (hi->theta_iv_fr_deg - lo->theta_iv_fr_deg);
  return out;
}

void write_calibration(const CalibrationTable& table, const std::filesystem::path& csv_path,
                       const std::filesystem::path& sidecar_path) {
  check_table(table);
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : table.points)
    rows.push_back({format_double(p.f_fr_hz), format_double(p.v_osc_fr_v),
                    format_double(p.i_osc_fr_a), format_double(p.theta_vi_fr_deg),
                    format_double(p.theta_iv_fr_deg)});
  write_csv(csv_path, {"f_fr_hz", "v_osc_fr_v", "i_osc_fr_a", "theta_vi_fr_deg",
                       "theta_iv_fr_deg"},
            rows);

  std::ofstream out(sidecar_path);
  if (!out) throw std::runtime_error("cannot open '" + sidecar_path.string() + "' for writing");
  const StageParams& s = table.stage;
  out << "[stage]\n"
      << "a_vi_deg_per_v = " << format_double(s.a_vi_deg_per_v) << "\n"
      << "theta_vi_0_deg = " << format_double(s.theta_vi_0_deg) << "\n"
      << "g_m_a_per_v = " << format_double(s.g_m_a_per_v) << "\n"
      << "i_osc_0_a = " << format_double(s.i_osc_0_a) << "\n"
      << "theta_iv_deg = " << format_double(s.theta_iv_deg) << "\n"
      << "c_load_f = " << format_double(s.c_load_f) << "\n"
      << "n_stages = " << s.n_stages << "\n"
      << "k_angle_mode = " << k_angle_mode_name(s.k_angle_mode) << "\n"
      << "[fit]\n"
      << "theta_rms_deg = " << format_double(table.laws.theta_vi.rms) << "\n"
      << "theta_r2 = " << format_double(table.laws.theta_vi.r2) << "\n"
      << "i_rms_a = " << format_double(table.laws.i_osc.rms) << "\n"
      << "i_r2 = " << format_double(table.laws.i_osc.r2) << "\n";
  if (!out.flush()) throw std::runtime_error("write failed for '" + sidecar_path.string() + "'");
}

CalibrationTable read_calibration(const std::filesystem::path& csv_path,
                                  const std::filesystem::path& sidecar_path) {
  if (!std::filesystem::exists(csv_path))
    throw PrereqError("calibration table '" + csv_path.string() + "' not found; run calibrate");
  if (!std::filesystem::exists(sidecar_path))
    throw PrereqError("stage parameters '" + sidecar_path.string() + "' not found; run calibrate");

  CsvTable csv = read_csv(csv_path);
  CalibrationTable table;
  int cf = csv.column("f_fr_hz"), cv = csv.column("v_osc_fr_v"), ci = csv.column("i_osc_fr_a");
  int cth = csv.column("theta_vi_fr_deg"), civ = csv.column("theta_iv_fr_deg");
  for (size_t r = 0; r < csv.rows.size(); ++r)
    table.points.push_back({csv.number(r, cf), csv.number(r, cv), csv.number(r, ci),
                            csv.number(r, cth), csv.number(r, civ)});

  Config side = Config::from_file(sidecar_path);
  StageParams& s = table.stage;
  s.a_vi_deg_per_v = side.quantity("stage", "a_vi_deg_per_v", Unit::Scalar);
  s.theta_vi_0_deg = side.quantity("stage", "theta_vi_0_deg", Unit::Scalar);
  s.g_m_a_per_v = side.quantity("stage", "g_m_a_per_v", Unit::Scalar);
  s.i_osc_0_a = side.quantity("stage", "i_osc_0_a", Unit::Scalar);
  s.theta_iv_deg = side.quantity("stage", "theta_iv_deg", Unit::Scalar);
  s.c_load_f = side.quantity("stage", "c_load_f", Unit::Scalar);
  s.n_stages = static_cast<int>(side.integer("stage", "n_stages"));
  s.k_angle_mode = parse_k_angle_mode(side.text("stage", "k_angle_mode"));
  table.laws.theta_vi.slope = s.a_vi_deg_per_v;
  table.laws.theta_vi.intercept = s.theta_vi_0_deg;
  table.laws.theta_vi.rms = side.quantity("fit", "theta_rms_deg", Unit::Scalar);
  table.laws.theta_vi.r2 = side.quantity("fit", "theta_r2", Unit::Scalar);
  table.laws.i_osc.slope = s.g_m_a_per_v;
  table.laws.i_osc.intercept = s.i_osc_0_a;
  table.laws.i_osc.rms = side.quantity("fit", "i_rms_a", Unit::Scalar);
  table.laws.i_osc.r2 = side.quantity("fit", "i_r2", Unit::Scalar);
  side.finish();

  check_table(table);
  validate(s);
  return table;
}

}  // namespace ilro
