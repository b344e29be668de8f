#pragma once

#include <filesystem>
#include <vector>

namespace ilro {

// Which transfer angle parameterizes the amplitude/frequency closure.
enum class KAngleMode { UseThetaVi, UseThetaIv };

KAngleMode parse_k_angle_mode(const std::string& text);
const char* k_angle_mode_name(KAngleMode mode);

struct StageParams {
  double a_vi_deg_per_v = 0.0;   // slope of theta_VI vs input amplitude
  double theta_vi_0_deg = 0.0;   // theta_VI extrapolated to zero amplitude
  double g_m_a_per_v = 0.0;      // slope of |I_osc| vs input amplitude
  double i_osc_0_a = 0.0;        // |I_osc| extrapolated to zero amplitude
  double theta_iv_deg = 85.0;    // load angle, constant in amplitude
  double c_load_f = 100e-15;
  int n_stages = 2;              // differential stages; ring has 2*n_stages nodes
  KAngleMode k_angle_mode = KAngleMode::UseThetaVi;
};

// Throws std::domain_error when invariants fail (C > 0, even n_stages >= 2,
// G_m >= 0, theta_IV in (0, 90)).
void validate(const StageParams& p);

struct FreeRunningPoint {
  double f_fr_hz = 0.0;
  double v_osc_fr_v = 0.0;
  double i_osc_fr_a = 0.0;
  double theta_vi_fr_deg = 0.0;
  double theta_iv_fr_deg = 0.0;
};

struct CalibrationSample {
  double v_in_amp_v = 0.0;
  double theta_vi_deg = 0.0;
  double i_osc_amp_a = 0.0;
  double f_hz = 0.0;
  double c_f = 0.0;
};

struct LawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
  double r2 = 0.0;
};

struct FittedLaws {
  LawFit theta_vi;  // deg vs volts
  LawFit i_osc;     // amps vs volts
};

struct CalibrationTable {
  std::vector<FreeRunningPoint> points;  // sorted by strictly increasing f_fr
  StageParams stage;
  FittedLaws laws;

  double f_min() const;
  double f_max() const;
};

// theta_VI(v_in) = theta_VI_0 + A_VI * v_in; v_in < 0 is a domain error and
// the result is never wrapped.
double theta_vi_of_amplitude(const StageParams& p, double v_in_v);

// |I_osc|(v_in) = I_osc_0 + G_m * v_in, clamped at zero (sets *clamped).
double i_osc_of_amplitude(const StageParams& p, double v_in_v, bool* clamped = nullptr);

// k = i_t * theta_rad / (2*pi*f*v_osc*c); every argument must be > 0.
double k_coefficient(double i_t_a, double theta_deg, double f_hz, double v_osc_v, double c_f);

// Ordinary least squares for both laws; needs >= 3 samples with distinct
// amplitudes, otherwise throws FitError.
FittedLaws fit_linear_laws(const std::vector<CalibrationSample>& samples);

// Piecewise-linear interpolation in f_fr; out of range throws
// std::out_of_range (no extrapolation).
FreeRunningPoint baseline_at(const CalibrationTable& table, double f_fr_hz);

void write_calibration(const CalibrationTable& table, const std::filesystem::path& csv_path,
                       const std::filesystem::path& sidecar_path);
CalibrationTable read_calibration(const std::filesystem::path& csv_path,
                                  const std::filesystem::path& sidecar_path);

}  // namespace ilro
