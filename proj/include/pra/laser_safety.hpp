#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pra/error.hpp"

namespace pra {

/// Emitter and exposure description for eye-safety arithmetic.
struct LaserParams {
  double peak_power_w = 70.0;
  double pulse_width_s = 40e-9;
  double wavelength_nm = 905.0;
  double exposure_time_s = 0.25;
  long pulses_per_exposure = 1;
};

/// Energy of a single rectangular pulse.
inline double pulse_energy(double peak_power_w, double pulse_width_s) {
  if (peak_power_w < 0.0 || pulse_width_s < 0.0) {
    throw domain_error("pulse_energy: power and width must be non-negative");
  }
  return peak_power_w * pulse_width_s;
}

/// Maximum permissible exposure in J/m^2 for the 700-1050 nm band:
/// 18 * t^0.75 * 10^((lambda - 700) / 500).
inline double mpe_j_per_m2(double exposure_time_s, double wavelength_nm) {
  if (!(exposure_time_s > 0.0)) {
    throw domain_error("mpe_j_per_m2: exposure time must be positive");
  }
  if (wavelength_nm < 700.0 || wavelength_nm > 1050.0) {
    throw domain_error("mpe_j_per_m2: wavelength outside the 700-1050 nm band");
  }
  return 18.0 * std::pow(exposure_time_s, 0.75) * std::pow(10.0, (wavelength_nm - 700.0) / 500.0);
}

/// Smallest beam area that keeps the given energy at or under the limit.
inline double min_radiated_area_m2(double total_energy_j, double mpe_j_per_m2_value) {
  if (total_energy_j < 0.0) {
    throw domain_error("min_radiated_area_m2: energy must be non-negative");
  }
  if (!(mpe_j_per_m2_value > 0.0)) {
    throw domain_error("min_radiated_area_m2: exposure limit must be positive");
  }
  return total_energy_j / mpe_j_per_m2_value;
}

struct SafetyReport {
  LaserParams params;
  double pulse_energy_j = 0.0;
  double exposure_energy_j = 0.0;  ///< pulses_per_exposure aggregated
  double mpe_j_per_m2 = 0.0;
  double mpe_no_wavelength_factor_j_per_m2 = 0.0;
  double min_area_single_pulse_m2 = 0.0;
  double min_area_exposure_m2 = 0.0;
  std::vector<std::string> footnotes;
};

/// Full calculation with the reference-figure caveats spelled out.
inline SafetyReport safety_report(const LaserParams& params) {
  if (params.pulses_per_exposure < 1) {
    throw domain_error("safety_report: need at least one pulse per exposure");
  }
  SafetyReport r;
  r.params = params;
  r.pulse_energy_j = pulse_energy(params.peak_power_w, params.pulse_width_s);
  r.exposure_energy_j = r.pulse_energy_j * static_cast<double>(params.pulses_per_exposure);
  r.mpe_j_per_m2 = mpe_j_per_m2(params.exposure_time_s, params.wavelength_nm);
  r.mpe_no_wavelength_factor_j_per_m2 = 18.0 * std::pow(params.exposure_time_s, 0.75);
  r.min_area_single_pulse_m2 = min_radiated_area_m2(r.pulse_energy_j, r.mpe_j_per_m2);
  r.min_area_exposure_m2 = min_radiated_area_m2(r.exposure_energy_j, r.mpe_j_per_m2);

  r.footnotes.push_back(
      "A commonly quoted limit of 6.36 J/m^2 for a 0.25 s exposure equals 18 * t^0.75 with the "
      "wavelength factor left out; at 905 nm the full expression gives 16.36 J/m^2.");
  r.footnotes.push_back(
      "A commonly quoted minimum spot area of 26.42 mm^2 matches a 168 uJ exposure (60 pulses of "
      "2.8 uJ) against the 6.36 J/m^2 limit; a single 2.8 uJ pulse at that limit needs only "
      "0.44 mm^2.");
  return r;
}

}  // namespace pra
