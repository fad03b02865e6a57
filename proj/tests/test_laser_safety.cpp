#include <cmath>
#include <string>

#include "doctest.h"
#include "pra/laser_safety.hpp"

TEST_CASE("laser safety: pulse energy") {
  // 70 W for 40 ns is exactly 2.8 uJ in double arithmetic.
  CHECK(pra::pulse_energy(70.0, 40e-9) == 2.8e-6);
  CHECK(pra::pulse_energy(0.0, 1.0) == 0.0);
  CHECK(pra::pulse_energy(5.0, 0.0) == 0.0);
  CHECK_THROWS_AS(pra::pulse_energy(-1.0, 40e-9), pra::domain_error);
  CHECK_THROWS_AS(pra::pulse_energy(70.0, -1e-9), pra::domain_error);
}

TEST_CASE("laser safety: exposure limit") {
  SUBCASE("without the wavelength factor") {
    // 18 * 0.25^0.75, the figure usually quoted for visible-band sources.
    CHECK(pra::mpe_j_per_m2(0.25, 700.0) == doctest::Approx(6.3639610306789285).epsilon(1e-12));
    CHECK(pra::mpe_j_per_m2(0.25, 700.0) ==
          doctest::Approx(18.0 * std::pow(0.25, 0.75)).epsilon(1e-15));
  }

  SUBCASE("at 905 nm the band correction raises the limit") {
    CHECK(pra::mpe_j_per_m2(0.25, 905.0) == doctest::Approx(16.357898594962506).epsilon(1e-12));
    CHECK(pra::mpe_j_per_m2(0.25, 905.0) > pra::mpe_j_per_m2(0.25, 700.0));
  }

  SUBCASE("band edges are inclusive") {
    CHECK_NOTHROW(pra::mpe_j_per_m2(0.25, 700.0));
    CHECK_NOTHROW(pra::mpe_j_per_m2(0.25, 1050.0));
    CHECK_THROWS_AS(pra::mpe_j_per_m2(0.25, 699.999), pra::domain_error);
    CHECK_THROWS_AS(pra::mpe_j_per_m2(0.25, 1050.001), pra::domain_error);
  }

  SUBCASE("exposure time must be positive") {
    CHECK_THROWS_AS(pra::mpe_j_per_m2(0.0, 905.0), pra::domain_error);
    CHECK_THROWS_AS(pra::mpe_j_per_m2(-0.25, 905.0), pra::domain_error);
  }
}

TEST_CASE("laser safety: minimum beam area") {
  // One pulse against the uncorrected limit: the often-cited 0.44 mm^2.
  CHECK(pra::min_radiated_area_m2(2.8e-6, 6.3639610306789285) ==
        doctest::Approx(4.3997755273829616e-07).epsilon(1e-12));
  // Sixty pulses against the same limit: the often-cited 26.42 mm^2.
  CHECK(pra::min_radiated_area_m2(1.68e-4, 6.3639610306789285) ==
        doctest::Approx(2.639865316429777e-05).epsilon(1e-12));

  CHECK(pra::min_radiated_area_m2(0.0, 5.0) == 0.0);
  CHECK_THROWS_AS(pra::min_radiated_area_m2(-1.0, 5.0), pra::domain_error);
  CHECK_THROWS_AS(pra::min_radiated_area_m2(1.0, 0.0), pra::domain_error);
  CHECK_THROWS_AS(pra::min_radiated_area_m2(1.0, -5.0), pra::domain_error);
}

TEST_CASE("laser safety: full report") {
  pra::LaserParams params;
  CHECK(params.peak_power_w == 70.0);
  CHECK(params.pulse_width_s == 40e-9);
  CHECK(params.wavelength_nm == 905.0);
  CHECK(params.exposure_time_s == 0.25);
  CHECK(params.pulses_per_exposure == 1);

  SUBCASE("single pulse") {
    const pra::SafetyReport r = pra::safety_report(params);
    CHECK(r.pulse_energy_j == 2.8e-6);
    CHECK(r.exposure_energy_j == r.pulse_energy_j);
    CHECK(r.mpe_j_per_m2 == doctest::Approx(16.357898594962506).epsilon(1e-12));
    CHECK(r.mpe_no_wavelength_factor_j_per_m2 ==
          doctest::Approx(6.3639610306789285).epsilon(1e-12));
    CHECK(r.min_area_single_pulse_m2 == r.pulse_energy_j / r.mpe_j_per_m2);
    CHECK(r.min_area_exposure_m2 == r.min_area_single_pulse_m2);
  }

  SUBCASE("sixty pulses inside one exposure window") {
    params.pulses_per_exposure = 60;
    const pra::SafetyReport r = pra::safety_report(params);
    CHECK(r.exposure_energy_j == r.pulse_energy_j * 60.0);
    CHECK(r.exposure_energy_j == doctest::Approx(1.68e-4).epsilon(1e-15));
    CHECK(r.min_area_exposure_m2 == r.exposure_energy_j / r.mpe_j_per_m2);
    CHECK(r.min_area_exposure_m2 == doctest::Approx(60.0 * r.min_area_single_pulse_m2).epsilon(1e-12));
    // Against the uncorrected limit this would be the 26.42 mm^2 figure.
    CHECK(r.exposure_energy_j / r.mpe_no_wavelength_factor_j_per_m2 ==
          doctest::Approx(2.639865316429777e-05).epsilon(1e-12));
  }

  SUBCASE("footnotes spell out the reference figures") {
    const pra::SafetyReport r = pra::safety_report(params);
    REQUIRE(r.footnotes.size() == 2);
    CHECK(r.footnotes[0].find("6.36") != std::string::npos);
    CHECK(r.footnotes[0].find("16.36") != std::string::npos);
    CHECK(r.footnotes[1].find("26.42") != std::string::npos);
    CHECK(r.footnotes[1].find("0.44") != std::string::npos);
  }

  SUBCASE("pulse count must be at least one") {
    params.pulses_per_exposure = 0;
    CHECK_THROWS_AS(pra::safety_report(params), pra::domain_error);
    params.pulses_per_exposure = -3;
    CHECK_THROWS_AS(pra::safety_report(params), pra::domain_error);
  }
}
