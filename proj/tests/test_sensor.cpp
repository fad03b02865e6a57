#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "pra/sensor.hpp"

using namespace pra;

TEST_CASE("vlp16 preset") {
  const SensorConfig c = vlp16_config();
  CHECK(c.channel_count == 16);
  CHECK(c.vertical_angles_deg.front() == doctest::Approx(-15.0));
  CHECK(c.vertical_angles_deg.back() == doctest::Approx(15.0));
  for (int i = 1; i < 16; ++i) {
    CHECK(c.vertical_angles_deg[i] - c.vertical_angles_deg[i - 1] == doctest::Approx(2.0));
  }
  CHECK(c.azimuth_resolution_deg == doctest::Approx(0.2));
  CHECK(c.columns_per_rotation() == 1800);
  CHECK(c.firing_cycle_us == doctest::Approx(55.296));
  CHECK(c.firing_period_us == doctest::Approx(2.304));
  CHECK(c.receive_window_ns == doctest::Approx(667.0));
  CHECK(c.internal_mot_m == doctest::Approx(0.40));
  CHECK(c.recommended_mot_m == doctest::Approx(1.00));
  CHECK(c.max_range_m == doctest::Approx(100.0));
  CHECK_NOTHROW(validate(c));
  // 16 channels / 0.2 deg: the division is exact in binary, both ways.
  CHECK(points_per_degree(c) == 80.0);
}

TEST_CASE("hdl64 preset") {
  const SensorConfig c = hdl64_config();
  CHECK(c.channel_count == 64);
  CHECK(c.vertical_angles_deg.front() == doctest::Approx(2.0));
  CHECK(c.vertical_angles_deg.back() == doctest::Approx(-24.8));
  CHECK(c.max_range_m == doctest::Approx(120.0));
  CHECK_NOTHROW(validate(c));
  CHECK(points_per_degree(c) == doctest::Approx(320.0));
}

TEST_CASE("preset lookup") {
  CHECK(sensor_preset("vlp16").id == "vlp16");
  CHECK(sensor_preset("hdl64").id == "hdl64");
  CHECK_THROWS_AS(sensor_preset("vlp32"), domain_error);
}

TEST_CASE("config validation rejects broken configs") {
  SensorConfig c = vlp16_config();
  SUBCASE("channel mismatch") {
    c.vertical_angles_deg.pop_back();
    CHECK_THROWS_AS(validate(c), domain_error);
  }
  SUBCASE("resolution must divide 360") {
    c.azimuth_resolution_deg = 0.7;
    CHECK_THROWS_AS(validate(c), domain_error);
  }
  SUBCASE("threshold above max range") {
    c.internal_mot_m = 150.0;
    CHECK_THROWS_AS(validate(c), domain_error);
  }
  SUBCASE("negative timing") {
    c.firing_cycle_us = -1.0;
    CHECK_THROWS_AS(validate(c), domain_error);
  }
}

TEST_CASE("point constructors keep spherical and cartesian views consistent") {
  const CloudPoint p = make_point(3.0, 4.0, 0.0, 0.5, 7, 11.0);
  CHECK(p.range_m == doctest::Approx(5.0));
  CHECK(p.azimuth_deg == doctest::Approx(53.13010235415598));
  CHECK(p.channel == 7);
  CHECK(p.timestamp_us == doctest::Approx(11.0));

  const CloudPoint q = point_from_spherical(10.0, 90.0, 0.0, 1.0, 0);
  CHECK(q.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(q.y == doctest::Approx(10.0));
  CHECK(q.range_m == doctest::Approx(10.0));
}

TEST_CASE("ring scan layout") {
  const SensorConfig config = vlp16_config();
  const Scan scan = synthesize_ring_scan(config, 10.0, 0.5, 3);

  CHECK(scan.points.size() == 28800);  // 1800 columns x 16 channels
  CHECK(scan.config_id == "vlp16");
  CHECK(scan.frame_id == 3);

  SUBCASE("every column and channel appears exactly once") {
    std::set<std::pair<int, int>> seen;
    for (const CloudPoint& p : scan.points) {
      const int column = static_cast<int>(std::llround(p.azimuth_deg / 0.2));
      seen.insert({column, p.channel});
      CHECK(p.range_m == doctest::Approx(10.0));
      CHECK(p.intensity == doctest::Approx(0.5));
    }
    CHECK(seen.size() == 28800);
  }

  SUBCASE("timestamps follow the firing schedule") {
    // Column j, channel ch fires at j * 55.296 us + ch * 2.304 us.
    const CloudPoint& first = scan.points.front();
    CHECK(first.timestamp_us == doctest::Approx(0.0));
    const CloudPoint& second = scan.points[1];
    CHECK(second.timestamp_us == doctest::Approx(2.304));
    const CloudPoint& next_column = scan.points[16];
    CHECK(next_column.timestamp_us == doctest::Approx(55.296));
    const CloudPoint& last = scan.points.back();
    CHECK(last.timestamp_us == doctest::Approx(1799 * 55.296 + 15 * 2.304));
  }

  SUBCASE("elevation difference shows up in z") {
    const CloudPoint& low = scan.points.front();  // channel 0 at -15 deg
    CHECK(low.z == doctest::Approx(10.0 * std::sin(deg2rad(-15.0))));
  }
}

TEST_CASE("ring scan input validation") {
  const SensorConfig config = vlp16_config();
  CHECK_THROWS_AS(synthesize_ring_scan(config, 0.40, 0.5), domain_error);   // at the floor
  CHECK_THROWS_AS(synthesize_ring_scan(config, 100.5, 0.5), domain_error);  // past max range
  CHECK_THROWS_AS(synthesize_ring_scan(config, 10.0, 1.5), domain_error);   // bad intensity
  CHECK_NOTHROW(synthesize_ring_scan(config, 100.0, 0.5));                  // max range is valid

  std::vector<double> ranges(15, 10.0);
  CHECK_THROWS_AS(synthesize_ring_scan(config, ranges, 0.5), domain_error);  // count mismatch
}

TEST_CASE("per channel ranges are honored") {
  const SensorConfig config = vlp16_config();
  std::vector<double> ranges(16);
  for (int i = 0; i < 16; ++i) ranges[i] = 5.0 + i;
  const Scan scan = synthesize_ring_scan(config, ranges, 0.5);
  for (const CloudPoint& p : scan.points) {
    CHECK(p.range_m == doctest::Approx(5.0 + p.channel));
  }
}
