#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pra/error.hpp"
#include "pra/geometry.hpp"

namespace pra {

/// Static description of a spinning LiDAR: beam layout, timing, and the
/// range floor below which the unit itself discards echoes.
struct SensorConfig {
  std::string id;
  int channel_count = 0;
  std::vector<double> vertical_angles_deg;  ///< one per channel, signed elevation
  double azimuth_resolution_deg = 0.0;
  double rotation_period_ms = 0.0;
  double firing_cycle_us = 0.0;   ///< time between consecutive azimuth columns
  double firing_period_us = 0.0;  ///< time between consecutive channel firings
  double receive_window_ns = 0.0;
  double max_range_m = 0.0;
  double internal_mot_m = 0.0;     ///< threshold applied inside the unit
  double recommended_mot_m = 0.0;  ///< vendor-recommended floor, metadata only

  int columns_per_rotation() const {
    return static_cast<int>(std::llround(360.0 / azimuth_resolution_deg));
  }
};

inline void validate(const SensorConfig& c) {
  if (c.channel_count <= 0) {
    throw domain_error("SensorConfig: channel_count must be positive");
  }
  if (static_cast<int>(c.vertical_angles_deg.size()) != c.channel_count) {
    throw domain_error("SensorConfig: vertical angle count does not match channel_count");
  }
  if (!(c.azimuth_resolution_deg > 0.0)) {
    throw domain_error("SensorConfig: azimuth_resolution_deg must be positive");
  }
  const double columns = 360.0 / c.azimuth_resolution_deg;
  if (std::abs(columns - std::llround(columns)) > 1e-9) {
    throw domain_error("SensorConfig: azimuth_resolution_deg must divide 360 evenly");
  }
  if (!(c.max_range_m > 0.0)) {
    throw domain_error("SensorConfig: max_range_m must be positive");
  }
  if (c.internal_mot_m < 0.0 || c.internal_mot_m >= c.max_range_m) {
    throw domain_error("SensorConfig: internal_mot_m must lie in [0, max_range_m)");
  }
  if (c.rotation_period_ms < 0.0 || c.firing_cycle_us < 0.0 || c.firing_period_us < 0.0 ||
      c.receive_window_ns < 0.0) {
    throw domain_error("SensorConfig: timing fields must be non-negative");
  }
}

/// 16-channel unit, 2 deg beam spacing over [-15, +15], 0.2 deg azimuth
/// steps, 10 rotations per second.
inline SensorConfig vlp16_config() {
  SensorConfig c;
  c.id = "vlp16";
  c.channel_count = 16;
  c.vertical_angles_deg.resize(16);
  for (int i = 0; i < 16; ++i) c.vertical_angles_deg[i] = -15.0 + 2.0 * i;
  c.azimuth_resolution_deg = 0.2;
  c.rotation_period_ms = 100.0;
  c.firing_cycle_us = 55.296;
  c.firing_period_us = 2.304;
  c.receive_window_ns = 667.0;
  c.max_range_m = 100.0;
  c.internal_mot_m = 0.40;
  c.recommended_mot_m = 1.00;
  return c;
}

/// 64-channel unit, beams from +2 down to -24.8 deg (uniform spacing here;
/// the real unit is denser in the upper block), 0.2 deg azimuth steps.
inline SensorConfig hdl64_config() {
  SensorConfig c;
  c.id = "hdl64";
  c.channel_count = 64;
  c.vertical_angles_deg.resize(64);
  for (int i = 0; i < 64; ++i) {
    c.vertical_angles_deg[i] = 2.0 - (2.0 + 24.8) * i / 63.0;
  }
  c.azimuth_resolution_deg = 0.2;
  c.rotation_period_ms = 100.0;
  c.firing_cycle_us = 55.296;
  c.firing_period_us = 1.2;
  c.receive_window_ns = 667.0;
  c.max_range_m = 120.0;
  c.internal_mot_m = 0.40;
  c.recommended_mot_m = 0.90;
  return c;
}

inline SensorConfig sensor_preset(const std::string& name) {
  if (name == "vlp16") return vlp16_config();
  if (name == "hdl64") return hdl64_config();
  throw domain_error("sensor_preset: unknown preset '" + name + "'");
}

/// One return. Azimuth and range are stored alongside the Cartesian
/// coordinates and must stay consistent with them.
struct CloudPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;  ///< normalized to [0, 1]
  int channel = 0;
  double azimuth_deg = 0.0;
  double range_m = 0.0;
  double timestamp_us = 0.0;
};

inline CloudPoint make_point(double x, double y, double z, double intensity, int channel,
                             double timestamp_us = 0.0) {
  const Spherical s = cartesian_to_spherical(x, y, z);
  CloudPoint p;
  p.x = x;
  p.y = y;
  p.z = z;
  p.intensity = intensity;
  p.channel = channel;
  p.azimuth_deg = s.azimuth_deg;
  p.range_m = s.range_m;
  p.timestamp_us = timestamp_us;
  return p;
}

inline CloudPoint point_from_spherical(double range_m, double azimuth_deg, double elevation_deg,
                                       double intensity, int channel, double timestamp_us = 0.0) {
  const Vec3 v = spherical_to_cartesian({range_m, azimuth_deg, elevation_deg});
  CloudPoint p;
  p.x = v.x;
  p.y = v.y;
  p.z = v.z;
  p.intensity = intensity;
  p.channel = channel;
  p.azimuth_deg = normalize_azimuth_deg(azimuth_deg);
  p.range_m = range_m;
  p.timestamp_us = timestamp_us;
  return p;
}

struct Scan {
  std::vector<CloudPoint> points;
  std::string config_id;
  std::int64_t frame_id = 0;
};

/// Firing columns per degree of azimuth, counted over all channels.
inline double points_per_degree(const SensorConfig& c) {
  if (!(c.azimuth_resolution_deg > 0.0)) {
    throw domain_error("points_per_degree: azimuth resolution must be positive");
  }
  return c.channel_count / c.azimuth_resolution_deg;
}

/// Full-rotation scan with one return per channel per column. Ranges are
/// given per channel and must clear the unit's own threshold; timestamps
/// advance one firing cycle per column, one firing period per channel.
inline Scan synthesize_ring_scan(const SensorConfig& config, std::span<const double> range_by_channel,
                                 double intensity, std::int64_t frame_id = 0) {
  validate(config);
  if (static_cast<int>(range_by_channel.size()) != config.channel_count) {
    throw domain_error("synthesize_ring_scan: need one range per channel");
  }
  for (double r : range_by_channel) {
    if (!(r > config.internal_mot_m) || r > config.max_range_m) {
      throw domain_error("synthesize_ring_scan: range outside (internal_mot_m, max_range_m]");
    }
  }
  if (intensity < 0.0 || intensity > 1.0) {
    throw domain_error("synthesize_ring_scan: intensity outside [0, 1]");
  }

  Scan scan;
  scan.config_id = config.id;
  scan.frame_id = frame_id;
  const int columns = config.columns_per_rotation();
  scan.points.reserve(static_cast<std::size_t>(columns) * config.channel_count);
  for (int j = 0; j < columns; ++j) {
    const double az = j * config.azimuth_resolution_deg;
    const double t_col = j * config.firing_cycle_us;
    for (int ch = 0; ch < config.channel_count; ++ch) {
      scan.points.push_back(point_from_spherical(range_by_channel[ch], az,
                                                 config.vertical_angles_deg[ch], intensity, ch,
                                                 t_col + ch * config.firing_period_us));
    }
  }
  return scan;
}

inline Scan synthesize_ring_scan(const SensorConfig& config, double range_m, double intensity,
                                 std::int64_t frame_id = 0) {
  std::vector<double> ranges(static_cast<std::size_t>(config.channel_count), range_m);
  return synthesize_ring_scan(config, ranges, intensity, frame_id);
}

}  // namespace pra
