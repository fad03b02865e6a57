#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "pra/error.hpp"

namespace pra {

inline constexpr double kPi = std::numbers::pi;

/// Slop used when classifying azimuths against interval boundaries. Far
/// below any real angular resolution (>= 0.01 deg in practice), so it only
/// absorbs floating-point noise, never a genuine column.
inline constexpr double kAzimuthEps = 1e-9;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Maps any angle in degrees to [0, 360).
inline double normalize_azimuth_deg(double deg) {
  double a = std::fmod(deg, 360.0);
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a = 0.0;  // fmod can land exactly on 360 after the add
  return a;
}

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Range plus viewing direction of a point as seen from the sensor origin.
/// Azimuth is measured counterclockwise from +x in the xy plane, in
/// [0, 360); elevation is signed, in [-90, 90].
struct Spherical {
  double range_m = 0.0;
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
};

inline Spherical cartesian_to_spherical(double x, double y, double z) {
  const double range = std::sqrt(x * x + y * y + z * z);
  if (range <= 0.0) {
    throw domain_error("cartesian_to_spherical: zero-length vector has no direction");
  }
  Spherical s;
  s.range_m = range;
  s.azimuth_deg = normalize_azimuth_deg(rad2deg(std::atan2(y, x)));
  s.elevation_deg = rad2deg(std::asin(std::clamp(z / range, -1.0, 1.0)));
  return s;
}

inline Vec3 spherical_to_cartesian(const Spherical& s) {
  if (s.range_m < 0.0) {
    throw domain_error("spherical_to_cartesian: negative range");
  }
  const double az = deg2rad(s.azimuth_deg);
  const double el = deg2rad(s.elevation_deg);
  return Vec3{s.range_m * std::cos(el) * std::cos(az),
              s.range_m * std::cos(el) * std::sin(az),
              s.range_m * std::sin(el)};
}

/// Wrap-aware azimuth interval [start, start + extent), counterclockwise.
/// The half-open convention keeps column counts exact when boundaries land
/// on firing-grid azimuths; extent >= 360 means the full circle.
struct AzimuthInterval {
  double start_deg = 0.0;
  double extent_deg = 0.0;

  static AzimuthInterval centered(double center_deg, double extent_deg) {
    AzimuthInterval s;
    s.extent_deg = extent_deg;
    s.start_deg = normalize_azimuth_deg(center_deg - extent_deg / 2.0);
    return s;
  }

  bool empty() const { return extent_deg <= kAzimuthEps; }
  bool full() const { return extent_deg >= 360.0 - kAzimuthEps; }
  double center_deg() const {
    return normalize_azimuth_deg(start_deg + extent_deg / 2.0);
  }
  double end_deg() const { return normalize_azimuth_deg(start_deg + extent_deg); }

  bool contains(double azimuth_deg) const {
    if (full()) return true;
    if (empty()) return false;
    double off = std::fmod(azimuth_deg - start_deg, 360.0);
    if (off < 0.0) off += 360.0;
    if (off >= 360.0 - kAzimuthEps) off = 0.0;  // boundary hit from below
    return off < extent_deg - kAzimuthEps;
  }

  /// Signed angular offset of `azimuth_deg` from the interval center,
  /// in (-180, 180].
  double offset_from_center(double azimuth_deg) const {
    double off = std::fmod(azimuth_deg - center_deg(), 360.0);
    if (off <= -180.0) off += 360.0;
    if (off > 180.0) off -= 360.0;
    return off;
  }
};

/// Smallest interval covering every azimuth in `azimuths_deg`: complement
/// of the largest gap between circularly consecutive values. Exact for any
/// spread; a single azimuth yields a zero-extent interval anchored there.
inline AzimuthInterval smallest_enclosing_interval(std::span<const double> azimuths_deg) {
  if (azimuths_deg.empty()) {
    throw insufficient_data_error("smallest_enclosing_interval: no azimuths");
  }
  std::vector<double> az(azimuths_deg.begin(), azimuths_deg.end());
  for (double& a : az) a = normalize_azimuth_deg(a);
  std::sort(az.begin(), az.end());

  double best_gap = 360.0 - az.back() + az.front();
  std::size_t best_after = az.size() - 1;  // gap following this index
  for (std::size_t i = 0; i + 1 < az.size(); ++i) {
    const double gap = az[i + 1] - az[i];
    if (gap > best_gap) {
      best_gap = gap;
      best_after = i;
    }
  }
  AzimuthInterval out;
  out.start_deg = az[(best_after + 1) % az.size()];
  out.extent_deg = 360.0 - best_gap;
  return out;
}

/// Oriented box, sensor frame: x forward, y left, z up. Yaw rotates the
/// length axis counterclockwise about +z.
enum class ObjectClass { pedestrian, vehicle, other };

struct Box3D {
  Vec3 center;
  double length_m = 0.0;  ///< extent along the yaw axis
  double width_m = 0.0;
  double height_m = 0.0;
  double yaw_rad = 0.0;
  ObjectClass object_class = ObjectClass::other;

  /// Footprint corners in the xy plane, counterclockwise.
  std::array<std::array<double, 2>, 4> footprint() const {
    const double c = std::cos(yaw_rad);
    const double s = std::sin(yaw_rad);
    const double hl = length_m / 2.0;
    const double hw = width_m / 2.0;
    std::array<std::array<double, 2>, 4> out{};
    const std::array<std::array<double, 2>, 4> local{{{+hl, +hw}, {-hl, +hw}, {-hl, -hw}, {+hl, -hw}}};
    for (std::size_t i = 0; i < 4; ++i) {
      out[i] = {center.x + c * local[i][0] - s * local[i][1],
                center.y + s * local[i][0] + c * local[i][1]};
    }
    return out;
  }

  bool footprint_contains(double x, double y) const {
    const double c = std::cos(yaw_rad);
    const double s = std::sin(yaw_rad);
    const double dx = x - center.x;
    const double dy = y - center.y;
    const double lx = c * dx + s * dy;
    const double ly = -s * dx + c * dy;
    return std::abs(lx) <= length_m / 2.0 && std::abs(ly) <= width_m / 2.0;
  }

  bool contains(double x, double y, double z) const {
    return footprint_contains(x, y) && std::abs(z - center.z) <= height_m / 2.0;
  }

  std::array<Vec3, 8> corners() const {
    const auto fp = footprint();
    std::array<Vec3, 8> out{};
    for (std::size_t i = 0; i < 4; ++i) {
      out[i] = Vec3{fp[i][0], fp[i][1], center.z - height_m / 2.0};
      out[i + 4] = Vec3{fp[i][0], fp[i][1], center.z + height_m / 2.0};
    }
    return out;
  }
};

/// Azimuth interval subtended by the box footprint as seen from `origin`
/// (sensor position, xy only). Exact for convex footprints: the subtended
/// interval is spanned by corner directions.
inline AzimuthInterval angular_extent(const Box3D& box, const Vec3& origin = Vec3{}) {
  if (box.footprint_contains(origin.x, origin.y)) {
    throw domain_error("angular_extent: origin lies inside the box footprint");
  }
  std::array<double, 4> az{};
  const auto fp = box.footprint();
  for (std::size_t i = 0; i < 4; ++i) {
    az[i] = normalize_azimuth_deg(rad2deg(std::atan2(fp[i][1] - origin.y, fp[i][0] - origin.x)));
  }
  return smallest_enclosing_interval(az);
}

}  // namespace pra
