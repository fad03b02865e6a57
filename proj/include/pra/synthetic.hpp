#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "pra/attack.hpp"
#include "pra/geometry.hpp"
#include "pra/sensor.hpp"

namespace pra {

struct SceneObject {
  Box3D box;
  double reflectivity = 0.6;
};

/// Recipe for a ray-cast scene: flat ground plus boxes standing on it.
struct SceneSpec {
  std::uint32_t seed = 1;
  int random_object_count = 0;  ///< used when `objects` is empty
  std::vector<SceneObject> objects;
  double ground_z_m = -1.73;
  double ground_reflectivity = 0.35;
  double dropout_rate = 0.0;  ///< per-return suppression probability
  bool include_ground = true;
  std::int64_t frame_id = 0;
};

namespace detail {

/// Range along a unit ray from the origin to the box, if it is hit.
inline std::optional<double> ray_box_range(const Box3D& box, const Vec3& dir) {
  const double c = std::cos(box.yaw_rad);
  const double s = std::sin(box.yaw_rad);
  // Ray in the box frame; origin moves to -center rotated by -yaw.
  const double ox = c * -box.center.x + s * -box.center.y;
  const double oy = -s * -box.center.x + c * -box.center.y;
  const double oz = -box.center.z;
  const double dx = c * dir.x + s * dir.y;
  const double dy = -s * dir.x + c * dir.y;
  const double dz = dir.z;

  double t_min = 0.0;
  double t_max = std::numeric_limits<double>::infinity();
  const double half[3] = {box.length_m / 2.0, box.width_m / 2.0, box.height_m / 2.0};
  const double o[3] = {ox, oy, oz};
  const double d[3] = {dx, dy, dz};
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(d[axis]) < 1e-12) {
      if (std::abs(o[axis]) > half[axis]) return std::nullopt;
      continue;
    }
    double t0 = (-half[axis] - o[axis]) / d[axis];
    double t1 = (half[axis] - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
    if (t_min > t_max) return std::nullopt;
  }
  if (t_min <= 0.0) return std::nullopt;  // origin inside or box behind
  return t_min;
}

}  // namespace detail

/// Spreads objects over disjoint azimuth slots at plausible street ranges,
/// alternating people-sized and vehicle-sized boxes.
inline std::vector<SceneObject> random_scene_objects(int count, std::uint32_t seed,
                                                     double ground_z_m = -1.73) {
  std::mt19937 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng()) / 4294967296.0);
  };
  std::vector<SceneObject> objects;
  objects.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double slot = 360.0 / std::max(1, count);
    const double az = deg2rad(i * slot + uniform(0.25, 0.75) * slot);
    const double dist = uniform(6.0, 28.0);
    SceneObject obj;
    if (i % 2 == 0) {
      obj.box.length_m = uniform(0.5, 0.8);
      obj.box.width_m = uniform(0.5, 0.8);
      obj.box.height_m = uniform(1.55, 1.72);
      obj.box.object_class = ObjectClass::pedestrian;
    } else {
      obj.box.length_m = uniform(3.8, 4.6);
      obj.box.width_m = uniform(1.6, 1.9);
      obj.box.height_m = uniform(1.35, 1.55);
      obj.box.object_class = ObjectClass::vehicle;
    }
    obj.box.center = Vec3{dist * std::cos(az), dist * std::sin(az), ground_z_m + obj.box.height_m / 2.0};
    obj.box.yaw_rad = uniform(0.0, 2.0 * kPi);
    obj.reflectivity = uniform(0.45, 0.8);
    objects.push_back(obj);
  }
  return objects;
}

/// Casts every configured beam against the scene and keeps the nearest hit
/// within range. Objects occlude the ground behind them, which is what
/// gives each standing box a shadow.
inline Scan synthesize_scene(const SensorConfig& config, const SceneSpec& spec) {
  validate(config);
  std::vector<SceneObject> objects = spec.objects;
  if (objects.empty() && spec.random_object_count > 0) {
    objects = random_scene_objects(spec.random_object_count, spec.seed, spec.ground_z_m);
  }

  std::mt19937 rng(spec.seed ^ 0x5bd1e995u);
  auto uniform01 = [&] { return static_cast<double>(rng()) / 4294967296.0; };

  Scan scan;
  scan.config_id = config.id;
  scan.frame_id = spec.frame_id;
  const int columns = config.columns_per_rotation();
  scan.points.reserve(static_cast<std::size_t>(columns) * config.channel_count / 2);

  for (int j = 0; j < columns; ++j) {
    const double az = j * config.azimuth_resolution_deg;
    const double t_col = j * config.firing_cycle_us;
    for (int ch = 0; ch < config.channel_count; ++ch) {
      const double el = config.vertical_angles_deg[ch];
      const Vec3 dir = spherical_to_cartesian({1.0, az, el});

      double best = std::numeric_limits<double>::infinity();
      double reflectivity = 0.0;
      for (const SceneObject& obj : objects) {
        const auto hit = detail::ray_box_range(obj.box, dir);
        if (hit && *hit < best) {
          best = *hit;
          reflectivity = obj.reflectivity;
        }
      }
      if (spec.include_ground && dir.z < -1e-12) {
        const double t_ground = spec.ground_z_m / dir.z;
        if (t_ground > 0.0 && t_ground < best) {
          best = t_ground;
          reflectivity = spec.ground_reflectivity;
        }
      }
      if (!std::isfinite(best)) continue;
      if (best > config.max_range_m || best <= config.internal_mot_m) continue;
      if (spec.dropout_rate > 0.0 && uniform01() < spec.dropout_rate) continue;

      scan.points.push_back(point_from_spherical(best, az, el, reflectivity, ch,
                                                 t_col + ch * config.firing_period_us));
    }
  }
  return scan;
}

/// Benign scene batch with varied layouts, one seed step per scene.
inline std::vector<Scan> synthesize_benign_scenes(const SensorConfig& config, int count,
                                                  std::uint32_t seed, int objects_per_scene = 4,
                                                  double dropout_rate = 0.02) {
  std::vector<Scan> scans;
  scans.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SceneSpec spec;
    spec.seed = seed + static_cast<std::uint32_t>(i) * 7919u;
    spec.random_object_count = objects_per_scene;
    spec.dropout_rate = dropout_rate;
    spec.frame_id = i;
    scans.push_back(synthesize_scene(config, spec));
  }
  return scans;
}

}  // namespace pra
