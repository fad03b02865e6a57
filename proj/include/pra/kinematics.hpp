#pragma once

#include <cmath>
#include <vector>

#include "pra/error.hpp"
#include "pra/geometry.hpp"

namespace pra {

/// Straight-road encounter: the vehicle starts at x = 0 heading +x, the
/// obstacle sits on the road ahead, the spoofer stands off to the side and
/// steers its sector at the vehicle once it is in reach.
struct ScenarioConfig {
  double v_max_mps = 8.889;  ///< 32 km/h
  /// Chosen so the default vehicle reaches v_max after 46 m.
  double accel_mps2 = 8.889 * 8.889 / (2.0 * 46.0);
  double decel_mps2 = 3.0;
  double obstacle_distance_m = 70.0;
  double attack_start_distance_m = 50.0;  ///< vehicle-to-obstacle distance arming the attack
  double attack_angle_deg = 0.0;
  Vec3 spoofer_position{70.0, -3.5, 0.0};
  Box3D obstacle;
  double stop_margin_m = 10.0;
};

inline ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.obstacle.center = Vec3{cfg.obstacle_distance_m, 0.0, -0.85};
  cfg.obstacle.length_m = 0.6;
  cfg.obstacle.width_m = 0.6;
  cfg.obstacle.height_m = 1.76;
  cfg.obstacle.object_class = ObjectClass::pedestrian;
  return cfg;
}

inline void validate(const ScenarioConfig& cfg) {
  if (!(cfg.v_max_mps > 0.0) || !(cfg.accel_mps2 > 0.0) || !(cfg.decel_mps2 > 0.0)) {
    throw domain_error("ScenarioConfig: speeds and accelerations must be positive");
  }
  if (!(cfg.obstacle_distance_m > 0.0)) {
    throw domain_error("ScenarioConfig: obstacle must lie ahead of the start");
  }
  if (cfg.stop_margin_m < 0.0 || cfg.stop_margin_m >= cfg.obstacle_distance_m) {
    throw domain_error("ScenarioConfig: stop margin must lie in [0, obstacle distance)");
  }
  if (cfg.attack_angle_deg < 0.0 || cfg.attack_start_distance_m < 0.0) {
    throw domain_error("ScenarioConfig: attack parameters must be non-negative");
  }
}

/// Closed form: braking from `speed` at `decel` needs v^2 / (2 a) meters;
/// impact happens iff the obstacle is nearer than that. Zero deceleration
/// with any motion always impacts.
inline bool collision_verdict(double speed_mps, double distance_m, double decel_mps2) {
  if (speed_mps < 0.0 || distance_m < 0.0 || decel_mps2 < 0.0) {
    throw domain_error("collision_verdict: arguments must be non-negative");
  }
  if (speed_mps == 0.0) return false;
  if (decel_mps2 == 0.0) return true;
  return distance_m < speed_mps * speed_mps / (2.0 * decel_mps2);
}

enum class OutcomeKind { stopped, collision };

struct Outcome {
  OutcomeKind kind = OutcomeKind::stopped;
  double time_s = 0.0;
  double position_m = 0.0;
  double impact_speed_mps = 0.0;  ///< zero for stops
};

struct TimelineSample {
  double t_s = 0.0;
  double position_m = 0.0;
  double speed_mps = 0.0;
  bool perceived = true;
};

struct Timeline {
  std::vector<TimelineSample> samples;
  Outcome outcome;
  double hidden_time_s = 0.0;
  double total_time_s = 0.0;
};

namespace detail {

/// True while the spoofer-steered sector swallows the obstacle whole.
inline bool obstacle_hidden(const ScenarioConfig& cfg, double x) {
  if (cfg.attack_angle_deg <= 0.0) return false;
  if (cfg.obstacle_distance_m - x > cfg.attack_start_distance_m) return false;
  if (cfg.attack_angle_deg >= 360.0) return true;
  // At the obstacle's footprint the subtended angle diverges; nothing
  // short of the full circle can cover it.
  if (x >= cfg.obstacle.center.x - cfg.obstacle.length_m / 2.0) return false;

  const Vec3 eye{x, 0.0, 0.0};
  const AzimuthInterval extent = angular_extent(cfg.obstacle, eye);
  const double sector_center =
      rad2deg(std::atan2(cfg.spoofer_position.y - eye.y, cfg.spoofer_position.x - eye.x));
  double d = std::fmod(extent.center_deg() - normalize_azimuth_deg(sector_center), 360.0);
  if (d < -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return std::abs(d) + extent.extent_deg / 2.0 <= cfg.attack_angle_deg / 2.0;
}

struct StepOutcome {
  double x = 0.0;
  double v = 0.0;
  bool crossed = false;
  double cross_speed = 0.0;
  double cross_dt = 0.0;
};

/// Advances one step of constant commanded acceleration with exact
/// handling of the speed clamps and of a crossing of `x_cross`.
inline StepOutcome advance(double x, double v, double accel, double dt, double v_cap, double x_cross) {
  StepOutcome out;
  double elapsed = 0.0;
  double remaining = dt;
  while (remaining > 0.0) {
    double a = accel;
    if (a > 0.0 && v >= v_cap) a = 0.0;
    if (a < 0.0 && v <= 0.0) {
      v = 0.0;
      break;  // at rest; decelerating holds it there
    }
    double t_seg = remaining;
    if (a > 0.0) t_seg = std::min(t_seg, (v_cap - v) / a);
    if (a < 0.0) t_seg = std::min(t_seg, v / -a);

    const double dist_to_cross = x_cross - x;
    const double seg_end_x = x + v * t_seg + 0.5 * a * t_seg * t_seg;
    if (seg_end_x >= x_cross && (v > 0.0 || a > 0.0) && dist_to_cross >= 0.0) {
      const double disc = std::max(0.0, v * v + 2.0 * a * dist_to_cross);
      const double t_star = a == 0.0 ? dist_to_cross / v : (-v + std::sqrt(disc)) / a;
      out.crossed = true;
      out.cross_speed = std::sqrt(disc);
      out.cross_dt = elapsed + std::max(0.0, t_star);
      x = x_cross;
      v = out.cross_speed;
      break;
    }

    x = seg_end_x;
    v += a * t_seg;
    if (a > 0.0 && t_seg < remaining) v = v_cap;  // hit the cap exactly
    if (a < 0.0 && v < 1e-15) v = 0.0;
    elapsed += t_seg;
    remaining -= t_seg;
    if (a == 0.0 && v == 0.0) break;  // nothing further can change
  }
  out.x = x;
  out.v = v;
  return out;
}

}  // namespace detail

/// Integrates the encounter at a fixed step. The vehicle tracks its target
/// speed while the obstacle is unseen, and brakes toward a stop point one
/// margin short of the obstacle the moment seeing it demands braking.
inline Timeline simulate(const ScenarioConfig& cfg, double dt = 0.01) {
  validate(cfg);
  if (!(dt > 0.0)) throw domain_error("simulate: dt must be positive");

  Timeline timeline;
  double x = 0.0;
  double v = 0.0;
  double t = 0.0;
  const double stop_target = cfg.obstacle_distance_m - cfg.stop_margin_m;
  const double t_limit = 3600.0;

  while (t < t_limit) {
    const bool hidden = detail::obstacle_hidden(cfg, x);
    const bool perceived = !hidden;

    bool braking = false;
    double a;
    if (perceived) {
      const double dist_stop = stop_target - x;
      braking = v > 0.0 && v * v / (2.0 * cfg.decel_mps2) >= dist_stop - 1e-12;
      a = braking ? -cfg.decel_mps2 : (v < cfg.v_max_mps ? cfg.accel_mps2 : 0.0);
    } else {
      a = v < cfg.v_max_mps ? cfg.accel_mps2 : 0.0;
    }

    timeline.samples.push_back(TimelineSample{t, x, v, perceived});
    if (hidden) timeline.hidden_time_s += dt;

    const detail::StepOutcome step =
        detail::advance(x, v, a, dt, cfg.v_max_mps, cfg.obstacle_distance_m);
    if (step.crossed) {
      timeline.outcome = Outcome{OutcomeKind::collision, t + step.cross_dt, cfg.obstacle_distance_m,
                                 step.cross_speed};
      timeline.total_time_s = t + step.cross_dt;
      return timeline;
    }
    x = step.x;
    v = step.v;
    t += dt;

    if (v == 0.0 && perceived && braking) {
      timeline.outcome = Outcome{OutcomeKind::stopped, t, x, 0.0};
      timeline.total_time_s = t;
      return timeline;
    }
  }
  throw domain_error("simulate: scenario did not terminate within the time limit");
}

/// Fraction of the route time the obstacle stays hidden.
inline double removal_window(const ScenarioConfig& cfg, double dt = 0.01) {
  const Timeline timeline = simulate(cfg, dt);
  if (timeline.total_time_s <= 0.0) return 0.0;
  return timeline.hidden_time_s / timeline.total_time_s;
}

}  // namespace pra
