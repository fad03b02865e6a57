#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "pra/echo_pipeline.hpp"
#include "pra/error.hpp"
#include "pra/geometry.hpp"
#include "pra/sensor.hpp"

namespace pra {

enum class AttackMode {
  ideal,               ///< every firing in the sector is hit
  capability_limited,  ///< hardware budget caps how many firings are hit
};

/// Injection campaign against one scan: where to aim, how wide, and where
/// in range to park the spoofed echoes.
struct AttackSpec {
  double center_azimuth_deg = 0.0;
  double attack_angle_deg = 0.0;
  double spoof_range_m = 0.2;      ///< below the chain floor hides the injection
  double spoof_intensity = 1.0;    ///< saturating by default
  AttackMode mode = AttackMode::ideal;
  double spoofer_distance_m = 5.0; ///< spoofer-to-sensor distance, capability lookups
};

/// What the injection hardware can sustain: angular reach and, outdoors,
/// how the usable injection count falls off with distance and light.
struct CapabilityModel {
  double max_stable_angle_deg = 45.0;
  double removal_rate_points_per_deg = 80.0;
  /// (spoofer distance m, max injected points) samples, ascending distance.
  /// Linear interpolation between samples, clamped at the ends. Empty
  /// means unconstrained.
  std::vector<std::pair<double, double>> distance_capacity;
  double daylight_factor = 1.0;  ///< 1 = dark, <1 derates for ambient light

  double capacity_at(double distance_m) const {
    if (distance_capacity.empty()) return std::numeric_limits<double>::infinity();
    if (distance_m <= distance_capacity.front().first) return distance_capacity.front().second;
    if (distance_m >= distance_capacity.back().first) return distance_capacity.back().second;
    for (std::size_t i = 0; i + 1 < distance_capacity.size(); ++i) {
      const auto& [d0, c0] = distance_capacity[i];
      const auto& [d1, c1] = distance_capacity[i + 1];
      if (distance_m <= d1) {
        const double t = (distance_m - d0) / (d1 - d0);
        return c0 + t * (c1 - c0);
      }
    }
    return distance_capacity.back().second;
  }
};

inline void validate(const CapabilityModel& cap) {
  if (cap.max_stable_angle_deg < 0.0 || cap.removal_rate_points_per_deg < 0.0) {
    throw domain_error("CapabilityModel: rates must be non-negative");
  }
  if (cap.daylight_factor < 0.0 || cap.daylight_factor > 1.0) {
    throw domain_error("CapabilityModel: daylight_factor outside [0, 1]");
  }
  for (std::size_t i = 0; i + 1 < cap.distance_capacity.size(); ++i) {
    if (cap.distance_capacity[i].first >= cap.distance_capacity[i + 1].first) {
      throw domain_error("CapabilityModel: capacity samples must have ascending distances");
    }
  }
}

/// Azimuth interval the spec aims at. Zero width yields an empty interval.
inline AzimuthInterval attack_sector(const AttackSpec& spec) {
  if (spec.attack_angle_deg < 0.0) {
    throw domain_error("attack_sector: attack angle must be non-negative");
  }
  return AzimuthInterval::centered(spec.center_azimuth_deg, spec.attack_angle_deg);
}

/// Straight-line span between the two edge rays of a sector at distance d.
inline double chord_length(double distance_m, double angle_deg) {
  if (distance_m < 0.0 || angle_deg < 0.0 || angle_deg > 360.0) {
    throw domain_error("chord_length: need distance >= 0 and angle in [0, 360]");
  }
  return 2.0 * distance_m * std::sin(deg2rad(angle_deg) / 2.0);
}

/// Predicted removal count before any scan is touched: angular reach times
/// the per-degree firing density, capped by the distance budget.
inline double expected_removed_points(const CapabilityModel& cap, double attack_angle_deg,
                                      double spoofer_distance_m) {
  validate(cap);
  if (attack_angle_deg < 0.0) {
    throw domain_error("expected_removed_points: attack angle must be non-negative");
  }
  const double reach = std::min(attack_angle_deg, cap.max_stable_angle_deg);
  const double by_rate = cap.removal_rate_points_per_deg * reach;
  const double by_budget = cap.capacity_at(spoofer_distance_m) * cap.daylight_factor;
  return std::min(by_rate, by_budget);
}

/// Outcome bookkeeping for one synthesized attack. Indices refer to the
/// input scan's point order; injected points appear in the output scan.
struct AttackResult {
  std::vector<std::size_t> removed_point_ids;
  std::vector<CloudPoint> injected_points;
  /// Filled by callers that track per-target ground truth; one entry per
  /// tracked target, in [0, 100].
  std::vector<double> removal_percentages;
};

/// Runs the injection against every affected firing and pushes the result
/// through return selection and the chain's range floor. Unaffected points
/// pass through untouched, in order.
inline std::pair<Scan, AttackResult> synthesize(const Scan& scan, const AttackSpec& spec,
                                                const FilterChain& chain,
                                                const SaturationPolicy& policy = {},
                                                const CapabilityModel& cap = {},
                                                ReturnMode mode = ReturnMode::strongest) {
  validate(chain);
  validate(cap);
  if (spec.spoof_range_m <= 0.0) {
    throw domain_error("synthesize: spoof range must be positive");
  }
  const AzimuthInterval sector = attack_sector(spec);

  std::vector<std::size_t> affected;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    if (sector.contains(scan.points[i].azimuth_deg)) affected.push_back(i);
  }

  if (spec.mode == AttackMode::capability_limited) {
    const double budget_d = cap.capacity_at(spec.spoofer_distance_m) * cap.daylight_factor;
    std::size_t budget = std::isinf(budget_d)
                             ? affected.size()
                             : static_cast<std::size_t>(std::max(0.0, std::floor(budget_d)));
    // Consume firings from the sector center outward, deterministically.
    std::stable_sort(affected.begin(), affected.end(), [&](std::size_t a, std::size_t b) {
      const double oa = std::abs(sector.offset_from_center(scan.points[a].azimuth_deg));
      const double ob = std::abs(sector.offset_from_center(scan.points[b].azimuth_deg));
      if (oa != ob) return oa < ob;
      return a < b;
    });
    if (budget < affected.size()) affected.resize(budget);
    std::sort(affected.begin(), affected.end());
  }

  std::vector<bool> hit(scan.points.size(), false);
  for (std::size_t i : affected) hit[i] = true;

  const double floor_m = spoofing_region_width(chain);
  Scan out;
  out.config_id = scan.config_id;
  out.frame_id = scan.frame_id;
  out.points.reserve(scan.points.size());
  AttackResult result;

  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const CloudPoint& p = scan.points[i];
    if (!hit[i]) {
      if (p.range_m >= floor_m) {
        out.points.push_back(p);
      } else {
        result.removed_point_ids.push_back(i);  // the chain floor eats it regardless
      }
      continue;
    }

    EchoColumn column;
    column.channel = p.channel;
    column.azimuth_deg = p.azimuth_deg;
    column.echoes.push_back(Echo{p.range_m, p.intensity, false});
    column.echoes.push_back(Echo{spec.spoof_range_m, spec.spoof_intensity, true});

    bool genuine_survived = false;
    for (const Echo& e : select_returns(column, mode, policy)) {
      if (e.range_m < floor_m) continue;
      if (e.spoofed) {
        // The spoofed echo rides the same beam, so it keeps the firing's
        // direction and lands at the spoof range along it.
        const double scale = spec.spoof_range_m / p.range_m;
        CloudPoint sp = p;
        sp.x *= scale;
        sp.y *= scale;
        sp.z *= scale;
        sp.range_m = spec.spoof_range_m;
        sp.intensity = spec.spoof_intensity;
        out.points.push_back(sp);
        result.injected_points.push_back(sp);
      } else {
        out.points.push_back(p);
        genuine_survived = true;
      }
    }
    if (!genuine_survived) result.removed_point_ids.push_back(i);
  }
  return {std::move(out), std::move(result)};
}

namespace detail {

inline std::vector<double> target_azimuths(const Scan& scan, const Box3D& target) {
  std::vector<double> az;
  for (const CloudPoint& p : scan.points) {
    if (target.contains(p.x, p.y, p.z)) az.push_back(p.azimuth_deg);
  }
  return az;
}

}  // namespace detail

/// Smallest multiple of `step_deg` for a sector centered on the target
/// that covers every one of its points. A full-circle result means even
/// 360 degrees cannot cover them (never happens for one-sided targets).
inline double min_attack_angle(const Scan& scan, const Box3D& target, double step_deg = 1.0) {
  if (!(step_deg > 0.0)) {
    throw domain_error("min_attack_angle: step must be positive");
  }
  const std::vector<double> az = detail::target_azimuths(scan, target);
  if (az.empty()) {
    throw insufficient_data_error("min_attack_angle: target owns no points in this scan");
  }
  const AzimuthInterval span = smallest_enclosing_interval(az);
  const double center = span.center_deg();
  for (double angle = step_deg; angle < 360.0 + step_deg; angle += step_deg) {
    const AzimuthInterval sector = AzimuthInterval::centered(center, std::min(angle, 360.0));
    const bool covered = std::all_of(az.begin(), az.end(),
                                     [&](double a) { return sector.contains(a); });
    if (covered) return std::min(angle, 360.0);
  }
  return 360.0;
}

/// Share of the target's points that vanished between two scans of the
/// same frame, in percent.
inline double removal_percentage(const Scan& before, const Scan& after, const Box3D& target) {
  if (before.frame_id != after.frame_id) {
    throw domain_error("removal_percentage: scans belong to different frames");
  }
  const std::size_t n_before = detail::target_azimuths(before, target).size();
  if (n_before == 0) {
    throw insufficient_data_error("removal_percentage: target owns no points before the attack");
  }
  const std::size_t n_after = detail::target_azimuths(after, target).size();
  const std::size_t removed = n_before >= n_after ? n_before - n_after : 0;
  return 100.0 * static_cast<double>(removed) / static_cast<double>(n_before);
}

}  // namespace pra
