#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "pra/error.hpp"
#include "pra/geometry.hpp"
#include "pra/perception.hpp"
#include "pra/sensor.hpp"

namespace pra {

enum class DefenseMethod { azimuth_gap, fake_shadow };

/// One hole in the azimuth histogram: no returns between two circularly
/// consecutive observed azimuths.
struct AzimuthGap {
  double after_azimuth_deg = 0.0;  ///< last observed azimuth before the hole
  double extent_deg = 0.0;
};

struct AzimuthGapReport {
  std::vector<AzimuthGap> gaps;
  double gap_threshold_deg = 0.0;
  std::size_t azimuth_count = 0;
};

/// Ground-plane cells the laser never saw, grouped by adjacency.
struct ShadowRegion {
  std::vector<std::pair<int, int>> cells;  ///< (ix, iy) grid indices
  double volume_m3 = 0.0;
  AzimuthInterval azimuth;
  double near_range_m = 0.0;
  std::optional<std::size_t> associated_cluster;
};

struct ShadowReport {
  std::vector<ShadowRegion> regions;
  double total_volume_m3 = 0.0;
  double residual_volume_m3 = 0.0;  ///< volume no detected object accounts for
  double volume_threshold_m3 = 0.0;
  std::size_t cluster_count = 0;
};

struct DetectionVerdict {
  DefenseMethod method = DefenseMethod::azimuth_gap;
  bool is_attack = false;
  std::variant<AzimuthGapReport, ShadowReport> evidence;
};

/// Flags scans whose sorted azimuths hold a hole wider than the threshold.
/// With a span given, only returns inside it are considered and the span
/// edges themselves never count as holes; otherwise the full circle is
/// examined, wrap included.
inline DetectionVerdict azimuth_gap_detect(const Scan& scan, double gap_threshold_deg = 1.0,
                                           const std::optional<AzimuthInterval>& span = std::nullopt) {
  if (!(gap_threshold_deg > 0.0)) {
    throw domain_error("azimuth_gap_detect: threshold must be positive");
  }
  if (scan.points.empty()) {
    throw insufficient_data_error("azimuth_gap_detect: empty scan");
  }

  std::vector<double> az;
  az.reserve(scan.points.size());
  if (span) {
    for (const CloudPoint& p : scan.points) {
      if (span->contains(p.azimuth_deg)) {
        // Offsets from the span start order the points within the window.
        double off = std::fmod(p.azimuth_deg - span->start_deg, 360.0);
        if (off < 0.0) off += 360.0;
        az.push_back(off);
      }
    }
    if (az.empty()) {
      throw insufficient_data_error("azimuth_gap_detect: no returns inside the span");
    }
  } else {
    for (const CloudPoint& p : scan.points) az.push_back(p.azimuth_deg);
  }
  std::sort(az.begin(), az.end());

  AzimuthGapReport report;
  report.gap_threshold_deg = gap_threshold_deg;
  report.azimuth_count = az.size();

  auto emit = [&](double after_offset, double extent) {
    if (extent > gap_threshold_deg) {
      const double base = span ? normalize_azimuth_deg(span->start_deg + after_offset) : after_offset;
      report.gaps.push_back(AzimuthGap{base, extent});
    }
  };
  for (std::size_t i = 0; i + 1 < az.size(); ++i) emit(az[i], az[i + 1] - az[i]);
  if (!span) emit(az.back(), 360.0 - az.back() + az.front());

  DetectionVerdict verdict;
  verdict.method = DefenseMethod::azimuth_gap;
  verdict.is_attack = !report.gaps.empty();
  verdict.evidence = std::move(report);
  return verdict;
}

/// Tuning for ground-shadow extraction.
struct ShadowParams {
  double ground_z_m = -1.73;     ///< ground plane height in the sensor frame
  double ground_band_m = 0.30;   ///< |z - ground| within this counts as ground
  double cell_m = 0.2;
  double max_range_m = 70.0;
  double azimuth_bin_deg = 0.5;
  double height_band_m = 2.0;    ///< vertical extent credited to each cell
  std::optional<AzimuthInterval> span;  ///< restrict analysis, e.g. camera FOV
};

/// Cells with no return that the beams could not have reached: behind the
/// nearest elevated return of their azimuth bin, or in a bin with no
/// returns at all (an unexplained fully dark direction, treated as blocked
/// from the sensor outward).
inline std::vector<ShadowRegion> shadow_regions(const Scan& scan, const ShadowParams& params = {}) {
  if (!(params.cell_m > 0.0) || !(params.max_range_m > 0.0) || !(params.azimuth_bin_deg > 0.0)) {
    throw domain_error("shadow_regions: cell, range, and bin sizes must be positive");
  }
  if (scan.points.empty()) {
    throw insufficient_data_error("shadow_regions: empty scan");
  }

  bool any_ground = false;
  for (const CloudPoint& p : scan.points) {
    if (std::abs(p.z - params.ground_z_m) <= params.ground_band_m) {
      any_ground = true;
      break;
    }
  }
  if (!any_ground) {
    throw insufficient_data_error("shadow_regions: scan holds no ground returns");
  }

  const int n_bins = static_cast<int>(std::ceil(360.0 / params.azimuth_bin_deg));
  std::vector<double> occluder_range(n_bins, std::numeric_limits<double>::infinity());
  std::vector<bool> bin_has_return(n_bins, false);
  auto bin_of = [&](double az_deg) {
    int b = static_cast<int>(normalize_azimuth_deg(az_deg) / params.azimuth_bin_deg);
    return std::min(b, n_bins - 1);
  };

  const int half_cells = static_cast<int>(std::ceil(params.max_range_m / params.cell_m));
  auto cell_of = [&](double v) { return static_cast<int>(std::floor(v / params.cell_m)); };
  std::unordered_set<std::int64_t> occupied;
  auto cell_id = [&](int ix, int iy) {
    return (static_cast<std::int64_t>(ix) << 32) ^ (static_cast<std::int64_t>(iy) & 0xffffffffll);
  };

  for (const CloudPoint& p : scan.points) {
    const int b = bin_of(p.azimuth_deg);
    bin_has_return[b] = true;
    if (p.z > params.ground_z_m + params.ground_band_m) {
      const double r_xy = std::hypot(p.x, p.y);
      occluder_range[b] = std::min(occluder_range[b], r_xy);
    }
    const int ix = cell_of(p.x);
    const int iy = cell_of(p.y);
    if (ix >= -half_cells && ix < half_cells && iy >= -half_cells && iy < half_cells) {
      occupied.insert(cell_id(ix, iy));
    }
  }

  // Shadow cells, then 8-connected grouping.
  std::unordered_map<std::int64_t, std::pair<int, int>> shadow;
  for (int ix = -half_cells; ix < half_cells; ++ix) {
    for (int iy = -half_cells; iy < half_cells; ++iy) {
      const double cx = (ix + 0.5) * params.cell_m;
      const double cy = (iy + 0.5) * params.cell_m;
      const double r = std::hypot(cx, cy);
      if (r > params.max_range_m) continue;
      const double az = normalize_azimuth_deg(rad2deg(std::atan2(cy, cx)));
      if (params.span && !params.span->contains(az)) continue;
      if (occupied.count(cell_id(ix, iy))) continue;
      const int b = bin_of(az);
      const bool blocked = !bin_has_return[b] || occluder_range[b] < r;
      if (blocked) shadow.emplace(cell_id(ix, iy), std::pair<int, int>{ix, iy});
    }
  }

  std::vector<ShadowRegion> regions;
  std::unordered_set<std::int64_t> seen;
  for (const auto& [id, cell] : shadow) {
    if (seen.count(id)) continue;
    ShadowRegion region;
    std::deque<std::pair<int, int>> queue{cell};
    seen.insert(id);
    while (!queue.empty()) {
      const auto [ix, iy] = queue.front();
      queue.pop_front();
      region.cells.emplace_back(ix, iy);
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          if (dx == 0 && dy == 0) continue;
          const std::int64_t nid = cell_id(ix + dx, iy + dy);
          if (seen.count(nid) || !shadow.count(nid)) continue;
          seen.insert(nid);
          queue.push_back({ix + dx, iy + dy});
        }
      }
    }

    std::sort(region.cells.begin(), region.cells.end());
    region.volume_m3 =
        static_cast<double>(region.cells.size()) * params.cell_m * params.cell_m * params.height_band_m;
    std::vector<double> az;
    az.reserve(region.cells.size());
    region.near_range_m = std::numeric_limits<double>::infinity();
    for (const auto& [ix, iy] : region.cells) {
      const double cx = (ix + 0.5) * params.cell_m;
      const double cy = (iy + 0.5) * params.cell_m;
      az.push_back(normalize_azimuth_deg(rad2deg(std::atan2(cy, cx))));
      region.near_range_m = std::min(region.near_range_m, std::hypot(cx, cy));
    }
    region.azimuth = smallest_enclosing_interval(az);
    regions.push_back(std::move(region));
  }
  std::sort(regions.begin(), regions.end(), [](const ShadowRegion& a, const ShadowRegion& b) {
    return a.cells.front() < b.cells.front();
  });
  return regions;
}

namespace detail {

inline bool intervals_overlap(const AzimuthInterval& a, const AzimuthInterval& b) {
  double d = std::fmod(b.center_deg() - a.center_deg(), 360.0);
  if (d < -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return std::abs(d) <= (a.extent_deg + b.extent_deg) / 2.0;
}

struct ClusterView {
  AzimuthInterval azimuth;
  double near_range_m = 0.0;
};

inline ClusterView view_of(const Scan& scan, const Cluster& cluster) {
  std::vector<double> az;
  az.reserve(cluster.point_ids.size());
  ClusterView view;
  view.near_range_m = std::numeric_limits<double>::infinity();
  for (std::size_t i : cluster.point_ids) {
    const CloudPoint& p = scan.points[i];
    az.push_back(p.azimuth_deg);
    view.near_range_m = std::min(view.near_range_m, std::hypot(p.x, p.y));
  }
  view.azimuth = smallest_enclosing_interval(az);
  return view;
}

}  // namespace detail

struct AssociationResult {
  /// For each cluster, index of the matched shadow region, if any.
  std::vector<std::optional<std::size_t>> shadow_for_cluster;
  double rate = 0.0;  ///< matched clusters / clusters; 1 when there are none
};

/// Matches each cluster to a shadow region sitting behind it in the same
/// direction: overlapping azimuth intervals with the shadow's near edge no
/// closer than the cluster front.
inline AssociationResult object_shadow_associate(const Scan& scan, const std::vector<Cluster>& clusters,
                                                 const std::vector<ShadowRegion>& shadows) {
  AssociationResult out;
  out.shadow_for_cluster.resize(clusters.size());
  std::size_t matched = 0;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const detail::ClusterView view = detail::view_of(scan, clusters[c]);
    std::optional<std::size_t> best;
    double best_volume = -1.0;
    for (std::size_t s = 0; s < shadows.size(); ++s) {
      if (!detail::intervals_overlap(view.azimuth, shadows[s].azimuth)) continue;
      if (shadows[s].near_range_m + 1e-9 < view.near_range_m) continue;
      if (shadows[s].volume_m3 > best_volume) {
        best_volume = shadows[s].volume_m3;
        best = s;
      }
    }
    out.shadow_for_cluster[c] = best;
    if (best) ++matched;
  }
  out.rate = clusters.empty() ? 1.0 : static_cast<double>(matched) / static_cast<double>(clusters.size());
  return out;
}

struct FsdParams {
  ShadowParams shadow;
  double cluster_tolerance_m = 0.5;
  std::size_t cluster_min_points = 5;
  double volume_threshold_m3 = 15.0;
  double frustum_pad_deg = 0.5;  ///< widens each cluster's expected shadow
};

/// Compares found shadows against the shadows the detected objects would
/// cast. Shadow volume left over after removing every cluster-explained
/// cell must stay at or below the threshold; more means returns were
/// suppressed rather than blocked.
inline DetectionVerdict fake_shadow_detect(const Scan& scan, const FsdParams& params = {}) {
  std::vector<ShadowRegion> regions = shadow_regions(scan, params.shadow);

  // Clustering sees only points above the ground band. Ground returns would
  // otherwise glue into floor-wide rings whose frustums explain everything.
  Scan elevated;
  elevated.config_id = scan.config_id;
  elevated.frame_id = scan.frame_id;
  for (const CloudPoint& p : scan.points) {
    if (p.z > params.shadow.ground_z_m + params.shadow.ground_band_m) elevated.points.push_back(p);
  }
  const std::vector<Cluster> clusters =
      euclidean_cluster(elevated, params.cluster_tolerance_m, params.cluster_min_points);

  std::vector<detail::ClusterView> views;
  views.reserve(clusters.size());
  for (const Cluster& c : clusters) views.push_back(detail::view_of(elevated, c));

  const AssociationResult assoc = object_shadow_associate(elevated, clusters, regions);
  for (std::size_t c = 0; c < assoc.shadow_for_cluster.size(); ++c) {
    if (assoc.shadow_for_cluster[c]) {
      regions[*assoc.shadow_for_cluster[c]].associated_cluster = c;
    }
  }

  ShadowReport report;
  report.volume_threshold_m3 = params.volume_threshold_m3;
  report.cluster_count = clusters.size();

  const double cell_volume = params.shadow.cell_m * params.shadow.cell_m * params.shadow.height_band_m;
  double residual = 0.0;
  double total = 0.0;
  for (const ShadowRegion& region : regions) {
    total += region.volume_m3;
    for (const auto& [ix, iy] : region.cells) {
      const double cx = (ix + 0.5) * params.shadow.cell_m;
      const double cy = (iy + 0.5) * params.shadow.cell_m;
      const double r = std::hypot(cx, cy);
      const double az = rad2deg(std::atan2(cy, cx));
      bool explained = false;
      for (const detail::ClusterView& view : views) {
        if (r + 1e-9 < view.near_range_m) continue;
        double d = std::fmod(az - view.azimuth.center_deg(), 360.0);
        if (d < -180.0) d += 360.0;
        if (d > 180.0) d -= 360.0;
        if (std::abs(d) <= view.azimuth.extent_deg / 2.0 + params.frustum_pad_deg) {
          explained = true;
          break;
        }
      }
      if (!explained) residual += cell_volume;
    }
  }
  report.regions = std::move(regions);
  report.total_volume_m3 = total;
  report.residual_volume_m3 = residual;

  DetectionVerdict verdict;
  verdict.method = DefenseMethod::fake_shadow;
  verdict.is_attack = residual > params.volume_threshold_m3;
  verdict.evidence = std::move(report);
  return verdict;
}

using Detector = std::function<DetectionVerdict(const Scan&)>;

struct EvaluationStats {
  double tpr = 0.0;
  double tnr = 0.0;
  double mean_runtime_ms = 0.0;
  double p50_runtime_ms = 0.0;
  double p95_runtime_ms = 0.0;
  double max_runtime_ms = 0.0;
  std::size_t benign_count = 0;
  std::size_t attack_count = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

/// Runs a detector over labeled scene sets and reports rates plus
/// per-scene wall-clock statistics.
inline EvaluationStats evaluate(const Detector& detector, const std::vector<Scan>& benign,
                                const std::vector<Scan>& attacks) {
  if (benign.empty() || attacks.empty()) {
    throw insufficient_data_error("evaluate: both scene sets must be non-empty");
  }
  EvaluationStats stats;
  stats.benign_count = benign.size();
  stats.attack_count = attacks.size();

  std::vector<double> times;
  times.reserve(benign.size() + attacks.size());
  auto timed = [&](const Scan& scan) {
    const auto t0 = std::chrono::steady_clock::now();
    const DetectionVerdict v = detector(scan);
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    return v.is_attack;
  };

  for (const Scan& scan : benign) {
    if (timed(scan)) ++stats.false_positives;
  }
  for (const Scan& scan : attacks) {
    if (!timed(scan)) ++stats.false_negatives;
  }

  stats.tnr = 1.0 - static_cast<double>(stats.false_positives) / static_cast<double>(benign.size());
  stats.tpr = 1.0 - static_cast<double>(stats.false_negatives) / static_cast<double>(attacks.size());

  std::sort(times.begin(), times.end());
  double sum = 0.0;
  for (double t : times) sum += t;
  stats.mean_runtime_ms = sum / static_cast<double>(times.size());
  stats.p50_runtime_ms = times[times.size() / 2];
  stats.p95_runtime_ms = times[static_cast<std::size_t>(0.95 * static_cast<double>(times.size() - 1))];
  stats.max_runtime_ms = times.back();
  return stats;
}

}  // namespace pra
