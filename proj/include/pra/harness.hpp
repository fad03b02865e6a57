#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pra/attack.hpp"
#include "pra/config.hpp"
#include "pra/defense.hpp"
#include "pra/error.hpp"
#include "pra/io.hpp"
#include "pra/kinematics.hpp"
#include "pra/laser_safety.hpp"
#include "pra/synthetic.hpp"

namespace pra {

/// Tabular result of one command run, with enough provenance to tell two
/// runs apart: a digest of the effective configuration and the inputs
/// consumed. Serialization is deterministic; runtime fields are the only
/// values expected to move between otherwise identical runs.
struct Report {
  std::string id;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> summary;  ///< "key: value" lines
  std::vector<std::string> notes;
  std::string config_digest;
  std::vector<std::string> inputs;
};

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const char c : text) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string digest_hex(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

inline std::string to_csv(const Report& report) {
  std::string out;
  for (std::size_t i = 0; i < report.columns.size(); ++i) {
    if (i) out.push_back(',');
    out.append(report.columns[i]);
  }
  out.push_back('\n');
  for (const auto& row : report.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out.push_back(',');
      out.append(row[i]);
    }
    out.push_back('\n');
  }
  return out;
}

inline std::string to_summary_text(const Report& report) {
  std::string out;
  out.append("report: ").append(report.id).push_back('\n');
  out.append("config_digest: ").append(report.config_digest).push_back('\n');
  for (const std::string& input : report.inputs) {
    out.append("input: ").append(input).push_back('\n');
  }
  out.append("rows: ").append(std::to_string(report.rows.size())).push_back('\n');
  for (const std::string& line : report.summary) {
    out.append(line).push_back('\n');
  }
  for (const std::string& note : report.notes) {
    out.append("note: ").append(note).push_back('\n');
  }
  return out;
}

/// Runs fn(0..n-1) on up to `workers` threads. Results must be written to
/// pre-sized slots; the first worker exception is rethrown after join.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const int thread_count = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(workers)));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(thread_count));
  for (int t = 0; t < thread_count; ++t) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) break;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline std::string fmt(double v) { return detail::format_double(v); }

/// One scene of a campaign: the cloud plus its annotated target boxes.
struct SceneRecord {
  std::string id;
  Scan scan;
  std::vector<Box3D> targets;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw error("cannot open file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw error("cannot write file: " + path.string());
  }
  out << content;
}

/// Scene ids present in a dataset directory laid out as velodyne/<id>.bin
/// with matching label_2/<id>.txt and calib/<id>.txt files.
inline std::vector<std::string> list_dataset_ids(const std::filesystem::path& dataset_dir) {
  const std::filesystem::path cloud_dir = dataset_dir / "velodyne";
  if (!std::filesystem::is_directory(cloud_dir)) {
    throw error("dataset has no velodyne/ directory: " + dataset_dir.string());
  }
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(cloud_dir)) {
    if (entry.path().extension() == ".bin") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline SceneRecord load_dataset_scene(const std::filesystem::path& dataset_dir, const std::string& id,
                                      const SensorConfig& config) {
  SceneRecord record;
  record.id = id;
  record.scan = read_pointcloud_bin(read_file(dataset_dir / "velodyne" / (id + ".bin")), config);
  const std::filesystem::path label_path = dataset_dir / "label_2" / (id + ".txt");
  const std::filesystem::path calib_path = dataset_dir / "calib" / (id + ".txt");
  if (std::filesystem::exists(label_path) && std::filesystem::exists(calib_path)) {
    const Calibration cal = parse_calibration(read_file(calib_path));
    for (const LabelRecord& rec : read_labels(read_file(label_path))) {
      if (rec.targetable()) record.targets.push_back(label_to_lidar_box(rec, cal));
    }
  }
  return record;
}

/// Synthetic campaign scenes: ray-cast street scenes whose generated boxes
/// double as the annotations.
inline std::vector<SceneRecord> synthetic_scene_records(const SensorConfig& config, int count,
                                                        std::uint32_t seed) {
  std::vector<SceneRecord> records;
  records.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    SceneSpec spec;
    spec.seed = seed + static_cast<std::uint32_t>(i) * 7919u;
    spec.random_object_count = 4;
    spec.dropout_rate = 0.02;
    spec.frame_id = i;
    SceneRecord record;
    record.id = "synthetic-" + std::to_string(i);
    const std::vector<SceneObject> objects =
        random_scene_objects(spec.random_object_count, spec.seed, spec.ground_z_m);
    spec.objects = objects;
    record.scan = synthesize_scene(config, spec);
    for (const SceneObject& obj : objects) record.targets.push_back(obj.box);
    records.push_back(std::move(record));
  }
  return records;
}

inline const char* to_string(ObjectClass c) {
  switch (c) {
    case ObjectClass::pedestrian: return "pedestrian";
    case ObjectClass::vehicle: return "vehicle";
    case ObjectClass::other: return "other";
  }
  return "?";
}

/// Sector sweep on a uniform full-stack ring: per angle, the points the
/// attack removes versus the capability prediction.
inline Report run_capability(const SensorConfig& config, const FilterChain& chain,
                             const CapabilityModel& capability, const AttackSpec& base_spec,
                             const std::vector<double>& angles_deg, double ring_range_m = 10.0) {
  Report report;
  report.id = "capability";
  report.columns = {"attack_angle_deg", "chord_m",        "expected_points",
                    "removed_points",   "injected_points", "surviving_points"};
  const Scan ring = synthesize_ring_scan(config, ring_range_m, 0.5);
  for (const double angle : angles_deg) {
    AttackSpec spec = base_spec;
    spec.attack_angle_deg = angle;
    const auto [after, result] = synthesize(ring, spec, chain, SaturationPolicy{}, capability);
    report.rows.push_back({fmt(angle), fmt(chord_length(ring_range_m, std::min(angle, 360.0))),
                           fmt(expected_removed_points(capability, angle, spec.spoofer_distance_m)),
                           std::to_string(result.removed_point_ids.size()),
                           std::to_string(result.injected_points.size()),
                           std::to_string(after.points.size())});
  }
  report.summary.push_back("points_per_degree: " + fmt(points_per_degree(config)));
  report.summary.push_back("spoofing_region_width_m: " + fmt(spoofing_region_width(chain)));
  report.summary.push_back("ring_range_m: " + fmt(ring_range_m));
  report.summary.push_back("ring_points: " + std::to_string(ring.points.size()));
  return report;
}

/// Minimum covering angle per annotated target across a scene set, with a
/// verification attack at the found angle.
inline Report run_attack_campaign(const CampaignConfig& campaign,
                                  const std::vector<SceneRecord>& scenes, int workers = 1) {
  Report report;
  report.id = "attack";
  report.columns = {"scene",        "target", "class",           "distance_m",
                    "extent_deg",   "points", "min_angle_deg",   "removal_pct_at_min",
                    "removed_points"};

  struct TargetRow {
    std::vector<std::string> cells;
    ObjectClass object_class = ObjectClass::other;
    double min_angle_deg = 0.0;
    bool ok = false;
    std::string note;
  };

  std::vector<std::vector<TargetRow>> per_scene(scenes.size());
  parallel_for(scenes.size(), workers, [&](std::size_t s) {
    const SceneRecord& scene = scenes[s];
    for (std::size_t t = 0; t < scene.targets.size(); ++t) {
      const Box3D& target = scene.targets[t];
      const std::string klass = to_string(target.object_class);
      if (campaign.target_class != "any" && campaign.target_class != klass) continue;
      TargetRow row;
      row.object_class = target.object_class;
      try {
        const double distance = std::hypot(target.center.x, target.center.y);
        const AzimuthInterval extent = angular_extent(target);
        const std::vector<double> target_az = detail::target_azimuths(scene.scan, target);
        const double min_angle = min_attack_angle(scene.scan, target, campaign.angle_step_deg);

        AttackSpec spec = campaign.attack;
        spec.attack_angle_deg = min_angle;
        spec.center_azimuth_deg = smallest_enclosing_interval(target_az).center_deg();
        const auto [after, result] =
            synthesize(scene.scan, spec, campaign.chain, SaturationPolicy{}, campaign.capability,
                       campaign.return_mode);
        const double rp = removal_percentage(scene.scan, after, target);

        row.cells = {scene.id,
                     std::to_string(t),
                     klass,
                     fmt(distance),
                     fmt(extent.extent_deg),
                     std::to_string(target_az.size()),
                     fmt(min_angle),
                     fmt(rp),
                     std::to_string(result.removed_point_ids.size())};
        row.min_angle_deg = min_angle;
        row.ok = true;
      } catch (const error& e) {
        row.note = "scene " + scene.id + " target " + std::to_string(t) + ": " + e.what();
      }
      per_scene[s].push_back(std::move(row));
    }
  });

  double sum_ped = 0.0, sum_veh = 0.0;
  std::size_t n_ped = 0, n_veh = 0;
  for (const auto& rows : per_scene) {
    for (const TargetRow& row : rows) {
      if (!row.ok) {
        report.notes.push_back(row.note);
        continue;
      }
      report.rows.push_back(row.cells);
      if (row.object_class == ObjectClass::pedestrian) {
        sum_ped += row.min_angle_deg;
        ++n_ped;
      } else if (row.object_class == ObjectClass::vehicle) {
        sum_veh += row.min_angle_deg;
        ++n_veh;
      }
    }
  }
  report.summary.push_back("targets: " + std::to_string(report.rows.size()));
  if (n_ped > 0) {
    report.summary.push_back("mean_min_angle_pedestrian_deg: " + fmt(sum_ped / static_cast<double>(n_ped)));
  }
  if (n_veh > 0) {
    report.summary.push_back("mean_min_angle_vehicle_deg: " + fmt(sum_veh / static_cast<double>(n_veh)));
  }
  return report;
}

/// Detector scorecard over labeled benign and attacked scene sets.
inline Report run_defense(DefenseMethod method, const Detector& detector,
                          const std::vector<Scan>& benign, const std::vector<Scan>& attacks) {
  Report report;
  report.id = "defend";
  report.columns = {"method", "benign_scenes", "attack_scenes", "tpr",   "tnr",
                    "false_positives", "false_negatives", "mean_ms", "p50_ms", "p95_ms"};
  const EvaluationStats stats = evaluate(detector, benign, attacks);
  const char* name = method == DefenseMethod::azimuth_gap ? "azimuth-gap" : "fake-shadow";
  report.rows.push_back({name, std::to_string(stats.benign_count), std::to_string(stats.attack_count),
                         fmt(stats.tpr), fmt(stats.tnr), std::to_string(stats.false_positives),
                         std::to_string(stats.false_negatives), fmt(stats.mean_runtime_ms),
                         fmt(stats.p50_runtime_ms), fmt(stats.p95_runtime_ms)});
  report.summary.push_back(std::string("method: ") + name);
  report.summary.push_back("tpr: " + fmt(stats.tpr));
  report.summary.push_back("tnr: " + fmt(stats.tnr));
  report.summary.push_back("mean_runtime_ms: " + fmt(stats.mean_runtime_ms));
  report.notes.push_back("runtime columns vary between runs; all other fields are deterministic");
  return report;
}

/// Simulates every scenario in the grid and checks each outcome against
/// the closed-form verdict taken at the moment the obstacle reappears.
inline Report run_simulation(const std::vector<ScenarioConfig>& scenarios, double dt = 0.01) {
  Report report;
  report.id = "simulate";
  report.columns = {"scenario",       "attack_angle_deg", "start_distance_m", "lateral_m",
                    "outcome",        "impact_speed_mps", "final_position_m", "total_time_s",
                    "hidden_fraction", "closed_form_match"};
  std::size_t collisions = 0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const ScenarioConfig& cfg = scenarios[i];
    const Timeline timeline = simulate(cfg, dt);
    const bool collided = timeline.outcome.kind == OutcomeKind::collision;
    if (collided) ++collisions;

    // Reappearance instant: the first seen sample after a hidden one.
    std::string match = "na";
    for (std::size_t k = 1; k < timeline.samples.size(); ++k) {
      if (!timeline.samples[k - 1].perceived && timeline.samples[k].perceived) {
        const TimelineSample& sample = timeline.samples[k];
        const bool verdict = collision_verdict(
            sample.speed_mps, cfg.obstacle_distance_m - sample.position_m, cfg.decel_mps2);
        match = verdict == collided ? "yes" : "no";
        break;
      }
    }

    const double fraction =
        timeline.total_time_s > 0.0 ? timeline.hidden_time_s / timeline.total_time_s : 0.0;
    report.rows.push_back({std::to_string(i), fmt(cfg.attack_angle_deg),
                           fmt(cfg.attack_start_distance_m), fmt(cfg.obstacle.center.y),
                           collided ? "collision" : "stopped", fmt(timeline.outcome.impact_speed_mps),
                           fmt(timeline.outcome.position_m), fmt(timeline.total_time_s), fmt(fraction),
                           match});
  }
  report.summary.push_back("scenarios: " + std::to_string(scenarios.size()));
  report.summary.push_back("collisions: " + std::to_string(collisions));
  return report;
}

/// Energy and exposure-limit arithmetic for one emitter setting.
inline Report run_safety(const LaserParams& params) {
  Report report;
  report.id = "safety";
  report.columns = {"quantity", "value", "unit"};
  const SafetyReport s = safety_report(params);
  report.rows.push_back({"peak_power", fmt(params.peak_power_w), "W"});
  report.rows.push_back({"pulse_width", fmt(params.pulse_width_s), "s"});
  report.rows.push_back({"wavelength", fmt(params.wavelength_nm), "nm"});
  report.rows.push_back({"exposure_time", fmt(params.exposure_time_s), "s"});
  report.rows.push_back({"pulses_per_exposure", std::to_string(params.pulses_per_exposure), "1"});
  report.rows.push_back({"pulse_energy", fmt(s.pulse_energy_j), "J"});
  report.rows.push_back({"exposure_energy", fmt(s.exposure_energy_j), "J"});
  report.rows.push_back({"mpe", fmt(s.mpe_j_per_m2), "J/m^2"});
  report.rows.push_back({"mpe_without_wavelength_factor", fmt(s.mpe_no_wavelength_factor_j_per_m2),
                         "J/m^2"});
  report.rows.push_back({"min_area_single_pulse", fmt(s.min_area_single_pulse_m2), "m^2"});
  report.rows.push_back({"min_area_exposure", fmt(s.min_area_exposure_m2), "m^2"});
  report.summary.push_back("pulse_energy_j: " + fmt(s.pulse_energy_j));
  report.summary.push_back("mpe_j_per_m2: " + fmt(s.mpe_j_per_m2));
  for (const std::string& note : s.footnotes) report.notes.push_back(note);
  return report;
}

}  // namespace pra
