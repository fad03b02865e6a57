#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pra/attack.hpp"
#include "pra/echo_pipeline.hpp"
#include "pra/error.hpp"
#include "pra/kinematics.hpp"
#include "pra/sensor.hpp"

namespace pra {

namespace detail {

inline nlohmann::json parse_json(const std::string& text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw format_error(std::string(what) + ": " + e.what(), e.byte);
  }
}

}  // namespace detail

/// Sensor description from JSON. Either names a preset, optionally
/// overriding fields, or spells out every field. Keys match the struct.
inline SensorConfig load_sensor_config(const std::string& json_text) {
  const nlohmann::json j = detail::parse_json(json_text, "load_sensor_config");
  SensorConfig c;
  if (j.contains("preset")) {
    c = sensor_preset(j.at("preset").get<std::string>());
  }
  try {
    if (j.contains("id")) c.id = j.at("id").get<std::string>();
    if (j.contains("channel_count")) c.channel_count = j.at("channel_count").get<int>();
    if (j.contains("vertical_angles_deg")) {
      c.vertical_angles_deg = j.at("vertical_angles_deg").get<std::vector<double>>();
    }
    if (j.contains("azimuth_resolution_deg")) {
      c.azimuth_resolution_deg = j.at("azimuth_resolution_deg").get<double>();
    }
    if (j.contains("rotation_period_ms")) c.rotation_period_ms = j.at("rotation_period_ms").get<double>();
    if (j.contains("firing_cycle_us")) c.firing_cycle_us = j.at("firing_cycle_us").get<double>();
    if (j.contains("firing_period_us")) c.firing_period_us = j.at("firing_period_us").get<double>();
    if (j.contains("receive_window_ns")) c.receive_window_ns = j.at("receive_window_ns").get<double>();
    if (j.contains("max_range_m")) c.max_range_m = j.at("max_range_m").get<double>();
    if (j.contains("internal_mot_m")) c.internal_mot_m = j.at("internal_mot_m").get<double>();
    if (j.contains("recommended_mot_m")) c.recommended_mot_m = j.at("recommended_mot_m").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("load_sensor_config: ") + e.what());
  }
  validate(c);
  return c;
}

/// Filter chain from JSON: a preset name or explicit thresholds, plus an
/// optional region of interest with [lo, hi] pairs per axis.
inline FilterChain load_filter_chain(const std::string& json_text) {
  const nlohmann::json j = detail::parse_json(json_text, "load_filter_chain");
  FilterChain c;
  try {
    if (j.contains("preset")) c = filter_chain_preset(j.at("preset").get<std::string>());
    if (j.contains("id")) c.id = j.at("id").get<std::string>();
    if (j.contains("sensor_mot_m")) c.sensor_mot_m = j.at("sensor_mot_m").get<double>();
    if (j.contains("middleware_mot_m")) c.middleware_mot_m = j.at("middleware_mot_m").get<double>();
    if (j.contains("framework_mot_m")) c.framework_mot_m = j.at("framework_mot_m").get<double>();
    if (j.contains("roi")) {
      Roi roi;
      const auto& jr = j.at("roi");
      auto read_axis = [&](const char* axis) -> std::optional<Roi::Bounds> {
        if (!jr.contains(axis)) return std::nullopt;
        const auto arr = jr.at(axis).get<std::vector<double>>();
        if (arr.size() != 2) {
          throw format_error(std::string("load_filter_chain: roi.") + axis + " needs [lo, hi]");
        }
        return Roi::Bounds{arr[0], arr[1]};
      };
      roi.x = read_axis("x");
      roi.y = read_axis("y");
      roi.z = read_axis("z");
      c.roi = roi;
    }
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("load_filter_chain: ") + e.what());
  }
  validate(c);
  return c;
}

/// Capacity curve from CSV: optional "distance_m,max_points" header, then
/// one ascending-distance sample per line.
inline std::vector<std::pair<double, double>> load_capacity_csv(const std::string& text) {
  std::vector<std::pair<double, double>> samples;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string line = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    start = end == std::string::npos ? text.size() + 1 : end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.find("distance") != std::string::npos) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw format_error("load_capacity_csv: line " + std::to_string(line_no) + " has no comma",
                         line_no);
    }
    try {
      std::size_t used = 0;
      const double d = std::stod(line.substr(0, comma), &used);
      const double p = std::stod(line.substr(comma + 1), &used);
      samples.emplace_back(d, p);
    } catch (const std::exception&) {
      throw format_error("load_capacity_csv: line " + std::to_string(line_no) + " is not numeric",
                         line_no);
    }
  }
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    if (samples[i].first >= samples[i + 1].first) {
      throw format_error("load_capacity_csv: distances must ascend", i + 2);
    }
  }
  return samples;
}

inline ReturnMode return_mode_from_string(const std::string& name) {
  if (name == "strongest") return ReturnMode::strongest;
  if (name == "last") return ReturnMode::last;
  if (name == "dual") return ReturnMode::dual;
  throw domain_error("return_mode_from_string: unknown mode '" + name + "'");
}

/// Attack campaign over a scene set.
struct CampaignConfig {
  std::vector<std::string> scene_ids;  ///< empty = every scene the provider has
  int synthetic_scene_count = 0;       ///< used when no dataset is given
  std::string target_class = "any";    ///< pedestrian, vehicle, or any
  FilterChain chain = filter_chain_preset("vlp16-apollo");
  AttackSpec attack;
  CapabilityModel capability;
  ReturnMode return_mode = ReturnMode::strongest;
  double angle_step_deg = 1.0;
  double max_angle_deg = 45.0;
};

inline CampaignConfig load_campaign(const std::string& json_text) {
  const nlohmann::json j = detail::parse_json(json_text, "load_campaign");
  CampaignConfig cfg;
  try {
    if (j.contains("scenes")) cfg.scene_ids = j.at("scenes").get<std::vector<std::string>>();
    if (j.contains("synthetic_scene_count")) {
      cfg.synthetic_scene_count = j.at("synthetic_scene_count").get<int>();
    }
    if (j.contains("target_class")) cfg.target_class = j.at("target_class").get<std::string>();
    if (j.contains("chain")) cfg.chain = load_filter_chain(j.at("chain").dump());
    if (j.contains("spoof_range_m")) cfg.attack.spoof_range_m = j.at("spoof_range_m").get<double>();
    if (j.contains("spoof_intensity")) {
      cfg.attack.spoof_intensity = j.at("spoof_intensity").get<double>();
    }
    if (j.contains("mode")) {
      const std::string mode = j.at("mode").get<std::string>();
      if (mode == "ideal") {
        cfg.attack.mode = AttackMode::ideal;
      } else if (mode == "capability-limited") {
        cfg.attack.mode = AttackMode::capability_limited;
      } else {
        throw format_error("load_campaign: unknown mode '" + mode + "'");
      }
    }
    if (j.contains("spoofer_distance_m")) {
      cfg.attack.spoofer_distance_m = j.at("spoofer_distance_m").get<double>();
    }
    if (j.contains("return_mode")) {
      cfg.return_mode = return_mode_from_string(j.at("return_mode").get<std::string>());
    }
    if (j.contains("angle_step_deg")) cfg.angle_step_deg = j.at("angle_step_deg").get<double>();
    if (j.contains("max_angle_deg")) cfg.max_angle_deg = j.at("max_angle_deg").get<double>();
    if (j.contains("capability")) {
      const auto& jc = j.at("capability");
      if (jc.contains("max_stable_angle_deg")) {
        cfg.capability.max_stable_angle_deg = jc.at("max_stable_angle_deg").get<double>();
      }
      if (jc.contains("removal_rate_points_per_deg")) {
        cfg.capability.removal_rate_points_per_deg =
            jc.at("removal_rate_points_per_deg").get<double>();
      }
      if (jc.contains("daylight_factor")) {
        cfg.capability.daylight_factor = jc.at("daylight_factor").get<double>();
      }
      if (jc.contains("distance_capacity")) {
        for (const auto& pair : jc.at("distance_capacity")) {
          cfg.capability.distance_capacity.emplace_back(pair.at(0).get<double>(),
                                                        pair.at(1).get<double>());
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("load_campaign: ") + e.what());
  }
  if (cfg.target_class != "any" && cfg.target_class != "pedestrian" && cfg.target_class != "vehicle") {
    throw format_error("load_campaign: target_class must be pedestrian, vehicle, or any");
  }
  validate(cfg.capability);
  return cfg;
}

/// Cross product of attack angles, arming distances, and obstacle lateral
/// offsets over a base scenario.
struct ScenarioGrid {
  ScenarioConfig base = default_scenario();
  std::vector<double> attack_angles_deg;
  std::vector<double> start_distances_m;
  std::vector<double> lateral_offsets_m;
};

inline ScenarioGrid load_scenario_grid(const std::string& json_text) {
  const nlohmann::json j = detail::parse_json(json_text, "load_scenario_grid");
  ScenarioGrid grid;
  try {
    if (j.contains("defaults")) {
      const auto& jd = j.at("defaults");
      ScenarioConfig& b = grid.base;
      if (jd.contains("v_max_mps")) b.v_max_mps = jd.at("v_max_mps").get<double>();
      if (jd.contains("accel_mps2")) b.accel_mps2 = jd.at("accel_mps2").get<double>();
      if (jd.contains("decel_mps2")) b.decel_mps2 = jd.at("decel_mps2").get<double>();
      if (jd.contains("obstacle_distance_m")) {
        b.obstacle_distance_m = jd.at("obstacle_distance_m").get<double>();
        b.obstacle.center.x = b.obstacle_distance_m;
      }
      if (jd.contains("stop_margin_m")) b.stop_margin_m = jd.at("stop_margin_m").get<double>();
      if (jd.contains("spoofer_position")) {
        const auto arr = jd.at("spoofer_position").get<std::vector<double>>();
        if (arr.size() < 2) throw format_error("load_scenario_grid: spoofer_position needs [x, y]");
        b.spoofer_position = Vec3{arr[0], arr[1], 0.0};
      }
      if (jd.contains("obstacle")) {
        const auto& jo = jd.at("obstacle");
        if (jo.contains("length_m")) b.obstacle.length_m = jo.at("length_m").get<double>();
        if (jo.contains("width_m")) b.obstacle.width_m = jo.at("width_m").get<double>();
        if (jo.contains("height_m")) b.obstacle.height_m = jo.at("height_m").get<double>();
      }
    }
    grid.attack_angles_deg = j.at("attack_angles_deg").get<std::vector<double>>();
    grid.start_distances_m = j.at("start_distances_m").get<std::vector<double>>();
    grid.lateral_offsets_m = j.at("lateral_offsets_m").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("load_scenario_grid: ") + e.what());
  }
  return grid;
}

inline std::vector<ScenarioConfig> expand(const ScenarioGrid& grid) {
  std::vector<ScenarioConfig> out;
  out.reserve(grid.attack_angles_deg.size() * grid.start_distances_m.size() *
              grid.lateral_offsets_m.size());
  for (const double angle : grid.attack_angles_deg) {
    for (const double start : grid.start_distances_m) {
      for (const double lateral : grid.lateral_offsets_m) {
        ScenarioConfig cfg = grid.base;
        cfg.attack_angle_deg = angle;
        cfg.attack_start_distance_m = start;
        cfg.obstacle.center.x = cfg.obstacle_distance_m;
        cfg.obstacle.center.y = lateral;
        out.push_back(cfg);
      }
    }
  }
  return out;
}

}  // namespace pra
