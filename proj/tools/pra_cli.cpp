// pra: command line front end for the removal-attack laboratory.
//
// Subcommands map one-to-one onto the library runners: capability sweeps,
// attack campaigns over annotated scenes, detector scorecards, closed-loop
// braking simulation, emitter exposure arithmetic, and a parser for the
// on-disk formats. Every run prints a summary to stdout and, with --out,
// writes a CSV table plus the same summary next to it.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pra/harness.hpp"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string dataset_dir;
  std::string out_dir;
  int workers = 1;
  unsigned seed = 1;
};

void finish(pra::Report& report, const std::string& config_text, std::vector<std::string> inputs,
            const GlobalOpts& g) {
  report.config_digest = pra::digest_hex(config_text);
  report.inputs = std::move(inputs);
  std::fputs(pra::to_summary_text(report).c_str(), stdout);
  if (!g.out_dir.empty()) {
    const std::filesystem::path base = std::filesystem::path(g.out_dir) / report.id;
    pra::write_file(base.string() + ".csv", pra::to_csv(report));
    pra::write_file(base.string() + ".txt", pra::to_summary_text(report));
    std::printf("wrote: %s.csv\nwrote: %s.txt\n", base.string().c_str(), base.string().c_str());
  }
}

std::string kv(const std::string& key, const std::string& value) { return key + "=" + value + "\n"; }

// -------------------------------------------------------------- capability

struct CapabilityOpts {
  std::string sensor = "vlp16";
  std::string chain = "vlp16-apollo";
  std::string capacity_path;
  double step_deg = 1.0;
  double max_angle_deg = 45.0;
  double spoofer_distance_m = 5.0;
  double ring_range_m = 10.0;
  double daylight = 1.0;
};

void cmd_capability(const CapabilityOpts& o, const GlobalOpts& g) {
  const pra::SensorConfig config = pra::sensor_preset(o.sensor);
  const pra::FilterChain chain = pra::filter_chain_preset(o.chain);
  pra::CapabilityModel capability;
  capability.daylight_factor = o.daylight;
  std::vector<std::string> inputs;
  if (!o.capacity_path.empty()) {
    capability.distance_capacity = pra::load_capacity_csv(pra::read_file(o.capacity_path));
    inputs.push_back(o.capacity_path);
  }
  pra::validate(capability);

  pra::AttackSpec spec;
  spec.center_azimuth_deg = 180.0;
  spec.mode = pra::AttackMode::capability_limited;
  spec.spoofer_distance_m = o.spoofer_distance_m;

  std::vector<double> angles;
  for (double a = o.step_deg; a <= o.max_angle_deg + 1e-9; a += o.step_deg) angles.push_back(a);

  pra::Report report = pra::run_capability(config, chain, capability, spec, angles, o.ring_range_m);
  const std::string cfg = kv("command", "capability") + kv("sensor", o.sensor) +
                          kv("chain", o.chain) + kv("step", pra::fmt(o.step_deg)) +
                          kv("max_angle", pra::fmt(o.max_angle_deg)) +
                          kv("distance", pra::fmt(o.spoofer_distance_m)) +
                          kv("ring_range", pra::fmt(o.ring_range_m)) +
                          kv("daylight", pra::fmt(o.daylight)) + kv("capacity", o.capacity_path);
  finish(report, cfg, inputs, g);
}

// ------------------------------------------------------------------ attack

struct AttackOpts {
  std::string sensor = "vlp16";
  int synthetic_override = -1;
};

void cmd_attack(const AttackOpts& o, const GlobalOpts& g) {
  const pra::SensorConfig config = pra::sensor_preset(o.sensor);
  pra::CampaignConfig campaign;
  std::vector<std::string> inputs;
  std::string config_text = "{}";
  if (!g.config_path.empty()) {
    config_text = pra::read_file(g.config_path);
    campaign = pra::load_campaign(config_text);
    inputs.push_back(g.config_path);
  }

  std::vector<pra::SceneRecord> scenes;
  std::vector<std::string> loader_notes;
  if (!g.dataset_dir.empty()) {
    std::vector<std::string> ids = campaign.scene_ids;
    if (ids.empty()) ids = pra::list_dataset_ids(g.dataset_dir);
    for (const std::string& id : ids) {
      try {
        scenes.push_back(pra::load_dataset_scene(g.dataset_dir, id, config));
        inputs.push_back((std::filesystem::path(g.dataset_dir) / "velodyne" / (id + ".bin")).string());
      } catch (const pra::error& e) {
        loader_notes.push_back(std::string("skipped scene ") + id + ": " + e.what());
      }
    }
  } else {
    int count = o.synthetic_override >= 0 ? o.synthetic_override : campaign.synthetic_scene_count;
    if (count <= 0) count = 8;
    scenes = pra::synthetic_scene_records(config, count, g.seed);
  }
  if (scenes.empty()) {
    throw pra::error("attack: no scenes to run (dataset empty or every scene failed to load)");
  }

  pra::Report report = pra::run_attack_campaign(campaign, scenes, g.workers);
  report.notes.insert(report.notes.begin(), loader_notes.begin(), loader_notes.end());
  const std::string cfg = kv("command", "attack") + kv("sensor", o.sensor) +
                          kv("dataset", g.dataset_dir) + kv("seed", std::to_string(g.seed)) +
                          kv("campaign", config_text);
  finish(report, cfg, inputs, g);
}

// ------------------------------------------------------------------ defend

struct DefendOpts {
  std::string method = "azimuth-gap";
  std::string sensor = "vlp16";
  std::string chain = "vlp16-apollo";
  int benign_count = 50;
  int attack_count = 50;
  double gap_threshold_deg = 1.0;
  double volume_threshold_m3 = 15.0;
  double min_angle_deg = 2.0;
  double max_angle_deg = 24.0;
};

void cmd_defend(const DefendOpts& o, const GlobalOpts& g) {
  const pra::SensorConfig config = pra::sensor_preset(o.sensor);
  const pra::FilterChain chain = pra::filter_chain_preset(o.chain);
  pra::DefenseMethod method;
  if (o.method == "azimuth-gap") {
    method = pra::DefenseMethod::azimuth_gap;
  } else if (o.method == "fake-shadow") {
    method = pra::DefenseMethod::fake_shadow;
  } else {
    throw pra::error("defend: unknown method '" + o.method + "' (expected azimuth-gap or fake-shadow)");
  }

  std::vector<pra::Scan> benign;
  for (const pra::SceneRecord& record :
       pra::synthetic_scene_records(config, o.benign_count + o.attack_count, g.seed)) {
    benign.push_back(record.scan);
  }
  std::vector<pra::Scan> attacks;
  std::mt19937 rng(g.seed ^ 0x9e3779b9u);
  std::uniform_real_distribution<double> angle_dist(o.min_angle_deg, o.max_angle_deg);
  std::uniform_real_distribution<double> center_dist(0.0, 360.0);
  for (int i = 0; i < o.attack_count; ++i) {
    pra::AttackSpec spec;
    spec.center_azimuth_deg = center_dist(rng);
    spec.attack_angle_deg = angle_dist(rng);
    attacks.push_back(pra::synthesize(benign[static_cast<std::size_t>(o.benign_count + i)], spec, chain).first);
  }
  benign.resize(static_cast<std::size_t>(o.benign_count));

  pra::Detector detector;
  if (method == pra::DefenseMethod::azimuth_gap) {
    detector = [&](const pra::Scan& scan) { return pra::azimuth_gap_detect(scan, o.gap_threshold_deg); };
  } else {
    pra::FsdParams params;
    params.volume_threshold_m3 = o.volume_threshold_m3;
    detector = [params](const pra::Scan& scan) { return pra::fake_shadow_detect(scan, params); };
  }

  pra::Report report = pra::run_defense(method, detector, benign, attacks);
  const std::string cfg = kv("command", "defend") + kv("method", o.method) + kv("sensor", o.sensor) +
                          kv("chain", o.chain) + kv("benign", std::to_string(o.benign_count)) +
                          kv("attacks", std::to_string(o.attack_count)) +
                          kv("gap_threshold", pra::fmt(o.gap_threshold_deg)) +
                          kv("volume_threshold", pra::fmt(o.volume_threshold_m3)) +
                          kv("angles", pra::fmt(o.min_angle_deg) + ".." + pra::fmt(o.max_angle_deg)) +
                          kv("seed", std::to_string(g.seed));
  finish(report, cfg, {}, g);
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  double dt_s = 0.01;
  double attack_angle_deg = 0.0;
  double start_distance_m = 50.0;
  double lateral_m = 0.0;
};

void cmd_simulate(const SimulateOpts& o, const GlobalOpts& g) {
  std::vector<pra::ScenarioConfig> scenarios;
  std::vector<std::string> inputs;
  std::string config_text;
  if (!g.config_path.empty()) {
    config_text = pra::read_file(g.config_path);
    scenarios = pra::expand(pra::load_scenario_grid(config_text));
    inputs.push_back(g.config_path);
  } else {
    pra::ScenarioConfig cfg = pra::default_scenario();
    cfg.attack_angle_deg = o.attack_angle_deg;
    cfg.attack_start_distance_m = o.start_distance_m;
    cfg.obstacle.center.y = o.lateral_m;
    scenarios.push_back(cfg);
  }
  pra::Report report = pra::run_simulation(scenarios, o.dt_s);
  const std::string cfg = kv("command", "simulate") + kv("dt", pra::fmt(o.dt_s)) +
                          kv("angle", pra::fmt(o.attack_angle_deg)) +
                          kv("start", pra::fmt(o.start_distance_m)) +
                          kv("lateral", pra::fmt(o.lateral_m)) + kv("grid", config_text);
  finish(report, inputs.empty() ? cfg : cfg + config_text, inputs, g);
}

// ------------------------------------------------------------------ safety

struct SafetyOpts {
  double peak_power_w = 70.0;
  double pulse_width_ns = 40.0;
  double wavelength_nm = 905.0;
  double exposure_s = 0.25;
  int pulses = 1;
};

void cmd_safety(const SafetyOpts& o, const GlobalOpts& g) {
  pra::LaserParams params;
  params.peak_power_w = o.peak_power_w;
  params.pulse_width_s = o.pulse_width_ns * 1e-9;
  params.wavelength_nm = o.wavelength_nm;
  params.exposure_time_s = o.exposure_s;
  params.pulses_per_exposure = o.pulses;
  pra::Report report = pra::run_safety(params);
  const std::string cfg = kv("command", "safety") + kv("power", pra::fmt(o.peak_power_w)) +
                          kv("width_ns", pra::fmt(o.pulse_width_ns)) +
                          kv("wavelength", pra::fmt(o.wavelength_nm)) +
                          kv("exposure", pra::fmt(o.exposure_s)) + kv("pulses", std::to_string(o.pulses));
  finish(report, cfg, {}, g);
}

// ------------------------------------------------------------------- parse

struct ParseOpts {
  std::string path;
  std::string kind = "auto";
  std::string format = "csv";
  std::string sensor = "vlp16";
};

std::string detect_kind(const std::string& path, const std::string& content) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".bin") {
    return content.size() == pra::kRawPacketSize ? "packet" : "cloud";
  }
  if (content.rfind("frame,channel,", 0) == 0 || content.rfind("# frame", 0) == 0 ||
      content.rfind("VERSION", 0) == 0) {
    return "scan";
  }
  if (content.find("\nP2:") != std::string::npos || content.rfind("P2:", 0) == 0) return "calib";
  return "labels";
}

void append_channel_table(pra::Report& report, const pra::Scan& scan) {
  report.columns = {"channel", "points", "min_range_m", "max_range_m"};
  std::map<int, std::vector<double>> by_channel;
  for (const pra::CloudPoint& p : scan.points) by_channel[p.channel].push_back(p.range_m);
  for (auto& [channel, ranges] : by_channel) {
    const auto [lo, hi] = std::minmax_element(ranges.begin(), ranges.end());
    report.rows.push_back({std::to_string(channel), std::to_string(ranges.size()), pra::fmt(*lo),
                           pra::fmt(*hi)});
  }
  report.summary.push_back("points: " + std::to_string(scan.points.size()));
  report.summary.push_back("frame: " + std::to_string(scan.frame_id));
}

void cmd_parse(const ParseOpts& o, const GlobalOpts& g) {
  const std::string content = pra::read_file(o.path);
  const std::string kind = o.kind == "auto" ? detect_kind(o.path, content) : o.kind;
  const pra::ScanFormat format = o.format == "pcd" ? pra::ScanFormat::pcd : pra::ScanFormat::csv;
  const std::string stem = std::filesystem::path(o.path).stem().string();

  pra::Report report;
  report.id = "parse";
  report.summary.push_back("file: " + o.path);
  report.summary.push_back("kind: " + kind);

  if (kind == "cloud") {
    const pra::SensorConfig config = pra::sensor_preset(o.sensor);
    const pra::Scan scan = pra::read_pointcloud_bin(content, config);
    append_channel_table(report, scan);
    if (!g.out_dir.empty()) {
      const std::filesystem::path out =
          std::filesystem::path(g.out_dir) / (stem + (format == pra::ScanFormat::pcd ? ".pcd" : ".csv"));
      pra::write_file(out, pra::write_scan(scan, format));
      report.notes.push_back("converted cloud written to " + out.string());
    }
  } else if (kind == "scan") {
    const pra::Scan scan = pra::read_scan(content);
    append_channel_table(report, scan);
    const std::string again = pra::write_scan(scan, content.rfind("frame,channel,", 0) == 0
                                                        ? pra::ScanFormat::csv
                                                        : pra::ScanFormat::pcd);
    report.summary.push_back(std::string("re-serialization identical: ") +
                             (again == content ? "yes" : "no"));
  } else if (kind == "packet") {
    const pra::RawPacket packet = pra::parse_raw_packet(content);
    report.columns = {"block", "channel", "azimuth_deg", "range_m", "intensity"};
    for (const auto& r : packet.returns) {
      report.rows.push_back({std::to_string(r.block), std::to_string(r.channel), pra::fmt(r.azimuth_deg),
                             pra::fmt(r.range_m), pra::fmt(r.intensity)});
    }
    report.summary.push_back("returns: " + std::to_string(packet.returns.size()));
    report.summary.push_back("timestamp_us: " + std::to_string(packet.timestamp_us));
  } else if (kind == "labels") {
    const std::vector<pra::LabelRecord> records = pra::read_labels(content);
    report.columns = {"type", "targetable", "height_m", "width_m", "length_m",
                      "cam_x_m", "cam_y_m", "cam_z_m", "rotation_y_rad"};
    for (const pra::LabelRecord& r : records) {
      report.rows.push_back({r.type, r.targetable() ? "yes" : "no", pra::fmt(r.height_m),
                             pra::fmt(r.width_m), pra::fmt(r.length_m), pra::fmt(r.x_m), pra::fmt(r.y_m),
                             pra::fmt(r.z_m), pra::fmt(r.rotation_y_rad)});
    }
    report.summary.push_back("records: " + std::to_string(records.size()));
  } else if (kind == "calib") {
    const pra::Calibration cal = pra::parse_calibration(content);
    report.columns = {"matrix", "shape", "values"};
    std::string p2;
    for (double v : cal.projection) p2 += pra::fmt(v) + " ";
    report.rows.push_back({"P2", "3x4", p2});
    std::string r0;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) r0 += pra::fmt(cal.rectification.at(r, c)) + " ";
    report.rows.push_back({"R0_rect", "3x3", r0});
    std::string tr;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) tr += pra::fmt(cal.lidar_to_camera.at(r, c)) + " ";
    report.rows.push_back({"Tr_velo_to_cam", "3x4", tr});
  } else {
    throw pra::error("parse: unknown kind '" + kind + "'");
  }

  const std::string cfg = kv("command", "parse") + kv("kind", kind) + kv("format", o.format) +
                          kv("sensor", o.sensor);
  finish(report, cfg, {o.path}, g);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"physical removal attack laboratory"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON configuration file (campaign or scenario grid)");
  app.add_option("--dataset", g.dataset_dir, "dataset directory with velodyne/, label_2/, calib/");
  app.add_option("--out", g.out_dir, "directory for CSV and summary output");
  app.add_option("--workers", g.workers, "worker threads for campaign runs")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "seed for synthetic scenes");

  CapabilityOpts cap;
  CLI::App* cap_cmd = app.add_subcommand("capability", "sector sweep on a uniform ring");
  cap_cmd->fallthrough();
  cap_cmd->add_option("--sensor", cap.sensor, "sensor preset (vlp16, hdl64)");
  cap_cmd->add_option("--chain", cap.chain, "filter chain preset");
  cap_cmd->add_option("--capacity", cap.capacity_path, "distance/points capacity CSV");
  cap_cmd->add_option("--step", cap.step_deg, "angle step in degrees");
  cap_cmd->add_option("--max-angle", cap.max_angle_deg, "largest swept angle in degrees");
  cap_cmd->add_option("--distance", cap.spoofer_distance_m, "emitter distance in meters");
  cap_cmd->add_option("--ring-range", cap.ring_range_m, "ring radius in meters");
  cap_cmd->add_option("--daylight", cap.daylight, "daylight derating factor");
  cap_cmd->callback([&] { cmd_capability(cap, g); });

  AttackOpts atk;
  CLI::App* atk_cmd = app.add_subcommand("attack", "minimum covering angle per annotated target");
  atk_cmd->fallthrough();
  atk_cmd->add_option("--sensor", atk.sensor, "sensor preset");
  atk_cmd->add_option("--synthetic", atk.synthetic_override, "synthetic scene count when no dataset");
  atk_cmd->callback([&] { cmd_attack(atk, g); });

  DefendOpts def;
  CLI::App* def_cmd = app.add_subcommand("defend", "detector scorecard on synthetic scene sets");
  def_cmd->fallthrough();
  def_cmd->add_option("--method", def.method, "azimuth-gap or fake-shadow");
  def_cmd->add_option("--sensor", def.sensor, "sensor preset");
  def_cmd->add_option("--chain", def.chain, "filter chain preset for the attacked set");
  def_cmd->add_option("--benign", def.benign_count, "benign scene count");
  def_cmd->add_option("--attacks", def.attack_count, "attacked scene count");
  def_cmd->add_option("--gap-threshold", def.gap_threshold_deg, "azimuth gap threshold in degrees");
  def_cmd->add_option("--volume-threshold", def.volume_threshold_m3, "residual shadow volume threshold");
  def_cmd->add_option("--min-angle", def.min_angle_deg, "smallest attack angle in the set");
  def_cmd->add_option("--max-angle", def.max_angle_deg, "largest attack angle in the set");
  def_cmd->callback([&] { cmd_defend(def, g); });

  SimulateOpts sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "closed-loop braking scenarios");
  sim_cmd->fallthrough();
  sim_cmd->add_option("--dt", sim.dt_s, "integration step in seconds");
  sim_cmd->add_option("--angle", sim.attack_angle_deg, "attack angle for the single-run form");
  sim_cmd->add_option("--start", sim.start_distance_m, "attack start distance for the single-run form");
  sim_cmd->add_option("--lateral", sim.lateral_m, "obstacle lateral offset for the single-run form");
  sim_cmd->callback([&] { cmd_simulate(sim, g); });

  SafetyOpts saf;
  CLI::App* saf_cmd = app.add_subcommand("safety", "emitter energy and exposure-limit arithmetic");
  saf_cmd->fallthrough();
  saf_cmd->add_option("--power", saf.peak_power_w, "peak power in watts");
  saf_cmd->add_option("--pulse-width-ns", saf.pulse_width_ns, "pulse width in nanoseconds");
  saf_cmd->add_option("--wavelength", saf.wavelength_nm, "wavelength in nanometers");
  saf_cmd->add_option("--exposure", saf.exposure_s, "exposure time in seconds");
  saf_cmd->add_option("--pulses", saf.pulses, "pulses per exposure");
  saf_cmd->callback([&] { cmd_safety(saf, g); });

  ParseOpts par;
  CLI::App* par_cmd = app.add_subcommand("parse", "inspect or convert an on-disk file");
  par_cmd->fallthrough();
  par_cmd->add_option("file", par.path, "input file")->required();
  par_cmd->add_option("--kind", par.kind, "auto, cloud, scan, packet, labels, calib");
  par_cmd->add_option("--format", par.format, "csv or pcd for converted clouds");
  par_cmd->add_option("--sensor", par.sensor, "sensor preset for binary clouds");
  par_cmd->callback([&] { cmd_parse(par, g); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const pra::error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
