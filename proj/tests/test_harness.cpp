#include <atomic>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "pra/harness.hpp"

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("pralab-test-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

void push_f32(std::string& out, float v) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

std::string bin_point(float x, float y, float z, float refl) {
  std::string out;
  push_f32(out, x);
  push_f32(out, y);
  push_f32(out, z);
  push_f32(out, refl);
  return out;
}

const std::string kCalibText =
    "P2: 700 0 600 40 0 700 180 2 0 0 1 0.003\n"
    "R0_rect: 1 0 0 0 1 0 0 0 1\n"
    "Tr_velo_to_cam: 0 -1 0 0 0 0 -1 -0.08 1 0 0 -0.27\n";

}  // namespace

TEST_CASE("harness: digests") {
  // Published test vectors for 64-bit FNV-1a.
  CHECK(pra::digest_hex("") == "cbf29ce484222325");
  CHECK(pra::digest_hex("a") == "af63dc4c8601ec8c");
  CHECK(pra::digest_hex("sensor=vlp16") == pra::digest_hex("sensor=vlp16"));
  CHECK(pra::digest_hex("sensor=vlp16") != pra::digest_hex("sensor=hdl64"));
  CHECK(pra::digest_hex("x").size() == 16);
}

TEST_CASE("harness: number formatting") {
  CHECK(pra::fmt(0.5) == "0.5");
  CHECK(pra::fmt(80.0) == "80");
  CHECK(pra::fmt(100.0) == "100");
  CHECK(pra::fmt(0.001) == "0.001");
  CHECK(pra::fmt(2.8e-6) == "2.8e-06");
  CHECK(pra::fmt(1234567891.0) == "1.23456789e+09");
}

TEST_CASE("harness: report serialization") {
  pra::Report report;
  report.id = "demo";
  report.config_digest = "0123456789abcdef";
  report.inputs = {"a.json", "b.csv"};
  report.columns = {"k", "v"};
  report.rows = {{"one", "1"}, {"two", "2"}};
  report.summary = {"total: 3"};
  report.notes = {"approximate"};

  CHECK(pra::to_csv(report) == "k,v\none,1\ntwo,2\n");
  CHECK(pra::to_summary_text(report) ==
        "report: demo\n"
        "config_digest: 0123456789abcdef\n"
        "input: a.json\n"
        "input: b.csv\n"
        "rows: 2\n"
        "total: 3\n"
        "note: approximate\n");
}

TEST_CASE("harness: parallel for") {
  SUBCASE("fills every slot exactly once") {
    std::vector<std::size_t> out(200, 0);
    std::atomic<int> calls{0};
    pra::parallel_for(out.size(), 8, [&](std::size_t i) {
      out[i] = i * i;
      calls.fetch_add(1);
    });
    CHECK(calls.load() == 200);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == i * i);
  }

  SUBCASE("degenerate sizes") {
    int calls = 0;
    pra::parallel_for(0, 8, [&](std::size_t) { ++calls; });
    CHECK(calls == 0);
    pra::parallel_for(1, 8, [&](std::size_t) { ++calls; });
    CHECK(calls == 1);
  }

  SUBCASE("worker exceptions surface with their type") {
    auto boom = [](std::size_t i) {
      if (i == 37) throw pra::domain_error("boom");
    };
    CHECK_THROWS_AS(pra::parallel_for(100, 1, boom), pra::domain_error);
    CHECK_THROWS_AS(pra::parallel_for(100, 4, boom), pra::domain_error);
  }
}

TEST_CASE("harness: file helpers") {
  TempDir tmp;

  SUBCASE("binary-safe round trip into a created subtree") {
    const std::filesystem::path target = tmp.path / "a" / "b" / "blob.bin";
    std::string content = "line\n";
    content.push_back('\0');
    content += "rest";
    pra::write_file(target, content);
    CHECK(pra::read_file(target) == content);
  }

  SUBCASE("missing files raise") {
    CHECK_THROWS_AS((void)pra::read_file(tmp.path / "absent.txt"), pra::error);
  }
}

TEST_CASE("harness: dataset listing and loading") {
  TempDir tmp;
  const pra::SensorConfig cfg = pra::vlp16_config();

  SUBCASE("ids are the sorted cloud stems") {
    pra::write_file(tmp.path / "velodyne" / "000010.bin", bin_point(3, 4, 0, 0.5));
    pra::write_file(tmp.path / "velodyne" / "000002.bin", bin_point(5, 0, 0, 0.5));
    pra::write_file(tmp.path / "velodyne" / "notes.txt", "not a cloud");
    const std::vector<std::string> ids = pra::list_dataset_ids(tmp.path);
    CHECK(ids == std::vector<std::string>{"000002", "000010"});
  }

  SUBCASE("a directory without clouds is not a dataset") {
    CHECK_THROWS_AS((void)pra::list_dataset_ids(tmp.path / "absent"), pra::error);
  }

  SUBCASE("scene loading joins clouds with annotations when present") {
    pra::write_file(tmp.path / "velodyne" / "000001.bin",
                    bin_point(3, 4, 0, 0.5) + bin_point(10, 0, 1, 0.9));
    pra::write_file(tmp.path / "calib" / "000001.txt", kCalibText);
    pra::write_file(
        tmp.path / "label_2" / "000001.txt",
        "Car 0.00 0 1.85 387.63 181.54 423.81 203.12 1.67 1.87 3.69 -16.53 2.39 58.49 1.57\n"
        "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10\n");

    const pra::SceneRecord scene = pra::load_dataset_scene(tmp.path, "000001", cfg);
    CHECK(scene.id == "000001");
    CHECK(scene.scan.points.size() == 2);
    REQUIRE(scene.targets.size() == 1);
    CHECK(scene.targets[0].object_class == pra::ObjectClass::vehicle);
  }

  SUBCASE("annotations are optional") {
    pra::write_file(tmp.path / "velodyne" / "000003.bin", bin_point(3, 4, 0, 0.5));
    const pra::SceneRecord scene = pra::load_dataset_scene(tmp.path, "000003", cfg);
    CHECK(scene.scan.points.size() == 1);
    CHECK(scene.targets.empty());
  }
}

TEST_CASE("harness: synthetic scene records") {
  const pra::SensorConfig cfg = pra::vlp16_config();
  const std::vector<pra::SceneRecord> a = pra::synthetic_scene_records(cfg, 3, 42);
  REQUIRE(a.size() == 3);

  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == "synthetic-" + std::to_string(i));
    CHECK(a[i].scan.frame_id == static_cast<std::int64_t>(i));
    CHECK(a[i].targets.size() == 4);
    CHECK(a[i].scan.points.size() > 10000);  // ground plus objects
  }

  SUBCASE("regeneration is bitwise identical") {
    const std::vector<pra::SceneRecord> b = pra::synthetic_scene_records(cfg, 3, 42);
    REQUIRE(b.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      REQUIRE(b[i].scan.points.size() == a[i].scan.points.size());
      bool same = true;
      for (std::size_t k = 0; k < a[i].scan.points.size(); ++k) {
        const pra::CloudPoint& p = a[i].scan.points[k];
        const pra::CloudPoint& q = b[i].scan.points[k];
        if (p.x != q.x || p.y != q.y || p.z != q.z || p.intensity != q.intensity ||
            p.channel != q.channel) {
          same = false;
          break;
        }
      }
      CHECK(same);
    }
  }

  SUBCASE("the seed matters") {
    const std::vector<pra::SceneRecord> c = pra::synthetic_scene_records(cfg, 1, 43);
    bool differs = c[0].scan.points.size() != a[0].scan.points.size();
    if (!differs) {
      for (std::size_t k = 0; k < c[0].scan.points.size(); ++k) {
        if (c[0].scan.points[k].x != a[0].scan.points[k].x) {
          differs = true;
          break;
        }
      }
    }
    CHECK(differs);
  }
}

TEST_CASE("harness: capability report") {
  const pra::SensorConfig cfg = pra::vlp16_config();
  const pra::FilterChain chain = pra::filter_chain_preset("vlp16-apollo");
  const pra::CapabilityModel capability;  // unbounded curve, 80 points/deg
  pra::AttackSpec spec;
  spec.center_azimuth_deg = 90.0;

  const pra::Report report = pra::run_capability(cfg, chain, capability, spec, {1.0, 5.0, 10.0});
  CHECK(report.id == "capability");
  REQUIRE(report.columns.size() == 6);
  REQUIRE(report.rows.size() == 3);

  for (const auto& row : report.rows) {
    REQUIRE(row.size() == 6);
    // The capability prediction and the measured removal agree exactly on a
    // uniform ring, and nothing is injected below the filter floor.
    CHECK(row[2] == row[3]);
    CHECK(row[4] == "0");
    CHECK(std::stoul(row[3]) + std::stoul(row[5]) == 28800u);
  }
  CHECK(report.rows[0][3] == "80");
  CHECK(report.rows[1][3] == "400");
  CHECK(report.rows[2][3] == "800");
  CHECK(report.rows[1][1] == pra::fmt(pra::chord_length(10.0, 5.0)));

  REQUIRE(report.summary.size() == 4);
  CHECK(report.summary[0] == "points_per_degree: 80");
  CHECK(report.summary[1] == "spoofing_region_width_m: 0.9");
  CHECK(report.summary[3] == "ring_points: 28800");
}

TEST_CASE("harness: attack campaign report") {
  const pra::SensorConfig cfg = pra::vlp16_config();
  const std::vector<pra::SceneRecord> scenes = pra::synthetic_scene_records(cfg, 4, 7);
  pra::CampaignConfig campaign;

  const pra::Report report = pra::run_attack_campaign(campaign, scenes, 1);
  CHECK(report.id == "attack");
  REQUIRE(report.columns.size() == 9);
  CHECK(report.rows.size() + report.notes.size() == 16);
  CHECK(report.rows.size() >= 14);

  for (const auto& row : report.rows) {
    REQUIRE(row.size() == 9);
    CHECK(std::stod(row[6]) > 0.0);   // covering angle
    CHECK(row[7] == "100");           // full removal at the covering angle
    CHECK(std::stoul(row[8]) > 0u);   // something actually vanished
  }

  bool has_ped_mean = false, has_veh_mean = false;
  for (const std::string& line : report.summary) {
    if (line.rfind("mean_min_angle_pedestrian_deg:", 0) == 0) has_ped_mean = true;
    if (line.rfind("mean_min_angle_vehicle_deg:", 0) == 0) has_veh_mean = true;
  }
  CHECK(has_ped_mean);
  CHECK(has_veh_mean);

  SUBCASE("worker count changes nothing observable") {
    const pra::Report parallel = pra::run_attack_campaign(campaign, scenes, 4);
    CHECK((pra::to_csv(parallel) == pra::to_csv(report)));
    CHECK(parallel.summary == report.summary);
    CHECK(parallel.notes == report.notes);
  }

  SUBCASE("class filter") {
    campaign.target_class = "pedestrian";
    const pra::Report peds = pra::run_attack_campaign(campaign, scenes, 2);
    CHECK(!peds.rows.empty());
    for (const auto& row : peds.rows) CHECK(row[2] == "pedestrian");
    CHECK(peds.rows.size() + peds.notes.size() == 8);
  }
}

TEST_CASE("harness: simulation report") {
  std::vector<pra::ScenarioConfig> scenarios;
  scenarios.push_back(pra::default_scenario());
  scenarios.back().attack_angle_deg = 10.0;
  scenarios.push_back(pra::default_scenario());
  scenarios.back().attack_angle_deg = 360.0;

  const pra::Report report = pra::run_simulation(scenarios);
  CHECK(report.id == "simulate");
  REQUIRE(report.columns.size() == 10);
  REQUIRE(report.rows.size() == 2);

  const auto& narrow = report.rows[0];
  CHECK(narrow[0] == "0");
  CHECK(narrow[4] == "stopped");
  CHECK(narrow[5] == "0");
  CHECK(narrow[9] == "yes");  // reappeared; closed form agrees with the integrator

  const auto& full = report.rows[1];
  CHECK(full[4] == "collision");
  CHECK(std::stod(full[8]) > 0.4);  // hidden for most of the approach
  CHECK(full[9] == "na");           // never reappears before impact

  CHECK(report.summary[0] == "scenarios: 2");
  CHECK(report.summary[1] == "collisions: 1");
}

TEST_CASE("harness: safety report") {
  const pra::Report report = pra::run_safety(pra::LaserParams{});
  CHECK(report.id == "safety");
  REQUIRE(report.columns.size() == 3);

  auto value_of = [&](const std::string& quantity) -> std::string {
    for (const auto& row : report.rows) {
      if (row[0] == quantity) return row[1];
    }
    FAIL("missing row: ", quantity);
    return {};
  };

  CHECK(value_of("pulse_energy") == "2.8e-06");
  CHECK(value_of("mpe") == pra::fmt(pra::mpe_j_per_m2(0.25, 905.0)));
  CHECK(value_of("mpe_without_wavelength_factor") == pra::fmt(18.0 * std::pow(0.25, 0.75)));
  CHECK(value_of("min_area_single_pulse") ==
        pra::fmt(2.8e-6 / pra::mpe_j_per_m2(0.25, 905.0)));
  CHECK(report.notes.size() == 2);
}
