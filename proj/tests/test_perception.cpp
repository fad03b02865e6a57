#include <doctest.h>

#include <cmath>
#include <string>

#include "oracles.hpp"
#include "pra/perception.hpp"

using namespace pra;

namespace {

Mat4 random_rigid(oracle::Rng& rng) {
  // Rotation about a random axis via three axis rotations, plus translation.
  const double a = rng.uniform(0.0, 2.0 * kPi);
  const double b = rng.uniform(0.0, 2.0 * kPi);
  const double c = rng.uniform(0.0, 2.0 * kPi);
  Mat4 rx = Mat4::identity(), ry = Mat4::identity(), rz = Mat4::identity();
  rx.at(1, 1) = std::cos(a), rx.at(1, 2) = -std::sin(a);
  rx.at(2, 1) = std::sin(a), rx.at(2, 2) = std::cos(a);
  ry.at(0, 0) = std::cos(b), ry.at(0, 2) = std::sin(b);
  ry.at(2, 0) = -std::sin(b), ry.at(2, 2) = std::cos(b);
  rz.at(0, 0) = std::cos(c), rz.at(0, 1) = -std::sin(c);
  rz.at(1, 0) = std::sin(c), rz.at(1, 1) = std::cos(c);
  Mat4 t = rz * ry * rx;
  t.at(0, 3) = rng.uniform(-5.0, 5.0);
  t.at(1, 3) = rng.uniform(-5.0, 5.0);
  t.at(2, 3) = rng.uniform(-5.0, 5.0);
  return t;
}

}  // namespace

TEST_CASE("matrix basics") {
  const Mat4 id = Mat4::identity();
  const Vec3 p{1.0, 2.0, 3.0};
  const Vec3 q = id.apply(p);
  CHECK(q.x == doctest::Approx(1.0));
  CHECK(q.z == doctest::Approx(3.0));

  SUBCASE("inverse undoes a rigid transform") {
    oracle::Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      const Mat4 t = random_rigid(rng);
      const Mat4 inv = t.inverse();
      const Vec3 v{rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
      const Vec3 back = inv.apply(t.apply(v));
      CHECK(back.x == doctest::Approx(v.x).epsilon(1e-9));
      CHECK(back.y == doctest::Approx(v.y).epsilon(1e-9));
      CHECK(back.z == doctest::Approx(v.z).epsilon(1e-9));
      // Product with the inverse is the identity.
      const Mat4 prod = t * inv;
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
          CHECK(prod.at(r, c) == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-9).scale(1.0));
        }
      }
    }
  }

  SUBCASE("singular matrix is rejected") {
    Mat4 z;  // all zeros
    CHECK_THROWS_AS(z.inverse(), domain_error);
  }

  SUBCASE("rotate ignores translation") {
    Mat4 t = Mat4::identity();
    t.at(0, 3) = 100.0;
    const Vec3 d = t.rotate(Vec3{1.0, 0.0, 0.0});
    CHECK(d.x == doctest::Approx(1.0));
  }
}

TEST_CASE("calibration parsing") {
  const std::string good =
      "P2: 700 0 600 40 0 700 180 2 0 0 1 0.003\n"
      "R0_rect: 1 0 0 0 1 0 0 0 1\n"
      "Tr_velo_to_cam: 0 -1 0 0 0 0 -1 -0.08 1 0 0 -0.27\n";

  SUBCASE("round trip through the two rigid transforms") {
    const Calibration cal = parse_calibration(good);
    CHECK(cal.projection[0] == doctest::Approx(700.0));
    CHECK(cal.lidar_to_camera.at(0, 1) == doctest::Approx(-1.0));
    const Vec3 p{12.0, 3.0, -1.0};
    const Vec3 cam = cal.lidar_to_camera_point(p);
    const Vec3 back = cal.camera_to_lidar_point(cam);
    CHECK(back.x == doctest::Approx(p.x).epsilon(1e-9));
    CHECK(back.y == doctest::Approx(p.y).epsilon(1e-9));
    CHECK(back.z == doctest::Approx(p.z).epsilon(1e-9));
  }

  SUBCASE("unknown keys and blank lines are ignored") {
    const Calibration cal = parse_calibration("P0: 1 2 3\nfoo: bar\n\n" + good);
    CHECK(cal.projection[0] == doctest::Approx(700.0));
  }

  SUBCASE("missing keys are reported") {
    const std::string no_tr =
        "P2: 700 0 600 40 0 700 180 2 0 0 1 0.003\nR0_rect: 1 0 0 0 1 0 0 0 1\n";
    CHECK_THROWS_WITH_AS(parse_calibration(no_tr),
                         doctest::Contains("Tr_velo_to_cam"), format_error);
  }

  SUBCASE("wrong value count carries the line number") {
    try {
      parse_calibration("Tr_velo_to_cam: 1 2 3\n" + good);
      FAIL("expected a format error");
    } catch (const format_error& e) {
      CHECK(e.position() == 1);
    }
  }

  SUBCASE("non numeric values carry the line number") {
    try {
      parse_calibration("P2: 700 0 600 40 0 700 180 2 0 0 1 oops\n");
      FAIL("expected a format error");
    } catch (const format_error& e) {
      CHECK(e.position() == 1);
    }
  }
}

TEST_CASE("euclidean clustering") {
  SUBCASE("two well separated groups") {
    Scan scan;
    for (int i = 0; i < 8; ++i) {
      scan.points.push_back(make_point(5.0 + 0.05 * i, 0.0, 0.0, 1.0, 0));
    }
    for (int i = 0; i < 6; ++i) {
      scan.points.push_back(make_point(10.0, 5.0 + 0.05 * i, 0.0, 1.0, 0));
    }
    scan.points.push_back(make_point(-20.0, 0.0, 0.0, 1.0, 0));  // lone straggler

    const auto clusters = euclidean_cluster(scan, 0.5, 5);
    REQUIRE(clusters.size() == 2);
    CHECK(clusters[0].point_ids.size() == 8);
    CHECK(clusters[1].point_ids.size() == 6);
    CHECK(clusters[0].point_ids.front() == 0);  // ordered by smallest id
    CHECK(clusters[0].centroid.x == doctest::Approx(5.0 + 0.05 * 3.5));
    CHECK(clusters[1].aabb_min.y == doctest::Approx(5.0));
    CHECK(clusters[1].aabb_max.y == doctest::Approx(5.25));
  }

  SUBCASE("chains link through intermediate points") {
    // 0.4 m steps chain under a 0.5 m tolerance even though the ends are
    // far apart.
    Scan scan;
    for (int i = 0; i < 10; ++i) {
      scan.points.push_back(make_point(5.0 + 0.4 * i, 0.0, 0.0, 1.0, 0));
    }
    CHECK(euclidean_cluster(scan, 0.5, 5).size() == 1);
    CHECK(euclidean_cluster(scan, 0.39, 5).empty());
  }

  SUBCASE("tolerance is inclusive") {
    Scan scan;
    for (int i = 0; i < 5; ++i) {
      scan.points.push_back(make_point(5.0 + 0.5 * i, 0.0, 0.0, 1.0, 0));
    }
    CHECK(euclidean_cluster(scan, 0.5, 5).size() == 1);
  }

  SUBCASE("agrees with the quadratic reference on random clouds") {
    oracle::Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
      Scan scan;
      std::vector<Vec3> raw;
      const int blobs = rng.uniform_int(1, 5);
      for (int b = 0; b < blobs; ++b) {
        const Vec3 c{rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0), rng.uniform(-1.0, 1.0)};
        const int n = rng.uniform_int(3, 30);
        for (int i = 0; i < n; ++i) {
          const Vec3 p{c.x + rng.uniform(-0.6, 0.6), c.y + rng.uniform(-0.6, 0.6),
                       c.z + rng.uniform(-0.3, 0.3)};
          raw.push_back(p);
          scan.points.push_back(make_point(p.x, p.y, p.z, 1.0, 0));
        }
      }
      const auto got = euclidean_cluster(scan, 0.5, 4);
      const auto want = oracle::clusters_bruteforce(raw, 0.5, 4);
      REQUIRE(got.size() == want.size());
      for (std::size_t k = 0; k < got.size(); ++k) {
        CHECK(got[k].point_ids == want[k]);
      }
    }
  }

  SUBCASE("bad tolerance") {
    CHECK_THROWS_AS(euclidean_cluster(Scan{}, 0.0, 5), domain_error);
  }
}

TEST_CASE("projection to the image plane") {
  // Pinhole with focal 700, principal point (600, 180); camera frame has
  // z forward, x right, y down. Identity rigid chain keeps lidar == camera.
  Calibration cal;
  cal.projection = {700, 0, 600, 0, 0, 700, 180, 0, 0, 0, 1, 0};

  Box3D box;
  box.center = Vec3{0.0, 0.0, 20.0};  // 20 m ahead along camera z
  box.length_m = 2.0;
  box.width_m = 2.0;
  box.height_m = 2.0;

  const Box2D px = project_to_image(box, cal);
  // Near face at z = 19: half extent 1 m maps to 700 / 19 = 36.84 px.
  CHECK(px.left == doctest::Approx(600.0 - 700.0 / 19.0));
  CHECK(px.right == doctest::Approx(600.0 + 700.0 / 19.0));
  CHECK(px.top == doctest::Approx(180.0 - 700.0 / 19.0));
  CHECK(px.bottom == doctest::Approx(180.0 + 700.0 / 19.0));

  SUBCASE("boxes behind the camera are rejected") {
    box.center.z = -20.0;
    CHECK_THROWS_AS(project_to_image(box, cal), domain_error);
    box.center.z = 0.5;  // center ahead, but a corner pokes behind
    CHECK_THROWS_AS(project_to_image(box, cal), domain_error);
  }
}

TEST_CASE("overlap and fusion") {
  const Box2D a{0.0, 0.0, 10.0, 10.0};
  const Box2D b{5.0, 0.0, 15.0, 10.0};   // half overlap with a
  const Box2D c{20.0, 20.0, 30.0, 30.0};  // disjoint
  const Box2D d{2.0, 2.0, 8.0, 8.0};      // inside a

  CHECK(overlap_ratio(a, b) == doctest::Approx(50.0 / 150.0));
  CHECK(overlap_ratio(a, b, OverlapMetric::over_min) == doctest::Approx(0.5));
  CHECK(overlap_ratio(a, c) == doctest::Approx(0.0));
  CHECK(overlap_ratio(a, d) == doctest::Approx(36.0 / 100.0));
  CHECK(overlap_ratio(a, d, OverlapMetric::over_min) == doctest::Approx(1.0));

  CHECK(fusion_check(a, d, 0.5, OverlapMetric::over_min));
  CHECK_FALSE(fusion_check(a, d, 0.5, OverlapMetric::iou));
  CHECK(fusion_check(a, a, 1.0));
  CHECK_THROWS_AS(fusion_check(a, b, 1.5), domain_error);

  SUBCASE("degenerate boxes are rejected") {
    CHECK_THROWS_AS(overlap_ratio(Box2D{5.0, 0.0, 5.0, 10.0}, a), domain_error);
  }

  SUBCASE("symmetry") {
    oracle::Rng rng(29);
    for (int i = 0; i < 500; ++i) {
      const double l1 = rng.uniform(0.0, 50.0), t1 = rng.uniform(0.0, 50.0);
      const double l2 = rng.uniform(0.0, 50.0), t2 = rng.uniform(0.0, 50.0);
      const Box2D p{l1, t1, l1 + rng.uniform(1.0, 30.0), t1 + rng.uniform(1.0, 30.0)};
      const Box2D q{l2, t2, l2 + rng.uniform(1.0, 30.0), t2 + rng.uniform(1.0, 30.0)};
      CHECK(overlap_ratio(p, q) == doctest::Approx(overlap_ratio(q, p)).epsilon(1e-12));
      const double r = overlap_ratio(p, q);
      CHECK(r >= 0.0);
      CHECK(r <= 1.0 + 1e-12);
      CHECK(overlap_ratio(p, q, OverlapMetric::over_min) >= r - 1e-12);
    }
  }
}
