#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "pra/error.hpp"
#include "pra/geometry.hpp"
#include "pra/sensor.hpp"

namespace pra {

/// Row-major 4x4 homogeneous transform.
struct Mat4 {
  std::array<double, 16> m{};

  static Mat4 identity() {
    Mat4 out;
    for (int i = 0; i < 4; ++i) out.m[i * 4 + i] = 1.0;
    return out;
  }

  double& at(int r, int c) { return m[r * 4 + c]; }
  double at(int r, int c) const { return m[r * 4 + c]; }

  Mat4 operator*(const Mat4& o) const {
    Mat4 out;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += at(r, k) * o.at(k, c);
        out.at(r, c) = s;
      }
    }
    return out;
  }

  /// Applies the transform to a point (w = 1), returning x, y, z.
  Vec3 apply(const Vec3& v) const {
    const double x = at(0, 0) * v.x + at(0, 1) * v.y + at(0, 2) * v.z + at(0, 3);
    const double y = at(1, 0) * v.x + at(1, 1) * v.y + at(1, 2) * v.z + at(1, 3);
    const double z = at(2, 0) * v.x + at(2, 1) * v.y + at(2, 2) * v.z + at(2, 3);
    const double w = at(3, 0) * v.x + at(3, 1) * v.y + at(3, 2) * v.z + at(3, 3);
    if (w == 0.0) throw domain_error("Mat4::apply: point at infinity");
    return Vec3{x / w, y / w, z / w};
  }

  /// Rotates a direction (w = 0); translation does not apply.
  Vec3 rotate(const Vec3& v) const {
    return Vec3{at(0, 0) * v.x + at(0, 1) * v.y + at(0, 2) * v.z,
                at(1, 0) * v.x + at(1, 1) * v.y + at(1, 2) * v.z,
                at(2, 0) * v.x + at(2, 1) * v.y + at(2, 2) * v.z};
  }

  Mat4 inverse() const {
    // Gauss-Jordan with partial pivoting; calibrations are well conditioned.
    std::array<double, 32> a{};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) a[r * 8 + c] = at(r, c);
      a[r * 8 + 4 + r] = 1.0;
    }
    for (int col = 0; col < 4; ++col) {
      int pivot = col;
      for (int r = col + 1; r < 4; ++r) {
        if (std::abs(a[r * 8 + col]) > std::abs(a[pivot * 8 + col])) pivot = r;
      }
      if (std::abs(a[pivot * 8 + col]) < 1e-12) {
        throw domain_error("Mat4::inverse: singular matrix");
      }
      if (pivot != col) {
        for (int c = 0; c < 8; ++c) std::swap(a[col * 8 + c], a[pivot * 8 + c]);
      }
      const double d = a[col * 8 + col];
      for (int c = 0; c < 8; ++c) a[col * 8 + c] /= d;
      for (int r = 0; r < 4; ++r) {
        if (r == col) continue;
        const double f = a[r * 8 + col];
        if (f == 0.0) continue;
        for (int c = 0; c < 8; ++c) a[r * 8 + c] -= f * a[col * 8 + c];
      }
    }
    Mat4 out;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) out.at(r, c) = a[r * 8 + 4 + c];
    }
    return out;
  }
};

/// Camera projection chain: a 3x4 projection applied after rectification
/// and the lidar-to-camera rigid transform.
struct Calibration {
  std::array<double, 12> projection{};  ///< row-major 3x4
  Mat4 rectification = Mat4::identity();
  Mat4 lidar_to_camera = Mat4::identity();

  Vec3 lidar_to_camera_point(const Vec3& p) const {
    return rectification.apply(lidar_to_camera.apply(p));
  }

  Vec3 camera_to_lidar_point(const Vec3& p) const {
    return (rectification * lidar_to_camera).inverse().apply(p);
  }
};

inline Calibration identity_calibration() {
  Calibration c;
  c.projection = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
  return c;
}

/// Parses "key: v v v ..." calibration text. Requires the projection,
/// rectification, and lidar-to-camera keys; other lines are ignored.
inline Calibration parse_calibration(const std::string& text) {
  Calibration cal;
  bool have_p = false, have_r = false, have_tr = false;

  std::istringstream stream(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    if (key != "P2" && key != "R0_rect" && key != "Tr_velo_to_cam") continue;

    std::istringstream vals(line.substr(colon + 1));
    std::vector<double> v;
    double x = 0.0;
    while (vals >> x) v.push_back(x);
    if (!vals.eof()) {
      throw format_error("parse_calibration: non-numeric value in '" + key + "' on line " +
                             std::to_string(line_no),
                         line_no);
    }

    if (key == "P2") {
      if (v.size() != 12) {
        throw format_error("parse_calibration: 'P2' needs 12 values, got " +
                               std::to_string(v.size()) + " on line " + std::to_string(line_no),
                           line_no);
      }
      std::copy(v.begin(), v.end(), cal.projection.begin());
      have_p = true;
    } else if (key == "R0_rect") {
      if (v.size() != 9) {
        throw format_error("parse_calibration: 'R0_rect' needs 9 values, got " +
                               std::to_string(v.size()) + " on line " + std::to_string(line_no),
                           line_no);
      }
      cal.rectification = Mat4::identity();
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) cal.rectification.at(r, c) = v[r * 3 + c];
      }
      have_r = true;
    } else {
      if (v.size() != 12) {
        throw format_error("parse_calibration: 'Tr_velo_to_cam' needs 12 values, got " +
                               std::to_string(v.size()) + " on line " + std::to_string(line_no),
                           line_no);
      }
      cal.lidar_to_camera = Mat4::identity();
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) cal.lidar_to_camera.at(r, c) = v[r * 4 + c];
      }
      have_tr = true;
    }
  }
  if (!have_p || !have_r || !have_tr) {
    std::string missing;
    if (!have_p) missing += " P2";
    if (!have_r) missing += " R0_rect";
    if (!have_tr) missing += " Tr_velo_to_cam";
    throw format_error("parse_calibration: missing key(s):" + missing, line_no);
  }
  return cal;
}

/// Connected group of returns. Point ids index the source scan and are
/// sorted; clusters are ordered by their smallest id.
struct Cluster {
  std::vector<std::size_t> point_ids;
  Vec3 centroid;
  Vec3 aabb_min;
  Vec3 aabb_max;
};

/// Groups points whose gaps never exceed `tolerance_m` (inclusive) and
/// keeps groups of at least `min_points`. The partition itself does not
/// depend on point order.
inline std::vector<Cluster> euclidean_cluster(const Scan& scan, double tolerance_m = 0.5,
                                              std::size_t min_points = 5) {
  if (!(tolerance_m > 0.0)) {
    throw domain_error("euclidean_cluster: tolerance must be positive");
  }
  const std::size_t n = scan.points.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::size_t> rank(n, 0);

  auto find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank[a] < rank[b]) std::swap(a, b);
    parent[b] = a;
    if (rank[a] == rank[b]) ++rank[a];
  };

  // Hash grid with cells of the tolerance size: any pair within tolerance
  // lands in the same or an adjacent cell.
  auto cell_key = [&](const CloudPoint& p) {
    const auto cx = static_cast<std::int64_t>(std::floor(p.x / tolerance_m));
    const auto cy = static_cast<std::int64_t>(std::floor(p.y / tolerance_m));
    const auto cz = static_cast<std::int64_t>(std::floor(p.z / tolerance_m));
    return std::tuple<std::int64_t, std::int64_t, std::int64_t>{cx, cy, cz};
  };
  struct KeyHash {
    std::size_t operator()(const std::tuple<std::int64_t, std::int64_t, std::int64_t>& k) const {
      const auto [x, y, z] = k;
      std::size_t h = std::hash<std::int64_t>{}(x);
      h ^= std::hash<std::int64_t>{}(y) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      h ^= std::hash<std::int64_t>{}(z) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      return h;
    }
  };
  std::unordered_map<std::tuple<std::int64_t, std::int64_t, std::int64_t>, std::vector<std::size_t>,
                     KeyHash>
      grid;
  grid.reserve(n);
  for (std::size_t i = 0; i < n; ++i) grid[cell_key(scan.points[i])].push_back(i);

  const double tol2 = tolerance_m * tolerance_m;
  for (std::size_t i = 0; i < n; ++i) {
    const CloudPoint& p = scan.points[i];
    const auto [cx, cy, cz] = cell_key(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = grid.find({cx + dx, cy + dy, cz + dz});
          if (it == grid.end()) continue;
          for (std::size_t j : it->second) {
            if (j <= i) continue;
            const CloudPoint& q = scan.points[j];
            const double ddx = p.x - q.x, ddy = p.y - q.y, ddz = p.z - q.z;
            if (ddx * ddx + ddy * ddy + ddz * ddz <= tol2) unite(i, j);
          }
        }
      }
    }
  }

  std::unordered_map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);

  std::vector<Cluster> clusters;
  for (auto& [root, ids] : groups) {
    if (ids.size() < min_points) continue;
    Cluster c;
    std::sort(ids.begin(), ids.end());
    c.point_ids = std::move(ids);
    c.aabb_min = Vec3{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};
    c.aabb_max = Vec3{-std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity(),
                      -std::numeric_limits<double>::infinity()};
    for (std::size_t i : c.point_ids) {
      const CloudPoint& p = scan.points[i];
      c.centroid.x += p.x;
      c.centroid.y += p.y;
      c.centroid.z += p.z;
      c.aabb_min.x = std::min(c.aabb_min.x, p.x);
      c.aabb_min.y = std::min(c.aabb_min.y, p.y);
      c.aabb_min.z = std::min(c.aabb_min.z, p.z);
      c.aabb_max.x = std::max(c.aabb_max.x, p.x);
      c.aabb_max.y = std::max(c.aabb_max.y, p.y);
      c.aabb_max.z = std::max(c.aabb_max.z, p.z);
    }
    const double k = static_cast<double>(c.point_ids.size());
    c.centroid.x /= k;
    c.centroid.y /= k;
    c.centroid.z /= k;
    clusters.push_back(std::move(c));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.point_ids.front() < b.point_ids.front(); });
  return clusters;
}

/// Image-plane box, pixel coordinates, y growing downward.
struct Box2D {
  double left = 0.0;
  double top = 0.0;
  double right = 0.0;
  double bottom = 0.0;

  double area() const { return std::max(0.0, right - left) * std::max(0.0, bottom - top); }
};

inline void validate(const Box2D& b) {
  if (!(b.left < b.right) || !(b.top < b.bottom)) {
    throw domain_error("Box2D: requires left < right and top < bottom");
  }
}

/// Bounds of the box's eight corners on the image plane. The box must sit
/// fully in front of the camera.
inline Box2D project_to_image(const Box3D& box, const Calibration& cal) {
  const Vec3 center_cam = cal.lidar_to_camera_point(box.center);
  if (center_cam.z <= 0.0) {
    throw domain_error("project_to_image: box center behind the camera plane");
  }
  Box2D out{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec3& corner : box.corners()) {
    const Vec3 c = cal.lidar_to_camera_point(corner);
    if (c.z <= 1e-9) {
      throw domain_error("project_to_image: box corner behind the camera plane");
    }
    const auto& P = cal.projection;
    const double u = P[0] * c.x + P[1] * c.y + P[2] * c.z + P[3];
    const double v = P[4] * c.x + P[5] * c.y + P[6] * c.z + P[7];
    const double w = P[8] * c.x + P[9] * c.y + P[10] * c.z + P[11];
    if (w <= 0.0) {
      throw domain_error("project_to_image: projected corner has non-positive depth");
    }
    out.left = std::min(out.left, u / w);
    out.right = std::max(out.right, u / w);
    out.top = std::min(out.top, v / w);
    out.bottom = std::max(out.bottom, v / w);
  }
  return out;
}

enum class OverlapMetric {
  iou,       ///< intersection over union
  over_min,  ///< intersection over the smaller box
};

inline double overlap_ratio(const Box2D& a, const Box2D& b, OverlapMetric metric = OverlapMetric::iou) {
  validate(a);
  validate(b);
  const double iw = std::min(a.right, b.right) - std::max(a.left, b.left);
  const double ih = std::min(a.bottom, b.bottom) - std::max(a.top, b.top);
  const double inter = std::max(0.0, iw) * std::max(0.0, ih);
  if (inter == 0.0) return 0.0;
  const double denom = metric == OverlapMetric::iou ? a.area() + b.area() - inter
                                                    : std::min(a.area(), b.area());
  return inter / denom;
}

/// True when the two detections overlap enough to count as one object.
inline bool fusion_check(const Box2D& a, const Box2D& b, double threshold = 0.5,
                         OverlapMetric metric = OverlapMetric::iou) {
  if (threshold < 0.0 || threshold > 1.0) {
    throw domain_error("fusion_check: threshold outside [0, 1]");
  }
  return overlap_ratio(a, b, metric) >= threshold;
}

}  // namespace pra
