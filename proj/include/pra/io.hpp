#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pra/error.hpp"
#include "pra/geometry.hpp"
#include "pra/perception.hpp"
#include "pra/sensor.hpp"

namespace pra {

static_assert(std::endian::native == std::endian::little,
              "binary readers assume a little-endian host");

namespace detail {

inline std::uint16_t read_u16(std::string_view bytes, std::size_t offset) {
  return static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes[offset])) |
         static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes[offset + 1])) << 8;
}

inline std::uint32_t read_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) {
    v = (v << 8) | static_cast<std::uint8_t>(bytes[offset + static_cast<std::size_t>(i)]);
  }
  return v;
}

inline int nearest_channel(const SensorConfig& config, double elevation_deg) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < config.channel_count; ++i) {
    const double d = std::abs(config.vertical_angles_deg[i] - elevation_deg);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace detail

/// Raw point file: consecutive little-endian float32 quadruples
/// (x, y, z, reflectance). Zero-length points carry no direction and are
/// skipped; channels come from the nearest configured beam elevation.
inline Scan read_pointcloud_bin(std::string_view bytes, const SensorConfig& config,
                                std::int64_t frame_id = 0) {
  validate(config);
  if (bytes.size() % 16 != 0) {
    throw format_error("read_pointcloud_bin: length " + std::to_string(bytes.size()) +
                           " is not a multiple of 16",
                       bytes.size() - bytes.size() % 16);
  }
  Scan scan;
  scan.config_id = config.id;
  scan.frame_id = frame_id;
  scan.points.reserve(bytes.size() / 16);
  for (std::size_t off = 0; off < bytes.size(); off += 16) {
    float f[4];
    std::memcpy(f, bytes.data() + off, 16);
    const double x = f[0], y = f[1], z = f[2];
    const double r = std::sqrt(x * x + y * y + z * z);
    if (r < 1e-9) continue;
    CloudPoint p;
    p.x = x;
    p.y = y;
    p.z = z;
    p.intensity = std::clamp(static_cast<double>(f[3]), 0.0, 1.0);
    p.range_m = r;
    p.azimuth_deg = normalize_azimuth_deg(rad2deg(std::atan2(y, x)));
    p.channel = detail::nearest_channel(config, rad2deg(std::asin(std::clamp(z / r, -1.0, 1.0))));
    p.timestamp_us = p.azimuth_deg / 360.0 * config.rotation_period_ms * 1000.0;
    scan.points.push_back(p);
  }
  return scan;
}

/// One annotation row: class plus camera-frame geometry.
struct LabelRecord {
  std::string type;
  double truncated = 0.0;
  int occluded = 0;
  double alpha = 0.0;
  double bbox_left = 0.0, bbox_top = 0.0, bbox_right = 0.0, bbox_bottom = 0.0;
  double height_m = 0.0, width_m = 0.0, length_m = 0.0;
  double x_m = 0.0, y_m = 0.0, z_m = 0.0;  ///< bottom-center, camera frame
  double rotation_y_rad = 0.0;

  bool targetable() const { return type != "DontCare" && height_m > 0.0; }
};

inline ObjectClass object_class_of(const LabelRecord& rec) {
  if (rec.type == "Pedestrian") return ObjectClass::pedestrian;
  if (rec.type == "Car" || rec.type == "Van" || rec.type == "Truck" || rec.type == "Tram") {
    return ObjectClass::vehicle;
  }
  return ObjectClass::other;
}

/// Parses annotation text: 15 whitespace-separated fields per line, blank
/// lines ignored.
inline std::vector<LabelRecord> read_labels(const std::string& text) {
  std::vector<LabelRecord> records;
  std::istringstream stream(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (fields >> tok) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() != 15) {
      throw format_error("read_labels: line " + std::to_string(line_no) + " has " +
                             std::to_string(tokens.size()) + " fields, expected 15",
                         line_no);
    }
    LabelRecord rec;
    rec.type = tokens[0];
    double num[14];
    for (std::size_t i = 1; i < 15; ++i) {
      std::size_t used = 0;
      try {
        num[i - 1] = std::stod(tokens[i], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tokens[i].size()) {
        throw format_error("read_labels: line " + std::to_string(line_no) + " field " +
                               std::to_string(i + 1) + " is not numeric: '" + tokens[i] + "'",
                           line_no);
      }
    }
    rec.truncated = num[0];
    rec.occluded = static_cast<int>(num[1]);
    rec.alpha = num[2];
    rec.bbox_left = num[3];
    rec.bbox_top = num[4];
    rec.bbox_right = num[5];
    rec.bbox_bottom = num[6];
    rec.height_m = num[7];
    rec.width_m = num[8];
    rec.length_m = num[9];
    rec.x_m = num[10];
    rec.y_m = num[11];
    rec.z_m = num[12];
    rec.rotation_y_rad = num[13];
    records.push_back(std::move(rec));
  }
  return records;
}

/// Annotation box moved into the lidar frame. The camera-frame bottom
/// center rises by half the height (camera y points down); the heading
/// maps through the inverse calibration rotation.
inline Box3D label_to_lidar_box(const LabelRecord& rec, const Calibration& cal) {
  if (!rec.targetable()) {
    throw domain_error("label_to_lidar_box: record is not a targetable object");
  }
  const Mat4 cam_from_lidar = cal.rectification * cal.lidar_to_camera;
  const Mat4 lidar_from_cam = cam_from_lidar.inverse();

  const Vec3 center_cam{rec.x_m, rec.y_m - rec.height_m / 2.0, rec.z_m};
  const Vec3 heading_cam{std::cos(rec.rotation_y_rad), 0.0, -std::sin(rec.rotation_y_rad)};

  Box3D box;
  box.center = lidar_from_cam.apply(center_cam);
  const Vec3 heading = lidar_from_cam.rotate(heading_cam);
  box.yaw_rad = std::atan2(heading.y, heading.x);
  box.length_m = rec.length_m;
  box.width_m = rec.width_m;
  box.height_m = rec.height_m;
  box.object_class = object_class_of(rec);
  return box;
}

/// Decoded spinning-unit packet.
struct RawPacket {
  struct Return {
    int block = 0;
    int channel = 0;
    double azimuth_deg = 0.0;
    double range_m = 0.0;
    double intensity = 0.0;  ///< normalized to [0, 1]
  };
  std::vector<Return> returns;
  double timestamp_us = 0.0;
  std::uint8_t factory_field1 = 0;
  std::uint8_t factory_field2 = 0;
};

inline constexpr std::size_t kRawPacketSize = 1206;
inline constexpr int kRawBlocksPerPacket = 12;
inline constexpr int kRawReturnsPerBlock = 32;
inline constexpr int kRawChannels = 16;

/// Decodes one 1206-byte packet: 12 blocks of a 0xFFEE flag, a little-
/// endian azimuth in hundredths of a degree, and 32 (range, intensity)
/// pairs with ranges in 2 mm units, then a microsecond timestamp and two
/// factory bytes. Zero ranges mean no return and are dropped.
inline RawPacket parse_raw_packet(std::string_view bytes) {
  if (bytes.size() != kRawPacketSize) {
    throw format_error("parse_raw_packet: packet is " + std::to_string(bytes.size()) +
                           " bytes, expected " + std::to_string(kRawPacketSize),
                       bytes.size());
  }
  RawPacket packet;
  for (int block = 0; block < kRawBlocksPerPacket; ++block) {
    const std::size_t base = static_cast<std::size_t>(block) * 100;
    const auto b0 = static_cast<std::uint8_t>(bytes[base]);
    const auto b1 = static_cast<std::uint8_t>(bytes[base + 1]);
    if (b0 != 0xFF || b1 != 0xEE) {
      throw format_error("parse_raw_packet: block " + std::to_string(block) +
                             " flag bytes are not 0xFFEE",
                         base);
    }
    const std::uint16_t azimuth_hundredths = detail::read_u16(bytes, base + 2);
    if (azimuth_hundredths >= 36000) {
      throw format_error("parse_raw_packet: block " + std::to_string(block) +
                             " azimuth out of range: " + std::to_string(azimuth_hundredths),
                         base + 2);
    }
    const double azimuth_deg = azimuth_hundredths / 100.0;
    for (int j = 0; j < kRawReturnsPerBlock; ++j) {
      const std::size_t off = base + 4 + static_cast<std::size_t>(j) * 3;
      const std::uint16_t units = detail::read_u16(bytes, off);
      if (units == 0) continue;
      RawPacket::Return r;
      r.block = block;
      r.channel = j % kRawChannels;
      r.azimuth_deg = azimuth_deg;
      r.range_m = units * 0.002;
      r.intensity = static_cast<std::uint8_t>(bytes[off + 2]) / 255.0;
      packet.returns.push_back(r);
    }
  }
  packet.timestamp_us = detail::read_u32(bytes, 1200);
  packet.factory_field1 = static_cast<std::uint8_t>(bytes[1204]);
  packet.factory_field2 = static_cast<std::uint8_t>(bytes[1205]);
  return packet;
}

enum class ScanFormat { csv, pcd };

inline constexpr std::string_view kScanCsvHeader = "frame,channel,azimuth_deg,x,y,z,intensity,range_m";

/// Serializes a scan. Both formats are plain text, print doubles with nine
/// significant digits, and round-trip through read_scan byte-identically.
inline std::string write_scan(const Scan& scan, ScanFormat format = ScanFormat::csv) {
  std::string out;
  if (format == ScanFormat::csv) {
    out.append(kScanCsvHeader);
    out.push_back('\n');
    for (const CloudPoint& p : scan.points) {
      out.append(std::to_string(scan.frame_id));
      out.push_back(',');
      out.append(std::to_string(p.channel));
      out.push_back(',');
      out.append(detail::format_double(p.azimuth_deg));
      out.push_back(',');
      out.append(detail::format_double(p.x));
      out.push_back(',');
      out.append(detail::format_double(p.y));
      out.push_back(',');
      out.append(detail::format_double(p.z));
      out.push_back(',');
      out.append(detail::format_double(p.intensity));
      out.push_back(',');
      out.append(detail::format_double(p.range_m));
      out.push_back('\n');
    }
    return out;
  }

  const std::string n = std::to_string(scan.points.size());
  out.append("# frame ").append(std::to_string(scan.frame_id)).push_back('\n');
  out.append("VERSION .7\n");
  out.append("FIELDS x y z intensity channel\n");
  out.append("SIZE 8 8 8 8 4\n");
  out.append("TYPE F F F F I\n");
  out.append("COUNT 1 1 1 1 1\n");
  out.append("WIDTH ").append(n).push_back('\n');
  out.append("HEIGHT 1\n");
  out.append("POINTS ").append(n).push_back('\n');
  out.append("DATA ascii\n");
  for (const CloudPoint& p : scan.points) {
    out.append(detail::format_double(p.x));
    out.push_back(' ');
    out.append(detail::format_double(p.y));
    out.push_back(' ');
    out.append(detail::format_double(p.z));
    out.push_back(' ');
    out.append(detail::format_double(p.intensity));
    out.push_back(' ');
    out.append(std::to_string(p.channel));
    out.push_back('\n');
  }
  return out;
}

namespace detail {

inline double parse_double_field(const std::string& token, std::size_t line_no,
                                 const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || token.empty()) {
    throw format_error("read_scan: line " + std::to_string(line_no) + ": bad " + what + " value '" +
                           token + "'",
                       line_no);
  }
  return v;
}

inline Scan read_scan_csv(const std::string& text) {
  std::istringstream stream(text);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(stream, line)) {
    throw format_error("read_scan: empty input", 1);
  }
  ++line_no;
  if (line != kScanCsvHeader) {
    throw format_error("read_scan: line 1: bad header '" + line + "'", 1);
  }

  Scan scan;
  bool have_frame = false;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      tokens.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (tokens.size() != 8) {
      throw format_error("read_scan: line " + std::to_string(line_no) + " has " +
                             std::to_string(tokens.size()) + " fields, expected 8",
                         line_no);
    }
    const double frame = parse_double_field(tokens[0], line_no, "frame");
    if (!have_frame) {
      scan.frame_id = static_cast<std::int64_t>(frame);
      have_frame = true;
    } else if (static_cast<std::int64_t>(frame) != scan.frame_id) {
      throw format_error("read_scan: line " + std::to_string(line_no) +
                             ": frame id differs from the first row",
                         line_no);
    }
    CloudPoint p;
    p.channel = static_cast<int>(parse_double_field(tokens[1], line_no, "channel"));
    p.azimuth_deg = parse_double_field(tokens[2], line_no, "azimuth");
    p.x = parse_double_field(tokens[3], line_no, "x");
    p.y = parse_double_field(tokens[4], line_no, "y");
    p.z = parse_double_field(tokens[5], line_no, "z");
    p.intensity = parse_double_field(tokens[6], line_no, "intensity");
    p.range_m = parse_double_field(tokens[7], line_no, "range");
    scan.points.push_back(p);
  }
  return scan;
}

inline Scan read_scan_pcd(const std::string& text) {
  std::istringstream stream(text);
  std::string line;
  std::size_t line_no = 0;
  Scan scan;
  long declared_points = -1;
  bool in_data = false;
  std::size_t rows = 0;

  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!in_data) {
      std::istringstream fields(line);
      std::string key;
      fields >> key;
      if (key == "#") {
        std::string word;
        fields >> word;
        if (word == "frame") {
          long long frame = 0;
          if (fields >> frame) scan.frame_id = frame;
        }
        continue;
      }
      if (key == "VERSION" || key == "SIZE" || key == "TYPE" || key == "COUNT" ||
          key == "WIDTH" || key == "HEIGHT" || key == "VIEWPOINT") {
        continue;
      }
      if (key == "FIELDS") {
        std::string rest;
        std::getline(fields, rest);
        if (rest != " x y z intensity channel") {
          throw format_error("read_scan: line " + std::to_string(line_no) +
                                 ": unsupported field layout '" + rest + "'",
                             line_no);
        }
        continue;
      }
      if (key == "POINTS") {
        if (!(fields >> declared_points) || declared_points < 0) {
          throw format_error("read_scan: line " + std::to_string(line_no) + ": bad POINTS count",
                             line_no);
        }
        continue;
      }
      if (key == "DATA") {
        std::string mode;
        fields >> mode;
        if (mode != "ascii") {
          throw format_error("read_scan: line " + std::to_string(line_no) +
                                 ": unsupported DATA mode '" + mode + "'",
                             line_no);
        }
        in_data = true;
        continue;
      }
      throw format_error("read_scan: line " + std::to_string(line_no) + ": unknown header '" + key +
                             "'",
                         line_no);
    }

    std::istringstream fields(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (fields >> tok) tokens.push_back(tok);
    if (tokens.size() != 5) {
      throw format_error("read_scan: line " + std::to_string(line_no) + " has " +
                             std::to_string(tokens.size()) + " fields, expected 5",
                         line_no);
    }
    const double x = parse_double_field(tokens[0], line_no, "x");
    const double y = parse_double_field(tokens[1], line_no, "y");
    const double z = parse_double_field(tokens[2], line_no, "z");
    const double intensity = parse_double_field(tokens[3], line_no, "intensity");
    const int channel = static_cast<int>(parse_double_field(tokens[4], line_no, "channel"));
    ++rows;
    const double r = std::sqrt(x * x + y * y + z * z);
    if (r < 1e-9) continue;  // direction undefined; nothing we write produces this
    CloudPoint p;
    p.x = x;
    p.y = y;
    p.z = z;
    p.intensity = intensity;
    p.channel = channel;
    p.range_m = r;
    p.azimuth_deg = normalize_azimuth_deg(rad2deg(std::atan2(y, x)));
    scan.points.push_back(p);
  }
  if (!in_data) {
    throw format_error("read_scan: missing DATA section", line_no);
  }
  if (declared_points >= 0 && static_cast<long>(rows) != declared_points) {
    throw format_error("read_scan: POINTS declares " + std::to_string(declared_points) +
                           " rows but " + std::to_string(rows) + " follow",
                       line_no);
  }
  return scan;
}

}  // namespace detail

/// Reads either serialized form, sniffing the format from the first bytes.
inline Scan read_scan(const std::string& text) {
  if (text.rfind("frame,channel,", 0) == 0) return detail::read_scan_csv(text);
  if (text.rfind("# frame", 0) == 0 || text.rfind("VERSION", 0) == 0) {
    return detail::read_scan_pcd(text);
  }
  throw format_error("read_scan: unrecognized scan format", 0);
}

}  // namespace pra
