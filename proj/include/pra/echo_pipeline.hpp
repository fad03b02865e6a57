#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "pra/error.hpp"
#include "pra/sensor.hpp"

namespace pra {

/// One candidate return inside a receive window. `spoofed` is simulation
/// metadata; nothing downstream of return selection may read it.
struct Echo {
  double range_m = 0.0;
  double intensity = 0.0;
  bool spoofed = false;
};

/// All echoes competing within a single firing. Real units track at most
/// two; callers must not exceed that.
struct EchoColumn {
  int channel = 0;
  double azimuth_deg = 0.0;
  std::vector<Echo> echoes;
};

enum class ReturnMode { strongest, last, dual };

inline const char* to_string(ReturnMode m) {
  switch (m) {
    case ReturnMode::strongest: return "strongest";
    case ReturnMode::last: return "last";
    case ReturnMode::dual: return "dual";
  }
  return "?";
}

/// Receiver saturation: an echo at or above `dominance_threshold` blinds
/// the unit to everything else in the window, whatever the return mode.
struct SaturationPolicy {
  double dominance_threshold = 0.95;
};

namespace detail {

inline const Echo& strongest_echo(const std::vector<Echo>& echoes) {
  const Echo* best = &echoes.front();
  for (const Echo& e : echoes) {
    if (e.intensity > best->intensity ||
        (e.intensity == best->intensity && e.range_m < best->range_m)) {
      best = &e;
    }
  }
  return *best;
}

inline const Echo& last_echo(const std::vector<Echo>& echoes) {
  const Echo* best = &echoes.front();
  for (const Echo& e : echoes) {
    if (e.range_m > best->range_m ||
        (e.range_m == best->range_m && e.intensity > best->intensity)) {
      best = &e;
    }
  }
  return *best;
}

}  // namespace detail

/// Echoes the unit reports for one firing under the given return mode.
inline std::vector<Echo> select_returns(const EchoColumn& column, ReturnMode mode,
                                        const SaturationPolicy& policy = {}) {
  if (column.echoes.size() > 2) {
    throw domain_error("select_returns: a column holds at most two echoes");
  }
  if (column.echoes.empty()) return {};

  const bool saturated = std::any_of(column.echoes.begin(), column.echoes.end(), [&](const Echo& e) {
    return e.intensity >= policy.dominance_threshold;
  });
  if (saturated) return {detail::strongest_echo(column.echoes)};

  switch (mode) {
    case ReturnMode::strongest:
      return {detail::strongest_echo(column.echoes)};
    case ReturnMode::last:
      return {detail::last_echo(column.echoes)};
    case ReturnMode::dual: {
      const Echo& s = detail::strongest_echo(column.echoes);
      const Echo& l = detail::last_echo(column.echoes);
      if (&s == &l || (s.range_m == l.range_m && s.intensity == l.intensity)) return {s};
      return {s, l};
    }
  }
  return {};
}

/// Inclusive axis-aligned crop. Axes left unset pass everything.
struct Roi {
  struct Bounds {
    double lo = 0.0;
    double hi = 0.0;
  };
  std::optional<Bounds> x;
  std::optional<Bounds> y;
  std::optional<Bounds> z;

  bool admits(double px, double py, double pz) const {
    auto inside = [](const std::optional<Bounds>& b, double v) {
      return !b || (v >= b->lo && v <= b->hi);
    };
    return inside(x, px) && inside(y, py) && inside(z, pz);
  }
};

/// Range floors applied in sequence by the unit, its driver, and the
/// consuming stack. Only the largest floor is observable downstream.
struct FilterChain {
  std::string id;
  double sensor_mot_m = 0.0;
  double middleware_mot_m = 0.0;
  double framework_mot_m = 0.0;
  std::optional<Roi> roi;
};

inline void validate(const FilterChain& chain) {
  if (chain.sensor_mot_m < 0.0 || chain.middleware_mot_m < 0.0 || chain.framework_mot_m < 0.0) {
    throw domain_error("FilterChain: thresholds must be non-negative");
  }
}

/// Width of the range band an attacker can park spoofed echoes in and have
/// the stack discard them: the tightest floor any stage enforces.
inline double spoofing_region_width(const FilterChain& chain) {
  validate(chain);
  return std::max({chain.sensor_mot_m, chain.middleware_mot_m, chain.framework_mot_m});
}

/// Drops every point strictly below the chain's effective floor. Order and
/// all surviving fields are untouched; equality survives.
inline Scan apply_mot_filter(const Scan& scan, const FilterChain& chain) {
  const double floor_m = spoofing_region_width(chain);
  Scan out;
  out.config_id = scan.config_id;
  out.frame_id = scan.frame_id;
  out.points.reserve(scan.points.size());
  for (const CloudPoint& p : scan.points) {
    if (p.range_m >= floor_m) out.points.push_back(p);
  }
  return out;
}

/// Crops to the chain's region of interest, if it defines one.
inline Scan apply_roi_filter(const Scan& scan, const FilterChain& chain) {
  if (!chain.roi) return scan;
  Scan out;
  out.config_id = scan.config_id;
  out.frame_id = scan.frame_id;
  out.points.reserve(scan.points.size());
  for (const CloudPoint& p : scan.points) {
    if (chain.roi->admits(p.x, p.y, p.z)) out.points.push_back(p);
  }
  return out;
}

/// Named stacks with the floors each stage ships by default, in meters:
/// unit firmware, driver, then perception framework.
inline FilterChain filter_chain_preset(const std::string& name) {
  FilterChain c;
  c.id = name;
  if (name == "vlp16-ros") {
    c.sensor_mot_m = 0.40;
    c.middleware_mot_m = 0.40;
    c.framework_mot_m = 0.0;
  } else if (name == "vlp16-apollo") {
    c.sensor_mot_m = 0.40;
    c.middleware_mot_m = 0.40;
    c.framework_mot_m = 0.90;
  } else if (name == "vlp16-autoware") {
    c.sensor_mot_m = 0.40;
    c.middleware_mot_m = 0.40;
    c.framework_mot_m = 0.40;
  } else if (name == "hdl64-apollo") {
    c.sensor_mot_m = 0.40;
    c.middleware_mot_m = 0.40;
    c.framework_mot_m = 0.90;
  } else if (name == "hdl64-autoware") {
    c.sensor_mot_m = 0.40;
    c.middleware_mot_m = 0.40;
    c.framework_mot_m = 2.00;
  } else {
    throw domain_error("filter_chain_preset: unknown preset '" + name + "'");
  }
  return c;
}

}  // namespace pra
