#pragma once

#include "seldagger/track.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace testutil {

using seldagger::Waypoint;

inline std::vector<Waypoint> circle_points(double radius, int n, bool ccw = true) {
  std::vector<Waypoint> pts;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n * (ccw ? 1.0 : -1.0);
    pts.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return pts;
}

inline seldagger::TrackSpline circle(double radius, int n = 64, bool ccw = true) {
  return seldagger::TrackSpline(circle_points(radius, n, ccw), true);
}

/// Stadium: two straights of `straight` m joined by half circles of `radius`.
inline std::vector<Waypoint> stadium_points(double straight, double radius, double spacing = 5.0) {
  std::vector<Waypoint> pts;
  const int ns = static_cast<int>(straight / spacing);
  const int nc = static_cast<int>(std::numbers::pi * radius / spacing);
  for (int i = 0; i < ns; ++i) pts.push_back({i * spacing, -radius});
  for (int i = 0; i < nc; ++i) {
    const double a = -std::numbers::pi / 2 + std::numbers::pi * i / nc;
    pts.push_back({straight + radius * std::cos(a), radius * std::sin(a)});
  }
  for (int i = 0; i < ns; ++i) pts.push_back({straight - i * spacing, radius});
  for (int i = 0; i < nc; ++i) {
    const double a = std::numbers::pi / 2 + std::numbers::pi * i / nc;
    pts.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return pts;
}

inline std::vector<Waypoint> line_points(int n, double spacing = 10.0) {
  std::vector<Waypoint> pts;
  for (int i = 0; i < n; ++i) pts.push_back({i * spacing, 0.0});
  return pts;
}

inline std::string asset(const std::string& name) {
  return std::string(SELDAGGER_ASSET_DIR) + "/" + name;
}

}  // namespace testutil
