#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace seldagger {

using Vec2 = Eigen::Vector2d;

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
};

/// Car location relative to the centerline. Positive lateral offset and
/// heading error mean "left of / rotated left of" the travel direction.
struct TrackPose {
  double s = 0.0;
  double lateral_offset = 0.0;
  double heading_error = 0.0;
};

/**
 * Interpolating cubic spline through the waypoints, parametrized by
 * cumulative chord length and re-indexed by arc length.
 *
 * Closed tracks use periodic end conditions (C2 across the seam), open
 * tracks natural ones. The arc-length table is built once by adaptive
 * Gauss-Legendre subdivision; queries are a binary search plus cubic
 * Hermite interpolation of the parameter, so no iterative solve happens
 * at query time. Immutable after construction.
 */
class TrackSpline {
 public:
  TrackSpline(const std::vector<Waypoint>& waypoints, bool closed);

  bool closed() const { return closed_; }
  double total_length() const { return total_length_; }
  const std::vector<Waypoint>& control_points() const { return control_points_; }

  /// Wraps modulo total_length on closed tracks, clamps on open ones.
  double wrap(double s) const;
  double advance(double s, double ds) const { return wrap(s + ds); }

  Vec2 point_at(double s) const;
  Vec2 tangent_at(double s) const;
  /// Signed curvature, positive when the path turns left.
  double curvature_at(double s) const;

  /// Nearest point search within `window` meters of arc around `s_hint`
  /// (default: half the track, i.e. the whole loop for closed tracks).
  /// Throws ProjectionDiverged if the point is farther than
  /// `max_distance` from the curve.
  TrackPose project(double x, double y, double s_hint, double window = -1.0) const;
  TrackPose project(double x, double y, double heading, double s_hint, double window) const;

  static constexpr double kMaxProjectionDistance = 20.0;

 private:
  struct Knot {
    double u;      // chord parameter
    double s;      // arc length
    double speed;  // |dP/du|
  };

  int segment_of(double u) const;
  Vec2 eval(double u) const;
  Vec2 deriv(double u) const;
  Vec2 deriv2(double u) const;
  double param_at(double s) const;
  double segment_length(double u0, double u1) const;
  void build_arclen_table();

  std::vector<Waypoint> control_points_;
  bool closed_;
  std::vector<Vec2> points_;   // knots, closed tracks repeat the first point
  std::vector<double> params_; // chord parameter at each knot
  std::vector<Vec2> second_;   // second derivative at each knot
  std::vector<Knot> table_;
  double total_length_ = 0.0;
};

/// Parsed track file: waypoints plus the directives that travel with them.
struct TrackDefinition {
  std::string name;
  std::vector<Waypoint> waypoints;
  bool closed = true;
  double half_width = 4.0;
};

/// Track file format: `x y` per line, `#` comments, `closed=true|false`
/// and `half_width=<m>` directives.
TrackDefinition load_track_file(const std::string& path);
TrackDefinition parse_track(const std::string& text, const std::string& name);

struct Track {
  std::string name;
  TrackSpline spline;
  double half_width;

  explicit Track(const TrackDefinition& def)
      : name(def.name), spline(def.waypoints, def.closed), half_width(def.half_width) {}
};

double normalize_angle(double angle);

}  // namespace seldagger
