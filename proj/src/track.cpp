#include "seldagger/track.hpp"

#include "seldagger/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace seldagger {

namespace {

constexpr double kArcTolerance = 1e-7;  // per subdivision interval, meters
constexpr double kMaxTableStep = 0.5;   // meters of arc between table knots
constexpr int kMaxDepth = 40;

// 5-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 5> kGaussNodes = {
    0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {
    0.5688888888888889, 0.4786286704993665, 0.4786286704993665, 0.2369268850561891,
    0.2369268850561891};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

double normalize_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  angle = std::fmod(angle, two_pi);
  if (angle <= -std::numbers::pi) angle += two_pi;
  if (angle > std::numbers::pi) angle -= two_pi;
  return angle;
}

TrackSpline::TrackSpline(const std::vector<Waypoint>& waypoints, bool closed)
    : control_points_(waypoints), closed_(closed) {
  const int n = static_cast<int>(waypoints.size());
  if (n < 4) {
    throw Error(ErrorCode::TooFewWaypoints,
                "need at least 4 waypoints, got " + std::to_string(n));
  }
  for (const auto& w : waypoints) {
    if (!std::isfinite(w.x) || !std::isfinite(w.y)) {
      throw Error(ErrorCode::DegenerateSegment, "non-finite waypoint");
    }
    points_.emplace_back(w.x, w.y);
  }
  if (closed_) points_.push_back(points_.front());

  const int knots = static_cast<int>(points_.size());
  const int segments = knots - 1;
  params_.assign(knots, 0.0);
  std::vector<double> h(segments);
  for (int i = 0; i < segments; ++i) {
    h[i] = (points_[i + 1] - points_[i]).norm();
    if (h[i] < 1e-9) {
      throw Error(ErrorCode::DegenerateSegment,
                  "coincident waypoints at index " + std::to_string(i));
    }
    params_[i + 1] = params_[i] + h[i];
  }

  // Second derivatives from the tridiagonal (cyclic when closed) system.
  const int m = closed_ ? segments : knots;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 2);
  for (int i = 0; i < m; ++i) {
    if (!closed_ && (i == 0 || i == m - 1)) {
      a(i, i) = 1.0;
      continue;
    }
    const int prev = closed_ ? (i - 1 + segments) % segments : i - 1;
    const int next = closed_ ? (i + 1) % segments : i + 1;
    const double h_prev = closed_ ? h[(i - 1 + segments) % segments] : h[i - 1];
    const double h_next = h[i];
    a(i, prev) += h_prev;
    a(i, i) += 2.0 * (h_prev + h_next);
    a(i, next) += h_next;
    const Vec2 slope_next = (points_[i + 1] - points_[i]) / h_next;
    const Vec2 p_prev = closed_ && i == 0 ? points_[segments - 1] : points_[i - 1];
    const Vec2 slope_prev = (points_[i] - p_prev) / h_prev;
    rhs.row(i) = 6.0 * (slope_next - slope_prev).transpose();
  }
  const Eigen::MatrixXd sol = a.partialPivLu().solve(rhs);
  second_.resize(knots);
  for (int i = 0; i < m; ++i) second_[i] = sol.row(i).transpose();
  if (closed_) second_[segments] = second_[0];

  build_arclen_table();
}

int TrackSpline::segment_of(double u) const {
  const auto it = std::upper_bound(params_.begin(), params_.end(), u);
  int idx = static_cast<int>(it - params_.begin()) - 1;
  return std::clamp(idx, 0, static_cast<int>(params_.size()) - 2);
}

Vec2 TrackSpline::eval(double u) const {
  const int i = segment_of(u);
  const double h = params_[i + 1] - params_[i];
  const double b = (u - params_[i]) / h;
  const double a = 1.0 - b;
  return a * points_[i] + b * points_[i + 1] +
         ((a * a * a - a) * second_[i] + (b * b * b - b) * second_[i + 1]) * (h * h / 6.0);
}

Vec2 TrackSpline::deriv(double u) const {
  const int i = segment_of(u);
  const double h = params_[i + 1] - params_[i];
  const double b = (u - params_[i]) / h;
  const double a = 1.0 - b;
  return (points_[i + 1] - points_[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * second_[i] +
         (3.0 * b * b - 1.0) / 6.0 * h * second_[i + 1];
}

Vec2 TrackSpline::deriv2(double u) const {
  const int i = segment_of(u);
  const double h = params_[i + 1] - params_[i];
  const double b = (u - params_[i]) / h;
  return (1.0 - b) * second_[i] + b * second_[i + 1];
}

double TrackSpline::segment_length(double u0, double u1) const {
  const double half = 0.5 * (u1 - u0);
  const double mid = 0.5 * (u0 + u1);
  double sum = 0.0;
  for (std::size_t k = 0; k < kGaussNodes.size(); ++k) {
    sum += kGaussWeights[k] * deriv(mid + half * kGaussNodes[k]).norm();
  }
  return sum * half;
}

void TrackSpline::build_arclen_table() {
  table_.clear();
  table_.push_back({params_.front(), 0.0, deriv(params_.front()).norm()});

  struct Interval {
    double u0, u1, length;
    int depth;
  };
  for (std::size_t seg = 0; seg + 1 < params_.size(); ++seg) {
    // Depth-first, left to right, so knots come out ordered.
    std::vector<Interval> stack;
    const double u0 = params_[seg];
    const double u1 = params_[seg + 1];
    stack.push_back({u0, u1, segment_length(u0, u1), 0});
    while (!stack.empty()) {
      const Interval iv = stack.back();
      stack.pop_back();
      const double mid = 0.5 * (iv.u0 + iv.u1);
      const double left = segment_length(iv.u0, mid);
      const double right = segment_length(mid, iv.u1);
      const bool converged = std::abs(left + right - iv.length) < kArcTolerance;
      if ((converged && iv.length <= kMaxTableStep) || iv.depth >= kMaxDepth) {
        table_.push_back({iv.u1, table_.back().s + left + right, deriv(iv.u1).norm()});
        continue;
      }
      stack.push_back({mid, iv.u1, right, iv.depth + 1});
      stack.push_back({iv.u0, mid, left, iv.depth + 1});
    }
  }
  total_length_ = table_.back().s;
}

double TrackSpline::wrap(double s) const {
  if (!closed_) return std::clamp(s, 0.0, total_length_);
  double w = std::fmod(s, total_length_);
  if (w < 0.0) w += total_length_;
  if (w >= total_length_) w = 0.0;
  return w;
}

double TrackSpline::param_at(double s) const {
  s = wrap(s);
  const auto it = std::upper_bound(table_.begin(), table_.end(), s,
                                   [](double value, const Knot& k) { return value < k.s; });
  std::size_t j = static_cast<std::size_t>(it - table_.begin());
  j = std::clamp<std::size_t>(j, 1, table_.size() - 1) - 1;
  const Knot& k0 = table_[j];
  const Knot& k1 = table_[j + 1];
  const double ds = k1.s - k0.s;
  const double t = (s - k0.s) / ds;
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * k0.u + h10 * ds / k0.speed + h01 * k1.u + h11 * ds / k1.speed;
}

Vec2 TrackSpline::point_at(double s) const { return eval(param_at(s)); }

Vec2 TrackSpline::tangent_at(double s) const { return deriv(param_at(s)).normalized(); }

double TrackSpline::curvature_at(double s) const {
  const double u = param_at(s);
  const Vec2 d1 = deriv(u);
  const Vec2 d2 = deriv2(u);
  const double speed = d1.norm();
  return (d1.x() * d2.y() - d1.y() * d2.x()) / (speed * speed * speed);
}

TrackPose TrackSpline::project(double x, double y, double s_hint, double window) const {
  const Vec2 target(x, y);
  if (window <= 0.0) window = closed_ ? 0.5 * total_length_ : total_length_;
  double lo = s_hint - window;
  double hi = s_hint + window;
  if (!closed_) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, total_length_);
  }
  const int samples = std::max(8, static_cast<int>(std::ceil((hi - lo) / 0.5)));
  const double step = (hi - lo) / samples;

  double best_s = lo;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= samples; ++k) {
    const double s = lo + step * k;
    const double d2 = (point_at(s) - target).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best_s = s;
    }
  }

  // Golden-section refinement inside the neighbouring samples.
  double a = best_s - step;
  double b = best_s + step;
  if (!closed_) {
    a = std::max(a, 0.0);
    b = std::min(b, total_length_);
  }
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = (point_at(c) - target).squaredNorm();
  double fd = (point_at(d) - target).squaredNorm();
  for (int it = 0; it < 60 && (b - a) > 1e-9; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = (point_at(c) - target).squaredNorm();
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = (point_at(d) - target).squaredNorm();
    }
  }
  const double s = wrap(0.5 * (a + b));
  const Vec2 p = point_at(s);
  const Vec2 t = tangent_at(s);
  const Vec2 offset = target - p;
  if (offset.norm() > kMaxProjectionDistance) {
    throw Error(ErrorCode::ProjectionDiverged,
                "point is " + std::to_string(offset.norm()) + " m from the track");
  }
  TrackPose pose;
  pose.s = s;
  pose.lateral_offset = t.x() * offset.y() - t.y() * offset.x();
  pose.heading_error = 0.0;
  return pose;
}

TrackPose TrackSpline::project(double x, double y, double heading, double s_hint,
                               double window) const {
  TrackPose pose = project(x, y, s_hint, window);
  const Vec2 t = tangent_at(pose.s);
  pose.heading_error = normalize_angle(heading - std::atan2(t.y(), t.x()));
  return pose;
}

TrackDefinition parse_track(const std::string& text, const std::string& name) {
  TrackDefinition def;
  def.name = name;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::MalformedFile,
                  name + ":" + std::to_string(line_no) + ": " + why);
    };
    if (eq != std::string::npos) {
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key == "closed") {
        if (value == "true") def.closed = true;
        else if (value == "false") def.closed = false;
        else fail("closed must be true or false");
      } else if (key == "half_width") {
        try {
          std::size_t used = 0;
          def.half_width = std::stod(value, &used);
          if (used != value.size() || !(def.half_width > 0.0)) fail("bad half_width");
        } catch (const std::logic_error&) {
          fail("bad half_width");
        }
      } else {
        fail("unknown directive '" + key + "'");
      }
      continue;
    }
    std::istringstream fields(t);
    Waypoint w;
    std::string extra;
    if (!(fields >> w.x >> w.y) || (fields >> extra)) fail("expected 'x y'");
    def.waypoints.push_back(w);
  }
  return def;
}

TrackDefinition load_track_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open track file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string name = path;
  const auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return parse_track(buffer.str(), name);
}

}  // namespace seldagger
