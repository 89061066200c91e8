#include "seldagger/expert.hpp"

#include "seldagger/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace seldagger {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double unsigned_angle(const Vec2& a, const Vec2& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace

void ExpertParams::validate() const {
  if (!(l_ref > 0 && k_steering > 0 && v_cruise > 0 && k_speed > 0)) {
    throw Error(ErrorCode::TypeError, "expert parameters must be positive");
  }
  if (!(k_lat >= 0 && k_head >= 0)) {
    throw Error(ErrorCode::TypeError, "expert correction gains must be non-negative");
  }
}

double signed_tangent_angle_deg(const Vec2& from, const Vec2& to) {
  const double alpha = unsigned_angle(from, to) * kRadToDeg;
  const double cross = from.x() * to.y() - from.y() * to.x();
  return cross < 0.0 ? -alpha : alpha;
}

double expert_steering(const TrackSpline& spline, const TrackPose& pose,
                       const ExpertParams& params) {
  const Vec2 t1 = spline.tangent_at(pose.s);
  const Vec2 t2 = spline.tangent_at(spline.advance(pose.s, params.l_ref));
  double steering = signed_tangent_angle_deg(t1, t2);
  if (params.correction) {
    steering -= params.k_lat * pose.lateral_offset + params.k_head * pose.heading_error;
  }
  return std::clamp(steering, -params.max_steer, params.max_steer);
}

double expert_speed(const TrackSpline& spline, const TrackPose& pose, double v_current,
                    const ExpertParams& params) {
  const double lookahead = params.l_ref * v_current * params.k_steering;
  const Vec2 t1 = spline.tangent_at(pose.s);
  const Vec2 t3 = spline.tangent_at(spline.advance(pose.s, lookahead));
  double beta = unsigned_angle(t1, t3);
  if (params.beta_unit == AngleUnit::Degrees) beta *= kRadToDeg;
  return std::clamp(params.v_cruise - beta * params.k_speed, 0.0, params.speed_max);
}

ControlAction expert_action(const TrackSpline& spline, const TrackPose& pose,
                            double v_current, const ExpertParams& params) {
  return {expert_steering(spline, pose, params),
          expert_speed(spline, pose, v_current, params)};
}

ControlAction expert_action(const TrackSpline& spline, const CarState& state,
                            const ExpertParams& params, double s_hint, double window) {
  const TrackPose pose = spline.project(state.x, state.y, state.heading, s_hint, window);
  return expert_action(spline, pose, state.speed, params);
}

}  // namespace seldagger
