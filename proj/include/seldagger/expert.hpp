#pragma once

#include "seldagger/track.hpp"
#include "seldagger/vehicle.hpp"

namespace seldagger {

enum class AngleUnit { Radians, Degrees };

/// Rule-based expert: tangent-angle steering over a short lookahead and a
/// curvature-anticipating speed set-point over a speed-scaled lookahead.
struct ExpertParams {
  double l_ref = 1.0;        // m
  double k_steering = 5.0;   // lookahead scale for the speed rule
  double v_cruise = 13.8;    // m/s
  double k_speed = 10.0;     // m/s per unit of beta
  AngleUnit beta_unit = AngleUnit::Radians;

  // Lateral/heading feedback so the expert recovers from learner-reached states.
  bool correction = true;
  double k_lat = 2.0;    // deg per m
  double k_head = 30.0;  // deg per rad

  // Actuator limits (mirrors SimParams).
  double max_steer = 35.0;
  double speed_max = 20.0;

  void validate() const;
};

/// Signed angle from `from` to `to` in degrees: arccos of the normalized dot
/// product, sign from the 2D cross product (positive = left).
double signed_tangent_angle_deg(const Vec2& from, const Vec2& to);

double expert_steering(const TrackSpline& spline, const TrackPose& pose,
                       const ExpertParams& params);
double expert_speed(const TrackSpline& spline, const TrackPose& pose, double v_current,
                    const ExpertParams& params);
ControlAction expert_action(const TrackSpline& spline, const TrackPose& pose,
                            double v_current, const ExpertParams& params);

/// Projects the car first; ProjectionDiverged propagates.
ControlAction expert_action(const TrackSpline& spline, const CarState& state,
                            const ExpertParams& params, double s_hint = 0.0,
                            double window = -1.0);

}  // namespace seldagger
