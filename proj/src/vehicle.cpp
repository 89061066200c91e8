#include "seldagger/vehicle.hpp"

#include "seldagger/error.hpp"
#include "seldagger/track.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace seldagger {

void SimParams::validate() const {
  if (!(wheelbase > 0 && dt > 0 && max_steer > 0 && speed_gain > 0 && max_accel > 0 &&
        speed_max > 0)) {
    throw Error(ErrorCode::TypeError, "sim parameters must all be positive");
  }
  if (dt > 0.05) throw Error(ErrorCode::TypeError, "sim.dt must be <= 0.05 s");
}

ControlAction clamp_action(const ControlAction& action, const SimParams& params,
                           std::uint8_t* flags) {
  ControlAction out = action;
  std::uint8_t bits = kClampNone;
  if (!(std::abs(out.steering) <= params.max_steer)) {
    out.steering = std::isnan(out.steering) ? 0.0
                                            : std::clamp(out.steering, -params.max_steer,
                                                         params.max_steer);
    bits |= kClampSteering;
  }
  if (!(out.speed_cmd >= 0.0 && out.speed_cmd <= params.speed_max)) {
    out.speed_cmd =
        std::isnan(out.speed_cmd) ? 0.0 : std::clamp(out.speed_cmd, 0.0, params.speed_max);
    bits |= kClampSpeedCmd;
  }
  if (flags) *flags = bits;
  return out;
}

CarState step(const CarState& state, const ControlAction& action, const SimParams& params) {
  CarState next;
  const ControlAction a = clamp_action(action, params, &next.clamp_flags);
  const double delta = a.steering * std::numbers::pi / 180.0;
  const double v = state.speed;

  next.x = state.x + v * std::cos(state.heading) * params.dt;
  next.y = state.y + v * std::sin(state.heading) * params.dt;
  next.heading =
      normalize_angle(state.heading + v / params.wheelbase * std::tan(delta) * params.dt);

  const double accel = std::clamp(params.speed_gain * (a.speed_cmd - v), -params.max_accel,
                                  params.max_accel);
  next.speed = std::clamp(v + accel * params.dt, 0.0, params.speed_max);
  return next;
}

}  // namespace seldagger
