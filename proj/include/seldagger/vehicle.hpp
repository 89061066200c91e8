#pragma once

#include <cstdint>

namespace seldagger {

/// Bits set in CarState::clamp_flags when step() had to clamp an input.
enum ClampFlag : std::uint8_t {
  kClampNone = 0,
  kClampSteering = 1 << 0,
  kClampSpeedCmd = 1 << 1,
};

struct CarState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, (-pi, pi]
  double speed = 0.0;    // m/s, >= 0
  std::uint8_t clamp_flags = kClampNone;  // diagnostics from the last step
};

/// Steering in degrees (positive = left) and a speed set-point in m/s.
struct ControlAction {
  double steering = 0.0;
  double speed_cmd = 0.0;
  bool operator==(const ControlAction&) const = default;
};

struct SimParams {
  double wheelbase = 2.7;   // m
  double dt = 0.05;         // s
  double max_steer = 35.0;  // deg
  double speed_gain = 1.0;  // 1/s
  double max_accel = 4.0;   // m/s^2
  double speed_max = 20.0;  // m/s

  void validate() const;
};

/// Clamp an action into the admissible box; sets clamp bits in `flags`.
ControlAction clamp_action(const ControlAction& action, const SimParams& params,
                           std::uint8_t* flags = nullptr);

/// One explicit-Euler step of the kinematic bicycle with a first-order,
/// acceleration-limited speed loop.
CarState step(const CarState& state, const ControlAction& action, const SimParams& params);

}  // namespace seldagger
