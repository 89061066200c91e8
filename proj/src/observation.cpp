#include "seldagger/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace seldagger {

std::vector<double> SpeedHistory::window(int length) const {
  std::vector<double> out(static_cast<std::size_t>(length), 0.0);
  const int have = std::min<int>(length, static_cast<int>(buf_.size()));
  for (int k = 0; k < have; ++k) {
    out[length - 1 - k] = buf_[buf_.size() - 1 - k];
  }
  return out;
}

bool label_consistent(const LabeledSample& sample, const Thresholds& t) {
  const bool safe = sample.traj_class == TrajectoryClass::Safe;
  return classify(sample.expert_action, sample.measured_speed, safe, t) == sample.traj_class;
}

Observation observe(const TrackSpline& spline, const TrackPose& pose,
                    const std::vector<double>& speed_history, const ObservationConfig& cfg) {
  Observation obs;
  obs.road_features.reserve(cfg.curvature_offsets.size() + 2);
  for (double offset : cfg.curvature_offsets) {
    obs.road_features.push_back(spline.curvature_at(spline.advance(pose.s, offset)));
  }
  obs.road_features.push_back(pose.lateral_offset);
  obs.road_features.push_back(pose.heading_error);
  // Keep the newest H speeds, oldest first, zero-padded on the left.
  const auto h = static_cast<std::size_t>(cfg.history);
  obs.speed_history.assign(h, 0.0);
  const std::size_t have = std::min(h, speed_history.size());
  std::copy(speed_history.end() - static_cast<std::ptrdiff_t>(have), speed_history.end(),
            obs.speed_history.end() - static_cast<std::ptrdiff_t>(have));
  return obs;
}

Observation observe(const TrackSpline& spline, const CarState& state,
                    const SpeedHistory& history, const ObservationConfig& cfg, double s_hint,
                    double window) {
  const TrackPose pose = spline.project(state.x, state.y, state.heading, s_hint, window);
  return observe(spline, pose, history.window(cfg.history), cfg);
}

std::pair<LabeledSample, LabeledSample> augment_side_views(
    const TrackSpline& spline, const CarState& state, const SpeedHistory& history,
    const ControlAction& expert_action, const AugmentParams& params,
    const ObservationConfig& cfg, const Thresholds& thresholds, const SimParams& limits,
    double s_hint, double window) {
  const TrackPose center = spline.project(state.x, state.y, s_hint, window);
  const Vec2 tangent = spline.tangent_at(center.s);
  const Vec2 left_normal(-tangent.y(), tangent.x());
  const double yaw = params.gamma * std::numbers::pi / 180.0;

  auto make = [&](double side) {
    // side = +1: displaced right and yawed right, label steers left.
    CarState shifted = state;
    shifted.x -= side * params.lateral_shift * left_normal.x();
    shifted.y -= side * params.lateral_shift * left_normal.y();
    shifted.heading = normalize_angle(state.heading - side * yaw);

    ControlAction label = expert_action;
    label.steering += side * params.gamma;
    if (params.always_adjust_speed || std::abs(label.steering) > thresholds.tau_turn) {
      label.speed_cmd -= params.p_speed;
    }
    label = clamp_action(label, limits);

    LabeledSample sample;
    sample.observation = observe(spline, shifted, history, cfg, center.s, window);
    sample.expert_action = label;
    sample.measured_speed = state.speed;
    sample.traj_class = classify(label, state.speed, true, thresholds);
    return sample;
  };
  return {make(+1.0), make(-1.0)};
}

}  // namespace seldagger
