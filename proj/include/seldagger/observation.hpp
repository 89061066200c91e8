#pragma once

#include "seldagger/labeling.hpp"
#include "seldagger/track.hpp"
#include "seldagger/vehicle.hpp"

#include <deque>
#include <utility>
#include <vector>

namespace seldagger {

struct ObservationConfig {
  std::vector<double> curvature_offsets = {2.0, 4.0, 8.0, 12.0, 16.0, 24.0, 32.0};  // m ahead
  int history = 8;  // speeds, at the simulation rate

  int feature_count() const { return static_cast<int>(curvature_offsets.size()) + 2; }
};

/// Policy input: K curvatures ahead, lateral offset and heading error, plus
/// the H most recent speeds (oldest first).
struct Observation {
  std::vector<double> road_features;
  std::vector<double> speed_history;

  bool operator==(const Observation&) const = default;
};

/// Rolling speed buffer owned by a single rollout.
class SpeedHistory {
 public:
  explicit SpeedHistory(int capacity) : capacity_(capacity) {}

  void push(double speed) {
    buf_.push_back(speed);
    if (static_cast<int>(buf_.size()) > capacity_) buf_.pop_front();
  }
  void fill(double speed) {
    buf_.assign(static_cast<std::size_t>(capacity_), speed);
  }
  /// Oldest first, left-padded with zeros up to `length`.
  std::vector<double> window(int length) const;

 private:
  int capacity_;
  std::deque<double> buf_;
};

struct LabeledSample {
  Observation observation;
  ControlAction expert_action;
  TrajectoryClass traj_class = TrajectoryClass::Safe;
  double measured_speed = 0.0;
  int iteration = 0;

  bool operator==(const LabeledSample&) const = default;
};

/// True when classify() on the stored fields reproduces traj_class.
bool label_consistent(const LabeledSample& sample, const Thresholds& t);

struct AugmentParams {
  double gamma = 2.0;          // deg
  double p_speed = 4.0;        // m/s
  double lateral_shift = 0.8;  // m
  bool always_adjust_speed = false;
};

Observation observe(const TrackSpline& spline, const TrackPose& pose,
                    const std::vector<double>& speed_history, const ObservationConfig& cfg);
Observation observe(const TrackSpline& spline, const CarState& state,
                    const SpeedHistory& history, const ObservationConfig& cfg,
                    double s_hint = 0.0, double window = -1.0);

/// Side-viewpoint samples around a center sample. The first sample's label
/// steers by +gamma; its pose is displaced right and yawed right, so the
/// label is the recovering direction. The second mirrors it. The speed
/// label drops by p_speed when the shifted label is a turn (|steer| >
/// tau_turn), or always with `always_adjust_speed`. Labels are clamped to
/// the actuator box and the samples are classed Safe (expert self-label).
std::pair<LabeledSample, LabeledSample> augment_side_views(
    const TrackSpline& spline, const CarState& state, const SpeedHistory& history,
    const ControlAction& expert_action, const AugmentParams& params,
    const ObservationConfig& cfg, const Thresholds& thresholds, const SimParams& limits,
    double s_hint = 0.0, double window = -1.0);

}  // namespace seldagger
