#pragma once

#include "seldagger/vehicle.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace seldagger {

/// Safe plus six unsafe maneuver classes: Low/High speed, Left/Right/Straight.
enum class TrajectoryClass : int { Safe = 1, LL = 2, HL = 3, LR = 4, HR = 5, LS = 6, HS = 7 };

inline constexpr int kNumClasses = 7;
inline constexpr std::array<TrajectoryClass, kNumClasses> kAllClasses = {
    TrajectoryClass::Safe, TrajectoryClass::LL, TrajectoryClass::HL, TrajectoryClass::LR,
    TrajectoryClass::HR,   TrajectoryClass::LS, TrajectoryClass::HS};
inline constexpr std::array<TrajectoryClass, kNumClasses - 1> kUnsafeClasses = {
    TrajectoryClass::LL, TrajectoryClass::HL, TrajectoryClass::LR,
    TrajectoryClass::HR, TrajectoryClass::LS, TrajectoryClass::HS};

inline int class_index(TrajectoryClass c) { return static_cast<int>(c) - 1; }
inline TrajectoryClass class_from_index(int i) { return static_cast<TrajectoryClass>(i + 1); }
const char* class_name(TrajectoryClass c);
/// Throws MalformedFile for anything outside 1..7.
TrajectoryClass class_from_number(int number);

struct Thresholds {
  double tau_safe = 0.5;             // scaled-norm units
  double tau_turn = 0.25;            // deg
  double tau_speed_turn = 10.0;      // m/s
  double tau_speed_straight = 13.75; // m/s
  double scale_steer = 2.0;          // per deg
  double scale_speed = 0.5;          // per m/s

  void validate() const;
};

/// Euclidean action distance with steering and speed rescaled so that
/// 0.25 deg and 1 m/s each land on the default safety threshold.
double scaled_norm(double d_steering, double d_speed, const Thresholds& t);
double scaled_norm(const ControlAction& a, const ControlAction& b, const Thresholds& t);

/// Unsafe only when the norm strictly exceeds tau_safe.
inline bool is_safe(double norm, double tau_safe) { return !(norm > tau_safe); }

/// Class from the expert action and measured speed; `safe` short-circuits.
TrajectoryClass classify(const ControlAction& expert, double measured_speed, bool safe,
                         const Thresholds& t);

enum class WeaknessBand { Inside, Outside };

struct ClassNorm {
  TrajectoryClass cls;
  double norm;
};

struct ClassStats {
  int count = 0;
  int in_band = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double coefficient = 0.0;
};

struct ClassSelection {
  std::vector<TrajectoryClass> weak;       // two, strongest first
  std::vector<TrajectoryClass> allowable;  // ascending class order
};

struct WeaknessReport {
  std::array<ClassStats, kNumClasses> stats{};
  ClassSelection selection;

  const ClassStats& operator[](TrajectoryClass c) const { return stats[class_index(c)]; }
  ClassStats& operator[](TrajectoryClass c) { return stats[class_index(c)]; }
};

/// Per-class weakness coefficient: (in-band count / count) * mean norm.
/// The band is |x - mean| <= stddev (Inside) or its complement (Outside).
WeaknessReport weakness_coefficients(std::span<const ClassNorm> samples,
                                     WeaknessBand band = WeaknessBand::Inside);

/// Weak pair: the two unsafe classes with the largest coefficients, ties
/// broken by class order. Allowable: remaining unsafe classes that have
/// samples and a mean norm below `allowable_threshold`.
ClassSelection select_classes(const WeaknessReport& report, double allowable_threshold = 1.0);

/// "HR|HL" style join used in CSV output.
std::string join_classes(const std::vector<TrajectoryClass>& classes);
std::vector<TrajectoryClass> parse_classes(const std::string& text);

}  // namespace seldagger
