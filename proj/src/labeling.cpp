#include "seldagger/labeling.hpp"

#include "seldagger/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace seldagger {

const char* class_name(TrajectoryClass c) {
  switch (c) {
    case TrajectoryClass::Safe: return "Safe";
    case TrajectoryClass::LL: return "LL";
    case TrajectoryClass::HL: return "HL";
    case TrajectoryClass::LR: return "LR";
    case TrajectoryClass::HR: return "HR";
    case TrajectoryClass::LS: return "LS";
    case TrajectoryClass::HS: return "HS";
  }
  return "?";
}

TrajectoryClass class_from_number(int number) {
  if (number < 1 || number > kNumClasses) {
    throw Error(ErrorCode::MalformedFile, "class index out of range: " + std::to_string(number));
  }
  return static_cast<TrajectoryClass>(number);
}

void Thresholds::validate() const {
  if (!(tau_safe > 0 && tau_turn > 0 && tau_speed_turn > 0 && tau_speed_straight > 0 &&
        scale_steer > 0 && scale_speed > 0)) {
    throw Error(ErrorCode::TypeError, "thresholds must all be positive");
  }
}

double scaled_norm(double d_steering, double d_speed, const Thresholds& t) {
  return std::hypot(t.scale_steer * d_steering, t.scale_speed * d_speed);
}

double scaled_norm(const ControlAction& a, const ControlAction& b, const Thresholds& t) {
  return scaled_norm(a.steering - b.steering, a.speed_cmd - b.speed_cmd, t);
}

TrajectoryClass classify(const ControlAction& expert, double measured_speed, bool safe,
                         const Thresholds& t) {
  if (safe) return TrajectoryClass::Safe;
  const double steer = expert.steering;
  if (std::abs(steer) > t.tau_turn) {
    const bool low = measured_speed < t.tau_speed_turn;
    if (steer > 0.0) return low ? TrajectoryClass::LL : TrajectoryClass::HL;
    return low ? TrajectoryClass::LR : TrajectoryClass::HR;
  }
  return measured_speed < t.tau_speed_straight ? TrajectoryClass::LS : TrajectoryClass::HS;
}

WeaknessReport weakness_coefficients(std::span<const ClassNorm> samples, WeaknessBand band) {
  WeaknessReport report;
  std::array<double, kNumClasses> sum{};
  for (const auto& s : samples) {
    auto& st = report[s.cls];
    ++st.count;
    sum[class_index(s.cls)] += s.norm;
  }
  for (int i = 0; i < kNumClasses; ++i) {
    auto& st = report.stats[i];
    if (st.count > 0) st.mean = sum[i] / st.count;
  }
  // One correction pass on the mean, so identical norms give sigma = 0.
  std::array<double, kNumClasses> resid{};
  for (const auto& s : samples) resid[class_index(s.cls)] += s.norm - report[s.cls].mean;
  for (int i = 0; i < kNumClasses; ++i) {
    auto& st = report.stats[i];
    if (st.count > 0) st.mean += resid[i] / st.count;
  }
  std::array<double, kNumClasses> sq{};
  for (const auto& s : samples) {
    const double d = s.norm - report[s.cls].mean;
    sq[class_index(s.cls)] += d * d;
  }
  for (int i = 0; i < kNumClasses; ++i) {
    auto& st = report.stats[i];
    if (st.count > 0) st.stddev = std::sqrt(sq[i] / st.count);
  }
  for (const auto& s : samples) {
    auto& st = report[s.cls];
    // Slack absorbs rounding in the mean when every norm is identical.
    const double slack = 1e-12 * (1.0 + std::abs(st.mean));
    const bool inside = std::abs(s.norm - st.mean) <= st.stddev + slack;
    if (inside == (band == WeaknessBand::Inside)) ++st.in_band;
  }
  for (auto& st : report.stats) {
    st.coefficient = st.count > 0 ? static_cast<double>(st.in_band) / st.count * st.mean : 0.0;
  }
  return report;
}

ClassSelection select_classes(const WeaknessReport& report, double allowable_threshold) {
  std::vector<TrajectoryClass> order(kUnsafeClasses.begin(), kUnsafeClasses.end());
  std::stable_sort(order.begin(), order.end(), [&](TrajectoryClass a, TrajectoryClass b) {
    return report[a].coefficient > report[b].coefficient;
  });
  ClassSelection sel;
  sel.weak = {order[0], order[1]};
  for (TrajectoryClass c : kUnsafeClasses) {
    if (c == sel.weak[0] || c == sel.weak[1]) continue;
    const auto& st = report[c];
    if (st.count > 0 && st.mean < allowable_threshold) sel.allowable.push_back(c);
  }
  return sel;
}

std::string join_classes(const std::vector<TrajectoryClass>& classes) {
  std::string out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (i) out += '|';
    out += class_name(classes[i]);
  }
  return out;
}

std::vector<TrajectoryClass> parse_classes(const std::string& text) {
  std::vector<TrajectoryClass> out;
  std::istringstream in(text);
  std::string token;
  while (std::getline(in, token, '|')) {
    if (token.empty()) continue;
    bool found = false;
    for (TrajectoryClass c : kAllClasses) {
      if (token == class_name(c)) {
        out.push_back(c);
        found = true;
      }
    }
    if (!found) throw Error(ErrorCode::MalformedFile, "unknown class '" + token + "'");
  }
  return out;
}

}  // namespace seldagger
