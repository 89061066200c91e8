#pragma once

#include "seldagger/labeling.hpp"
#include "seldagger/observation.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace seldagger {

/// Layer sizes of the multi-head policy.
///
///   road features -> encoder (ReLU FC stack) -> steering head
///   speed history -> LSTM (last hidden state)
///   [encoder out, LSTM out] -> trunk (ReLU FC stack) -> speed head, class head
struct Architecture {
  int features = 9;
  int history = 8;
  std::vector<int> encoder = {32, 32};
  int lstm_hidden = 8;
  std::vector<int> trunk = {32};

  static constexpr int kClasses = kNumClasses;

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

/// Fixed affine maps between physical units and network units. Stored with
/// the weights so a parameter file is self-describing.
struct Normalization {
  std::vector<double> feature_scale;  // per road feature
  double speed_scale = 0.1;           // history speeds, per m/s
  double steering_out = 1.0;          // deg per unit head output
  double speed_out = 10.0;            // m/s per unit head output

  /// 50 per 1/m on curvatures, 1 per m on lateral offset, 10 per rad on
  /// heading error.
  static Normalization defaults(int features);
  bool operator==(const Normalization&) const = default;
};

struct PolicyOutput {
  double steering = 0.0;   // deg
  double speed_cmd = 0.0;  // m/s
  std::array<double, kNumClasses> class_probs{};

  TrajectoryClass predicted_class() const;
  ControlAction action() const { return {steering, speed_cmd}; }
};

struct LossWeights {
  double steer = 1.0;
  double speed = 1.0;
  double cls = 1.0;
  // Per-target multiplier on the cross-entropy term.
  std::array<double, kNumClasses> class_weight = {1, 1, 1, 1, 1, 1, 1};
};

/// Offsets of every tensor inside the flat parameter buffer (column-major).
struct Tensor {
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
  bool operator==(const Tensor&) const = default;
};

struct DenseLayer {
  Tensor weight;
  Tensor bias;
  bool operator==(const DenseLayer&) const = default;
};

struct Layout {
  std::vector<DenseLayer> encoder;
  DenseLayer steer_head;
  Tensor lstm_input;      // 4H x 1, gate order i, f, g, o
  Tensor lstm_recurrent;  // 4H x H
  Tensor lstm_bias;       // 4H
  std::vector<DenseLayer> trunk;
  DenseLayer speed_head;
  DenseLayer class_head;
  std::size_t total = 0;

  static Layout build(const Architecture& arch);
  bool operator==(const Layout&) const = default;
};

class NetworkParameters {
 public:
  NetworkParameters(const Architecture& arch, std::uint64_t seed);

  const Architecture& architecture() const { return arch_; }
  const Layout& layout() const { return layout_; }
  const Normalization& normalization() const { return norm_; }
  Normalization& normalization() { return norm_; }
  std::uint64_t seed() const { return seed_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  bool operator==(const NetworkParameters&) const = default;

 private:
  Architecture arch_;
  Layout layout_;
  Normalization norm_;
  std::uint64_t seed_;
  std::vector<double> values_;
};

/// Uniform fan-in initialization (He-scaled for ReLU layers), zero biases.
NetworkParameters init_params(const Architecture& arch, std::uint64_t seed);

PolicyOutput forward(const NetworkParameters& params, const Observation& obs);

/// Weighted sum of scaled MAE on steering and speed and cross-entropy on
/// the class head.
double loss(const PolicyOutput& output, const LabeledSample& target, const LossWeights& w,
            const Thresholds& scales);

/// Which parameters receive gradient.
enum class TrainScope { All, ClassHead };

/// Exact gradient of the mean batch loss, flat and parameter-shaped.
/// Per-sample gradients are combined by pairwise tree reduction.
std::vector<double> gradients(const NetworkParameters& params,
                              std::span<const LabeledSample> batch, const LossWeights& w,
                              const Thresholds& scales, TrainScope scope = TrainScope::All);

/// Mean batch loss computed through the same path as gradients().
double batch_loss(const NetworkParameters& params, std::span<const LabeledSample> batch,
                  const LossWeights& w, const Thresholds& scales);

/// Scaled Euclidean action distance between a prediction and the expert.
double l2_distance(const PolicyOutput& output, const ControlAction& expert,
                   const Thresholds& scales);

// Parameter files: text header, hexfloat payload, FNV-1a checksum trailer.
inline constexpr int kParamFormatVersion = 1;
std::string serialize_params(const NetworkParameters& params);
NetworkParameters deserialize_params(const std::string& text);
void save_params(const NetworkParameters& params, const std::string& path);
NetworkParameters load_params(const std::string& path);

}  // namespace seldagger
