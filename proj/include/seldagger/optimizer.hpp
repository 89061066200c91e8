#pragma once

#include "seldagger/network.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace seldagger {

struct TrainConfig {
  double learning_rate = 1e-3;  // desk-scale default; 1e-5 for the large-image setting
  double momentum = 0.99;       // first-moment decay
  double beta2 = 0.999;         // second-moment decay
  double epsilon = 1e-7;
  int epochs = 10;
  int batch_size = 32;
  LossWeights weights;
  std::uint64_t seed = 1;

  void validate() const;
};

struct NadamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  explicit NadamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Adam moments with a Nesterov lookahead on the first moment:
///   m_hat = b1 * m_t / (1 - b1^(t+1)) + (1 - b1) * g / (1 - b1^t)
///   v_hat = v_t / (1 - b2^t)
///   theta -= lr * m_hat / (sqrt(v_hat) + eps)
void optimizer_step(std::span<double> params, std::span<const double> grad, NadamState& state,
                    const TrainConfig& config);

/// Seeded mini-batch epochs over `data`; returns the mean loss of each epoch
/// (averaged over the batches as they were visited).
std::vector<double> train(NetworkParameters& params, std::span<const LabeledSample> data,
                          const TrainConfig& config, const Thresholds& scales,
                          TrainScope scope = TrainScope::All);

/// Fisher-Yates with an explicit engine, identical on every platform.
void seeded_shuffle(std::vector<std::size_t>& order, std::uint64_t seed);

}  // namespace seldagger
