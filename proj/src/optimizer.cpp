#include "seldagger/optimizer.hpp"

#include "seldagger/error.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace seldagger {

void TrainConfig::validate() const {
  if (!(learning_rate > 0 && momentum > 0 && momentum < 1 && beta2 > 0 && beta2 < 1 &&
        epsilon > 0)) {
    throw Error(ErrorCode::TypeError, "optimizer rates must be positive, decays in (0, 1)");
  }
  if (batch_size < 1) throw Error(ErrorCode::TypeError, "train.batch_size must be >= 1");
  if (epochs < 0) throw Error(ErrorCode::TypeError, "train.epochs must be >= 0");
  if (weights.steer < 0 || weights.speed < 0 || weights.cls < 0) {
    throw Error(ErrorCode::TypeError, "loss weights must be non-negative");
  }
}

void optimizer_step(std::span<double> params, std::span<const double> grad, NadamState& state,
                    const TrainConfig& config) {
  if (state.m.size() != params.size()) state = NadamState(params.size());
  ++state.step;
  const double b1 = config.momentum;
  const double b2 = config.beta2;
  const double t = static_cast<double>(state.step);
  const double bias1_next = 1.0 - std::pow(b1, t + 1.0);
  const double bias1 = 1.0 - std::pow(b1, t);
  const double bias2 = 1.0 - std::pow(b2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grad[k];
    state.m[k] = b1 * state.m[k] + (1.0 - b1) * g;
    state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g;
    const double m_hat = b1 * state.m[k] / bias1_next + (1.0 - b1) * g / bias1;
    const double v_hat = state.v[k] / bias2;
    params[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void seeded_shuffle(std::vector<std::size_t>& order, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

std::vector<double> train(NetworkParameters& params, std::span<const LabeledSample> data,
                          const TrainConfig& config, const Thresholds& scales,
                          TrainScope scope) {
  config.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "cannot train on an empty dataset");
  std::vector<double> curve;
  NadamState state(params.size());
  std::vector<std::size_t> order(data.size());
  std::vector<LabeledSample> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    seeded_shuffle(order, config.seed * 1000003ull + static_cast<std::uint64_t>(epoch));
    double epoch_loss = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(data[order[k]]);
      epoch_loss += batch_loss(params, batch, config.weights, scales);
      const auto grad = gradients(params, batch, config.weights, scales, scope);
      optimizer_step(params.values(), grad, state, config);
      ++batches;
    }
    curve.push_back(epoch_loss / batches);
  }
  return curve;
}

}  // namespace seldagger
