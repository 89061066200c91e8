#include "oracles.hpp"

#include "seldagger/error.hpp"
#include "seldagger/network.hpp"
#include "seldagger/optimizer.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace seldagger;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::MalformedFile;
}

double norm_of(const std::vector<double>& g, const Tensor& t) {
  double s = 0.0;
  for (std::size_t k = t.offset; k < t.offset + t.size(); ++k) s += g[k] * g[k];
  return std::sqrt(s);
}

LabeledSample sample(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return oracle::random_sample(rng, 9, 8);
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("zero weights give a neutral output") {
  NetworkParameters p = init_params(Architecture{}, 1);
  for (double& x : p.values()) x = 0.0;
  const PolicyOutput o = forward(p, sample(3).observation);
  CHECK(o.steering == 0.0);
  CHECK(o.speed_cmd == 0.0);
  for (double q : o.class_probs) CHECK(q == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("class probabilities are a distribution") {
  const NetworkParameters p = init_params(Architecture{}, 4);
  for (std::uint64_t s = 0; s < 100; ++s) {
    LabeledSample x = sample(s);
    const PolicyOutput o = forward(p, x.observation);
    CHECK(std::accumulate(o.class_probs.begin(), o.class_probs.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-6));
    for (double& f : x.observation.road_features) f *= 1e3;
    for (double& v : x.observation.speed_history) v *= 1e3;
    const PolicyOutput big = forward(p, x.observation);
    CHECK(std::isfinite(big.steering));
    CHECK(std::isfinite(big.speed_cmd));
    for (double q : big.class_probs) CHECK(std::isfinite(q));
  }
}

TEST_CASE("shape mismatch on forward") {
  const NetworkParameters p = init_params(Architecture{}, 4);
  Observation o = sample(1).observation;
  o.road_features.pop_back();
  CHECK(code_of([&] { forward(p, o); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("loss closed forms") {
  const Thresholds t;
  LabeledSample target;
  target.expert_action = {3.0, 12.0};
  target.traj_class = TrajectoryClass::HR;

  PolicyOutput exact{3.0, 12.0, {}};
  exact.class_probs[class_index(TrajectoryClass::HR)] = 1.0;
  CHECK(loss(exact, target, LossWeights{}, t) == 0.0);

  PolicyOutput uniform{3.0, 12.0, {}};
  uniform.class_probs.fill(1.0 / 7.0);
  CHECK(loss(uniform, target, LossWeights{}, t) == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  CHECK(std::log(7.0) == doctest::Approx(1.9459).epsilon(1e-4));

  PolicyOutput off{4.0, 12.0, {}};
  off.class_probs.fill(1.0 / 7.0);
  CHECK(loss(off, target, LossWeights{1.0, 0.0, 0.0}, t) == doctest::Approx(2.0));
  CHECK(loss(off, target, LossWeights{1.0, 1.0, 1.0}, t) > 0.0);
}

TEST_CASE("l2 distance calibration") {
  const Thresholds t;
  const PolicyOutput o{1.25, 10.0, {}};
  CHECK(l2_distance(o, {1.25, 10.0}, t) == 0.0);
  CHECK(l2_distance(o, {1.0, 10.0}, t) == 0.5);
  CHECK(l2_distance(o, {1.25, 11.0}, t) == 0.5);
}

TEST_CASE("analytic gradients match central differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto gc = oracle::gradient_check(seed);
    for (const auto& e : gc.tensors) {
      CAPTURE(e.name);
      CAPTURE(seed);
      CHECK(e.relative < 1e-4);
    }
  }
}

TEST_CASE("duplicated batch has the single-sample gradient") {
  const NetworkParameters p = init_params(Architecture{}, 8);
  const LabeledSample x = sample(21);
  const std::vector<LabeledSample> one = {x};
  const std::vector<LabeledSample> two = {x, x};
  const auto g1 = gradients(p, one, LossWeights{}, Thresholds{});
  const auto g2 = gradients(p, two, LossWeights{}, Thresholds{});
  REQUIRE(g1.size() == g2.size());
  for (std::size_t k = 0; k < g1.size(); ++k) CHECK(g1[k] == doctest::Approx(g2[k]).epsilon(1e-14));
}

TEST_CASE("zero-weight heads receive no gradient") {
  const NetworkParameters p = init_params(Architecture{}, 8);
  std::vector<LabeledSample> batch;
  for (std::uint64_t s = 0; s < 4; ++s) batch.push_back(sample(s));
  const Layout& L = p.layout();

  const auto no_speed = gradients(p, batch, LossWeights{1.0, 0.0, 1.0}, Thresholds{});
  CHECK(norm_of(no_speed, L.speed_head.weight) == 0.0);
  CHECK(norm_of(no_speed, L.speed_head.bias) == 0.0);

  const auto no_class = gradients(p, batch, LossWeights{1.0, 1.0, 0.0}, Thresholds{});
  CHECK(norm_of(no_class, L.class_head.weight) == 0.0);

  const auto no_steer = gradients(p, batch, LossWeights{0.0, 1.0, 1.0}, Thresholds{});
  CHECK(norm_of(no_steer, L.steer_head.weight) == 0.0);

  const auto head_only = gradients(p, batch, LossWeights{}, Thresholds{}, TrainScope::ClassHead);
  CHECK(norm_of(head_only, L.class_head.weight) > 0.0);
  CHECK(norm_of(head_only, L.trunk[0].weight) == 0.0);
  CHECK(norm_of(head_only, L.lstm_recurrent) == 0.0);
}

TEST_CASE("initialization") {
  const Architecture a;
  CHECK(init_params(a, 5) == init_params(a, 5));
  CHECK_FALSE(init_params(a, 5).values()[0] == init_params(a, 6).values()[0]);
  const NetworkParameters p = init_params(a, 5);
  const Layout& L = p.layout();
  for (std::size_t k = 0; k < L.encoder[0].bias.size(); ++k)
    CHECK(p.values()[L.encoder[0].bias.offset + k] == 0.0);

  Architecture zero;
  zero.features = 0;
  zero.history = 0;
  zero.encoder = {0};
  zero.lstm_hidden = 0;
  zero.trunk = {0};
  CHECK(code_of([&] { init_params(zero, 1); }) == ErrorCode::InvalidArchitecture);
}

TEST_CASE("parameter files round trip bit-exactly") {
  const NetworkParameters p = init_params(Architecture{}, 12);
  const std::string text = serialize_params(p);
  const NetworkParameters q = deserialize_params(text);
  CHECK(p == q);
  CHECK(serialize_params(q) == text);
  const Observation o = sample(2).observation;
  const PolicyOutput a = forward(p, o), b = forward(q, o);
  CHECK(a.steering == b.steering);
  CHECK(a.speed_cmd == b.speed_cmd);
  CHECK(a.class_probs == b.class_probs);

  CHECK(code_of([&] { deserialize_params(text.substr(0, text.size() / 2)); }) ==
        ErrorCode::ChecksumError);
  std::string flipped = text;
  flipped[flipped.size() / 2] = flipped[flipped.size() / 2] == '1' ? '2' : '1';
  CHECK(code_of([&] { deserialize_params(flipped); }) == ErrorCode::ChecksumError);
  std::string future = text;
  future.replace(future.find("v1"), 2, "v9");
  CHECK(code_of([&] { deserialize_params(future); }) == ErrorCode::VersionMismatch);
  CHECK(code_of([&] { load_params("/nonexistent/p.params"); }) == ErrorCode::MissingFile);
}

}  // TEST_SUITE

TEST_SUITE("optimizer") {

TEST_CASE("zero gradient leaves parameters unchanged") {
  std::vector<double> w = {0.3, -1.2, 4.0};
  const std::vector<double> g(3, 0.0);
  NadamState st;
  optimizer_step(w, g, st, TrainConfig{});
  CHECK(w == std::vector<double>{0.3, -1.2, 4.0});
  CHECK(st.step == 1);
}

TEST_CASE("first Nadam step by hand") {
  TrainConfig c;
  c.learning_rate = 0.1;
  std::vector<double> w = {1.0};
  const std::vector<double> g = {0.5};
  NadamState st;
  optimizer_step(w, g, st, c);
  // m1 = 0.01*0.5, v1 = 0.001*0.25
  // m_hat = 0.99*0.005/(1-0.99^2) + 0.01*0.5/0.01 = 0.24874372 + 0.5
  // v_hat = 0.25, step = 0.1 * 0.74874372 / (0.5 + 1e-7)
  const double m_hat = 0.99 * 0.005 / (1.0 - 0.9801) + 0.5;
  CHECK(m_hat == doctest::Approx(0.748743718593).epsilon(1e-10));
  CHECK(w[0] == doctest::Approx(1.0 - 0.1 * m_hat / (0.5 + 1e-7)).epsilon(1e-12));
}

TEST_CASE("training") {
  // Steering label linear in the first curvature feature.
  std::vector<LabeledSample> data;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-0.02, 0.02);
  for (int i = 0; i < 200; ++i) {
    LabeledSample s;
    s.observation.road_features.assign(9, 0.0);
    s.observation.road_features[0] = u(rng);
    s.observation.speed_history.assign(8, 10.0);
    s.expert_action = {200.0 * s.observation.road_features[0], 10.0};
    s.measured_speed = 10.0;
    data.push_back(s);
  }
  TrainConfig cfg;
  cfg.epochs = 8;
  const Thresholds t;

  SUBCASE("loss decreases") {
    NetworkParameters p = init_params(Architecture{}, 2);
    const auto curve = train(p, data, cfg, t);
    REQUIRE(curve.size() == 8);
    CHECK(curve.back() < curve.front());
  }
  SUBCASE("deterministic") {
    NetworkParameters a = init_params(Architecture{}, 2), b = init_params(Architecture{}, 2);
    CHECK(train(a, data, cfg, t) == train(b, data, cfg, t));
    CHECK(a == b);
  }
  SUBCASE("zero epochs") {
    NetworkParameters p = init_params(Architecture{}, 2);
    const NetworkParameters before = p;
    cfg.epochs = 0;
    CHECK(train(p, data, cfg, t).empty());
    CHECK(p == before);
  }
  SUBCASE("empty dataset") {
    NetworkParameters p = init_params(Architecture{}, 2);
    CHECK(code_of([&] { train(p, std::span<const LabeledSample>{}, cfg, t); }) ==
          ErrorCode::EmptyDataset);
  }
}

TEST_CASE("seeded shuffle is a deterministic permutation") {
  std::vector<std::size_t> a(50), b(50);
  std::iota(a.begin(), a.end(), 0);
  std::iota(b.begin(), b.end(), 0);
  seeded_shuffle(a, 9);
  seeded_shuffle(b, 9);
  CHECK(a == b);
  std::vector<std::size_t> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
}

}  // TEST_SUITE
