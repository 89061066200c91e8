#include "seldagger/network.hpp"

#include "seldagger/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace seldagger {

namespace {

using Eigen::VectorXd;
using ConstMat = Eigen::Map<const Eigen::MatrixXd>;
using ConstVec = Eigen::Map<const Eigen::VectorXd>;
using Mat = Eigen::Map<Eigen::MatrixXd>;
using Vec = Eigen::Map<Eigen::VectorXd>;

ConstMat cmat(std::span<const double> v, const Tensor& t) {
  return ConstMat(v.data() + t.offset, t.rows, t.cols);
}
ConstVec cvec(std::span<const double> v, const Tensor& t) {
  return ConstVec(v.data() + t.offset, t.rows);
}
Mat gmat(std::span<double> v, const Tensor& t) { return Mat(v.data() + t.offset, t.rows, t.cols); }
Vec gvec(std::span<double> v, const Tensor& t) { return Vec(v.data() + t.offset, t.rows); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

VectorXd relu(const VectorXd& z) { return z.cwiseMax(0.0); }

VectorXd relu_mask(const VectorXd& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

struct Cache {
  std::vector<VectorXd> enc_in;
  std::vector<VectorXd> enc_z;
  VectorXd enc_out;
  std::vector<double> lstm_x;
  std::vector<VectorXd> h;  // h[0] is the zero initial state
  std::vector<VectorXd> c;
  std::vector<VectorXd> gate_i, gate_f, gate_g, gate_o;
  std::vector<VectorXd> trunk_in;
  std::vector<VectorXd> trunk_z;
  VectorXd trunk_out;
  VectorXd logits;
  VectorXd probs;
  double steer_raw = 0.0;
  double speed_raw = 0.0;
};

void check_shapes(const NetworkParameters& params, const Observation& obs) {
  const auto& arch = params.architecture();
  if (static_cast<int>(obs.road_features.size()) != arch.features ||
      static_cast<int>(obs.speed_history.size()) != arch.history) {
    throw Error(ErrorCode::ShapeMismatch,
                "observation has " + std::to_string(obs.road_features.size()) + "+" +
                    std::to_string(obs.speed_history.size()) + " entries, network expects " +
                    std::to_string(arch.features) + "+" + std::to_string(arch.history));
  }
}

PolicyOutput forward_cached(const NetworkParameters& params, const Observation& obs,
                            Cache& cache) {
  check_shapes(params, obs);
  const auto& arch = params.architecture();
  const auto& lay = params.layout();
  const auto& norm = params.normalization();
  const auto v = params.values();

  VectorXd a(arch.features);
  for (int k = 0; k < arch.features; ++k) a[k] = obs.road_features[k] * norm.feature_scale[k];
  cache.enc_in.clear();
  cache.enc_z.clear();
  for (const auto& layer : lay.encoder) {
    cache.enc_in.push_back(a);
    VectorXd z = cmat(v, layer.weight) * a + cvec(v, layer.bias);
    a = relu(z);
    cache.enc_z.push_back(std::move(z));
  }
  cache.enc_out = a;
  cache.steer_raw = (cmat(v, lay.steer_head.weight) * a)(0) + cvec(v, lay.steer_head.bias)(0);

  const int hsz = arch.lstm_hidden;
  const auto wx = cmat(v, lay.lstm_input);
  const auto wh = cmat(v, lay.lstm_recurrent);
  const auto bl = cvec(v, lay.lstm_bias);
  cache.lstm_x.assign(arch.history, 0.0);
  cache.h.assign(1, VectorXd::Zero(hsz));
  cache.c.assign(1, VectorXd::Zero(hsz));
  cache.gate_i.clear();
  cache.gate_f.clear();
  cache.gate_g.clear();
  cache.gate_o.clear();
  for (int t = 0; t < arch.history; ++t) {
    const double x = obs.speed_history[t] * norm.speed_scale;
    cache.lstm_x[t] = x;
    const VectorXd z = wx.col(0) * x + wh * cache.h.back() + bl;
    VectorXd gi = z.segment(0, hsz).unaryExpr(&sigmoid);
    VectorXd gf = z.segment(hsz, hsz).unaryExpr(&sigmoid);
    VectorXd gg = z.segment(2 * hsz, hsz).array().tanh().matrix();
    VectorXd go = z.segment(3 * hsz, hsz).unaryExpr(&sigmoid);
    VectorXd c = gf.cwiseProduct(cache.c.back()) + gi.cwiseProduct(gg);
    VectorXd h = go.cwiseProduct(c.array().tanh().matrix());
    cache.gate_i.push_back(std::move(gi));
    cache.gate_f.push_back(std::move(gf));
    cache.gate_g.push_back(std::move(gg));
    cache.gate_o.push_back(std::move(go));
    cache.c.push_back(std::move(c));
    cache.h.push_back(std::move(h));
  }

  VectorXd u(cache.enc_out.size() + hsz);
  u << cache.enc_out, cache.h.back();
  cache.trunk_in.clear();
  cache.trunk_z.clear();
  for (const auto& layer : lay.trunk) {
    cache.trunk_in.push_back(u);
    VectorXd z = cmat(v, layer.weight) * u + cvec(v, layer.bias);
    u = relu(z);
    cache.trunk_z.push_back(std::move(z));
  }
  cache.trunk_out = u;
  cache.speed_raw = (cmat(v, lay.speed_head.weight) * u)(0) + cvec(v, lay.speed_head.bias)(0);
  cache.logits = cmat(v, lay.class_head.weight) * u + cvec(v, lay.class_head.bias);

  const double max_logit = cache.logits.maxCoeff();
  cache.probs = (cache.logits.array() - max_logit).exp().matrix();
  cache.probs /= cache.probs.sum();

  PolicyOutput out;
  out.steering = norm.steering_out * cache.steer_raw;
  out.speed_cmd = norm.speed_out * cache.speed_raw;
  for (int k = 0; k < kNumClasses; ++k) out.class_probs[k] = cache.probs[k];
  return out;
}

double log_prob(const Cache& cache, int target) {
  const double max_logit = cache.logits.maxCoeff();
  const double lse = max_logit + std::log((cache.logits.array() - max_logit).exp().sum());
  return cache.logits[target] - lse;
}

double sample_loss(const NetworkParameters& params, const Cache& cache,
                   const LabeledSample& target, const LossWeights& w, const Thresholds& s) {
  const auto& norm = params.normalization();
  const double d_steer = norm.steering_out * cache.steer_raw - target.expert_action.steering;
  const double d_speed = norm.speed_out * cache.speed_raw - target.expert_action.speed_cmd;
  return w.steer * s.scale_steer * std::abs(d_steer) +
         w.speed * s.scale_speed * std::abs(d_speed) -
         w.cls * w.class_weight[class_index(target.traj_class)] *
             log_prob(cache, class_index(target.traj_class));
}

void backward(const NetworkParameters& params, const Cache& cache, const LabeledSample& target,
              const LossWeights& w, const Thresholds& s, TrainScope scope,
              std::span<double> grad) {
  const auto& arch = params.architecture();
  const auto& lay = params.layout();
  const auto& norm = params.normalization();
  const auto v = params.values();

  // Class head.
  VectorXd d_logits = cache.probs;
  d_logits[class_index(target.traj_class)] -= 1.0;
  d_logits *= w.cls * w.class_weight[class_index(target.traj_class)];
  gmat(grad, lay.class_head.weight) += d_logits * cache.trunk_out.transpose();
  gvec(grad, lay.class_head.bias) += d_logits;
  if (scope == TrainScope::ClassHead) return;

  // Regression heads: d loss / d raw output.
  const double d_steer_err = norm.steering_out * cache.steer_raw - target.expert_action.steering;
  const double d_speed_err = norm.speed_out * cache.speed_raw - target.expert_action.speed_cmd;
  const double d_steer_raw = w.steer * s.scale_steer * sign_or_zero(d_steer_err) * norm.steering_out;
  const double d_speed_raw = w.speed * s.scale_speed * sign_or_zero(d_speed_err) * norm.speed_out;

  gmat(grad, lay.speed_head.weight) += d_speed_raw * cache.trunk_out.transpose();
  gvec(grad, lay.speed_head.bias)(0) += d_speed_raw;

  VectorXd d_u = cmat(v, lay.class_head.weight).transpose() * d_logits +
                 cmat(v, lay.speed_head.weight).transpose() * d_speed_raw;
  for (int l = static_cast<int>(lay.trunk.size()) - 1; l >= 0; --l) {
    const VectorXd dz = d_u.cwiseProduct(relu_mask(cache.trunk_z[l]));
    gmat(grad, lay.trunk[l].weight) += dz * cache.trunk_in[l].transpose();
    gvec(grad, lay.trunk[l].bias) += dz;
    d_u = cmat(v, lay.trunk[l].weight).transpose() * dz;
  }

  const int enc_width = static_cast<int>(cache.enc_out.size());
  const int hsz = arch.lstm_hidden;
  VectorXd d_enc = d_u.head(enc_width);
  VectorXd d_h = d_u.tail(hsz);

  gmat(grad, lay.steer_head.weight) += d_steer_raw * cache.enc_out.transpose();
  gvec(grad, lay.steer_head.bias)(0) += d_steer_raw;
  d_enc += cmat(v, lay.steer_head.weight).transpose() * d_steer_raw;

  for (int l = static_cast<int>(lay.encoder.size()) - 1; l >= 0; --l) {
    const VectorXd dz = d_enc.cwiseProduct(relu_mask(cache.enc_z[l]));
    gmat(grad, lay.encoder[l].weight) += dz * cache.enc_in[l].transpose();
    gvec(grad, lay.encoder[l].bias) += dz;
    if (l > 0) d_enc = cmat(v, lay.encoder[l].weight).transpose() * dz;
  }

  // Backpropagation through time over the speed history.
  const auto wh = cmat(v, lay.lstm_recurrent);
  auto g_wx = gmat(grad, lay.lstm_input);
  auto g_wh = gmat(grad, lay.lstm_recurrent);
  auto g_b = gvec(grad, lay.lstm_bias);
  VectorXd d_c = VectorXd::Zero(hsz);
  VectorXd dz(4 * hsz);
  for (int t = arch.history - 1; t >= 0; --t) {
    const VectorXd& gi = cache.gate_i[t];
    const VectorXd& gf = cache.gate_f[t];
    const VectorXd& gg = cache.gate_g[t];
    const VectorXd& go = cache.gate_o[t];
    const VectorXd tanh_c = cache.c[t + 1].array().tanh().matrix();
    const VectorXd d_o = d_h.cwiseProduct(tanh_c);
    d_c += d_h.cwiseProduct(go).cwiseProduct(
        (1.0 - tanh_c.array().square()).matrix());
    const VectorXd d_i = d_c.cwiseProduct(gg);
    const VectorXd d_g = d_c.cwiseProduct(gi);
    const VectorXd d_f = d_c.cwiseProduct(cache.c[t]);
    dz.segment(0, hsz) = d_i.cwiseProduct((gi.array() * (1.0 - gi.array())).matrix());
    dz.segment(hsz, hsz) = d_f.cwiseProduct((gf.array() * (1.0 - gf.array())).matrix());
    dz.segment(2 * hsz, hsz) = d_g.cwiseProduct((1.0 - gg.array().square()).matrix());
    dz.segment(3 * hsz, hsz) = d_o.cwiseProduct((go.array() * (1.0 - go.array())).matrix());
    g_wx.col(0) += dz * cache.lstm_x[t];
    g_wh += dz * cache.h[t].transpose();
    g_b += dz;
    d_h = wh.transpose() * dz;
    d_c = d_c.cwiseProduct(gf);
  }
}

void tree_reduce(std::vector<std::vector<double>>& parts) {
  for (std::size_t stride = 1; stride < parts.size(); stride *= 2) {
    for (std::size_t i = 0; i + stride < parts.size(); i += 2 * stride) {
      auto& dst = parts[i];
      const auto& src = parts[i + stride];
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hexfloat(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  const double x = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size()) {
    throw Error(ErrorCode::MalformedFile, "bad number '" + token + "'");
  }
  return x;
}

}  // namespace

void Architecture::validate() const {
  auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidArchitecture, why); };
  if (features <= 0) bad("features must be positive");
  if (history <= 0) bad("history must be positive");
  if (lstm_hidden <= 0) bad("lstm_hidden must be positive");
  if (encoder.empty()) bad("encoder needs at least one layer");
  if (trunk.empty()) bad("trunk needs at least one layer");
  for (int n : encoder) if (n <= 0) bad("encoder layer sizes must be positive");
  for (int n : trunk) if (n <= 0) bad("trunk layer sizes must be positive");
}

Normalization Normalization::defaults(int features) {
  Normalization n;
  n.feature_scale.assign(static_cast<std::size_t>(features), 50.0);
  if (features >= 2) {
    n.feature_scale[features - 2] = 1.0;
    n.feature_scale[features - 1] = 10.0;
  }
  return n;
}

TrajectoryClass PolicyOutput::predicted_class() const {
  const auto it = std::max_element(class_probs.begin(), class_probs.end());
  return class_from_index(static_cast<int>(it - class_probs.begin()));
}

Layout Layout::build(const Architecture& arch) {
  arch.validate();
  Layout lay;
  std::size_t offset = 0;
  auto tensor = [&](int rows, int cols) {
    Tensor t{offset, rows, cols};
    offset += t.size();
    return t;
  };
  auto dense = [&](int out, int in) {
    DenseLayer d;
    d.weight = tensor(out, in);
    d.bias = tensor(out, 1);
    return d;
  };
  int in = arch.features;
  for (int n : arch.encoder) {
    lay.encoder.push_back(dense(n, in));
    in = n;
  }
  const int enc_width = in;
  lay.steer_head = dense(1, enc_width);
  lay.lstm_input = tensor(4 * arch.lstm_hidden, 1);
  lay.lstm_recurrent = tensor(4 * arch.lstm_hidden, arch.lstm_hidden);
  lay.lstm_bias = tensor(4 * arch.lstm_hidden, 1);
  in = enc_width + arch.lstm_hidden;
  for (int n : arch.trunk) {
    lay.trunk.push_back(dense(n, in));
    in = n;
  }
  lay.speed_head = dense(1, in);
  lay.class_head = dense(Architecture::kClasses, in);
  lay.total = offset;
  return lay;
}

NetworkParameters::NetworkParameters(const Architecture& arch, std::uint64_t seed)
    : arch_(arch),
      layout_(Layout::build(arch)),
      norm_(Normalization::defaults(arch.features)),
      seed_(seed),
      values_(layout_.total, 0.0) {}

NetworkParameters init_params(const Architecture& arch, std::uint64_t seed) {
  NetworkParameters params(arch, seed);
  std::mt19937_64 rng(seed);
  auto uniform = [&](double limit) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return (2.0 * u - 1.0) * limit;
  };
  auto fill = [&](const Tensor& t, double gain) {
    const double limit = std::sqrt(gain / t.cols);
    auto vals = params.values();
    for (std::size_t k = 0; k < t.size(); ++k) vals[t.offset + k] = uniform(limit);
  };
  const auto& lay = params.layout();
  for (const auto& l : lay.encoder) fill(l.weight, 6.0);
  fill(lay.steer_head.weight, 3.0);
  fill(lay.lstm_input, 3.0);
  fill(lay.lstm_recurrent, 3.0);
  for (const auto& l : lay.trunk) fill(l.weight, 6.0);
  fill(lay.speed_head.weight, 3.0);
  fill(lay.class_head.weight, 3.0);
  return params;
}

PolicyOutput forward(const NetworkParameters& params, const Observation& obs) {
  Cache cache;
  return forward_cached(params, obs, cache);
}

double loss(const PolicyOutput& output, const LabeledSample& target, const LossWeights& w,
            const Thresholds& scales) {
  const double p = output.class_probs[class_index(target.traj_class)];
  const double ce = -std::log(std::max(p, 1e-300));
  return w.steer * scales.scale_steer * std::abs(output.steering - target.expert_action.steering) +
         w.speed * scales.scale_speed * std::abs(output.speed_cmd - target.expert_action.speed_cmd) +
         w.cls * w.class_weight[class_index(target.traj_class)] * ce;
}

std::vector<double> gradients(const NetworkParameters& params,
                              std::span<const LabeledSample> batch, const LossWeights& w,
                              const Thresholds& scales, TrainScope scope) {
  if (batch.empty()) throw Error(ErrorCode::EmptyDataset, "gradient of an empty batch");
  std::vector<std::vector<double>> parts(batch.size(), std::vector<double>(params.size(), 0.0));
  Cache cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    forward_cached(params, batch[i].observation, cache);
    backward(params, cache, batch[i], w, scales, scope, parts[i]);
  }
  tree_reduce(parts);
  std::vector<double> grad = std::move(parts.front());
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= inv;
  return grad;
}

double batch_loss(const NetworkParameters& params, std::span<const LabeledSample> batch,
                  const LossWeights& w, const Thresholds& scales) {
  if (batch.empty()) throw Error(ErrorCode::EmptyDataset, "loss of an empty batch");
  Cache cache;
  double total = 0.0;
  for (const auto& sample : batch) {
    forward_cached(params, sample.observation, cache);
    total += sample_loss(params, cache, sample, w, scales);
  }
  return total / static_cast<double>(batch.size());
}

double l2_distance(const PolicyOutput& output, const ControlAction& expert,
                   const Thresholds& scales) {
  return scaled_norm(output.action(), expert, scales);
}

std::string serialize_params(const NetworkParameters& params) {
  const auto& arch = params.architecture();
  const auto& norm = params.normalization();
  std::ostringstream out;
  out << "seldagger-params v" << kParamFormatVersion << '\n';
  out << "features " << arch.features << '\n';
  out << "history " << arch.history << '\n';
  out << "encoder";
  for (int n : arch.encoder) out << ' ' << n;
  out << '\n';
  out << "lstm " << arch.lstm_hidden << '\n';
  out << "trunk";
  for (int n : arch.trunk) out << ' ' << n;
  out << '\n';
  out << "classes " << Architecture::kClasses << '\n';
  out << "seed " << params.seed() << '\n';
  out << "feature_scale";
  for (double s : norm.feature_scale) out << ' ' << hexfloat(s);
  out << '\n';
  out << "speed_scale " << hexfloat(norm.speed_scale) << '\n';
  out << "output_scale " << hexfloat(norm.steering_out) << ' ' << hexfloat(norm.speed_out) << '\n';
  out << "values " << params.size() << '\n';
  for (double x : params.values()) out << hexfloat(x) << '\n';
  std::string body = out.str();
  char trailer[64];
  std::snprintf(trailer, sizeof trailer, "checksum %016llx\n",
                static_cast<unsigned long long>(fnv1a(body)));
  return body + trailer;
}

NetworkParameters deserialize_params(const std::string& text) {
  const std::string magic = "seldagger-params v";
  if (text.compare(0, magic.size(), magic) != 0) {
    throw Error(ErrorCode::ChecksumError, "not a parameter file");
  }
  {
    const auto eol = text.find('\n');
    const std::string version = text.substr(magic.size(), eol - magic.size());
    if (version != std::to_string(kParamFormatVersion)) {
      throw Error(ErrorCode::VersionMismatch, "parameter format v" + version + ", expected v" +
                                                  std::to_string(kParamFormatVersion));
    }
  }
  const auto pos = text.rfind("checksum ");
  if (pos == std::string::npos || (pos > 0 && text[pos - 1] != '\n')) {
    throw Error(ErrorCode::ChecksumError, "missing checksum trailer (truncated file?)");
  }
  const std::string body = text.substr(0, pos);
  std::string stored = text.substr(pos + 9);
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  char expected[32];
  std::snprintf(expected, sizeof expected, "%016llx",
                static_cast<unsigned long long>(fnv1a(body)));
  if (stored != expected) throw Error(ErrorCode::ChecksumError, "checksum mismatch");

  std::istringstream in(body);
  std::string line;
  std::getline(in, line);  // magic
  auto next_fields = [&](const std::string& key) {
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedFile, "missing " + key);
    std::istringstream fields(line);
    std::string name;
    fields >> name;
    if (name != key) throw Error(ErrorCode::MalformedFile, "expected " + key + ", got " + name);
    std::vector<std::string> out;
    std::string tok;
    while (fields >> tok) out.push_back(tok);
    return out;
  };
  auto ints = [&](const std::vector<std::string>& toks) {
    std::vector<int> out;
    for (const auto& t : toks) out.push_back(std::stoi(t));
    return out;
  };
  Architecture arch;
  arch.features = ints(next_fields("features")).at(0);
  arch.history = ints(next_fields("history")).at(0);
  arch.encoder = ints(next_fields("encoder"));
  arch.lstm_hidden = ints(next_fields("lstm")).at(0);
  arch.trunk = ints(next_fields("trunk"));
  if (ints(next_fields("classes")).at(0) != Architecture::kClasses) {
    throw Error(ErrorCode::ShapeMismatch, "class head size");
  }
  const std::uint64_t seed = std::stoull(next_fields("seed").at(0));
  NetworkParameters params(arch, seed);
  auto& norm = params.normalization();
  norm.feature_scale.clear();
  for (const auto& t : next_fields("feature_scale")) norm.feature_scale.push_back(parse_double(t));
  if (static_cast<int>(norm.feature_scale.size()) != arch.features) {
    throw Error(ErrorCode::ShapeMismatch, "feature_scale length");
  }
  norm.speed_scale = parse_double(next_fields("speed_scale").at(0));
  const auto outs = next_fields("output_scale");
  norm.steering_out = parse_double(outs.at(0));
  norm.speed_out = parse_double(outs.at(1));
  const auto count = std::stoull(next_fields("values").at(0));
  if (count != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "value count does not match architecture");
  }
  auto vals = params.values();
  for (std::size_t k = 0; k < count; ++k) {
    if (!std::getline(in, line)) throw Error(ErrorCode::MalformedFile, "short payload");
    vals[k] = parse_double(line);
  }
  return params;
}

void save_params(const NetworkParameters& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + path);
  out << serialize_params(params);
}

NetworkParameters load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open parameter file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return deserialize_params(buffer.str());
}

}  // namespace seldagger
