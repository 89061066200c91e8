#include "seldagger/config.hpp"

#include "seldagger/csv.hpp"
#include "seldagger/error.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

namespace seldagger {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void type_error(const std::string& where, const std::string& key,
                             const std::string& expected, const std::string& value) {
  throw Error(ErrorCode::TypeError,
              where + ": " + key + " expects " + expected + ", got '" + value + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_exact(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

std::string show_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  return out;
}

struct Binding {
  std::function<void(ExperimentConfig&, const std::string& value, const std::string& key,
                     const std::string& where)>
      set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class Access>
Binding real(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k,
                   const std::string& w) {
            double x;
            if (!parse_exact(v, x)) type_error(w, k, "a number", v);
            access(c) = x;
          },
          [access](const ExperimentConfig& c) {
            return show_double(access(const_cast<ExperimentConfig&>(c)));
          }};
}

template <class Access>
Binding integer(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k,
                   const std::string& w) {
            using T = std::remove_reference_t<decltype(access(c))>;
            T x;
            if (!parse_exact(v, x)) type_error(w, k, "an integer", v);
            access(c) = x;
          },
          [access](const ExperimentConfig& c) {
            return std::to_string(access(const_cast<ExperimentConfig&>(c)));
          }};
}

template <class Access>
Binding boolean(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k,
                   const std::string& w) {
            if (v == "true" || v == "1") access(c) = true;
            else if (v == "false" || v == "0") access(c) = false;
            else type_error(w, k, "true or false", v);
          },
          [access](const ExperimentConfig& c) {
            return std::string(access(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          }};
}

template <class Access>
Binding text(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string&,
                   const std::string&) { access(c) = v; },
          [access](const ExperimentConfig& c) {
            return access(const_cast<ExperimentConfig&>(c));
          }};
}

template <class Access>
Binding real_list(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k,
                   const std::string& w) {
            std::vector<double> out;
            for (const auto& item : split_list(v)) {
              double x;
              if (!parse_exact(item, x)) type_error(w, k, "a comma-separated number list", v);
              out.push_back(x);
            }
            if (out.empty()) type_error(w, k, "a non-empty list", v);
            access(c) = out;
          },
          [access](const ExperimentConfig& c) {
            std::string s;
            for (double x : access(const_cast<ExperimentConfig&>(c))) {
              if (!s.empty()) s += ',';
              s += show_double(x);
            }
            return s;
          }};
}

template <class Access>
Binding int_list(Access access) {
  return {[access](ExperimentConfig& c, const std::string& v, const std::string& k,
                   const std::string& w) {
            std::vector<int> out;
            for (const auto& item : split_list(v)) {
              int x;
              if (!parse_exact(item, x)) type_error(w, k, "a comma-separated integer list", v);
              out.push_back(x);
            }
            if (out.empty()) type_error(w, k, "a non-empty list", v);
            access(c) = out;
          },
          [access](const ExperimentConfig& c) {
            std::string s;
            for (int x : access(const_cast<ExperimentConfig&>(c))) {
              if (!s.empty()) s += ',';
              s += std::to_string(x);
            }
            return s;
          }};
}

template <class E, class Access>
Binding choice(Access access, std::vector<std::pair<std::string, E>> options) {
  return {[access, options](ExperimentConfig& c, const std::string& v, const std::string& k,
                            const std::string& w) {
            std::string names;
            for (const auto& [name, e] : options) {
              if (name == v) {
                access(c) = e;
                return;
              }
              names += names.empty() ? name : "|" + name;
            }
            type_error(w, k, names, v);
          },
          [access, options](const ExperimentConfig& c) {
            for (const auto& [name, e] : options)
              if (access(const_cast<ExperimentConfig&>(c)) == e) return name;
            return std::string("?");
          }};
}

#define FIELD(expr) [](ExperimentConfig & c) -> auto& { return c.expr; }

const std::map<std::string, Binding>& bindings() {
  static const std::map<std::string, Binding> table = [] {
    std::map<std::string, Binding> t;
    t["seed"] = integer(FIELD(run.seed));
    t["output"] = text(FIELD(output));
    t["algorithm"] = choice<Algorithm>(FIELD(algorithm),
                                       {{"selective", Algorithm::Selective},
                                        {"safedagger", Algorithm::SafeDagger},
                                        {"vanilla", Algorithm::Vanilla}});

    t["tracks.train"] = text(FIELD(tracks.train));
    t["tracks.validation"] = text(FIELD(tracks.validation));
    t["tracks.test1"] = text(FIELD(tracks.tests[0]));
    t["tracks.test2"] = text(FIELD(tracks.tests[1]));
    t["tracks.test3"] = text(FIELD(tracks.tests[2]));

    t["expert.l_ref"] = real(FIELD(run.expert.l_ref));
    t["expert.k_steering"] = real(FIELD(run.expert.k_steering));
    t["expert.v_cruise"] = real(FIELD(run.expert.v_cruise));
    t["expert.k_speed"] = real(FIELD(run.expert.k_speed));
    t["expert.beta_unit"] = choice<AngleUnit>(
        FIELD(run.expert.beta_unit), {{"radians", AngleUnit::Radians}, {"degrees", AngleUnit::Degrees}});
    t["expert.correction"] = boolean(FIELD(run.expert.correction));
    t["expert.k_lat"] = real(FIELD(run.expert.k_lat));
    t["expert.k_head"] = real(FIELD(run.expert.k_head));

    t["sim.wheelbase"] = real(FIELD(run.sim.wheelbase));
    t["sim.dt"] = real(FIELD(run.sim.dt));
    t["sim.max_steer"] = real(FIELD(run.sim.max_steer));
    t["sim.speed_gain"] = real(FIELD(run.sim.speed_gain));
    t["sim.max_accel"] = real(FIELD(run.sim.max_accel));
    t["sim.speed_max"] = real(FIELD(run.sim.speed_max));

    t["net.curvature_offsets"] = real_list(FIELD(run.obs.curvature_offsets));
    t["net.history"] = integer(FIELD(run.obs.history));
    t["net.encoder"] = int_list(FIELD(run.arch.encoder));
    t["net.lstm_hidden"] = integer(FIELD(run.arch.lstm_hidden));
    t["net.trunk"] = int_list(FIELD(run.arch.trunk));

    t["train.learning_rate"] = real(FIELD(run.train.learning_rate));
    t["train.momentum"] = real(FIELD(run.train.momentum));
    t["train.beta2"] = real(FIELD(run.train.beta2));
    t["train.epsilon"] = real(FIELD(run.train.epsilon));
    t["train.epochs"] = integer(FIELD(run.train.epochs));
    t["train.batch_size"] = integer(FIELD(run.train.batch_size));
    t["train.w_steer"] = real(FIELD(run.train.weights.steer));
    t["train.w_speed"] = real(FIELD(run.train.weights.speed));
    t["train.w_class"] = real(FIELD(run.train.weights.cls));
    t["train.class_epochs"] = integer(FIELD(run.class_epochs));
    t["train.class_balance"] = boolean(FIELD(run.balance_classes));
    t["train.warm_start"] = boolean(FIELD(run.warm_start));

    t["thresholds.tau_safe"] = real(FIELD(run.thresholds.tau_safe));
    t["thresholds.tau_turn"] = real(FIELD(run.thresholds.tau_turn));
    t["thresholds.tau_speed_turn"] = real(FIELD(run.thresholds.tau_speed_turn));
    t["thresholds.tau_speed_straight"] = real(FIELD(run.thresholds.tau_speed_straight));
    t["thresholds.scale_steer"] = real(FIELD(run.thresholds.scale_steer));
    t["thresholds.scale_speed"] = real(FIELD(run.thresholds.scale_speed));

    t["aggregate.iterations"] = integer(FIELD(run.iterations));
    t["aggregate.budget"] = integer(FIELD(run.budget));
    t["aggregate.initial_size"] = integer(FIELD(run.initial_size));
    t["aggregate.augment_initial"] = boolean(FIELD(run.augment_initial));
    t["aggregate.max_steps"] = integer(FIELD(run.max_steps));
    t["aggregate.sample_stride"] = integer(FIELD(run.sample_stride));
    t["aggregate.start_speed"] = real(FIELD(run.start_speed));
    t["aggregate.stall_speed"] = real(FIELD(run.stall.engage));
    t["aggregate.stall_release"] = real(FIELD(run.stall.release));
    t["aggregate.eval_steps"] = integer(FIELD(run.eval_steps));

    t["augment.gamma"] = real(FIELD(run.augment.gamma));
    t["augment.p_speed"] = real(FIELD(run.augment.p_speed));
    t["augment.lateral_shift"] = real(FIELD(run.augment.lateral_shift));
    t["augment.always_adjust_speed"] = boolean(FIELD(run.augment.always_adjust_speed));

    t["weakness.band"] = choice<WeaknessBand>(
        FIELD(run.weakness.band), {{"inside", WeaknessBand::Inside}, {"outside", WeaknessBand::Outside}});
    t["weakness.allowable_threshold"] = real(FIELD(run.weakness.allowable_threshold));

    t["assess.reference"] = choice<AssessReference>(
        FIELD(run.reference),
        {{"initial", AssessReference::Initial}, {"aggregate", AssessReference::Aggregate}});
    return t;
  }();
  return table;
}

#undef FIELD

bool is_track_key(const std::string& key) { return key.rfind("tracks.", 0) == 0; }

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
  return fs::absolute(p).lexically_normal().string();
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  const std::string dir = SELDAGGER_ASSET_DIR;
  c.tracks.train = dir + "/train.track";
  c.tracks.validation = dir + "/validation.track";
  c.tracks.tests = {dir + "/test1.track", dir + "/test2.track", dir + "/test3.track"};
  const char* env = std::getenv("SELDAGGER_OUT");
  c.output = env && *env ? env : "out";
  return c;
}

void ExperimentConfig::set(const std::string& key, const std::string& value,
                           const std::string& where) {
  const auto& table = bindings();
  auto it = table.find(key);
  if (it == table.end())
    throw Error(ErrorCode::UnknownKey, where + ": unknown key '" + key + "'");
  it->second.set(*this, value, key, where);
  run.arch.features = run.obs.feature_count();
  run.arch.history = run.obs.history;
  run.expert.max_steer = run.sim.max_steer;
  run.expert.speed_max = run.sim.speed_max;
}

std::string ExperimentConfig::echo() const {
  std::string out;
  for (const auto& [key, b] : bindings()) out += key + "=" + b.get(*this) + "\n";
  return out;
}

std::vector<std::string> ExperimentConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& [key, b] : bindings()) out.push_back(key);
  return out;
}

void ExperimentConfig::validate() const {
  run.sim.validate();
  run.expert.validate();
  run.thresholds.validate();
  run.arch.validate();
  run.train.validate();
  if (run.arch.features != run.obs.feature_count() || run.arch.history != run.obs.history)
    throw Error(ErrorCode::InvalidArchitecture, "network inputs disagree with the observation");
  if (run.iterations < 0 || run.budget < 0 || run.initial_size < 0 || run.max_steps < 0 ||
      run.class_epochs < 0)
    throw Error(ErrorCode::TypeError, "aggregate counts must be non-negative");
  if (run.sample_stride < 1) throw Error(ErrorCode::TypeError, "aggregate.sample_stride must be >= 1");
  if (run.eval_steps < 1) throw Error(ErrorCode::TypeError, "aggregate.eval_steps must be >= 1");
  if (run.stall.engage > 0.0 && run.stall.release < run.stall.engage)
    throw Error(ErrorCode::TypeError, "aggregate.stall_release must be >= aggregate.stall_speed");

  std::vector<std::pair<std::string, std::string>> files = {
      {"tracks.train", tracks.train}, {"tracks.validation", tracks.validation}};
  for (std::size_t i = 0; i < tracks.tests.size(); ++i)
    files.emplace_back("tracks.test" + std::to_string(i + 1), tracks.tests[i]);
  for (const auto& [key, path] : files) {
    if (path.empty()) continue;
    if (!fs::is_regular_file(path))
      throw Error(ErrorCode::MissingFile, key + ": no such file '" + path + "'");
  }
  if (tracks.train.empty() || tracks.validation.empty())
    throw Error(ErrorCode::MissingFile, "tracks.train and tracks.validation are required");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source,
                                   const std::string& base_dir) {
  ExperimentConfig c = ExperimentConfig::defaults();
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(number);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::TypeError, where + ": expected key=value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (is_track_key(key)) value = resolve(value, base_dir);
    c.set(key, value, where);
  }
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  if (!fs::is_regular_file(path))
    throw Error(ErrorCode::MissingFile, "config file '" + path + "' not found");
  const std::string dir = fs::absolute(path).parent_path().string();
  return parse_config_text(read_text(path), path, dir);
}

Algorithm parse_algorithm(const std::string& text) {
  ExperimentConfig c;
  c.set("algorithm", text, "--algorithm");
  return c.algorithm;
}

}  // namespace seldagger
