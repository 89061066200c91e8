#include "seldagger/commands.hpp"
#include "seldagger/error.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace seldagger;

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

bool is_config_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownKey:
    case ErrorCode::TypeError:
    case ErrorCode::MissingFile:
    case ErrorCode::InvalidArchitecture:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seldagger: selective expert-query imitation learning on a driving simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value configuration file");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--out", out_dir, "output directory (default: SELDAGGER_OUT or ./out)");
  app.add_option("--set", overrides, "extra key=value override, repeatable");

  auto* collect = app.add_subcommand("collect", "expert rollout -> initial dataset CSV");

  auto* run_cmd = app.add_subcommand("run", "aggregation run with metrics and snapshots");
  std::string algorithm;
  std::optional<int> iterations;
  std::optional<int> budget;
  run_cmd->add_option("--algorithm", algorithm, "selective | safedagger | vanilla");
  run_cmd->add_option("--iterations", iterations, "aggregation iterations N");
  run_cmd->add_option("--budget", budget, "expert queries per iteration T");

  auto* eval = app.add_subcommand("eval", "evaluate saved parameters on a track");
  std::string params_path;
  std::string track_path;
  bool expert_replay = false;
  eval->add_option("--params", params_path, "parameter file");
  eval->add_option("--track", track_path, "track file")->required();
  eval->add_flag("--expert", expert_replay, "evaluate the expert itself (replay policy)");

  auto* tracks = app.add_subcommand("tracks", "track utilities");
  tracks->require_subcommand(1);
  auto* validate = tracks->add_subcommand("validate", "drive one expert lap on every track");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  ExperimentConfig config;
  try {
    config = config_path.empty() ? ExperimentConfig::defaults() : parse_config(config_path);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorCode::TypeError, "--set expects key=value, got '" + kv + "'");
      config.set(kv.substr(0, eq), kv.substr(eq + 1), "--set");
    }
    if (seed) config.set("seed", std::to_string(*seed), "--seed");
    if (!out_dir.empty()) config.set("output", out_dir, "--out");
    if (!algorithm.empty()) config.set("algorithm", algorithm, "--algorithm");
    if (iterations) config.set("aggregate.iterations", std::to_string(*iterations), "--iterations");
    if (budget) config.set("aggregate.budget", std::to_string(*budget), "--budget");
    if (*eval && !expert_replay && params_path.empty())
      throw Error(ErrorCode::MissingFile, "eval needs --params or --expert");
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    if (*collect) {
      cmd_collect(config, std::cout);
    } else if (*run_cmd) {
      cmd_run(config, std::cout);
    } else if (*eval) {
      cmd_eval(config, params_path, track_path, expert_replay, std::cout);
    } else if (*validate) {
      cmd_tracks_validate(config, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
