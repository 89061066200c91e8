#pragma once

#include "seldagger/dagger.hpp"

#include <string>
#include <vector>

namespace seldagger {

struct TrackPaths {
  std::string train;
  std::string validation;
  std::vector<std::string> tests = {"", "", ""};  // test1..test3
};

/// Every tunable of a run, addressable as `prefix.name=value`.
struct ExperimentConfig {
  RunSettings run;
  Algorithm algorithm = Algorithm::Selective;
  TrackPaths tracks;
  std::string output;

  /// Bundled tracks, SELDAGGER_OUT or "out" as output directory.
  static ExperimentConfig defaults();

  /// Applies one override. `where` names the origin for diagnostics
  /// ("run.cfg:12", "--seed"). Throws UnknownKey / TypeError.
  void set(const std::string& key, const std::string& value, const std::string& where);

  /// Full effective configuration, one `key=value` per line, sorted by key.
  /// Floats are printed round-trip exact.
  std::string echo() const;

  /// MissingFile for any track path that does not exist, plus the
  /// per-module parameter checks.
  void validate() const;

  std::vector<std::string> keys() const;
};

/// key=value lines, `#` comments, blank lines ignored. Relative track paths
/// resolve against the config file's directory.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source,
                                   const std::string& base_dir = "");

Algorithm parse_algorithm(const std::string& text);

}  // namespace seldagger
