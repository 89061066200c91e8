#pragma once

#include "seldagger/config.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace seldagger {

/// Loads a track file into an owned, address-stable Track.
std::unique_ptr<Track> load_track(const std::string& path);

/// Expert-driven initial collection; writes `<output>/dataset.csv` and the
/// effective config. Returns the dataset path.
std::string cmd_collect(const ExperimentConfig& config, std::ostream& out);

/// Full aggregation run. Writes into `<output>`:
///   config.txt, metrics.csv, ledger.csv, weakness.csv, validation.csv,
///   summary.csv, test_classes.csv, params/policy_<i>.params,
///   plot_results.py and run.log (the only file with timestamps).
RunResult cmd_run(const ExperimentConfig& config, std::ostream& out);

/// Evaluates saved parameters (or the expert itself) on one track and
/// writes `<output>/eval_<track>.csv` with the per-class breakdown.
EvalResult cmd_eval(const ExperimentConfig& config, const std::string& params_path,
                    const std::string& track_path, bool expert_replay, std::ostream& out);

struct TrackCheck {
  std::string path;
  double length = 0.0;
  double max_lateral = 0.0;
  double mean_speed = 0.0;
  bool drivable = false;
};

/// One expert lap per configured track.
std::vector<TrackCheck> cmd_tracks_validate(const ExperimentConfig& config, std::ostream& out);

/// Expert lap statistics on a single track.
TrackCheck expert_lap(const Track& track, const RunSettings& settings);

}  // namespace seldagger
