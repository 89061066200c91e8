#include "seldagger/commands.hpp"

#include "seldagger/csv.hpp"
#include "seldagger/error.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace seldagger {

namespace {

namespace fs = std::filesystem;

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::MissingFile, "cannot create output directory '" + dir + "'");
}

std::string stamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

/// Tees progress to the caller's stream and a timestamped log file.
class RunLog {
 public:
  RunLog(const std::string& path, std::ostream& echo) : file_(path), echo_(echo) {}

  void line(const std::string& msg) {
    echo_ << msg << '\n';
    file_ << stamp() << ' ' << msg << '\n';
    file_.flush();
  }

 private:
  std::ofstream file_;
  std::ostream& echo_;
};

const char* kPlotScript = R"(# Plot stub for a run directory; needs pandas and matplotlib.
import sys
import pandas as pd
import matplotlib.pyplot as plt

run = sys.argv[1] if len(sys.argv) > 1 else "."
val = pd.read_csv(f"{run}/validation.csv")
metrics = pd.read_csv(f"{run}/metrics.csv")
classes = pd.read_csv(f"{run}/test_classes.csv")

fig, ax = plt.subplots(1, 3, figsize=(15, 4))
ax[0].plot(val["iteration"], val["validation_norm"], marker="o")
ax[0].set_xlabel("iteration")
ax[0].set_ylabel("validation mean scaled norm")

norm_cols = [c for c in metrics.columns if c.startswith("norm_")]
for c in norm_cols:
    ax[1].plot(metrics["iteration"], metrics[c], label=c[5:])
ax[1].set_xlabel("iteration")
ax[1].set_ylabel("reference-set mean norm")
ax[1].legend()

mean = classes.groupby("class")["mean_norm"].mean()
ax[2].bar(mean.index, mean.values)
ax[2].set_ylabel("test-track mean norm")

fig.tight_layout()
fig.savefig(f"{run}/results.png", dpi=120)
)";

std::string track_stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string class_breakdown_csv(const std::vector<std::pair<std::string, EvalResult>>& rows) {
  CsvWriter w({"track", "class", "count", "mean_norm"});
  for (const auto& [name, r] : rows)
    for (TrajectoryClass c : kAllClasses)
      w.add_row({name, class_name(c), std::to_string(r.class_count[class_index(c)]),
                 fmt_num(r.class_mean[class_index(c)])});
  return w.str();
}

}  // namespace

std::unique_ptr<Track> load_track(const std::string& path) {
  TrackDefinition def = load_track_file(path);
  def.name = track_stem(path);
  return std::make_unique<Track>(def);
}

TrackCheck expert_lap(const Track& track, const RunSettings& settings) {
  DrivingEnv env = make_env(settings, track);
  Rollout roll(env, 0.0, settings.start_speed);
  const double length = track.spline.total_length();

  TrackCheck check;
  check.length = length;
  double travelled = 0.0;
  double prev_s = roll.s();
  double speed_sum = 0.0;
  const long cap = static_cast<long>(length / 1.0 / settings.sim.dt) + 1000;  // >= 1 m/s
  while (travelled < length && roll.steps() < cap) {
    Rollout::Frame f;
    try {
      f = roll.sense();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ProjectionDiverged) throw;
      return check;
    }
    double ds = f.pose.s - prev_s;
    if (track.spline.closed()) {
      if (ds < -0.5 * length) ds += length;
      if (ds > 0.5 * length) ds -= length;
    }
    travelled += ds;
    prev_s = f.pose.s;
    check.max_lateral = std::max(check.max_lateral, std::abs(f.pose.lateral_offset));
    roll.apply(f.expert);
    speed_sum += roll.state().speed;
    if (!track.spline.closed() && f.pose.s > length - 40.0) break;
  }
  check.mean_speed = roll.steps() > 0 ? speed_sum / static_cast<double>(roll.steps()) : 0.0;
  check.drivable = check.max_lateral <= track.half_width;
  return check;
}

std::string cmd_collect(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  const auto track = load_track(config.tracks.train);
  ensure_dir(config.output);
  write_text(config.output + "/config.txt", config.echo());

  const RunSettings& rs = config.run;
  CollectConfig cc;
  cc.size = rs.initial_size;
  cc.augment = rs.augment_initial;
  cc.augment_params = rs.augment;
  cc.sample_stride = rs.sample_stride;
  cc.start_speed = rs.start_speed;
  const Dataset data = collect_initial(make_env(rs, *track), cc);

  const std::string path = config.output + "/dataset.csv";
  save_dataset(data, rs.obs.curvature_offsets, rs.obs.history, path);
  out << "collected " << data.size() << " samples on " << track->name << " -> " << path << '\n';
  return path;
}

RunResult cmd_run(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  // Every track loads before any rollout so a bad path fails fast.
  const auto train = load_track(config.tracks.train);
  const auto validation = load_track(config.tracks.validation);
  std::vector<std::unique_ptr<Track>> tests;
  for (const auto& p : config.tracks.tests)
    if (!p.empty()) tests.push_back(load_track(p));

  ensure_dir(config.output);
  ensure_dir(config.output + "/params");
  write_text(config.output + "/config.txt", config.echo());
  RunLog log(config.output + "/run.log", out);
  log.line(std::string("algorithm ") + to_string(config.algorithm) + " seed " +
           std::to_string(config.run.seed) + " output " + config.output);

  RunTracks tracks{train.get(), validation.get(), {}};
  for (const auto& t : tests) tracks.tests.push_back(t.get());

  RunResult result = run(config.algorithm, config.run, tracks, std::nullopt,
                         [&](int i, const std::string& msg) {
                           log.line("iteration " + std::to_string(i) + ": " + msg);
                         });

  write_text(config.output + "/metrics.csv", metrics_to_csv(result.metrics));
  write_text(config.output + "/ledger.csv", ledger_to_csv(result.ledger));
  write_text(config.output + "/weakness.csv", weakness_to_csv(result.metrics));

  CsvWriter val({"iteration", "validation_norm", "best"});
  for (std::size_t i = 0; i < result.validation_norms.size(); ++i) {
    val.add_row({std::to_string(i), fmt_num(result.validation_norms[i]),
                 static_cast<int>(i) == result.best_iteration ? "1" : "0"});
    save_params(result.policies[i],
                config.output + "/params/policy_" + std::to_string(i) + ".params");
  }
  val.write(config.output + "/validation.csv");

  CsvWriter summary({"algorithm", "seed", "best_iteration", "track", "mean_norm",
                     "scored_steps", "recovery_steps"});
  std::vector<std::pair<std::string, EvalResult>> per_track;
  double mean = 0.0;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    const EvalResult& r = result.test_results[i];
    summary.add_row({to_string(config.algorithm), std::to_string(config.run.seed),
                     std::to_string(result.best_iteration), tests[i]->name,
                     fmt_num(r.mean_norm), std::to_string(r.scored_steps),
                     std::to_string(r.recovery_steps)});
    per_track.emplace_back(tests[i]->name, r);
    mean += r.mean_norm;
  }
  if (!tests.empty()) {
    mean /= static_cast<double>(tests.size());
    summary.add_row({to_string(config.algorithm), std::to_string(config.run.seed),
                     std::to_string(result.best_iteration), "mean", fmt_num(mean), "", ""});
  }
  summary.write(config.output + "/summary.csv");
  write_text(config.output + "/test_classes.csv", class_breakdown_csv(per_track));
  write_text(config.output + "/plot_results.py", kPlotScript);

  log.line("best iteration " + std::to_string(result.best_iteration) + ", total queries " +
           std::to_string(result.ledger.grand_total()) +
           (tests.empty() ? std::string() : ", test mean norm " + fmt_num(mean)));
  return result;
}

EvalResult cmd_eval(const ExperimentConfig& config, const std::string& params_path,
                    const std::string& track_path, bool expert_replay, std::ostream& out) {
  config.validate();
  if (!fs::is_regular_file(track_path))
    throw Error(ErrorCode::MissingFile, "track file '" + track_path + "' not found");
  const auto track = load_track(track_path);
  const DrivingEnv env = make_env(config.run, *track);
  const EvalConfig ec{config.run.eval_steps, 0.0, config.run.start_speed};

  EvalResult r;
  if (expert_replay) {
    r = evaluate(ExpertReplayPolicy{}, env, ec);
  } else {
    const NetworkParameters params = load_params(params_path);
    if (!(params.architecture() == config.run.arch))
      throw Error(ErrorCode::ShapeMismatch, "parameter file architecture differs from config");
    r = evaluate(NetworkPolicy(params), env, ec);
  }

  ensure_dir(config.output);
  write_text(config.output + "/eval_" + track->name + ".csv",
             class_breakdown_csv({{track->name, r}}));
  out << fmt_num(r.mean_norm) << '\n';
  return r;
}

std::vector<TrackCheck> cmd_tracks_validate(const ExperimentConfig& config, std::ostream& out) {
  std::vector<std::string> paths = {config.tracks.train, config.tracks.validation};
  for (const auto& p : config.tracks.tests)
    if (!p.empty()) paths.push_back(p);

  std::vector<TrackCheck> checks;
  bool ok = true;
  for (const auto& p : paths) {
    if (!fs::is_regular_file(p)) throw Error(ErrorCode::MissingFile, "no such track '" + p + "'");
    const auto track = load_track(p);
    TrackCheck c = expert_lap(*track, config.run);
    c.path = p;
    out << track->name << ": length " << fmt_num(c.length) << " m, max |lateral| "
        << fmt_num(c.max_lateral) << " m, mean speed " << fmt_num(c.mean_speed) << " m/s, "
        << (c.drivable ? "ok" : "UNDRIVABLE") << '\n';
    ok = ok && c.drivable;
    checks.push_back(c);
  }
  if (!ok) throw Error(ErrorCode::TrackUnDrivable, "expert cannot drive every track");
  return checks;
}

}  // namespace seldagger
