#include "seldagger/dagger.hpp"

#include "seldagger/csv.hpp"
#include "seldagger/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace seldagger {

namespace {

// Projection window around the previous arc position; a car moves well
// under a meter per step.
constexpr double kTrackingWindow = 30.0;

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

bool contains(const std::vector<TrajectoryClass>& set, TrajectoryClass c) {
  return std::find(set.begin(), set.end(), c) != set.end();
}

std::array<double, kNumClasses> balanced_class_weights(const Dataset& data) {
  std::array<int, kNumClasses> count{};
  for (const auto& s : data.samples()) ++count[class_index(s.traj_class)];
  int present = 0;
  for (int n : count) present += n > 0;
  std::array<double, kNumClasses> w;
  w.fill(1.0);
  for (int c = 0; c < kNumClasses; ++c)
    if (count[c] > 0)
      w[c] = static_cast<double>(data.size()) / (static_cast<double>(present) * count[c]);
  return w;
}

}  // namespace

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Selective: return "selective";
    case Algorithm::SafeDagger: return "safedagger";
    case Algorithm::Vanilla: return "vanilla";
  }
  return "?";
}

PolicyOutput ExpertReplayPolicy::act(const StepContext& ctx) const {
  PolicyOutput out;
  out.steering = ctx.expert.steering;
  out.speed_cmd = ctx.expert.speed_cmd;
  out.class_probs[class_index(TrajectoryClass::Safe)] = 1.0;
  return out;
}

// ---------------------------------------------------------------- rollout

Rollout::Rollout(const DrivingEnv& env, double start_s, double start_speed, StallGuard stall)
    : env_(env), history_(env.obs.history), stall_(stall) {
  const TrackSpline& spline = env.track->spline;
  s_ = spline.wrap(start_s);
  const Vec2 p = spline.point_at(s_);
  const Vec2 t = spline.tangent_at(s_);
  state_.x = p.x();
  state_.y = p.y();
  state_.heading = std::atan2(t.y(), t.x());
  state_.speed = start_speed;
  history_.fill(start_speed);
}

Rollout::Frame Rollout::sense() {
  const TrackSpline& spline = env_.track->spline;
  Frame f;
  f.pose = spline.project(state_.x, state_.y, state_.heading, s_, kTrackingWindow);
  s_ = f.pose.s;
  f.obs = observe(spline, f.pose, history_.window(env_.obs.history), env_.obs);
  f.expert = expert_action(spline, f.pose, state_.speed, env_.expert);

  const double off = std::abs(f.pose.lateral_offset);
  if (off > env_.track->half_width) {
    recovering_ = true;
  } else if (recovering_ && off < 0.5 * env_.track->half_width) {
    recovering_ = false;
  }
  if (stall_.engage > 0.0) {
    if (state_.speed < stall_.engage) {
      stalled_ = true;
    } else if (stalled_ && state_.speed > stall_.release) {
      stalled_ = false;
    }
  }
  f.recovering = recovering_ || stalled_;
  return f;
}

void Rollout::apply(const ControlAction& action) {
  state_ = step(state_, action, env_.sim);
  history_.push(state_.speed);
  ++steps_;
}

// ----------------------------------------------------------------- ledger

int LedgerRow::total() const {
  int n = 0;
  for (int c : counts) n += c;
  return n;
}

LedgerRow& QueryLedger::begin_iteration(int iteration) {
  rows_.push_back(LedgerRow{});
  rows_.back().iteration = iteration;
  return rows_.back();
}

int QueryLedger::grand_total() const {
  int n = 0;
  for (const auto& r : rows_) n += r.total();
  return n;
}

std::array<int, kNumClasses> QueryLedger::class_totals() const {
  std::array<int, kNumClasses> out{};
  for (const auto& r : rows_)
    for (int c = 0; c < kNumClasses; ++c) out[c] += r.counts[c];
  return out;
}

std::string ledger_to_csv(const QueryLedger& ledger) {
  std::vector<std::string> header = {"iteration"};
  for (TrajectoryClass c : kAllClasses) header.emplace_back(class_name(c));
  header.emplace_back("total");
  header.emplace_back("budget_reached");
  CsvWriter w(header);
  for (const auto& r : ledger.rows()) {
    std::vector<std::string> row = {std::to_string(r.iteration)};
    for (int n : r.counts) row.push_back(std::to_string(n));
    row.push_back(std::to_string(r.total()));
    row.emplace_back(r.budget_reached ? "1" : "0");
    w.add_row(std::move(row));
  }
  std::vector<std::string> total = {"total"};
  for (int n : ledger.class_totals()) total.push_back(std::to_string(n));
  total.push_back(std::to_string(ledger.grand_total()));
  bool all = true;
  for (const auto& r : ledger.rows()) all = all && r.budget_reached;
  total.emplace_back(all ? "1" : "0");
  w.add_row(std::move(total));
  return w.str();
}

// ------------------------------------------------------------- collection

Dataset collect_initial(const DrivingEnv& env, const CollectConfig& cfg) {
  Dataset data;
  if (cfg.size <= 0) return data;
  if (cfg.sample_stride < 1) throw Error(ErrorCode::TypeError, "sample_stride must be >= 1");

  const TrackSpline& spline = env.track->spline;
  Rollout roll(env, cfg.start_s, cfg.start_speed);
  const long cap = static_cast<long>(cfg.size) * cfg.sample_stride * 4 + 10000;

  while (static_cast<int>(data.size()) < cfg.size) {
    if (roll.steps() > cap)
      throw Error(ErrorCode::TrackUnDrivable, "expert made no progress on " + env.track->name);
    Rollout::Frame f;
    try {
      f = roll.sense();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ProjectionDiverged) throw;
      throw Error(ErrorCode::TrackUnDrivable, "expert lost the track " + env.track->name);
    }
    if (std::abs(f.pose.lateral_offset) > env.track->half_width)
      throw Error(ErrorCode::TrackUnDrivable,
                  "expert left the lane on " + env.track->name + " at s=" + fmt_num(f.pose.s));
    if (!spline.closed() && f.pose.s > spline.total_length() - 40.0)
      throw Error(ErrorCode::TrackUnDrivable, "open track too short for " +
                                                  std::to_string(cfg.size) + " samples");

    if (roll.steps() % cfg.sample_stride == 0) {
      LabeledSample center;
      center.observation = f.obs;
      center.expert_action = f.expert;
      center.traj_class = TrajectoryClass::Safe;
      center.measured_speed = roll.state().speed;
      center.iteration = 0;
      data.append(center);
      if (cfg.augment) {
        auto [left, right] = augment_side_views(spline, roll.state(), roll.history(), f.expert,
                                                cfg.augment_params, env.obs, env.thresholds,
                                                env.sim, f.pose.s, kTrackingWindow);
        if (static_cast<int>(data.size()) < cfg.size) data.append(std::move(left));
        if (static_cast<int>(data.size()) < cfg.size) data.append(std::move(right));
      }
    }
    roll.apply(f.expert);
  }
  return data;
}

// ------------------------------------------------------------- assessment

std::vector<double> sample_norms(const NetworkParameters& params, const Dataset& data,
                                 const Thresholds& thresholds) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& s : data.samples()) {
    const PolicyOutput y = forward(params, s.observation);
    out.push_back(scaled_norm(y.action(), s.expert_action, thresholds));
  }
  return out;
}

void relabel(Dataset& data, const NetworkParameters& params, const Thresholds& thresholds) {
  const auto norms = sample_norms(params, data, thresholds);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    data.set_class(i, classify(s.expert_action, s.measured_speed,
                               is_safe(norms[i], thresholds.tau_safe), thresholds));
  }
}

WeaknessReport assess_weak_classes(const DrivingPolicy& policy, const Dataset& reference,
                                   const Thresholds& thresholds, const WeaknessConfig& cfg) {
  if (reference.empty())
    throw Error(ErrorCode::EmptyDataset, "weak-class assessment needs a reference dataset");
  std::vector<ClassNorm> norms;
  norms.reserve(reference.size());
  for (const auto& s : reference.samples()) {
    CarState state;
    state.speed = s.measured_speed;
    const PolicyOutput y = policy.act({s.observation, state, s.expert_action});
    const double n = scaled_norm(y.action(), s.expert_action, thresholds);
    norms.push_back({classify(s.expert_action, s.measured_speed,
                              is_safe(n, thresholds.tau_safe), thresholds),
                     n});
  }
  WeaknessReport report = weakness_coefficients(norms, cfg.band);
  report.selection = select_classes(report, cfg.allowable_threshold);
  return report;
}

WeaknessReport assess_weak_classes(const NetworkParameters& params, const Dataset& reference,
                                   const Thresholds& thresholds, const WeaknessConfig& cfg) {
  return assess_weak_classes(NetworkPolicy(params), reference, thresholds, cfg);
}

// ------------------------------------------------------------ aggregation

long IterationConfig::step_cap() const {
  if (max_steps > 0) return max_steps;
  return 50L * std::max(budget, 1) * std::max(sample_stride, 1);
}

IterationResult gated_iteration(Algorithm algorithm, const DrivingPolicy& policy,
                                const DrivingEnv& env, const ClassSelection& selection,
                                const IterationConfig& cfg, LedgerRow& ledger_row) {
  if (cfg.sample_stride < 1) throw Error(ErrorCode::TypeError, "sample_stride must be >= 1");
  IterationResult result;
  ledger_row.iteration = cfg.iteration;
  if (cfg.budget <= 0) {
    result.budget_reached = true;
    ledger_row.budget_reached = true;
    return result;
  }

  Rollout roll(env, cfg.start_s, cfg.start_speed, cfg.stall);
  const long cap = cfg.step_cap();
  int queries = 0;
  long labeled = 0;  // expert-labeled steps, sampled every `sample_stride`

  while (queries < cfg.budget && roll.steps() < cap) {
    const Rollout::Frame f = roll.sense();
    const PolicyOutput out = policy.act({f.obs, roll.state(), f.expert});
    const TrajectoryClass predicted = out.predicted_class();

    bool expert_drives = f.recovering;
    bool query = f.recovering;
    if (!f.recovering) {
      switch (algorithm) {
        case Algorithm::Selective:
          expert_drives = predicted != TrajectoryClass::Safe &&
                          !contains(selection.allowable, predicted);
          query = expert_drives;
          break;
        case Algorithm::SafeDagger:
          expert_drives = predicted != TrajectoryClass::Safe;
          query = expert_drives;
          break;
        case Algorithm::Vanilla:
          query = true;
          break;
      }
    }

    if (query) {
      if (labeled % cfg.sample_stride == 0) {
        const double speed = roll.state().speed;
        bool safe = false;
        if (algorithm == Algorithm::Vanilla)
          safe = is_safe(scaled_norm(out.action(), f.expert, env.thresholds),
                         env.thresholds.tau_safe);
        LabeledSample s;
        s.observation = f.obs;
        s.expert_action = f.expert;
        s.traj_class = classify(f.expert, speed, safe, env.thresholds);
        s.measured_speed = speed;
        s.iteration = cfg.iteration;
        ++ledger_row.counts[class_index(s.traj_class)];
        result.increment.append(std::move(s));
        ++queries;
        if (f.recovering) ++result.recovery_queries;
      }
      ++labeled;
    }
    if (expert_drives) ++result.expert_steps;
    roll.apply(expert_drives ? f.expert : out.action());
  }

  result.steps = roll.steps();
  result.budget_reached = queries >= cfg.budget;
  ledger_row.budget_reached = result.budget_reached;
  return result;
}

IterationResult selective_iteration(const DrivingPolicy& policy, const DrivingEnv& env,
                                    const ClassSelection& selection, const IterationConfig& cfg,
                                    LedgerRow& ledger_row) {
  return gated_iteration(Algorithm::Selective, policy, env, selection, cfg, ledger_row);
}

IterationResult safedagger_iteration(const DrivingPolicy& policy, const DrivingEnv& env,
                                     const IterationConfig& cfg, LedgerRow& ledger_row) {
  return gated_iteration(Algorithm::SafeDagger, policy, env, {}, cfg, ledger_row);
}

// ------------------------------------------------------------- evaluation

EvalResult evaluate(const DrivingPolicy& policy, const DrivingEnv& env, const EvalConfig& cfg) {
  if (cfg.steps <= 0) throw Error(ErrorCode::EmptyEvaluation, "evaluation needs M > 0 steps");
  EvalResult r;
  std::array<double, kNumClasses> sums{};
  double total = 0.0;

  Rollout roll(env, cfg.start_s, cfg.start_speed);
  while (roll.steps() < cfg.steps) {
    Rollout::Frame f;
    try {
      f = roll.sense();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ProjectionDiverged) throw;
      throw Error(ErrorCode::TrackUnDrivable, "car lost the track " + env.track->name);
    }
    if (f.recovering) {
      ++r.recovery_steps;
      roll.apply(f.expert);
      continue;
    }
    const PolicyOutput out = policy.act({f.obs, roll.state(), f.expert});
    const double n = scaled_norm(out.action(), f.expert, env.thresholds);
    const TrajectoryClass c = classify(f.expert, roll.state().speed,
                                       is_safe(n, env.thresholds.tau_safe), env.thresholds);
    total += n;
    sums[class_index(c)] += n;
    ++r.class_count[class_index(c)];
    ++r.scored_steps;
    roll.apply(out.action());
  }
  if (r.scored_steps == 0)
    throw Error(ErrorCode::EmptyEvaluation, "every evaluation step was an expert recovery");
  r.mean_norm = total / static_cast<double>(r.scored_steps);
  for (int c = 0; c < kNumClasses; ++c)
    r.class_mean[c] = r.class_count[c] > 0 ? sums[c] / r.class_count[c] : 0.0;
  return r;
}

// -------------------------------------------------------------------- run

DrivingEnv make_env(const RunSettings& settings, const Track& track) {
  DrivingEnv env;
  env.track = &track;
  env.sim = settings.sim;
  env.expert = settings.expert;
  env.obs = settings.obs;
  env.thresholds = settings.thresholds;
  return env;
}

void fit_policy(NetworkParameters& params, Dataset& data, const RunSettings& settings,
                std::uint64_t seed) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "cannot train on an empty dataset");

  TrainConfig regression = settings.train;
  regression.weights.cls = 0.0;
  regression.seed = seed;
  train(params, data.samples(), regression, settings.thresholds, TrainScope::All);

  relabel(data, params, settings.thresholds);

  if (settings.class_epochs > 0 && settings.train.weights.cls > 0.0) {
    TrainConfig head = settings.train;
    head.weights = {0.0, 0.0, settings.train.weights.cls};
    if (settings.balance_classes) head.weights.class_weight = balanced_class_weights(data);
    head.epochs = settings.class_epochs;
    head.seed = mix_seed(seed, 1);
    train(params, data.samples(), head, settings.thresholds, TrainScope::ClassHead);
  }
}

RunResult run(Algorithm algorithm, const RunSettings& settings, const RunTracks& tracks,
              const ProgressFn& progress) {
  return run(algorithm, settings, tracks, std::nullopt, progress);
}

RunResult run(Algorithm algorithm, const RunSettings& settings, const RunTracks& tracks,
              std::optional<Dataset> initial, const ProgressFn& progress) {
  if (!tracks.train || !tracks.validation)
    throw Error(ErrorCode::MissingFile, "run needs a training and a validation track");
  settings.arch.validate();
  settings.train.validate();
  settings.thresholds.validate();

  const auto report_progress = [&](int i, const std::string& msg) {
    if (progress) progress(i, msg);
  };

  const DrivingEnv train_env = make_env(settings, *tracks.train);
  const DrivingEnv val_env = make_env(settings, *tracks.validation);
  const EvalConfig eval_cfg{settings.eval_steps, 0.0, settings.start_speed};

  RunResult result;
  if (initial) {
    result.initial = std::move(*initial);
  } else {
    CollectConfig cc;
    cc.size = settings.initial_size;
    cc.augment = settings.augment_initial;
    cc.augment_params = settings.augment;
    cc.sample_stride = settings.sample_stride;
    cc.start_speed = settings.start_speed;
    result.initial = collect_initial(train_env, cc);
  }
  result.aggregate = result.initial;

  NetworkParameters params = init_params(settings.arch, settings.seed);
  fit_policy(params, result.aggregate, settings, mix_seed(settings.seed, 100));
  result.policies.push_back(params);
  result.validation_norms.push_back(
      evaluate(NetworkPolicy(result.policies.back()), val_env, eval_cfg).mean_norm);
  report_progress(0, "validation " + fmt_num(result.validation_norms.back()));

  for (int i = 1; i <= settings.iterations; ++i) {
    const NetworkParameters& prev = result.policies.back();
    const Dataset& reference =
        settings.reference == AssessReference::Initial ? result.initial : result.aggregate;

    IterationMetrics m;
    m.iteration = i;
    m.report = assess_weak_classes(prev, reference, settings.thresholds, settings.weakness);
    m.selection = m.report.selection;
    for (int c = 0; c < kNumClasses; ++c) m.class_mean_norm[c] = m.report.stats[c].mean;

    std::mt19937_64 rng(mix_seed(settings.seed, 200 + static_cast<std::uint64_t>(i)));
    IterationConfig ic;
    ic.budget = settings.budget;
    ic.max_steps = settings.max_steps;
    ic.sample_stride = settings.sample_stride;
    ic.start_s = uniform01(rng) * tracks.train->spline.total_length();
    ic.start_speed = settings.start_speed;
    ic.stall = settings.stall;
    ic.iteration = i;

    LedgerRow& row = result.ledger.begin_iteration(i);
    const IterationResult inc =
        gated_iteration(algorithm, NetworkPolicy(prev), train_env, m.selection, ic, row);
    m.queries = row.counts;
    m.budget_reached = inc.budget_reached;
    result.aggregate.append(inc.increment);

    NetworkParameters next =
        settings.warm_start ? prev : init_params(settings.arch, mix_seed(settings.seed, i));
    fit_policy(next, result.aggregate, settings, mix_seed(settings.seed, 100 + i));
    result.policies.push_back(std::move(next));
    m.validation_norm =
        evaluate(NetworkPolicy(result.policies.back()), val_env, eval_cfg).mean_norm;
    result.validation_norms.push_back(m.validation_norm);
    result.metrics.push_back(m);

    std::string msg = "weak " + join_classes(m.selection.weak) + " allowable " +
                      join_classes(m.selection.allowable) + " queries " +
                      std::to_string(row.total()) + " (recovery " +
                      std::to_string(inc.recovery_queries) + ") steps " + std::to_string(inc.steps) +
                      " validation " + fmt_num(m.validation_norm);
    if (!inc.budget_reached) msg += " BudgetUnreachable";
    report_progress(i, msg);
  }

  result.best_iteration = static_cast<int>(
      std::min_element(result.validation_norms.begin(), result.validation_norms.end()) -
      result.validation_norms.begin());

  for (const Track* t : tracks.tests) {
    result.test_results.push_back(
        evaluate(NetworkPolicy(result.best()), make_env(settings, *t), eval_cfg));
  }
  return result;
}

// -------------------------------------------------------------------- csv

std::string metrics_to_csv(const std::vector<IterationMetrics>& metrics) {
  std::vector<std::string> header = {"iteration"};
  for (TrajectoryClass c : kAllClasses) header.push_back(std::string("norm_") + class_name(c));
  header.emplace_back("weak");
  header.emplace_back("allowable");
  for (TrajectoryClass c : kAllClasses)
    header.push_back(std::string("queries_") + class_name(c));
  header.emplace_back("validation_norm");
  CsvWriter w(header);
  for (const auto& m : metrics) {
    std::vector<std::string> row = {std::to_string(m.iteration)};
    for (double v : m.class_mean_norm) row.push_back(fmt_num(v));
    row.push_back(join_classes(m.selection.weak));
    row.push_back(join_classes(m.selection.allowable));
    for (int n : m.queries) row.push_back(std::to_string(n));
    row.push_back(fmt_num(m.validation_norm));
    w.add_row(std::move(row));
  }
  return w.str();
}

std::string weakness_to_csv(const std::vector<IterationMetrics>& metrics) {
  std::vector<std::string> header = {"iteration"};
  for (TrajectoryClass c : kUnsafeClasses) header.emplace_back(class_name(c));
  header.emplace_back("weak");
  header.emplace_back("allowable");
  CsvWriter w(header);
  for (const auto& m : metrics) {
    std::vector<std::string> row = {std::to_string(m.iteration)};
    for (TrajectoryClass c : kUnsafeClasses) row.push_back(fmt_num(m.report[c].coefficient));
    row.push_back(join_classes(m.selection.weak));
    row.push_back(join_classes(m.selection.allowable));
    w.add_row(std::move(row));
  }
  return w.str();
}

}  // namespace seldagger
