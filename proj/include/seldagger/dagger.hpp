#pragma once

#include "seldagger/dataset.hpp"
#include "seldagger/expert.hpp"
#include "seldagger/labeling.hpp"
#include "seldagger/network.hpp"
#include "seldagger/observation.hpp"
#include "seldagger/optimizer.hpp"
#include "seldagger/track.hpp"
#include "seldagger/vehicle.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace seldagger {

enum class Algorithm { Selective, SafeDagger, Vanilla };
const char* to_string(Algorithm a);

enum class AssessReference { Initial, Aggregate };

/// Everything a rollout needs besides the policy.
struct DrivingEnv {
  const Track* track = nullptr;
  SimParams sim;
  ExpertParams expert;
  ObservationConfig obs;
  Thresholds thresholds;
};

/// What a policy sees at one control step. `expert` is only meant for
/// replay/diagnostic policies; learned policies read `obs` alone.
struct StepContext {
  const Observation& obs;
  const CarState& state;
  const ControlAction& expert;
};

class DrivingPolicy {
 public:
  virtual ~DrivingPolicy() = default;
  virtual PolicyOutput act(const StepContext& ctx) const = 0;
};

class NetworkPolicy : public DrivingPolicy {
 public:
  explicit NetworkPolicy(const NetworkParameters& params) : params_(&params) {}
  PolicyOutput act(const StepContext& ctx) const override { return forward(*params_, ctx.obs); }

 private:
  const NetworkParameters* params_;
};

/// Replays the expert action and reports the Safe class.
class ExpertReplayPolicy : public DrivingPolicy {
 public:
  PolicyOutput act(const StepContext& ctx) const override;
};

/// Speeds (m/s) at which a stopped car hands control to the expert and
/// gets it back. `engage` <= 0 disables the guard.
struct StallGuard {
  double engage = 0.0;
  double release = 0.0;
};

/// Closed-loop driving state: car, speed history and recovery latch.
class Rollout {
 public:
  Rollout(const DrivingEnv& env, double start_s, double start_speed, StallGuard stall = {});

  struct Frame {
    TrackPose pose;
    Observation obs;
    ControlAction expert;
    bool recovering = false;  // expert must drive (off-track or stall latch)
  };

  /// Observes the current state. Latches recovery when |lateral offset|
  /// exceeds the half-width, releases it below half of that. With a stall
  /// guard, speed below `engage` also latches until it exceeds `release`.
  Frame sense();
  void apply(const ControlAction& action);

  const CarState& state() const { return state_; }
  const SpeedHistory& history() const { return history_; }
  double s() const { return s_; }
  long steps() const { return steps_; }

 private:
  const DrivingEnv& env_;
  CarState state_;
  SpeedHistory history_;
  double s_ = 0.0;
  long steps_ = 0;
  StallGuard stall_;
  bool recovering_ = false;
  bool stalled_ = false;
};

/// Expert-labeled queries per iteration and class.
struct LedgerRow {
  int iteration = 0;
  std::array<int, kNumClasses> counts{};
  bool budget_reached = true;

  int total() const;
};

class QueryLedger {
 public:
  LedgerRow& begin_iteration(int iteration);
  const std::vector<LedgerRow>& rows() const { return rows_; }
  int grand_total() const;
  std::array<int, kNumClasses> class_totals() const;

 private:
  std::vector<LedgerRow> rows_;
};

std::string ledger_to_csv(const QueryLedger& ledger);

struct CollectConfig {
  int size = 2800;
  bool augment = true;
  AugmentParams augment_params;
  int sample_stride = 10;    // sim steps between recorded center samples
  double start_s = 0.0;
  double start_speed = 10.0;
};

/// Expert-driven rollout recording `size` samples, all labeled Safe
/// (self-comparison). With augmentation every recorded state adds a center
/// sample followed by its two side views. Throws TrackUnDrivable if the
/// expert leaves the lane.
Dataset collect_initial(const DrivingEnv& env, const CollectConfig& cfg);

/// Scaled norm between the policy prediction and the stored expert label
/// for every sample.
std::vector<double> sample_norms(const NetworkParameters& params, const Dataset& data,
                                 const Thresholds& thresholds);

/// Recomputes every stored class against the given policy.
void relabel(Dataset& data, const NetworkParameters& params, const Thresholds& thresholds);

struct WeaknessConfig {
  WeaknessBand band = WeaknessBand::Inside;
  double allowable_threshold = 1.0;
};

/// Forward pass over the reference set, per-sample norm and class, then
/// weakness coefficients and class selection.
WeaknessReport assess_weak_classes(const DrivingPolicy& policy, const Dataset& reference,
                                   const Thresholds& thresholds, const WeaknessConfig& cfg);
WeaknessReport assess_weak_classes(const NetworkParameters& params, const Dataset& reference,
                                   const Thresholds& thresholds, const WeaknessConfig& cfg);

struct IterationConfig {
  int budget = 320;
  long max_steps = 0;  // 0: 50 * budget * sample_stride
  int sample_stride = 10;
  double start_s = 0.0;
  double start_speed = 10.0;
  int iteration = 1;
  StallGuard stall{1.0, 5.0};

  long step_cap() const;
};

struct IterationResult {
  Dataset increment;
  bool budget_reached = false;
  long steps = 0;
  long expert_steps = 0;
  int recovery_queries = 0;  // appended while the off-track or stall latch was set
};

/// One aggregation rollout. Gate per step on the policy's predicted class:
///   Selective:  weak or non-allowable unsafe -> expert drives and is queried;
///               allowable unsafe or Safe -> policy drives.
///   SafeDagger: any unsafe class -> expert; Safe -> policy.
///   Vanilla:    policy drives, every state is queried.
/// Off-track and stalled states hand control to the expert regardless of
/// class.
/// Every `sample_stride`-th expert-labeled step is appended and counted in
/// `ledger_row`; the rollout stops at `budget` queries or the step cap.
IterationResult gated_iteration(Algorithm algorithm, const DrivingPolicy& policy,
                                const DrivingEnv& env, const ClassSelection& selection,
                                const IterationConfig& cfg, LedgerRow& ledger_row);

IterationResult selective_iteration(const DrivingPolicy& policy, const DrivingEnv& env,
                                    const ClassSelection& selection, const IterationConfig& cfg,
                                    LedgerRow& ledger_row);
IterationResult safedagger_iteration(const DrivingPolicy& policy, const DrivingEnv& env,
                                     const IterationConfig& cfg, LedgerRow& ledger_row);

struct EvalConfig {
  long steps = 4000;
  double start_s = 0.0;
  double start_speed = 10.0;
};

struct EvalResult {
  double mean_norm = 0.0;
  std::array<double, kNumClasses> class_mean{};
  std::array<int, kNumClasses> class_count{};
  long scored_steps = 0;
  long recovery_steps = 0;
};

/// Policy-driven rollout; the expert only drives during off-track
/// recovery and those steps are not scored.
EvalResult evaluate(const DrivingPolicy& policy, const DrivingEnv& env, const EvalConfig& cfg);

struct RunSettings {
  SimParams sim;
  ExpertParams expert;
  ObservationConfig obs;
  Thresholds thresholds;
  AugmentParams augment;
  Architecture arch;
  TrainConfig train;
  WeaknessConfig weakness;

  int iterations = 10;
  int budget = 320;
  int initial_size = 2800;
  bool augment_initial = true;
  long max_steps = 0;
  int sample_stride = 10;
  double start_speed = 10.0;
  StallGuard stall{1.0, 5.0};  // aggregation rollouts only
  long eval_steps = 4000;
  AssessReference reference = AssessReference::Initial;
  bool warm_start = true;
  int class_epochs = 10;
  bool balance_classes = true;  // inverse-frequency cross-entropy weights
  std::uint64_t seed = 1;
};

/// Regression heads first, then relabel against the fitted policy, then the
/// class head on the fresh labels. `data` keeps the new labels.
/// With `balance_classes` each present class gets weight N / (K * n_c).
void fit_policy(NetworkParameters& params, Dataset& data, const RunSettings& settings,
                std::uint64_t seed);

struct IterationMetrics {
  int iteration = 0;
  std::array<double, kNumClasses> class_mean_norm{};  // on the reference set, pre-iteration policy
  ClassSelection selection;
  WeaknessReport report;
  std::array<int, kNumClasses> queries{};
  bool budget_reached = true;
  double validation_norm = 0.0;  // policy trained at the end of this iteration
};

struct RunTracks {
  const Track* train = nullptr;
  const Track* validation = nullptr;
  std::vector<const Track*> tests;
};

struct RunResult {
  std::vector<NetworkParameters> policies;  // index i = policy after iteration i
  std::vector<double> validation_norms;     // same indexing
  std::vector<IterationMetrics> metrics;    // iterations 1..N
  QueryLedger ledger;
  int best_iteration = 0;
  std::vector<EvalResult> test_results;     // best policy on each test track
  Dataset initial;
  Dataset aggregate;

  const NetworkParameters& best() const { return policies[best_iteration]; }
};

/// Optional progress callback: (iteration, message).
using ProgressFn = std::function<void(int, const std::string&)>;

RunResult run(Algorithm algorithm, const RunSettings& settings, const RunTracks& tracks,
              const ProgressFn& progress = {});

/// Optionally starts from a pre-collected initial dataset.
RunResult run(Algorithm algorithm, const RunSettings& settings, const RunTracks& tracks,
              std::optional<Dataset> initial, const ProgressFn& progress);

DrivingEnv make_env(const RunSettings& settings, const Track& track);

std::string metrics_to_csv(const std::vector<IterationMetrics>& metrics);
std::string weakness_to_csv(const std::vector<IterationMetrics>& metrics);

}  // namespace seldagger
