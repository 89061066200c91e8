// Acceptance checks. Prints one PASS/FAIL line per criterion.
//
// Exit status is 0 once every criterion has been evaluated, so a FAIL line
// is reported rather than hidden behind a crashed test; pass --strict to
// turn any FAIL into exit status 1.

#include "../oracles.hpp"

#include "seldagger/commands.hpp"
#include "seldagger/config.hpp"
#include "seldagger/csv.hpp"
#include "seldagger/dagger.hpp"
#include "seldagger/labeling.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

using namespace seldagger;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int n, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("criterion %d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double x, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, x);
  return buf;
}

const std::string kAssets = SELDAGGER_ASSET_DIR;

// -------------------------------------------------------------------------

void criterion1() {
  const auto t0 = Clock::now();
  const Thresholds t;
  bool ok = scaled_norm(0.25, 0.0, t) == 0.5 && scaled_norm(0.0, 1.0, t) == 0.5;
  int boundary_ok = 0;
  for (const auto& bc : oracle::boundary_cases())
    boundary_ok += classify({bc.steering, 0.0}, bc.speed, bc.safe, t) == bc.expected;
  ok = ok && boundary_ok == static_cast<int>(oracle::boundary_cases().size());

  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int f = 0; f < 1000; ++f) {
    const auto xs = oracle::random_class_norms(rng);
    const auto r = weakness_coefficients(xs);
    const auto o = oracle::brute_force_weakness(xs);
    for (std::size_t k = 0; k < o.size(); ++k)
      worst = std::max(worst, std::abs(r.stats[k].coefficient - o[k]));
  }
  const double secs = seconds_since(t0);
  ok = ok && worst <= 1e-12 && secs < 1.0;
  report(1, ok,
         "calibration 0.5/0.5, boundary " + std::to_string(boundary_ok) + "/" +
             std::to_string(oracle::boundary_cases().size()) + ", brute-force max diff " +
             fmt(worst) + " over 1000 fixtures, " + fmt(secs, 3) + " s");
}

void criterion2() {
  const auto& rows = oracle::table2();
  bool ok = true;
  std::string picked;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto sel = select_classes(oracle::report_from_coefficients(rows[i].coefficients));
    ok = ok && sel.weak.size() == 2 && sel.weak[0] == rows[i].weak[0] &&
         sel.weak[1] == rows[i].weak[1];
    picked += " row" + std::to_string(i + 1) + "={" + join_classes(sel.weak) + "}";
  }
  report(2, ok, "weak pairs" + picked + " (expected {HR|HL}, {LL|HR})");
}

void criterion3() {
  const auto t0 = Clock::now();
  const auto track = load_track(kAssets + "/train.track");
  const TrackCheck c = expert_lap(*track, RunSettings{});
  const double secs = seconds_since(t0);
  const bool ok = c.drivable && c.max_lateral < 1.0 && c.mean_speed >= 8.0 &&
                  c.mean_speed <= 14.0 && secs < 2.0;
  report(3, ok,
         "max |lateral| " + fmt(c.max_lateral, 3) + " m, mean speed " + fmt(c.mean_speed, 4) +
             " m/s, " + fmt(secs, 3) + " s");
}

void criterion4() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto gc = oracle::gradient_check(seed);
    for (const auto& e : gc.tensors) {
      if (e.relative > worst) {
        worst = e.relative;
        worst_name = e.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  report(4, worst < 1e-4 && secs < 10.0,
         "worst per-tensor relative error " + fmt(worst) + " (" + worst_name +
             ") over 20 seeds, " + fmt(secs, 3) + " s");
}

// Desk-scale runs shared by criteria 5 to 7.
struct DeskRuns {
  std::vector<RunResult> selective;
  std::vector<RunResult> safedagger;
  double seconds = 0.0;
};

RunSettings desk_settings(std::uint64_t seed) {
  RunSettings s;
  s.iterations = 5;
  s.budget = 64;
  s.initial_size = 600;
  s.seed = seed;
  return s;
}

double test_mean(const RunResult& r) {
  double sum = 0.0;
  for (const auto& e : r.test_results) sum += e.mean_norm;
  return sum / static_cast<double>(r.test_results.size());
}

DeskRuns desk_runs(const RunTracks& tracks) {
  DeskRuns d;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    d.selective.push_back(run(Algorithm::Selective, desk_settings(seed), tracks));
    d.safedagger.push_back(run(Algorithm::SafeDagger, desk_settings(seed), tracks));
    std::printf("  seed %llu: selective test mean %s, safedagger %s\n",
                static_cast<unsigned long long>(seed), fmt(test_mean(d.selective.back())).c_str(),
                fmt(test_mean(d.safedagger.back())).c_str());
    std::fflush(stdout);
  }
  d.seconds = seconds_since(t0);
  return d;
}

void criterion5(const DeskRuns& d) {
  bool ok = true;
  std::string detail;
  for (const auto* runs : {&d.selective, &d.safedagger}) {
    int rows_ok = 0, rows = 0, total_ok = 0;
    for (const auto& r : *runs) {
      for (const auto& row : r.ledger.rows()) {
        ++rows;
        rows_ok += row.total() == 64;
      }
      total_ok += r.ledger.grand_total() == 320;
    }
    ok = ok && rows_ok == rows && total_ok == static_cast<int>(runs->size());
    detail += std::string(runs == &d.selective ? "selective" : ", safedagger") + " rows " +
              std::to_string(rows_ok) + "/" + std::to_string(rows) + " at 64, totals " +
              std::to_string(total_ok) + "/" + std::to_string(runs->size()) + " at 320";
  }
  report(5, ok, detail);
}

void criterion6(const DeskRuns& d) {
  int improved = 0;
  std::string detail;
  for (const auto& r : d.selective) {
    const double first = r.validation_norms[1];
    const double last = r.validation_norms.back();
    improved += last < first;
    detail += " " + fmt(first, 3) + "->" + fmt(last, 3);
  }
  const bool ok = improved >= 4 && d.seconds < 300.0;
  report(6, ok,
         "validation norm iteration 1 -> N lower in " + std::to_string(improved) +
             "/5 seeds (" + detail.substr(1) + "), runs took " + fmt(d.seconds, 3) + " s");
}

void criterion7(const DeskRuns& d) {
  int wins = 0;
  double improvement = 0.0;
  for (std::size_t i = 0; i < d.selective.size(); ++i) {
    const double sel = test_mean(d.selective[i]);
    const double saf = test_mean(d.safedagger[i]);
    wins += sel <= saf;
    improvement += saf - sel;
  }
  improvement /= static_cast<double>(d.selective.size());
  const bool ok = wins >= 4 && improvement > 0.0 && d.seconds < 900.0;
  report(7, ok,
         "selective <= safedagger on the test tracks in " + std::to_string(wins) +
             "/5 seeds, mean improvement " + fmt(improvement));
}

void criterion8() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / "seldagger_acceptance";
  fs::remove_all(root);

  ExperimentConfig first = ExperimentConfig::defaults();
  first.set("aggregate.iterations", "2", "acceptance");
  first.set("aggregate.budget", "32", "acceptance");
  first.set("aggregate.initial_size", "300", "acceptance");
  first.set("aggregate.eval_steps", "1000", "acceptance");
  first.set("seed", "11", "acceptance");
  first.output = (root / "a").string();
  std::ostringstream sink;
  cmd_run(first, sink);

  ExperimentConfig again = parse_config((root / "a" / "config.txt").string());
  again.output = (root / "b").string();
  cmd_run(again, sink);

  int same = 0, total = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    if (entry.path().extension() != ".csv") continue;
    ++total;
    const fs::path other = root / "b" / entry.path().filename();
    same += fs::exists(other) && read_text(entry.path().string()) == read_text(other.string());
  }
  bool params_same = true;
  for (const auto& entry : fs::directory_iterator(root / "a" / "params")) {
    const fs::path other = root / "b" / "params" / entry.path().filename();
    params_same = params_same && read_text(entry.path().string()) == read_text(other.string());
  }

  const NetworkParameters p = load_params((root / "a" / "params" / "policy_2.params").string());
  const fs::path copy = root / "copy.params";
  save_params(p, copy.string());
  const NetworkParameters q = load_params(copy.string());
  const bool round_trip = p == q && read_text(copy.string()) ==
                                        read_text((root / "a/params/policy_2.params").string());

  const double secs = seconds_since(t0);
  const bool ok = total > 0 && same == total && params_same && round_trip && secs < 60.0;
  report(8, ok,
         std::to_string(same) + "/" + std::to_string(total) +
             " CSVs identical after re-running from config.txt, snapshots " +
             (params_same ? "identical" : "differ") + ", save/load " +
             (round_trip ? "bit-exact" : "not bit-exact") + ", " + fmt(secs, 3) + " s");
  fs::remove_all(root);
}

void criterion9() {
  const Thresholds t;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> steer(-40.0, 40.0), speed(0.0, 20.0);
  std::bernoulli_distribution safe(0.25);
  int exactly_one = 0;
  for (int i = 0; i < 10000; ++i) {
    const double s = steer(rng), v = speed(rng);
    const bool f = safe(rng);
    const TrajectoryClass c = classify({s, 0.0}, v, f, t);
    int matches = 0;
    for (TrajectoryClass k : kAllClasses) {
      const bool turn = std::abs(s) > t.tau_turn;
      bool member = false;
      switch (k) {
        case TrajectoryClass::Safe: member = f; break;
        case TrajectoryClass::LL: member = !f && turn && s > 0 && v < t.tau_speed_turn; break;
        case TrajectoryClass::HL: member = !f && turn && s > 0 && v >= t.tau_speed_turn; break;
        case TrajectoryClass::LR: member = !f && turn && s < 0 && v < t.tau_speed_turn; break;
        case TrajectoryClass::HR: member = !f && turn && s < 0 && v >= t.tau_speed_turn; break;
        case TrajectoryClass::LS: member = !f && !turn && v < t.tau_speed_straight; break;
        case TrajectoryClass::HS: member = !f && !turn && v >= t.tau_speed_straight; break;
      }
      matches += member;
      if (member && k != c) matches += 100;  // classify disagrees with the predicate
    }
    exactly_one += matches == 1;
  }
  report(9, exactly_one == 10000,
         std::to_string(exactly_one) + "/10000 tuples in exactly one class");
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) strict = true;
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;  // skip the desk-scale runs
  }

  try {
    criterion1();
    criterion2();
    criterion3();
    criterion4();

    if (!quick) {
      const auto train = load_track(kAssets + "/train.track");
      const auto validation = load_track(kAssets + "/validation.track");
      const auto t1 = load_track(kAssets + "/test1.track");
      const auto t2 = load_track(kAssets + "/test2.track");
      const auto t3 = load_track(kAssets + "/test3.track");
      const RunTracks tracks{train.get(), validation.get(), {t1.get(), t2.get(), t3.get()}};
      const DeskRuns d = desk_runs(tracks);
      criterion5(d);
      criterion6(d);
      criterion7(d);
    }

    criterion8();
    criterion9();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }

  std::printf("%d criteria failed\n", failures);
  return strict && failures > 0 ? 1 : 0;
}
