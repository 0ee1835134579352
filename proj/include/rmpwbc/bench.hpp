#pragma once

// Push-recovery sweeps over magnitude x angle x timing x strategy, success
// metrics for a pair of strategies, and CSV / JSON / polar exports.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rmpwbc/trial.hpp"

namespace rmpwbc::bench {

using control::Strategy;
using locomotion::TimingTag;

struct SweepSpec {
  std::vector<double> magnitudes;  // N
  std::vector<double> angles;      // rad, base frame, 0 = forward
  std::vector<TimingTag> timings;
  std::vector<Strategy> strategies;
  int trials_per_cell = 1;
  std::uint64_t seed = 42;

  void validate() const;
  std::size_t size() const;

  // 5 magnitudes x 12 angles x T1..T4 x {proposed, baseline} = 480 trials.
  static SweepSpec desk_scale();
};

// "10:100:20" (start:stop:step, stop inclusive) or "10,30,50".
std::vector<double> parse_magnitudes(std::string_view s);
// n angles evenly spaced over [0, 2 pi).
std::vector<double> even_angles(int n);

// Seed of one cell; independent of the strategy so paired trials share it,
// and of the other cells so growing the sweep leaves existing seeds unchanged.
std::uint64_t cell_seed(std::uint64_t master, TimingTag timing, double angle, double magnitude, int repeat);

struct TrialRecord {
  int trial_id = 0;
  Strategy strategy = Strategy::Proposed;
  TimingTag timing = TimingTag::T1;
  double angle_deg = 0.0;
  double magnitude = 0.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  bool success = false;
  sim::FailureCause failure_cause = sim::FailureCause::None;
  double min_clearance = 0.0;
  double min_base_height = 0.0;
  double failure_time = -1.0;
  int steps = 0;

  bool operator==(const TrialRecord&) const = default;
};

struct SweepOptions {
  int workers = 0;  // 0: PUSHBENCH_WORKERS, else the hardware concurrency
  std::function<void(std::size_t done, std::size_t total)> progress;
};

int default_workers();

// One record per (strategy, timing, angle, magnitude, repeat), ordered by trial_id.
std::vector<TrialRecord> run_sweep(const SweepSpec& spec, const sim::TrialConfig& base,
                                   const SweepOptions& opts = {});

struct MetricsRow {
  std::string timing;  // tag name or "all"
  int cells = 0;       // paired cells
  int success_proposed = 0;
  int success_baseline = 0;
  int success_both = 0;
  double sr_proposed = 0.0;
  double sr_baseline = 0.0;
  std::optional<double> eta_p_given_b;  // both / baseline successes
  std::optional<double> eta_b_given_p;  // both / proposed successes
  std::optional<double> improvement;    // (SR_p - SR_b) / SR_b

  bool operator==(const MetricsRow&) const = default;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;  // T1..T4 as present, then "all"

  const MetricsRow* find(std::string_view timing) const;
  bool operator==(const MetricsTable&) const = default;
};

// Pairs records of the two strategies by (timing, angle, magnitude, repeat);
// cells missing either strategy are ignored.
MetricsTable compute_metrics(const std::vector<TrialRecord>& records, Strategy proposed = Strategy::Proposed,
                             Strategy baseline = Strategy::Baseline);

bool is_lateral(double angle_deg);  // within 30 degrees of +-90

inline constexpr std::string_view kUndefined = "undefined";

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_csv(std::istream& in);
void write_metrics_csv(std::ostream& out, const MetricsTable& m);
void write_json(std::ostream& out, const std::vector<TrialRecord>& records, const MetricsTable& m);
// Successful trials only: largest recovered magnitude per (strategy, timing, angle).
void write_polar(std::ostream& out, const std::vector<TrialRecord>& records);

}  // namespace rmpwbc::bench
