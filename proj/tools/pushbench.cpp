// Push-recovery sweep driver: runs the disturbance grid and writes results,
// metrics and polar data under --out.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "rmpwbc/bench.hpp"
#include "rmpwbc/config.hpp"

using namespace rmpwbc;
using namespace rmpwbc::bench;

namespace {

constexpr int kConfigError = 2;
constexpr int kIoError = 3;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    if (end > start) out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string pct(const std::optional<double>& v) {
  if (!v) return std::string(kUndefined);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *v);
  return buf;
}

void print_metrics(const MetricsTable& m, Strategy p, Strategy b) {
  std::printf("%-6s %6s %9s %9s %9s %9s %11s\n", "timing", "cells", "SR_p", "SR_b", "eta_p|b", "eta_b|p",
              "improvement");
  for (const auto& r : m.rows)
    std::printf("%-6s %6d %9s %9s %9s %9s %11s\n", r.timing.c_str(), r.cells, pct(r.sr_proposed).c_str(),
                pct(r.sr_baseline).c_str(), pct(r.eta_p_given_b).c_str(), pct(r.eta_b_given_p).c_str(),
                pct(r.improvement).c_str());
  std::printf("(p = %s, b = %s)\n", std::string(control::strategy_name(p)).c_str(),
              std::string(control::strategy_name(b)).c_str());
}

template <class F>
bool write_file(const std::filesystem::path& path, F&& body) {
  std::ofstream out(path);
  if (!out) return false;
  body(out);
  out.flush();
  return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Push-recovery benchmark sweep"};
  std::string config_path, magnitudes = "10:90:20", timings = "T1,T2,T3,T4", strategies = "proposed,baseline";
  std::string out_dir = "results", formats = "csv,polar";
  int angles = 12, trials_per_cell = 1, workers = 0;
  std::uint64_t seed = 42;
  bool full = false, dump_config = false, quiet = false;

  app.add_option("--config", config_path, "YAML model, controller, simulator and trial configuration")
      ->check(CLI::ExistingFile);
  app.add_option("--magnitudes", magnitudes, "push magnitudes in N: start:stop:step or a comma list")
      ->capture_default_str();
  app.add_option("--angles", angles, "number of push directions evenly spaced over 360 degrees")
      ->capture_default_str();
  app.add_option("--timings", timings, "timing tags, comma separated")->capture_default_str();
  app.add_option("--strategies", strategies, "proposed, baseline, no_avoidance, apf; comma separated")
      ->capture_default_str();
  app.add_option("--trials-per-cell", trials_per_cell, "repetitions per cell")->capture_default_str();
  app.add_option("--seed", seed, "master seed")->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--format", formats, "csv, json, polar; comma separated")->capture_default_str();
  app.add_option("--workers", workers, "worker threads (default: PUSHBENCH_WORKERS or all cores)");
  app.add_flag("--full", full, "large sweep: magnitudes 10:100:5 and 66 angles (about 10,000 trials)");
  app.add_flag("--dump-config", dump_config, "print the effective configuration as YAML and exit");
  app.add_flag("--quiet", quiet, "no progress output");
  CLI11_PARSE(app, argc, argv);

  sim::TrialConfig base;
  SweepSpec spec;
  std::set<std::string> fmt;
  try {
    if (!config_path.empty()) base = config::load_trial_config(config_path);
    if (dump_config) {
      std::cout << config::emit_trial_config(base);
      return 0;
    }
    if (full) {
      magnitudes = "10:100:5";
      angles = 66;
    }
    spec.magnitudes = parse_magnitudes(magnitudes);
    spec.angles = even_angles(angles);
    for (const auto& t : split_list(timings)) spec.timings.push_back(locomotion::parse_tag(t));
    for (const auto& s : split_list(strategies)) spec.strategies.push_back(control::parse_strategy(s));
    spec.trials_per_cell = trials_per_cell;
    spec.seed = seed;
    spec.validate();
    for (const auto& f : split_list(formats)) {
      if (f != "csv" && f != "json" && f != "polar") throw ConfigError("unknown format '" + f + "'");
      fmt.insert(f);
    }
    if (fmt.empty()) throw ConfigError("no output format");
  } catch (const ConfigError& e) {
    std::cerr << "pushbench: " << (config_path.empty() ? "" : config_path + ": ") << e.what() << '\n';
    return kConfigError;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "pushbench: cannot create " << out_dir << ": " << ec.message() << '\n';
    return kIoError;
  }

  SweepOptions opts;
  opts.workers = workers;
  if (!quiet)
    opts.progress = [](std::size_t done, std::size_t total) {
      if (done % 10 == 0 || done == total) std::fprintf(stderr, "\r%zu / %zu trials", done, total);
      if (done == total) std::fprintf(stderr, "\n");
    };
  const auto records = run_sweep(spec, base, opts);

  // Pair the first two listed strategies; with proposed and baseline present they are used.
  Strategy p = spec.strategies.front(), b = spec.strategies.size() > 1 ? spec.strategies[1] : p;
  for (Strategy s : spec.strategies) {
    if (s == Strategy::Proposed) p = s;
    if (s == Strategy::Baseline) b = s;
  }
  const MetricsTable metrics = compute_metrics(records, p, b);

  const std::filesystem::path dir(out_dir);
  bool ok = true;
  if (fmt.count("csv")) {
    ok &= write_file(dir / "trials.csv", [&](std::ostream& o) { write_csv(o, records); });
    ok &= write_file(dir / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, metrics); });
  }
  if (fmt.count("json")) ok &= write_file(dir / "results.json", [&](std::ostream& o) { write_json(o, records, metrics); });
  if (fmt.count("polar")) ok &= write_file(dir / "polar.csv", [&](std::ostream& o) { write_polar(o, records); });
  if (!ok) {
    std::cerr << "pushbench: cannot write results under " << out_dir << '\n';
    return kIoError;
  }

  if (!quiet) print_metrics(metrics, p, b);
  return 0;
}
