#include "rmpwbc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace rmpwbc::bench {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = s.find(sep, start);
    out.emplace_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ConfigError("not a number: '" + s + "'");
  return v;
}

long to_long(const std::string& s) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') throw ConfigError("not an integer: '" + s + "'");
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(kUndefined); }

nlohmann::json json_value(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(std::string(kUndefined));
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  // hash_combine followed by the splitmix64 finalizer
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

std::uint64_t bits(double v) {
  std::uint64_t b;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

using CellKey = std::tuple<int, double, double, int>;  // timing, angle_deg, magnitude, repeat

CellKey key_of(const TrialRecord& r) { return {static_cast<int>(r.timing), r.angle_deg, r.magnitude, r.repeat}; }

MetricsRow make_row(std::string timing, int cells, int sp, int sb, int both) {
  MetricsRow row;
  row.timing = std::move(timing);
  row.cells = cells;
  row.success_proposed = sp;
  row.success_baseline = sb;
  row.success_both = both;
  if (cells > 0) {
    row.sr_proposed = static_cast<double>(sp) / cells;
    row.sr_baseline = static_cast<double>(sb) / cells;
  }
  if (sb > 0) {
    row.eta_p_given_b = static_cast<double>(both) / sb;
    row.improvement = (row.sr_proposed - row.sr_baseline) / row.sr_baseline;
  }
  if (sp > 0) row.eta_b_given_p = static_cast<double>(both) / sp;
  return row;
}

constexpr const char* kCsvHeader =
    "trial_id,strategy,timing,angle_deg,magnitude_N,success,failure_cause,min_clearance_m,"
    "repeat,seed,min_base_height_m,failure_time_s,steps";

}  // namespace

void SweepSpec::validate() const {
  if (magnitudes.empty() || angles.empty() || timings.empty() || strategies.empty())
    throw ConfigError("sweep has no cells");
  if (trials_per_cell < 1) throw ConfigError("trials per cell must be at least 1");
  for (double m : magnitudes)
    if (!(m >= 10.0 && m <= 100.0)) throw ConfigError("sweep magnitudes must lie in [10, 100] N");
  for (double a : angles)
    if (!std::isfinite(a)) throw ConfigError("sweep angles must be finite");
}

std::size_t SweepSpec::size() const {
  return magnitudes.size() * angles.size() * timings.size() * strategies.size() * static_cast<std::size_t>(trials_per_cell);
}

SweepSpec SweepSpec::desk_scale() {
  SweepSpec s;
  s.magnitudes = {10.0, 30.0, 50.0, 70.0, 90.0};
  s.angles = even_angles(12);
  s.timings = {TimingTag::T1, TimingTag::T2, TimingTag::T3, TimingTag::T4};
  s.strategies = {Strategy::Proposed, Strategy::Baseline};
  return s;
}

std::vector<double> parse_magnitudes(std::string_view s) {
  std::vector<double> out;
  if (s.find(':') != std::string_view::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw ConfigError("magnitude range must be start:stop:step");
    const double a = to_double(parts[0]), b = to_double(parts[1]), step = to_double(parts[2]);
    if (!(step > 0.0) || b < a) throw ConfigError("magnitude range needs start <= stop and step > 0");
    const int n = static_cast<int>(std::floor((b - a) / step + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(a + i * step);
  } else {
    for (const auto& p : split(s, ',')) out.push_back(to_double(p));
  }
  return out;
}

std::vector<double> even_angles(int n) {
  if (n < 1) throw ConfigError("angle count must be at least 1");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(2.0 * kPi * i / n);
  return out;
}

std::uint64_t cell_seed(std::uint64_t master, TimingTag timing, double angle, double magnitude, int repeat) {
  std::uint64_t h = mix(0x243f6a8885a308d3ULL, master);
  h = mix(h, static_cast<std::uint64_t>(timing));
  h = mix(h, bits(angle));
  h = mix(h, bits(magnitude));
  return mix(h, static_cast<std::uint64_t>(repeat));
}

int default_workers() {
  if (const char* env = std::getenv("PUSHBENCH_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<TrialRecord> run_sweep(const SweepSpec& spec, const sim::TrialConfig& base, const SweepOptions& opts) {
  spec.validate();
  base.validate();

  struct Job {
    TrialRecord rec;
    double angle = 0.0;
  };
  std::vector<Job> jobs;
  jobs.reserve(spec.size());
  for (Strategy s : spec.strategies)
    for (TimingTag t : spec.timings)
      for (double a : spec.angles)
        for (double m : spec.magnitudes)
          for (int r = 0; r < spec.trials_per_cell; ++r) {
            Job j;
            j.angle = a;
            j.rec.trial_id = static_cast<int>(jobs.size());
            j.rec.strategy = s;
            j.rec.timing = t;
            j.rec.angle_deg = a * 180.0 / kPi;
            j.rec.magnitude = m;
            j.rec.repeat = r;
            j.rec.seed = cell_seed(spec.seed, t, a, m, r);
            jobs.push_back(j);
          }

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      TrialRecord& rec = jobs[i].rec;
      sim::TrialConfig cfg = base;
      cfg.controller.strategy = rec.strategy;
      sim::Disturbance d;
      d.magnitude = rec.magnitude;
      d.angle = jobs[i].angle;
      d.tag = rec.timing;
      try {
        const sim::TrialOutcome o = sim::run_trial(cfg, d, rec.seed);
        rec.success = o.success;
        rec.failure_cause = o.failure_cause;
        rec.min_clearance = o.min_clearance;
        rec.min_base_height = o.min_base_height;
        rec.failure_time = o.failure_time;
        rec.steps = o.steps_taken;
      } catch (const std::exception&) {
        rec.success = false;
        rec.failure_cause = sim::FailureCause::ControllerFailure;
      }
      if (opts.progress) {
        std::lock_guard<std::mutex> lock(mu);
        opts.progress(++done, jobs.size());
      }
    }
  };

  const int n = std::max(1, std::min<int>(opts.workers > 0 ? opts.workers : default_workers(),
                                          static_cast<int>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<TrialRecord> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(j.rec);
  return out;
}

const MetricsRow* MetricsTable::find(std::string_view timing) const {
  for (const auto& r : rows)
    if (r.timing == timing) return &r;
  return nullptr;
}

MetricsTable compute_metrics(const std::vector<TrialRecord>& records, Strategy proposed, Strategy baseline) {
  std::map<CellKey, std::pair<int, int>> cells;  // success flags, -1 when absent
  for (const auto& r : records) {
    if (r.strategy != proposed && r.strategy != baseline) continue;
    auto [it, fresh] = cells.try_emplace(key_of(r), -1, -1);
    (r.strategy == proposed ? it->second.first : it->second.second) = r.success ? 1 : 0;
  }

  struct Count {
    int cells = 0, p = 0, b = 0, both = 0;
  };
  std::map<int, Count> per_tag;
  Count all;
  for (const auto& [key, flags] : cells) {
    if (flags.first < 0 || flags.second < 0) continue;
    for (Count* c : {&per_tag[std::get<0>(key)], &all}) {
      ++c->cells;
      c->p += flags.first;
      c->b += flags.second;
      c->both += flags.first & flags.second;
    }
  }

  MetricsTable m;
  for (const auto& [tag, c] : per_tag)
    m.rows.push_back(make_row(std::string(locomotion::tag_name(static_cast<TimingTag>(tag))), c.cells, c.p, c.b, c.both));
  m.rows.push_back(make_row("all", all.cells, all.p, all.b, all.both));
  return m;
}

bool is_lateral(double angle_deg) {
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0.0) a += 360.0;
  return (a >= 60.0 - 1e-9 && a <= 120.0 + 1e-9) || (a >= 240.0 - 1e-9 && a <= 300.0 + 1e-9);
}

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.trial_id << ',' << control::strategy_name(r.strategy) << ',' << locomotion::tag_name(r.timing) << ','
        << fmt(r.angle_deg) << ',' << fmt(r.magnitude) << ',' << (r.success ? 1 : 0) << ','
        << sim::failure_name(r.failure_cause) << ',' << fmt(r.min_clearance) << ',' << r.repeat << ',' << r.seed
        << ',' << fmt(r.min_base_height) << ',' << fmt(r.failure_time) << ',' << r.steps << '\n';
  }
}

std::vector<TrialRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError("unexpected CSV header", 1);
  std::vector<TrialRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 13) throw ConfigError("expected 13 CSV fields", line_no);
    try {
      TrialRecord r;
      r.trial_id = static_cast<int>(to_long(f[0]));
      r.strategy = control::parse_strategy(f[1]);
      r.timing = locomotion::parse_tag(f[2]);
      r.angle_deg = to_double(f[3]);
      r.magnitude = to_double(f[4]);
      if (f[5] != "0" && f[5] != "1") throw ConfigError("success must be 0 or 1");
      r.success = f[5] == "1";
      r.failure_cause = sim::parse_failure(f[6]);
      r.min_clearance = to_double(f[7]);
      r.repeat = static_cast<int>(to_long(f[8]));
      r.seed = std::stoull(f[9]);
      r.min_base_height = to_double(f[10]);
      r.failure_time = to_double(f[11]);
      r.steps = static_cast<int>(to_long(f[12]));
      out.push_back(r);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line_no);
    } catch (const std::exception&) {
      throw ConfigError("malformed CSV row", line_no);
    }
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const MetricsTable& m) {
  out << "timing,cells,success_proposed,success_baseline,success_both,sr_proposed,sr_baseline,eta_p_given_b,"
         "eta_b_given_p,improvement\n";
  for (const auto& r : m.rows)
    out << r.timing << ',' << r.cells << ',' << r.success_proposed << ',' << r.success_baseline << ','
        << r.success_both << ',' << fmt(r.sr_proposed) << ',' << fmt(r.sr_baseline) << ',' << fmt(r.eta_p_given_b)
        << ',' << fmt(r.eta_b_given_p) << ',' << fmt(r.improvement) << '\n';
}

void write_json(std::ostream& out, const std::vector<TrialRecord>& records, const MetricsTable& m) {
  nlohmann::json j;
  j["trials"] = nlohmann::json::array();
  for (const auto& r : records) {
    j["trials"].push_back({{"trial_id", r.trial_id},
                           {"strategy", control::strategy_name(r.strategy)},
                           {"timing", locomotion::tag_name(r.timing)},
                           {"angle_deg", r.angle_deg},
                           {"magnitude_N", r.magnitude},
                           {"success", r.success},
                           {"failure_cause", sim::failure_name(r.failure_cause)},
                           {"min_clearance_m", r.min_clearance},
                           {"repeat", r.repeat},
                           {"seed", r.seed},
                           {"min_base_height_m", r.min_base_height},
                           {"failure_time_s", r.failure_time},
                           {"steps", r.steps}});
  }
  j["metrics"] = nlohmann::json::array();
  for (const auto& r : m.rows) {
    j["metrics"].push_back({{"timing", r.timing},
                            {"cells", r.cells},
                            {"success_proposed", r.success_proposed},
                            {"success_baseline", r.success_baseline},
                            {"success_both", r.success_both},
                            {"sr_proposed", r.sr_proposed},
                            {"sr_baseline", r.sr_baseline},
                            {"eta_p_given_b", json_value(r.eta_p_given_b)},
                            {"eta_b_given_p", json_value(r.eta_b_given_p)},
                            {"improvement", json_value(r.improvement)}});
  }
  out << j.dump(2) << '\n';
}

void write_polar(std::ostream& out, const std::vector<TrialRecord>& records) {
  std::map<std::tuple<int, int, double>, double> best;  // strategy, timing, angle -> magnitude
  for (const auto& r : records) {
    if (!r.success) continue;
    auto [it, fresh] = best.try_emplace({static_cast<int>(r.strategy), static_cast<int>(r.timing), r.angle_deg},
                                        r.magnitude);
    if (!fresh) it->second = std::max(it->second, r.magnitude);
  }
  out << "angle_deg,max_magnitude_N,timing,strategy\n";
  for (const auto& [k, mag] : best)
    out << fmt(std::get<2>(k)) << ',' << fmt(mag) << ',' << locomotion::tag_name(static_cast<TimingTag>(std::get<1>(k)))
        << ',' << control::strategy_name(static_cast<Strategy>(std::get<0>(k))) << '\n';
}

}  // namespace rmpwbc::bench
