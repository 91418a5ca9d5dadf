#pragma once

// Density sweeps: every (density, mode, replication) cell is an independent
// run. Rows come back in a fixed order whatever the thread count, so the CSV
// is byte-identical across machines for a given scenario and seed.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rrdsim/metrics.hpp"
#include "rrdsim/scenario.hpp"
#include "rrdsim/simulation.hpp"

namespace rrdsim {

enum class SweepMode : std::uint8_t { NoAttack, Undefended, DetectOnly, Phase1, Phase2 };

inline const char* to_string(SweepMode m) {
  switch (m) {
    case SweepMode::NoAttack: return "no-attack";
    case SweepMode::Undefended: return "undefended";
    case SweepMode::DetectOnly: return "detect-only";
    case SweepMode::Phase1: return "phase1";
    case SweepMode::Phase2: return "phase2";
  }
  return "?";
}

inline std::optional<SweepMode> parse_sweep_mode(const std::string& s) {
  for (auto m : {SweepMode::NoAttack, SweepMode::Undefended, SweepMode::DetectOnly, SweepMode::Phase1,
                 SweepMode::Phase2}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

inline std::vector<SweepMode> default_sweep_modes() {
  return {SweepMode::NoAttack, SweepMode::Undefended, SweepMode::Phase2};
}

inline std::vector<int> default_densities() {
  std::vector<int> d;
  for (int n = kMinDensity; n <= kMaxDensity; ++n) d.push_back(n);
  return d;
}

/// Seed of replication `r`; shared by every density and mode so cells are paired.
inline std::uint64_t replication_seed(std::uint64_t base_seed, int r) {
  return derive_seed(base_seed, 0x7265706cULL + static_cast<std::uint64_t>(r));
}

/// The scenario actually run for one cell.
inline ScenarioConfig configure_cell(const ScenarioConfig& base, int density, SweepMode mode, int replication) {
  ScenarioConfig c = base;
  c.node_count = density;
  c.seed = replication_seed(base.seed, replication);
  c.trace = false;
  switch (mode) {
    case SweepMode::NoAttack:
      c.attackers.clear();
      c.defense.mode = DefenseMode::Off;
      break;
    case SweepMode::Undefended: c.defense.mode = DefenseMode::Off; break;
    case SweepMode::DetectOnly: c.defense.mode = DefenseMode::DetectOnly; break;
    case SweepMode::Phase1: c.defense.mode = DefenseMode::Phase1; break;
    case SweepMode::Phase2: c.defense.mode = DefenseMode::Phase2; break;
  }
  if (mode != SweepMode::NoAttack && c.attackers.empty()) c.attackers.push_back(AttackProfile{});
  return c;
}

struct SweepRow {
  int node_count = 0;
  std::string defense_mode;
  std::string detector_variant;
  std::uint64_t seed = 0;
  int replication = 0;
  double throughput_bps = 0;
  std::optional<double> mean_latency_us;
  std::optional<double> tpr;
  std::optional<double> fpr;
  std::int64_t queue_drops = 0;
  std::int64_t retry_drops = 0;
  std::int64_t attacker_hold_us = 0;
  std::int64_t notices_sent = 0;
};

struct SweepRequest {
  ScenarioConfig base;
  std::vector<int> densities = default_densities();
  std::vector<SweepMode> modes = default_sweep_modes();
  int replications = 0;  // 0: take base.replications
  unsigned threads = 1;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

class SweepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline SweepRow run_cell(const ScenarioConfig& base, int density, SweepMode mode, int replication) {
  const ScenarioConfig cfg = configure_cell(base, density, mode, replication);
  Simulation sim(cfg);
  const MetricsLedger ledger = sim.run();
  SweepRow row;
  row.node_count = density;
  row.defense_mode = to_string(mode);
  row.detector_variant = cfg.defense.detecting() ? to_string(cfg.defense.variant) : "none";
  row.seed = cfg.seed;
  row.replication = replication;
  row.throughput_bps = throughput_bps(ledger, cfg.run_seconds);
  row.mean_latency_us = mean_latency_us(ledger);
  if (cfg.defense.detecting()) {
    const DetectionSummary d = detection_counts(ledger, sim.attacker_addresses());
    row.tpr = d.tpr;
    row.fpr = d.fpr;
  }
  row.queue_drops = ledger.honest_queue_drops();
  row.retry_drops = ledger.honest_retry_drops();
  row.attacker_hold_us = ledger.attacker_hold_us();
  row.notices_sent = ledger.notices_sent();
  return row;
}

inline SweepResult run_sweep(const SweepRequest& req) {
  const int reps = req.replications > 0 ? req.replications : req.base.replications;
  struct Cell {
    int density;
    SweepMode mode;
    int replication;
  };
  std::vector<Cell> cells;
  for (int d : req.densities)
    for (SweepMode m : req.modes)
      for (int r = 0; r < reps; ++r) cells.push_back({d, m, r});

  std::vector<SweepRow> rows(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        rows[i] = run_cell(req.base, cells[i].density, cells[i].mode, cells[i].replication);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(req.threads, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!errors[i]) continue;
    std::string what = "unknown error";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    throw SweepError("run failed at node_count=" + std::to_string(cells[i].density) + " mode=" +
                     to_string(cells[i].mode) + " replication=" + std::to_string(cells[i].replication) + ": " + what);
  }
  return {std::move(rows)};
}

// ---- CSV ----

inline constexpr const char* kCsvHeader =
    "node_count,defense_mode,detector_variant,seed,replication,throughput_bps,mean_latency_us,tpr,fpr,"
    "queue_drops,retry_drops,attacker_hold_us,notices_sent";

namespace detail {

inline std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v, int digits) { return v ? fmt_fixed(*v, digits) : ""; }

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

inline std::string csv_row(const SweepRow& r) {
  using detail::fmt_fixed;
  using detail::fmt_opt;
  return std::to_string(r.node_count) + "," + r.defense_mode + "," + r.detector_variant + "," +
         std::to_string(r.seed) + "," + std::to_string(r.replication) + "," + fmt_fixed(r.throughput_bps, 3) + "," +
         fmt_opt(r.mean_latency_us, 3) + "," + fmt_opt(r.tpr, 6) + "," + fmt_opt(r.fpr, 6) + "," +
         std::to_string(r.queue_drops) + "," + std::to_string(r.retry_drops) + "," +
         std::to_string(r.attacker_hold_us) + "," + std::to_string(r.notices_sent);
}

/// Writes `#` comment lines (format version, scenario, seeds) then the header and rows.
inline void write_sweep_csv(std::ostream& os, const SweepRequest& req, const SweepResult& result) {
  const int reps = req.replications > 0 ? req.replications : req.base.replications;
  os << "# rrdsim sweep v1\n";
  os << scenario_to_ini(req.base, "# ");
  os << "# densities:";
  for (int d : req.densities) os << ' ' << d;
  os << "\n# modes:";
  for (auto m : req.modes) os << ' ' << to_string(m);
  os << "\n# replication seeds:";
  for (int r = 0; r < reps; ++r) os << ' ' << replication_seed(req.base.seed, r);
  os << "\n" << kCsvHeader << "\n";
  for (const auto& row : result.rows) os << csv_row(row) << "\n";
}

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads rows back from a sweep CSV, skipping `#` comments.
inline SweepResult read_sweep_csv(std::istream& in) {
  SweepResult out;
  std::string line;
  bool header = false;
  int line_no = 0;
  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != kCsvHeader) throw CsvError("line " + std::to_string(line_no) + ": unexpected CSV header");
      header = true;
      continue;
    }
    const auto f = detail::split_csv(line);
    if (f.size() != 13) throw CsvError("line " + std::to_string(line_no) + ": expected 13 columns");
    try {
      SweepRow r;
      r.node_count = std::stoi(f[0]);
      r.defense_mode = f[1];
      r.detector_variant = f[2];
      r.seed = std::stoull(f[3]);
      r.replication = std::stoi(f[4]);
      r.throughput_bps = std::stod(f[5]);
      r.mean_latency_us = opt(f[6]);
      r.tpr = opt(f[7]);
      r.fpr = opt(f[8]);
      r.queue_drops = std::stoll(f[9]);
      r.retry_drops = std::stoll(f[10]);
      r.attacker_hold_us = std::stoll(f[11]);
      r.notices_sent = std::stoll(f[12]);
      out.rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw CsvError("line " + std::to_string(line_no) + ": malformed value");
    }
  }
  if (!header) throw CsvError("no CSV header found");
  return out;
}

// ---- summary and plots ----

struct SummaryRow {
  int node_count = 0;
  std::string mode;
  int runs = 0;
  double throughput_mean_bps = 0;
  double throughput_std_bps = 0;
  std::optional<double> latency_mean_us;
  std::optional<double> latency_std_us;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  return {mean, sd};
}

}  // namespace detail

/// Mean and sample standard deviation per (node_count, mode), in first-seen mode order.
inline std::vector<SummaryRow> summarize(const SweepResult& result) {
  std::vector<std::string> mode_order;
  std::map<std::pair<int, std::size_t>, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : result.rows) {
    auto it = std::find(mode_order.begin(), mode_order.end(), r.defense_mode);
    const auto mi = static_cast<std::size_t>(it - mode_order.begin());
    if (it == mode_order.end()) mode_order.push_back(r.defense_mode);
    auto& g = groups[{r.node_count, mi}];
    g.first.push_back(r.throughput_bps);
    if (r.mean_latency_us) g.second.push_back(*r.mean_latency_us);
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, g] : groups) {
    SummaryRow s;
    s.node_count = key.first;
    s.mode = mode_order[key.second];
    s.runs = static_cast<int>(g.first.size());
    std::tie(s.throughput_mean_bps, s.throughput_std_bps) = detail::mean_std(g.first);
    if (!g.second.empty()) {
      const auto [m, sd] = detail::mean_std(g.second);
      s.latency_mean_us = m;
      s.latency_std_us = sd;
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << "node_count,mode,runs,throughput_mean_bps,throughput_std_bps,latency_mean_us,latency_std_us\n";
  for (const auto& s : rows) {
    os << s.node_count << ',' << s.mode << ',' << s.runs << ',' << detail::fmt_fixed(s.throughput_mean_bps, 3) << ','
       << detail::fmt_fixed(s.throughput_std_bps, 3) << ',' << detail::fmt_opt(s.latency_mean_us, 3) << ','
       << detail::fmt_opt(s.latency_std_us, 3) << "\n";
  }
}

namespace detail {

inline std::string gnuplot_script(const std::vector<std::string>& modes, const std::string& title,
                                  const std::string& ylabel, const std::string& png, int mean_col, int std_col,
                                  double scale) {
  std::ostringstream os;
  os << "# " << title << ", one series per mode, error bars are one sample std.\n"
     << "# Run from this directory: gnuplot " << png.substr(0, png.size() - 4) << ".gp\n"
     << "set datafile separator ','\n"
     << "set terminal pngcairo size 900,600\n"
     << "set output '" << png << "'\n"
     << "set title '" << title << "'\n"
     << "set xlabel 'Number of nodes'\n"
     << "set ylabel '" << ylabel << "'\n"
     << "set key outside right\n"
     << "set grid\n"
     << "plot \\\n";
  for (std::size_t i = 0; i < modes.size(); ++i) {
    os << "  'summary.csv' skip 1 using 1:(strcol(2) eq '" << modes[i] << "' ? $" << mean_col << "/" << scale
       << " : 1/0):($" << std_col << "/" << scale << ") with yerrorlines title '" << modes[i] << "'"
       << (i + 1 < modes.size() ? ", \\\n" : "\n");
  }
  return os.str();
}

}  // namespace detail

/// Writes summary.csv and the two gnuplot scripts into `dir`; returns the paths written.
inline std::vector<std::filesystem::path> emit_plots(const SweepResult& result, const std::filesystem::path& dir) {
  if (result.rows.empty()) throw CsvError("sweep has no rows; nothing to plot");
  std::filesystem::create_directories(dir);
  const auto summary = summarize(result);
  std::vector<std::string> modes;
  for (const auto& s : summary)
    if (std::find(modes.begin(), modes.end(), s.mode) == modes.end()) modes.push_back(s.mode);

  std::vector<std::filesystem::path> written;
  auto write = [&](const std::string& name, const std::string& text) {
    const auto p = dir / name;
    std::ofstream f(p);
    if (!f) throw CsvError("cannot write " + p.string());
    f << text;
    written.push_back(p);
  };
  std::ostringstream sum;
  write_summary_csv(sum, summary);
  write("summary.csv", sum.str());
  write("latency_vs_density.gp", detail::gnuplot_script(modes, "Mean packet latency vs density", "Latency (ms)",
                                                        "latency_vs_density.png", 6, 7, 1000.0));
  write("throughput_vs_density.gp", detail::gnuplot_script(modes, "Aggregate throughput vs density",
                                                           "Throughput (kbit/s)", "throughput_vs_density.png", 4, 5,
                                                           1000.0));
  return written;
}

}  // namespace rrdsim
