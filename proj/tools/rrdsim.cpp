// rrdsim command line: simulate / validate / plot.
//
// Exit codes: 0 success, 1 invalid input (scenario, arguments, CSV),
// 2 a run or output failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rrdsim/rrdsim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitRunFailure = 2;

struct InvalidArgs : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int parse_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw InvalidArgs("not an integer: '" + s + "'");
  return v;
}

// "2..25", "2,5,10" or a mix such as "2,5..7".
std::vector<int> parse_densities(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_int(item));
      continue;
    }
    const int lo = parse_int(item.substr(0, dots));
    const int hi = parse_int(item.substr(dots + 2));
    if (hi < lo) throw InvalidArgs("empty density range '" + item + "'");
    for (int n = lo; n <= hi; ++n) out.push_back(n);
  }
  if (out.empty()) throw InvalidArgs("no densities given");
  return out;
}

std::vector<rrdsim::SweepMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<rrdsim::SweepMode> out;
  for (const auto& raw : names) {
    std::stringstream ss(raw);
    std::string name;
    while (std::getline(ss, name, ',')) {
      auto m = rrdsim::parse_sweep_mode(name);
      if (!m) throw InvalidArgs("unknown mode '" + name + "' (no-attack|undefended|detect-only|phase1|phase2)");
      out.push_back(*m);
    }
  }
  return out;
}

int cmd_validate(const std::string& path) {
  const auto cfg = rrdsim::load_scenario(path);
  rrdsim::print_banner(std::cout, cfg);
  std::cout << path << ": ok\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string scenario;
  std::string densities;
  std::vector<std::string> modes;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::string out = "results";
  unsigned threads = 1;
  bool quiet = false;
};

int cmd_simulate(const SimulateArgs& a) {
  rrdsim::SweepRequest req;
  req.base = rrdsim::load_scenario(a.scenario);
  if (a.seed) req.base.seed = *a.seed;
  if (a.replications) {
    if (*a.replications < 1) throw InvalidArgs("--replications must be >= 1");
    req.base.replications = *a.replications;
  }
  if (!a.densities.empty()) req.densities = parse_densities(a.densities);
  for (int d : req.densities) {
    if (!req.base.allow_density_override && (d < rrdsim::kMinDensity || d > rrdsim::kMaxDensity)) {
      throw InvalidArgs("density " + std::to_string(d) + " outside 2..25 (set run.allow_density_override)");
    }
    if (d < 1) throw InvalidArgs("density must be >= 1");
  }
  if (!a.modes.empty()) req.modes = parse_modes(a.modes);
  req.threads = a.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : a.threads;

  if (!a.quiet) rrdsim::print_banner(std::cerr, req.base);

  rrdsim::SweepResult result;
  try {
    result = rrdsim::run_sweep(req);
  } catch (const rrdsim::SweepError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }

  const std::filesystem::path dir(a.out);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "sweep.csv");
    if (!f) throw std::runtime_error("cannot write " + (dir / "sweep.csv").string());
    rrdsim::write_sweep_csv(f, req, result);
  }
  {
    std::ofstream f(dir / "summary.csv");
    if (!f) throw std::runtime_error("cannot write " + (dir / "summary.csv").string());
    rrdsim::write_summary_csv(f, rrdsim::summarize(result));
  }
  if (!a.quiet) std::cerr << "wrote " << result.rows.size() << " rows to " << (dir / "sweep.csv").string() << "\n";
  return kExitOk;
}

int cmd_plot(const std::string& csv, const std::string& out) {
  std::ifstream in(csv);
  if (!in) throw InvalidArgs("cannot open '" + csv + "'");
  const auto result = rrdsim::read_sweep_csv(in);
  if (result.rows.empty()) throw InvalidArgs("'" + csv + "' has no rows; nothing to plot");
  for (const auto& p : rrdsim::emit_plots(result, out)) std::cout << p.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"802.11 DCF simulator with RTS duration-inflation attack and defenses"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a density sweep and write sweep.csv and summary.csv");
  simulate->add_option("scenario", sim.scenario, "Scenario file (INI)")->required();
  simulate->add_option("--densities", sim.densities, "Densities, e.g. 2..25 or 2,5,10 (default 2..25)");
  simulate->add_option("--modes", sim.modes, "Modes: no-attack, undefended, detect-only, phase1, phase2")
      ->delimiter(',');
  simulate->add_option("--seed", sim.seed, "Master seed (overrides run.seed)");
  simulate->add_option("--replications", sim.replications, "Replications per cell (overrides run.replications)");
  simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();
  simulate->add_option("--threads", sim.threads, "Worker threads, 0 for all cores")->capture_default_str();
  simulate->add_flag("--quiet", sim.quiet, "Suppress the parameter banner");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a scenario file and print its parameters");
  validate->add_option("scenario", validate_path, "Scenario file (INI)")->required();

  std::string plot_csv;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "Write summary.csv and gnuplot scripts from a sweep CSV");
  plot->add_option("csv", plot_csv, "sweep.csv produced by simulate")->required();
  plot->add_option("--out", plot_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*simulate) return cmd_simulate(sim);
    if (*plot) return cmd_plot(plot_csv, plot_out);
  } catch (const rrdsim::ScenarioError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const InvalidArgs& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const rrdsim::CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitInvalid;
}
