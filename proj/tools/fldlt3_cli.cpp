// Command-line front end: `run` executes an experiment config, `report`
// compares agents from a directory of metric files.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <spdlog/spdlog.h>

#include "fldlt3/errors.hpp"
#include "fldlt3/harness/config.hpp"
#include "fldlt3/harness/report.hpp"
#include "fldlt3/harness/runner.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("FLDLT3_LOG_LEVEL")) {
    auto parsed = spdlog::level::from_str(lvl);
    // from_str maps unknown names to off; only honour "off" when asked for
    if (parsed != spdlog::level::off || std::string(lvl) == "off") spdlog::set_level(parsed);
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"FL-DLT3 EdgeIoT device-selection experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> agent;
  std::optional<int> rounds;
  std::optional<int> devices;
  std::optional<std::string> out_dir;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "run every sweep point x seed of a config");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--seed", seeds, "seed override (repeatable)");
  run->add_option("--agent", agent, "fldlt3 | fldlt3-nolstm | fedaecs | fedcs | fedavg");
  run->add_option("--rounds", rounds, "rounds per episode");
  run->add_option("--devices", devices, "number of devices");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

  std::string in_dir;
  int window = 100;
  auto* report = app.add_subcommand("report", "compare agents over the final window");
  report->add_option("--in", in_dir, "directory of metric files")->required();
  report->add_option("--window", window, "final rounds to average")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  fldlt3::harness::ExperimentConfig cfg;
  if (*run) {
    try {
      cfg = fldlt3::harness::load_config(config_path);
      if (!seeds.empty()) cfg.seeds = seeds;
      if (agent) cfg.agent = fldlt3::harness::agent_from_string(*agent);
      if (rounds) cfg.env.system.num_rounds = *rounds;
      if (devices) cfg.env.system.num_devices = *devices;
      if (out_dir) cfg.output = *out_dir;
      cfg.validate();
    } catch (const fldlt3::Error& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfig;
    }
  }

  try {
    if (*run) {
      fldlt3::harness::RunOptions opts;
      opts.jobs = jobs;
      opts.on_run_done = [&](const fldlt3::harness::RunResult& r) {
        std::cout << r.run_id << " final-" << fldlt3::harness::kSummaryWindow
                  << " mean reward " << fldlt3::harness::final_window_mean(r.rounds, fldlt3::harness::kSummaryWindow)
                  << '\n';
      };
      fldlt3::harness::run_experiment(cfg, opts);
      std::cout << "wrote " << cfg.output.string() << '\n';
    } else {
      auto runs = fldlt3::harness::load_runs(in_dir);
      auto groups = fldlt3::harness::ae_gain_report(runs, window);
      std::cout << fldlt3::harness::format_report(groups, window);
    }
  } catch (const fldlt3::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
