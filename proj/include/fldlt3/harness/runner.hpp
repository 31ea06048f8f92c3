#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fldlt3/harness/config.hpp"
#include "fldlt3/td3/episode.hpp"

namespace fldlt3::harness {

inline constexpr const char* kMetricsHeader =
    "run_id,seed,agent,round,reward,accuracy,total_energy,evenness,num_selected,c16_violations,"
    "wall_clock_s";

inline constexpr int kSummaryWindow = 100;

struct RunResult {
  std::string run_id;
  AgentKind agent = AgentKind::Fldlt3;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  std::vector<td3::RoundRecord> rounds;
};

/// Plays one full episode of `agent` on the environment at `env_cfg`.
/// FL-DLT3 trains online for the whole episode; baselines read the true
/// state each round.
std::vector<td3::RoundRecord> play_agent(const sim::SimConfig& env_cfg, AgentKind agent,
                                         const td3::Td3Config& td3_cfg,
                                         const baselines::BaselineConfig& baseline_cfg,
                                         std::uint64_t seed);

std::string make_run_id(AgentKind agent, const Sweep& sweep, double value, std::uint64_t seed);

/// Environment fingerprint: hash of the canonical environment config, used
/// to refuse comparisons across mismatched setups.
std::string env_fingerprint(const sim::SimConfig& env);

std::string format_row(const RunResult& run, const td3::RoundRecord& r);
void write_metrics(const std::filesystem::path& path, const RunResult& run);

/// Mean of the last `window` rewards (all of them if the run is shorter).
double final_window_mean(const std::vector<td3::RoundRecord>& rounds, int window);

struct RunOptions {
  /// Worker threads; each (sweep point, seed) is independent.
  int jobs = 1;
  std::function<void(const RunResult&)> on_run_done;
};

/// Every (sweep point x seed) combination. Writes one CSV and one
/// meta.json per run, then summary_<agent>.json.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

nlohmann::ordered_json make_summary(const ExperimentConfig& cfg,
                                    const std::vector<RunResult>& runs);

}  // namespace fldlt3::harness
