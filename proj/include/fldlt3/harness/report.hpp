#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fldlt3::harness {

struct MetricRow {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string agent;
  int round = 0;
  double reward = 0.0;
  double accuracy = 0.0;
  double total_energy = 0.0;
  double evenness = 0.0;
  std::size_t num_selected = 0;
  int c16_violations = 0;
  double wall_clock = 0.0;
};

struct RunFile {
  std::string run_id;
  std::string agent;
  std::string fingerprint;
  std::string sweep_axis = "none";
  double sweep_value = 0.0;
  std::vector<MetricRow> rows;
};

/// Parses one metrics CSV; header must match exactly.
std::vector<MetricRow> read_metrics(const std::filesystem::path& path);

/// Every <run>.csv in `dir` with its sibling <run>.meta.json.
std::vector<RunFile> load_runs(const std::filesystem::path& dir);

struct AgentScore {
  std::string agent;
  double mean = 0.0;  // mean over runs of the per-run final-window mean
  std::size_t runs = 0;
};

struct ComparisonGroup {
  std::string sweep_axis;
  double sweep_value = 0.0;
  std::string fingerprint;
  std::vector<AgentScore> agents;  // sorted by name
  // improvement[a][b] = (mean_a - mean_b) / |mean_b|
  std::map<std::string, std::map<std::string, double>> improvement;
};

/// Relative improvement of `a` over `b`; sign-correct for negative scores.
double relative_improvement(double a, double b);

/// Groups runs by sweep point and compares agents over the last `window`
/// rounds. Refuses mismatched environments within a group and windows
/// longer than any run.
std::vector<ComparisonGroup> ae_gain_report(const std::vector<RunFile>& runs, int window);

std::string format_report(const std::vector<ComparisonGroup>& groups, int window);

}  // namespace fldlt3::harness
