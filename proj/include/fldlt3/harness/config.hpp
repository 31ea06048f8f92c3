#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "fldlt3/baselines.hpp"
#include "fldlt3/edgeiot_sim.hpp"
#include "fldlt3/td3/agent.hpp"

namespace fldlt3::harness {

enum class AgentKind { Fldlt3, Fldlt3NoLstm, FedAecs, FedCs, FedAvg };

std::string to_string(AgentKind a);
AgentKind agent_from_string(const std::string& name);

// Device-count sweeps cover the 10..80 range of the reference experiments.
inline constexpr int kMinSweepDevices = 10;
inline constexpr int kMaxSweepDevices = 80;

enum class SweepAxis { None, Devices, DataMean, BandwidthMean };

std::string to_string(SweepAxis a);
SweepAxis axis_from_string(const std::string& name);

struct Sweep {
  SweepAxis axis = SweepAxis::None;
  std::vector<double> values;
  // stddev of the normal distribution used by the data/bandwidth sweeps
  double stddev = 0.0;

  /// Points to run; a single placeholder point when axis is None.
  [[nodiscard]] std::vector<double> points() const;
};

struct ExperimentConfig {
  sim::SimConfig env;
  AgentKind agent = AgentKind::Fldlt3;
  td3::Td3Config td3;
  baselines::BaselineConfig baseline;
  std::vector<std::uint64_t> seeds{1};
  Sweep sweep;
  std::filesystem::path output = "runs";

  void validate() const;
  /// Environment configuration at one sweep point.
  [[nodiscard]] sim::SimConfig env_at(double sweep_value) const;
};

/// Parses the structured-text (JSON) config. Unknown keys at any level are
/// rejected with ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
nlohmann::ordered_json env_to_json(const sim::SimConfig& env);

}  // namespace fldlt3::harness
