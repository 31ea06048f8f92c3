#pragma once

// Comparison schedulers. None of them allocates power: every selected device
// transmits at a fixed level (the midpoint of its power range by default).

#include <optional>
#include <random>
#include <span>

#include "fldlt3/edgeiot_sim.hpp"
#include "fldlt3/env_model.hpp"

namespace fldlt3::baselines {

struct BaselineConfig {
  std::optional<double> fixed_power;  // W; per-device midpoint when unset
  double ratio_floor = 0.0;           // FedAECS: skip devices whose own accuracy/energy is below this

  void validate(std::span<const env::DeviceParams> params) const;
};

double baseline_power(const BaselineConfig& cfg, const env::DeviceParams& p);

/// Random selection: shuffle, then take the longest prefix that fits the
/// bandwidth cap.
env::RoundAction fedavg_select(const sim::NetworkState& state,
                               std::span<const env::DeviceParams> params,
                               const env::SystemParams& sys, const BaselineConfig& cfg,
                               std::mt19937_64& rng);

/// Maximum-count selection: ascending bandwidth, skipping devices that miss
/// the deadline or lack energy at the fixed power, until the cap is reached.
env::RoundAction fedcs_select(const sim::NetworkState& state,
                              std::span<const env::DeviceParams> params,
                              const env::SystemParams& sys, const BaselineConfig& cfg);

struct FedAecsResult {
  env::RoundAction action;
  bool accuracy_unattainable = false;  // no feasible subset reaches the accuracy floor
};

/// Accuracy-to-energy greedy: devices in descending ln(1 + mu D)/E order,
/// added while the bandwidth cap holds; stops once the accuracy floor is met
/// and the next device would lower the aggregate ratio. When the floor cannot
/// be met, falls back to the feasible subset with the largest accuracy.
FedAecsResult fedaecs_select(const sim::NetworkState& state,
                             std::span<const env::DeviceParams> params,
                             const env::SystemParams& sys, const BaselineConfig& cfg);

}  // namespace fldlt3::baselines
