#pragma once

// Partially observed EdgeIoT environment: holds the true per-device state,
// draws stochastic arrivals, repairs and applies actions, and emits
// observations masked to the devices selected in the previous round.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fldlt3/env_model.hpp"

namespace fldlt3::sim {

/// Uniform [lo, hi] or normal(mean, stddev) truncated below at `floor` by
/// rejection.
struct Distribution {
  enum class Kind { Uniform, Normal };

  Kind kind = Kind::Uniform;
  double a = 0.0;  // lo, or mean
  double b = 1.0;  // hi, or stddev
  double floor = 0.0;

  static Distribution uniform(double lo, double hi);
  static Distribution normal(double mean, double stddev, double floor);

  double sample(std::mt19937_64& rng) const;
  /// Upper end of the support used to normalize observations; mean + 3 sd
  /// for the normal case.
  [[nodiscard]] double scale() const;
  [[nodiscard]] double mean() const;
  void validate(const char* name) const;
};

inline constexpr double kBitsPerMegabyte = 8e6;

struct ArrivalProcess {
  Distribution data = Distribution::uniform(2 * kBitsPerMegabyte, 10 * kBitsPerMegabyte);
  Distribution bandwidth = Distribution::uniform(10e3, 50e3);
  Distribution uplink_gain = Distribution::uniform(1e-3, 1e-1);
  Distribution downlink_gain = Distribution::uniform(1e-1, 10.0);
  Distribution harvest = Distribution::uniform(50.0, 200.0);
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimConfig {
  env::SystemParams system;
  ArrivalProcess arrivals;
  /// Template for every device; cpu_freq is redrawn per device at reset from
  /// [cpu_freq_min, cpu_freq_max].
  env::DeviceParams device;
  double cpu_freq_min = 2e9;
  double cpu_freq_max = 4e9;
  double initial_battery = 1000.0;
  std::optional<double> battery_capacity;  // no ceiling unless set
  double accuracy_penalty = 1.0;

  void validate() const;
};

struct NetworkState {
  int round_index = 0;
  std::vector<env::DeviceState> devices;
  env::RoundAction last_action;
};

/// Flattened per-device (data, uplink gain, downlink gain, bandwidth,
/// battery) followed by the normalized round index.
struct Observation {
  static constexpr std::size_t kFieldsPerDevice = 5;
  std::vector<double> values;

  [[nodiscard]] std::size_t num_devices() const { return (values.size() - 1) / kFieldsPerDevice; }
  [[nodiscard]] double field(std::size_t device, std::size_t f) const {
    return values[device * kFieldsPerDevice + f];
  }
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  env::RoundOutcome outcome;
  env::RoundAction applied;
  bool accuracy_penalized = false;
  bool done = false;
};

/// Greedy feasibility repair against the current state: drop devices that
/// break energy or deadline, then drop the widest-band device until the
/// bandwidth cap holds, then fall back to a single device if nothing is left
/// (over the cap only when no affordable device fits under it).
/// The accuracy floor is not repaired.
env::RoundAction repair_action(const env::RoundAction& raw, std::span<const env::DeviceState> states,
                               std::span<const env::DeviceParams> params,
                               const env::SystemParams& sys);

class EdgeIoTEnv {
 public:
  explicit EdgeIoTEnv(SimConfig config);

  Observation reset(std::uint64_t seed);
  StepResult step(const env::RoundAction& action);
  [[nodiscard]] env::RoundAction repair(const env::RoundAction& raw) const;

  [[nodiscard]] NetworkState true_state() const { return state_; }
  [[nodiscard]] const std::vector<env::DeviceParams>& device_params() const { return params_; }
  [[nodiscard]] const SimConfig& config() const { return config_; }
  [[nodiscard]] int num_devices() const { return config_.system.num_devices; }
  [[nodiscard]] std::size_t observation_size() const {
    return Observation::kFieldsPerDevice * static_cast<std::size_t>(num_devices()) + 1;
  }
  [[nodiscard]] bool done() const { return started_ && state_.round_index >= config_.system.num_rounds; }

  /// Observation of the current state masked by `selected`.
  [[nodiscard]] Observation observe(std::span<const std::uint8_t> selected) const;

 private:
  void draw_arrivals();

  SimConfig config_;
  std::mt19937_64 rng_;
  std::vector<env::DeviceParams> params_;
  NetworkState state_;
  bool started_ = false;
};

}  // namespace fldlt3::sim
