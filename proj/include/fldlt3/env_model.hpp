#pragma once

// Closed-form time, energy, rate, accuracy and reward kernel for one FL round
// over wireless EdgeIoT links. Everything here is a pure function.

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace fldlt3::env {

/// Static per-device hardware parameters.
struct DeviceParams {
  double cpu_cycles_per_bit = 20.0;    // c_k, cycles/bit
  double cpu_freq = 3e9;               // f_k, cycles/s
  double capacitance_coeff = 1.2e-28;  // zeta_k
  double power_min = 0.1;              // W
  double power_max = 60.0;             // W
  double accuracy_weight = 4.2e-9;     // mu_k, 1/bit

  void validate() const;
};

/// Per-round stochastic state of one device.
struct DeviceState {
  double data_size = 0.0;      // bits
  double uplink_gain = 0.0;    // G
  double downlink_gain = 0.0;  // H
  double bandwidth = 0.0;      // Hz
  double battery = 0.0;        // J
};

struct SystemParams {
  double noise_psd = 1e-8;          // W/Hz
  double server_power = 550.0;      // W
  double global_model_bits = 1e4;   // bits
  double local_model_bits = 5e4;    // bits
  int local_iterations = 4;         // L
  double bandwidth_cap = 1e6;       // Hz
  double round_deadline = 3.0;      // s
  double accuracy_floor = 0.5;      // epsilon_0
  double evenness_coeff = 1.0;      // nu
  int num_devices = 40;             // K
  int num_rounds = 1000;            // T

  void validate() const;
};

/// Joint selection bits and transmit powers for one round. Selection entries
/// are bytes so that non-binary values can be diagnosed.
struct RoundAction {
  std::vector<std::uint8_t> selected;
  std::vector<double> power;

  [[nodiscard]] std::size_t size() const { return selected.size(); }
  [[nodiscard]] std::size_t num_selected() const;
  static RoundAction none(std::size_t k);
};

/// Constraint identifiers of the round problem, numbered as in the model.
enum class Constraint : int {
  Energy = 15,
  AccuracyFloor = 16,
  Bandwidth = 17,
  Selection = 18,
  Deadline = 19,
  PowerBounds = 20,
  Binary = 21,
};

std::string to_string(Constraint c);

struct RoundOutcome {
  std::vector<double> per_device_energy;  // J, zero when unselected
  std::vector<double> per_device_time;    // s, zero when unselected
  double accuracy = 0.0;
  double evenness_penalty = 0.0;
  double reward = 0.0;  // accuracy / total energy - evenness
  bool feasible = true;
  std::vector<Constraint> violations;

  [[nodiscard]] double total_energy() const;
  [[nodiscard]] bool violates(Constraint c) const;
};

double local_training_time(const DeviceParams& dev, double data_size, int local_iterations);
double computation_energy(const DeviceParams& dev, double data_size, int local_iterations);

double uplink_rate(double bandwidth, double power, double gain, double noise_psd);
double downlink_rate(double bandwidth, double server_power, double gain, double noise_psd);

double download_time(double global_model_bits, double rate_down);
double upload_time(double local_model_bits, double rate_up);

/// Transmit energy of the local model upload; identical to power * upload time.
double upload_energy(double power, double bandwidth, double gain, double noise_psd,
                     double local_model_bits);

/// Computation plus upload energy of a selected device. Download energy is
/// borne by the server and is not charged here.
double round_energy(const DeviceParams& dev, const DeviceState& state, double power,
                    const SystemParams& sys);

/// Training + upload + download latency of a selected device.
double round_time(const DeviceParams& dev, const DeviceState& state, double power,
                  const SystemParams& sys);

double battery_update(double prev_battery, double consumed, double harvested);

/// Concave accuracy model log(1 + sum mu_k beta_k D_k). Natural log unless
/// another base is given.
double fl_accuracy(std::span<const std::uint8_t> selected, std::span<const double> data_sizes,
                   std::span<const double> weights, double log_base = std::numbers::e);

/// Normalized shortfall (nu * sum D - sum beta D) / sum D on the realized draw.
double data_evenness(std::span<const std::uint8_t> selected, std::span<const double> data_sizes,
                     double evenness_coeff);

double round_reward(double accuracy, double selected_energy, double evenness_penalty);

/// Violated constraints in the fixed order 21, 20, 18, 15, 19, 17, 16.
std::vector<Constraint> check_constraints(const RoundAction& action,
                                          std::span<const DeviceState> states,
                                          std::span<const DeviceParams> params,
                                          const SystemParams& sys,
                                          std::span<const double> times,
                                          std::span<const double> energies);

/// Per-device energy/time, accuracy, evenness, reward and constraint report
/// for an action applied as given (no repair). Requires at least one
/// selected device for the reward to be defined; with none selected the
/// reward is -evenness.
RoundOutcome evaluate_round(const RoundAction& action, std::span<const DeviceState> states,
                            std::span<const DeviceParams> params, const SystemParams& sys);

}  // namespace fldlt3::env
