#include "fldlt3/env_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fldlt3/errors.hpp"

namespace fldlt3::env {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidParameter(what);
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeMismatch(what);
}

double link_rate(double bandwidth, double power, double gain, double noise_psd) {
  require(bandwidth > 0.0, "bandwidth must be positive");
  require(power >= 0.0, "transmit power must be non-negative");
  require(gain >= 0.0, "channel gain must be non-negative");
  require(noise_psd > 0.0, "noise_psd must be positive");
  return bandwidth * std::log2(1.0 + power * gain / (noise_psd * bandwidth));
}

double transfer_time(double bits, double rate) {
  require(bits >= 0.0, "model size must be non-negative");
  if (!(rate > 0.0)) throw DivisionHazard("link rate is zero; device unreachable");
  return bits / rate;
}

}  // namespace

void DeviceParams::validate() const {
  require(cpu_cycles_per_bit > 0.0, "cpu_cycles_per_bit must be positive");
  require(cpu_freq > 0.0, "cpu_freq must be positive");
  require(capacitance_coeff > 0.0, "capacitance_coeff must be positive");
  require(power_min > 0.0, "power_min must be positive");
  require(power_max > 0.0, "power_max must be positive");
  require(power_min <= power_max, "power_min must not exceed power_max");
  require(accuracy_weight > 0.0, "accuracy_weight must be positive");
}

void SystemParams::validate() const {
  require(noise_psd > 0.0, "noise_psd must be positive");
  require(server_power >= 0.0, "server_power must be non-negative");
  require(global_model_bits >= 0.0, "global_model_bits must be non-negative");
  require(local_model_bits > 0.0, "local_model_bits must be positive");
  require(local_iterations >= 1, "local_iterations must be at least 1");
  require(bandwidth_cap > 0.0, "bandwidth_cap must be positive");
  require(round_deadline > 0.0, "round_deadline must be positive");
  require(accuracy_floor > 0.0 && accuracy_floor <= 1.0, "accuracy_floor must lie in (0, 1]");
  require(evenness_coeff > 0.0 && evenness_coeff <= 1.0, "evenness_coeff must lie in (0, 1]");
  require(num_devices >= 1, "num_devices must be at least 1");
  require(num_rounds >= 1, "num_rounds must be at least 1");
}

std::size_t RoundAction::num_selected() const {
  return static_cast<std::size_t>(std::count_if(selected.begin(), selected.end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

RoundAction RoundAction::none(std::size_t k) {
  return RoundAction{std::vector<std::uint8_t>(k, 0), std::vector<double>(k, 0.0)};
}

std::string to_string(Constraint c) {
  return "constraint-" + std::to_string(static_cast<int>(c));
}

double RoundOutcome::total_energy() const {
  return std::accumulate(per_device_energy.begin(), per_device_energy.end(), 0.0);
}

bool RoundOutcome::violates(Constraint c) const {
  return std::find(violations.begin(), violations.end(), c) != violations.end();
}

double local_training_time(const DeviceParams& dev, double data_size, int local_iterations) {
  require(dev.cpu_freq > 0.0, "cpu_freq must be positive");
  require(data_size >= 0.0, "data_size must be non-negative");
  return dev.cpu_cycles_per_bit * data_size * local_iterations / dev.cpu_freq;
}

double computation_energy(const DeviceParams& dev, double data_size, int local_iterations) {
  require(data_size >= 0.0, "data_size must be non-negative");
  require(dev.cpu_freq > 0.0 && dev.capacitance_coeff > 0.0 && dev.cpu_cycles_per_bit > 0.0,
          "device parameters must be positive");
  return local_iterations * dev.capacitance_coeff * dev.cpu_cycles_per_bit * data_size *
         dev.cpu_freq * dev.cpu_freq;
}

double uplink_rate(double bandwidth, double power, double gain, double noise_psd) {
  return link_rate(bandwidth, power, gain, noise_psd);
}

double downlink_rate(double bandwidth, double server_power, double gain, double noise_psd) {
  return link_rate(bandwidth, server_power, gain, noise_psd);
}

double download_time(double global_model_bits, double rate_down) {
  return transfer_time(global_model_bits, rate_down);
}

double upload_time(double local_model_bits, double rate_up) {
  return transfer_time(local_model_bits, rate_up);
}

double upload_energy(double power, double bandwidth, double gain, double noise_psd,
                     double local_model_bits) {
  if (!(power > 0.0)) throw InvalidParameter("upload requires positive transmit power");
  return power * upload_time(local_model_bits, uplink_rate(bandwidth, power, gain, noise_psd));
}

double round_energy(const DeviceParams& dev, const DeviceState& state, double power,
                    const SystemParams& sys) {
  return computation_energy(dev, state.data_size, sys.local_iterations) +
         upload_energy(power, state.bandwidth, state.uplink_gain, sys.noise_psd,
                       sys.local_model_bits);
}

double round_time(const DeviceParams& dev, const DeviceState& state, double power,
                  const SystemParams& sys) {
  const double train = local_training_time(dev, state.data_size, sys.local_iterations);
  const double up = upload_time(
      sys.local_model_bits, uplink_rate(state.bandwidth, power, state.uplink_gain, sys.noise_psd));
  const double down =
      download_time(sys.global_model_bits, downlink_rate(state.bandwidth, sys.server_power,
                                                         state.downlink_gain, sys.noise_psd));
  return train + up + down;
}

double battery_update(double prev_battery, double consumed, double harvested) {
  require(consumed >= 0.0 && harvested >= 0.0, "energies must be non-negative");
  if (consumed > prev_battery) {
    throw ContractViolation("round energy exceeds remaining battery");
  }
  return prev_battery - consumed + harvested;
}

double fl_accuracy(std::span<const std::uint8_t> selected, std::span<const double> data_sizes,
                   std::span<const double> weights, double log_base) {
  require_same_size(selected.size(), data_sizes.size(), "selection/data size mismatch");
  require_same_size(selected.size(), weights.size(), "selection/weight size mismatch");
  double weighted = 0.0;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    if (selected[k] != 0) weighted += weights[k] * data_sizes[k];
  }
  return std::log1p(weighted) / std::log(log_base);
}

double data_evenness(std::span<const std::uint8_t> selected, std::span<const double> data_sizes,
                     double evenness_coeff) {
  require_same_size(selected.size(), data_sizes.size(), "selection/data size mismatch");
  double total = 0.0;
  double chosen = 0.0;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    total += data_sizes[k];
    if (selected[k] != 0) chosen += data_sizes[k];
  }
  if (!(total > 0.0)) throw DegenerateInput("total data size is zero");
  return (evenness_coeff * total - chosen) / total;
}

double round_reward(double accuracy, double selected_energy, double evenness_penalty) {
  if (!(selected_energy > 0.0)) {
    throw InvariantViolation("selected-device energy must be positive");
  }
  return accuracy / selected_energy - evenness_penalty;
}

std::vector<Constraint> check_constraints(const RoundAction& action,
                                          std::span<const DeviceState> states,
                                          std::span<const DeviceParams> params,
                                          const SystemParams& sys,
                                          std::span<const double> times,
                                          std::span<const double> energies) {
  const std::size_t k_count = action.size();
  require_same_size(action.power.size(), k_count, "action power/selection mismatch");
  require_same_size(states.size(), k_count, "state count mismatch");
  require_same_size(params.size(), k_count, "param count mismatch");
  require_same_size(times.size(), k_count, "time count mismatch");
  require_same_size(energies.size(), k_count, "energy count mismatch");

  auto any_selected = [&](auto pred) {
    for (std::size_t k = 0; k < k_count; ++k) {
      if (action.selected[k] != 0 && pred(k)) return true;
    }
    return false;
  };

  std::vector<Constraint> out;
  if (std::any_of(action.selected.begin(), action.selected.end(),
                  [](std::uint8_t b) { return b > 1; })) {
    out.push_back(Constraint::Binary);
  }
  if (any_selected([&](std::size_t k) {
        return action.power[k] < params[k].power_min || action.power[k] > params[k].power_max;
      })) {
    out.push_back(Constraint::PowerBounds);
  }
  if (action.num_selected() == 0) out.push_back(Constraint::Selection);
  if (any_selected([&](std::size_t k) { return energies[k] > states[k].battery; })) {
    out.push_back(Constraint::Energy);
  }
  if (any_selected([&](std::size_t k) { return times[k] > sys.round_deadline; })) {
    out.push_back(Constraint::Deadline);
  }
  double used = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (action.selected[k] != 0) used += states[k].bandwidth;
  }
  if (used > sys.bandwidth_cap) out.push_back(Constraint::Bandwidth);

  // An empty selection is reported once, as constraint 18.
  if (action.num_selected() == 0) return out;
  std::vector<double> data(k_count);
  std::vector<double> weights(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    data[k] = states[k].data_size;
    weights[k] = params[k].accuracy_weight;
  }
  if (fl_accuracy(action.selected, data, weights) < sys.accuracy_floor) {
    out.push_back(Constraint::AccuracyFloor);
  }
  return out;
}

RoundOutcome evaluate_round(const RoundAction& action, std::span<const DeviceState> states,
                            std::span<const DeviceParams> params, const SystemParams& sys) {
  const std::size_t k_count = action.size();
  require_same_size(states.size(), k_count, "state count mismatch");
  require_same_size(params.size(), k_count, "param count mismatch");

  RoundOutcome out;
  out.per_device_energy.assign(k_count, 0.0);
  out.per_device_time.assign(k_count, 0.0);
  std::vector<double> data(k_count);
  std::vector<double> weights(k_count);
  double selected_energy = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    data[k] = states[k].data_size;
    weights[k] = params[k].accuracy_weight;
    if (action.selected[k] == 0) continue;
    out.per_device_energy[k] = round_energy(params[k], states[k], action.power[k], sys);
    out.per_device_time[k] = round_time(params[k], states[k], action.power[k], sys);
    selected_energy += out.per_device_energy[k];
  }
  out.accuracy = fl_accuracy(action.selected, data, weights);
  out.evenness_penalty = data_evenness(action.selected, data, sys.evenness_coeff);
  out.reward = selected_energy > 0.0
                   ? round_reward(out.accuracy, selected_energy, out.evenness_penalty)
                   : -out.evenness_penalty;
  out.violations =
      check_constraints(action, states, params, sys, out.per_device_time, out.per_device_energy);
  out.feasible = out.violations.empty();
  return out;
}

}  // namespace fldlt3::env
