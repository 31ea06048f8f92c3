#include "fldlt3/edgeiot_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fldlt3/errors.hpp"

namespace fldlt3::sim {

using env::DeviceParams;
using env::DeviceState;
using env::RoundAction;

Distribution Distribution::uniform(double lo, double hi) {
  return Distribution{Kind::Uniform, lo, hi, 0.0};
}

Distribution Distribution::normal(double mean, double stddev, double floor) {
  return Distribution{Kind::Normal, mean, stddev, floor};
}

double Distribution::sample(std::mt19937_64& rng) const {
  if (kind == Kind::Uniform) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  }
  std::normal_distribution<double> dist(a, b);
  for (;;) {
    const double x = dist(rng);
    if (x > floor) return x;
  }
}

double Distribution::scale() const { return kind == Kind::Uniform ? b : a + 3.0 * b; }

double Distribution::mean() const { return kind == Kind::Uniform ? 0.5 * (a + b) : a; }

void Distribution::validate(const char* name) const {
  const std::string n(name);
  if (kind == Kind::Uniform) {
    if (!(a > 0.0) || !(b >= a)) throw ConfigError(n + ": uniform support must be positive, lo <= hi");
  } else {
    if (!(b >= 0.0)) throw ConfigError(n + ": normal stddev must be non-negative");
    if (!(floor > 0.0)) throw ConfigError(n + ": normal floor must be positive");
    if (!(a > floor)) throw ConfigError(n + ": normal mean must exceed its floor");
  }
}

void ArrivalProcess::validate() const {
  data.validate("data");
  bandwidth.validate("bandwidth");
  uplink_gain.validate("uplink_gain");
  downlink_gain.validate("downlink_gain");
  harvest.validate("harvest");
}

void SimConfig::validate() const {
  if (system.num_devices < 1) throw ConfigError("num_devices must be at least 1");
  if (system.num_rounds < 1) throw ConfigError("num_rounds must be at least 1");
  try {
    system.validate();
    device.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  arrivals.validate();
  if (!(cpu_freq_min > 0.0) || cpu_freq_max < cpu_freq_min) {
    throw ConfigError("cpu frequency range must be positive and ordered");
  }
  if (!(initial_battery >= 0.0)) throw ConfigError("initial_battery must be non-negative");
  if (battery_capacity && !(*battery_capacity >= initial_battery)) {
    throw ConfigError("battery_capacity must be at least initial_battery");
  }
  if (!(accuracy_penalty >= 0.0)) throw ConfigError("accuracy_penalty must be non-negative");
}

RoundAction repair_action(const RoundAction& raw, std::span<const DeviceState> states,
                          std::span<const DeviceParams> params, const env::SystemParams& sys) {
  const std::size_t k_count = raw.size();
  if (raw.power.size() != k_count || states.size() != k_count || params.size() != k_count) {
    throw ShapeMismatch("repair_action: inconsistent device counts");
  }
  RoundAction out = raw;
  for (std::size_t k = 0; k < k_count; ++k) {
    out.selected[k] = raw.selected[k] != 0 ? 1 : 0;
    out.power[k] = std::clamp(raw.power[k], params[k].power_min, params[k].power_max);
  }

  std::vector<double> energy(k_count);
  std::vector<double> time(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    energy[k] = env::round_energy(params[k], states[k], out.power[k], sys);
    time[k] = env::round_time(params[k], states[k], out.power[k], sys);
  }
  auto energy_ok = [&](std::size_t k) { return energy[k] <= states[k].battery; };
  auto deadline_ok = [&](std::size_t k) { return time[k] <= sys.round_deadline; };

  // (a) energy and deadline
  for (std::size_t k = 0; k < k_count; ++k) {
    if (out.selected[k] != 0 && !(energy_ok(k) && deadline_ok(k))) out.selected[k] = 0;
  }

  // (b) bandwidth: drop the widest band first, lowest index on ties
  double used = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) {
    if (out.selected[k] != 0) used += states[k].bandwidth;
  }
  while (used > sys.bandwidth_cap) {
    std::size_t widest = k_count;
    for (std::size_t k = 0; k < k_count; ++k) {
      if (out.selected[k] == 0) continue;
      if (widest == k_count || states[k].bandwidth > states[widest].bandwidth) widest = k;
    }
    out.selected[widest] = 0;
    used -= states[widest].bandwidth;
  }

  // (c) at least one device
  if (out.num_selected() > 0) return out;
  std::size_t best = k_count;
  double best_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!(energy_ok(k) && deadline_ok(k) && states[k].bandwidth <= sys.bandwidth_cap)) continue;
    const double ratio =
        std::log1p(params[k].accuracy_weight * states[k].data_size) / energy[k];
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = k;
    }
  }
  if (best == k_count) {
    double best_overshoot = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_count; ++k) {
      if (!energy_ok(k) || states[k].bandwidth > sys.bandwidth_cap) continue;
      const double overshoot = time[k] - sys.round_deadline;
      if (overshoot < best_overshoot) {
        best_overshoot = overshoot;
        best = k;
      }
    }
  }
  if (best == k_count) {
    // cap below every affordable band: over-cap single device beats an empty round
    best_ratio = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < k_count; ++k) {
      if (!energy_ok(k)) continue;
      const double ratio =
          std::log1p(params[k].accuracy_weight * states[k].data_size) / energy[k];
      if (ratio > best_ratio) {
        best_ratio = ratio;
        best = k;
      }
    }
  }
  // With no energy-feasible device at all the round stays empty.
  if (best != k_count) out.selected[best] = 1;
  return out;
}

EdgeIoTEnv::EdgeIoTEnv(SimConfig config) : config_(std::move(config)) { config_.validate(); }

Observation EdgeIoTEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  const auto k_count = static_cast<std::size_t>(config_.system.num_devices);
  params_.assign(k_count, config_.device);
  std::uniform_real_distribution<double> freq(config_.cpu_freq_min, config_.cpu_freq_max);
  for (auto& p : params_) p.cpu_freq = freq(rng_);

  state_ = NetworkState{};
  state_.devices.assign(k_count, DeviceState{});
  for (auto& d : state_.devices) d.battery = config_.initial_battery;
  state_.last_action = RoundAction::none(k_count);
  draw_arrivals();
  started_ = true;
  return observe(state_.last_action.selected);
}

void EdgeIoTEnv::draw_arrivals() {
  const auto& a = config_.arrivals;
  for (auto& d : state_.devices) {
    d.data_size = a.data.sample(rng_);
    d.uplink_gain = a.uplink_gain.sample(rng_);
    d.downlink_gain = a.downlink_gain.sample(rng_);
    d.bandwidth = a.bandwidth.sample(rng_);
  }
}

RoundAction EdgeIoTEnv::repair(const RoundAction& raw) const {
  if (raw.size() != state_.devices.size()) throw ShapeMismatch("action has wrong device count");
  return repair_action(raw, state_.devices, params_, config_.system);
}

StepResult EdgeIoTEnv::step(const RoundAction& action) {
  if (!started_) throw LifecycleError("step before reset");
  if (done()) throw LifecycleError("step after episode end");

  StepResult result;
  result.applied = repair(action);
  result.outcome = env::evaluate_round(result.applied, state_.devices, params_, config_.system);
  result.accuracy_penalized = result.outcome.violates(env::Constraint::AccuracyFloor);
  result.reward = result.outcome.reward - (result.accuracy_penalized ? config_.accuracy_penalty : 0.0);

  for (std::size_t k = 0; k < state_.devices.size(); ++k) {
    auto& d = state_.devices[k];
    const double harvested = config_.arrivals.harvest.sample(rng_);
    d.battery = env::battery_update(d.battery, result.outcome.per_device_energy[k], harvested);
    if (config_.battery_capacity) d.battery = std::min(d.battery, *config_.battery_capacity);
  }
  draw_arrivals();
  ++state_.round_index;
  state_.last_action = result.applied;

  result.observation = observe(result.applied.selected);
  result.done = done();
  return result;
}

Observation EdgeIoTEnv::observe(std::span<const std::uint8_t> selected) const {
  const auto& a = config_.arrivals;
  const double scales[Observation::kFieldsPerDevice] = {
      a.data.scale(), a.uplink_gain.scale(), a.downlink_gain.scale(), a.bandwidth.scale(),
      config_.initial_battery > 0.0 ? config_.initial_battery : 1.0};

  Observation obs;
  obs.values.assign(observation_size(), 0.0);
  for (std::size_t k = 0; k < state_.devices.size(); ++k) {
    if (selected[k] == 0) continue;
    const auto& d = state_.devices[k];
    const double raw[Observation::kFieldsPerDevice] = {d.data_size, d.uplink_gain,
                                                       d.downlink_gain, d.bandwidth, d.battery};
    for (std::size_t f = 0; f < Observation::kFieldsPerDevice; ++f) {
      obs.values[k * Observation::kFieldsPerDevice + f] = raw[f] / scales[f];
    }
  }
  obs.values.back() =
      static_cast<double>(state_.round_index) / static_cast<double>(config_.system.num_rounds);
  return obs;
}

}  // namespace fldlt3::sim
