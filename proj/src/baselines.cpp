#include "fldlt3/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fldlt3/errors.hpp"

namespace fldlt3::baselines {

using env::DeviceParams;
using env::RoundAction;

void BaselineConfig::validate(std::span<const DeviceParams> params) const {
  if (fixed_power) {
    for (const auto& p : params) {
      if (*fixed_power < p.power_min || *fixed_power > p.power_max) {
        throw ConfigError("baseline fixed_power outside device power range");
      }
    }
  }
  if (!(ratio_floor >= 0.0)) throw ConfigError("ratio_floor must be non-negative");
}

double baseline_power(const BaselineConfig& cfg, const DeviceParams& p) {
  return cfg.fixed_power ? *cfg.fixed_power : 0.5 * (p.power_min + p.power_max);
}

namespace {

RoundAction at_fixed_power(std::span<const DeviceParams> params, const BaselineConfig& cfg) {
  RoundAction a = RoundAction::none(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) a.power[k] = baseline_power(cfg, params[k]);
  return a;
}

bool device_feasible(const env::DeviceState& s, const DeviceParams& p, double power,
                     const env::SystemParams& sys) {
  return env::round_time(p, s, power, sys) <= sys.round_deadline &&
         env::round_energy(p, s, power, sys) <= s.battery && s.bandwidth <= sys.bandwidth_cap;
}

void check_sizes(const sim::NetworkState& state, std::span<const DeviceParams> params) {
  if (state.devices.size() != params.size()) throw ShapeMismatch("state/params size mismatch");
}

// Depth-first branch and bound over items sorted by value density, bounded by
// the fractional relaxation. The node budget only matters for very large K;
// past it the best set found so far (never worse than the density greedy) is
// returned.
std::vector<std::size_t> max_value_subset(const std::vector<std::size_t>& items,
                                          const std::vector<double>& value,
                                          const sim::NetworkState& state, double cap) {
  std::vector<std::size_t> order = items;
  auto width = [&](std::size_t k) { return state.devices[k].bandwidth; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return value[i] * width(j) > value[j] * width(i);
  });
  const std::size_t n = order.size();
  std::vector<char> take(n, 0);
  std::vector<char> best_take(n, 0);
  double best = -1.0;
  long long budget = 2'000'000;

  auto bound = [&](std::size_t i, double room, double acc) {
    for (; i < n; ++i) {
      const double w = width(order[i]);
      if (w <= room) {
        room -= w;
        acc += value[order[i]];
      } else {
        return acc + value[order[i]] * room / w;
      }
    }
    return acc;
  };
  auto search = [&](auto&& self, std::size_t i, double room, double acc) -> void {
    if (--budget < 0) return;
    if (acc > best) {
      best = acc;
      best_take = take;
    }
    if (i == n || bound(i, room, acc) <= best) return;
    const double w = width(order[i]);
    if (w <= room) {
      take[i] = 1;
      self(self, i + 1, room - w, acc + value[order[i]]);
      take[i] = 0;
    }
    self(self, i + 1, room, acc);
  };
  search(search, 0, cap, 0.0);

  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (best_take[i]) out.push_back(order[i]);
  }
  return out;
}

}  // namespace

RoundAction fedavg_select(const sim::NetworkState& state, std::span<const DeviceParams> params,
                          const env::SystemParams& sys, const BaselineConfig& cfg,
                          std::mt19937_64& rng) {
  check_sizes(state, params);
  RoundAction a = at_fixed_power(params, cfg);
  std::vector<std::size_t> order(params.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  double used = 0.0;
  for (std::size_t k : order) {
    if (used + state.devices[k].bandwidth > sys.bandwidth_cap) break;
    used += state.devices[k].bandwidth;
    a.selected[k] = 1;
  }
  return a;
}

RoundAction fedcs_select(const sim::NetworkState& state, std::span<const DeviceParams> params,
                         const env::SystemParams& sys, const BaselineConfig& cfg) {
  check_sizes(state, params);
  RoundAction a = at_fixed_power(params, cfg);
  std::vector<std::size_t> order(params.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return state.devices[i].bandwidth < state.devices[j].bandwidth;
  });
  double used = 0.0;
  for (std::size_t k : order) {
    if (!device_feasible(state.devices[k], params[k], a.power[k], sys)) continue;
    if (used + state.devices[k].bandwidth > sys.bandwidth_cap) break;
    used += state.devices[k].bandwidth;
    a.selected[k] = 1;
  }
  return a;
}

FedAecsResult fedaecs_select(const sim::NetworkState& state, std::span<const DeviceParams> params,
                             const env::SystemParams& sys, const BaselineConfig& cfg) {
  check_sizes(state, params);
  const std::size_t k_count = params.size();
  RoundAction base = at_fixed_power(params, cfg);

  std::vector<double> value(k_count);   // mu D
  std::vector<double> energy(k_count);
  std::vector<double> ratio(k_count);
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto& s = state.devices[k];
    value[k] = params[k].accuracy_weight * s.data_size;
    energy[k] = env::round_energy(params[k], s, base.power[k], sys);
    ratio[k] = std::log1p(value[k]) / energy[k];
    if (device_feasible(s, params[k], base.power[k], sys) && ratio[k] >= cfg.ratio_floor) {
      candidates.push_back(k);
    }
  }

  auto greedy = [&](auto better, bool stop_on_ratio) {
    std::vector<std::size_t> order = candidates;
    std::stable_sort(order.begin(), order.end(), better);
    RoundAction a = base;
    double used = 0.0;
    double total_value = 0.0;
    double total_energy = 0.0;
    for (std::size_t k : order) {
      if (used + state.devices[k].bandwidth > sys.bandwidth_cap) continue;
      if (stop_on_ratio && total_energy > 0.0) {
        const double gamma = std::log1p(total_value);
        const double next_ratio = std::log1p(total_value + value[k]) / (total_energy + energy[k]);
        if (gamma >= sys.accuracy_floor && next_ratio < gamma / total_energy) break;
      }
      a.selected[k] = 1;
      used += state.devices[k].bandwidth;
      total_value += value[k];
      total_energy += energy[k];
    }
    return std::pair{a, std::log1p(total_value)};
  };

  auto [action, gamma] = greedy(
      [&](std::size_t i, std::size_t j) { return ratio[i] > ratio[j]; }, true);
  if (gamma >= sys.accuracy_floor) return FedAecsResult{action, false};

  // Floor out of reach: take the feasible subset with the most data value,
  // i.e. a 0/1 knapsack on bandwidth.
  RoundAction best = base;
  double best_value = 0.0;
  for (std::size_t k : max_value_subset(candidates, value, state, sys.bandwidth_cap)) {
    best.selected[k] = 1;
    best_value += value[k];
  }
  return FedAecsResult{best, std::log1p(best_value) < sys.accuracy_floor};
}

}  // namespace fldlt3::baselines
