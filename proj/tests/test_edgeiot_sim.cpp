#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fldlt3/edgeiot_sim.hpp"
#include "fldlt3/errors.hpp"

using namespace fldlt3;
using namespace fldlt3::sim;
using env::Constraint;
using env::DeviceParams;
using env::DeviceState;
using env::RoundAction;

namespace {

SimConfig small_config(int k, int t) {
  SimConfig c;
  c.system.num_devices = k;
  c.system.num_rounds = t;
  return c;
}

RoundAction random_action(std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RoundAction a = RoundAction::none(k);
  for (std::size_t j = 0; j < k; ++j) {
    a.selected[j] = static_cast<std::uint8_t>(rng() % 2);
    a.power[j] = -10.0 + 80.0 * u(rng);  // outside the bounds on purpose
  }
  return a;
}

struct RandomInstance {
  env::SystemParams sys;
  std::vector<DeviceParams> params;
  std::vector<DeviceState> states;
};

RandomInstance random_instance(std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomInstance r;
  r.sys.num_devices = static_cast<int>(k);
  r.sys.bandwidth_cap = 1e4 * k * (0.5 + u(rng));
  r.params.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    r.params[j].cpu_freq = 1e9 + 3e9 * u(rng);
    r.states.push_back(DeviceState{1.6e7 + 6.4e7 * u(rng), 1e-3 + 0.099 * u(rng),
                                   0.1 + 9.9 * u(rng), 1e4 + 4e4 * u(rng), 8.0 * u(rng)});
  }
  return r;
}

bool feasible_except_accuracy(const RoundAction& a, const RandomInstance& r) {
  auto out = env::evaluate_round(a, r.states, r.params, r.sys);
  for (auto c : out.violations) {
    if (c != Constraint::AccuracyFloor) return false;
  }
  return true;
}

}  // namespace

TEST(Reset, ShapeAndInitialState) {
  EdgeIoTEnv env(small_config(1, 5));
  auto obs = env.reset(3);
  EXPECT_EQ(obs.values.size(), 6u);
  for (double v : obs.values) EXPECT_EQ(v, 0.0);
  auto st = env.true_state();
  EXPECT_EQ(st.round_index, 0);
  EXPECT_EQ(st.devices[0].battery, 1000.0);
  EXPECT_EQ(st.last_action.num_selected(), 0u);
}

TEST(Reset, RejectsEmptyConfigs) {
  EXPECT_THROW(EdgeIoTEnv(small_config(0, 5)), ConfigError);
  EXPECT_THROW(EdgeIoTEnv(small_config(3, 0)), ConfigError);
}

TEST(Reset, SameSeedSameStream) {
  auto run = [](std::uint64_t seed) {
    EdgeIoTEnv env(small_config(6, 30));
    std::mt19937_64 arng(99);
    std::vector<double> trace;
    auto obs = env.reset(seed);
    trace.insert(trace.end(), obs.values.begin(), obs.values.end());
    while (!env.done()) {
      auto r = env.step(random_action(6, arng));
      trace.push_back(r.reward);
      trace.insert(trace.end(), r.observation.values.begin(), r.observation.values.end());
      for (const auto& d : env.true_state().devices) trace.push_back(d.battery);
    }
    return trace;
  };
  auto a = run(5);
  auto b = run(5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]) << i;
  EXPECT_NE(run(5), run(6));
}

TEST(Reset, AfterDoneStartsFresh) {
  EdgeIoTEnv env(small_config(3, 2));
  env.reset(1);
  env.step(RoundAction{{1, 1, 1}, {1, 1, 1}});
  auto last = env.step(RoundAction{{1, 1, 1}, {1, 1, 1}});
  EXPECT_TRUE(last.done);
  EXPECT_THROW(env.step(RoundAction{{1, 1, 1}, {1, 1, 1}}), LifecycleError);
  env.reset(2);
  EXPECT_EQ(env.true_state().round_index, 0);
  EXPECT_FALSE(env.done());
}

TEST(Step, BeforeResetIsALifecycleError) {
  EdgeIoTEnv env(small_config(2, 2));
  EXPECT_THROW(env.step(RoundAction::none(2)), LifecycleError);
}

TEST(Repair, FeasibleInputUnchanged) {
  env::SystemParams sys;
  sys.num_devices = 2;
  std::vector<DeviceParams> params(2);
  std::vector<DeviceState> states(2, DeviceState{4e7, 1e-2, 1.0, 3e4, 1000.0});
  RoundAction a{{1, 0}, {1.0, 5.0}};
  auto out = repair_action(a, states, params, sys);
  EXPECT_EQ(out.selected, a.selected);
  EXPECT_EQ(out.power, a.power);
}

TEST(Repair, IdempotentOnRandomInstances) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    auto r = random_instance(1 + rng() % 8, rng);
    auto once = repair_action(random_action(r.states.size(), rng), r.states, r.params, r.sys);
    auto twice = repair_action(once, r.states, r.params, r.sys);
    EXPECT_EQ(once.selected, twice.selected);
    EXPECT_EQ(once.power, twice.power);
  }
}

TEST(Repair, EmptySelectionPicksBestSingleDevice) {
  std::mt19937_64 rng(37);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    auto r = random_instance(1 + rng() % 8, rng);
    const std::size_t k = r.states.size();
    RoundAction raw = random_action(k, rng);
    std::fill(raw.selected.begin(), raw.selected.end(), 0);
    auto out = repair_action(raw, r.states, r.params, r.sys);

    // brute force over single-device actions
    double best = -1.0;
    std::size_t best_k = k;
    for (std::size_t j = 0; j < k; ++j) {
      RoundAction one = RoundAction::none(k);
      one.selected[j] = 1;
      one.power = out.power;
      if (!feasible_except_accuracy(one, r)) continue;
      auto o = env::evaluate_round(one, r.states, r.params, r.sys);
      double ratio = o.accuracy / o.total_energy();
      if (ratio > best) {
        best = ratio;
        best_k = j;
      }
    }
    if (best_k == k) continue;
    ++checked;
    ASSERT_EQ(out.num_selected(), 1u);
    EXPECT_EQ(out.selected[best_k], 1);
  }
  EXPECT_GT(checked, 50);
}

TEST(Repair, FallsBackToSmallestDeadlineOvershoot) {
  env::SystemParams sys;
  sys.num_devices = 3;
  sys.round_deadline = 0.1;  // nobody can make it
  std::vector<DeviceParams> params(3);
  params[0].cpu_freq = 1e9;
  params[1].cpu_freq = 4e9;
  params[2].cpu_freq = 2e9;
  std::vector<DeviceState> states(3, DeviceState{4e7, 1e-2, 1.0, 3e4, 1000.0});
  auto out = repair_action(RoundAction{{0, 0, 0}, {1, 1, 1}}, states, params, sys);
  EXPECT_EQ(out.selected, (std::vector<std::uint8_t>{0, 1, 0}));
  // no energy-feasible device at all
  for (auto& s : states) s.battery = 0.0;
  out = repair_action(RoundAction{{1, 1, 1}, {1, 1, 1}}, states, params, sys);
  EXPECT_EQ(out.num_selected(), 0u);
}

TEST(Repair, CapBelowEveryBandStillPicksOneDevice) {
  env::SystemParams sys;
  sys.num_devices = 3;
  sys.bandwidth_cap = 1e4;
  std::vector<DeviceParams> params(3);
  std::vector<DeviceState> states(3, DeviceState{4e7, 1e-2, 1.0, 3e4, 1000.0});
  states[2].uplink_gain = 1e-1;  // cheaper upload, more accuracy per joule
  auto out = repair_action(RoundAction{{0, 0, 0}, {1, 1, 1}}, states, params, sys);
  EXPECT_EQ(out.selected, (std::vector<std::uint8_t>{0, 0, 1}));
}

TEST(Repair, BandwidthTieDropsLowestIndex) {
  env::SystemParams sys;
  sys.num_devices = 4;
  sys.accuracy_floor = 0.1;
  std::vector<DeviceParams> params(4);
  std::vector<DeviceState> states(4, DeviceState{4e7, 1e-2, 1.0, 3e4, 1000.0});
  sys.bandwidth_cap = 4 * 3e4 / 1.1;  // 10% over with all four selected
  auto out = repair_action(RoundAction{{1, 1, 1, 1}, {1, 1, 1, 1}}, states, params, sys);
  EXPECT_EQ(out.selected, (std::vector<std::uint8_t>{0, 1, 1, 1}));
}

TEST(Repair, WidestBandDroppedFirst) {
  env::SystemParams sys;
  sys.num_devices = 3;
  std::vector<DeviceParams> params(3);
  std::vector<DeviceState> states(3, DeviceState{4e7, 1e-2, 1.0, 3e4, 1000.0});
  states[1].bandwidth = 4e4;
  sys.bandwidth_cap = 7e4;
  auto out = repair_action(RoundAction{{1, 1, 1}, {1, 1, 1}}, states, params, sys);
  EXPECT_EQ(out.selected, (std::vector<std::uint8_t>{1, 0, 1}));
}

TEST(Repair, TotalOverRandomActions) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 1000; ++i) {
    auto r = random_instance(1 + rng() % 10, rng);
    auto out = repair_action(random_action(r.states.size(), rng), r.states, r.params, r.sys);
    auto o = env::evaluate_round(out, r.states, r.params, r.sys);
    for (auto c : o.violations) {
      // 18 only survives when no device can afford the round at all
      if (c == Constraint::Selection) {
        for (std::size_t j = 0; j < r.states.size(); ++j) {
          double e = env::round_energy(r.params[j], r.states[j], out.power[j], r.sys);
          EXPECT_GT(e, r.states[j].battery);
        }
        continue;
      }
      // cap may only be broken when no affordable device fits under it
      if (c == Constraint::Bandwidth) {
        EXPECT_EQ(out.num_selected(), 1u);
        for (std::size_t j = 0; j < r.states.size(); ++j) {
          double e = env::round_energy(r.params[j], r.states[j], out.power[j], r.sys);
          EXPECT_TRUE(e > r.states[j].battery || r.states[j].bandwidth > r.sys.bandwidth_cap);
        }
        continue;
      }
      // deadline may only be broken by the single-device fallback
      if (c == Constraint::Deadline) {
        EXPECT_EQ(out.num_selected(), 1u);
        continue;
      }
      EXPECT_EQ(c, Constraint::AccuracyFloor) << env::to_string(c);
    }
  }
}

TEST(Step, WorkedSingleDeviceReward) {
  SimConfig c = small_config(1, 3);
  c.system.server_power = 500.0;
  c.system.accuracy_floor = 0.1;
  EdgeIoTEnv env(c);
  env.reset(4);
  auto st = env.true_state();
  const auto& p = env.device_params()[0];
  const auto& d = st.devices[0];
  auto r = env.step(RoundAction{{1}, {1.0}});
  double e = env::round_energy(p, d, 1.0, c.system);
  double g = std::log1p(p.accuracy_weight * d.data_size);
  // a lone device holds all the round's data, so evenness is zero
  EXPECT_EQ(r.outcome.evenness_penalty, 0.0);
  EXPECT_NEAR(r.reward, g / e, 1e-12 * std::fabs(g / e));
  EXPECT_FALSE(r.accuracy_penalized);
}

TEST(Step, TwoIdenticalDevicesBothVersusOne) {
  env::SystemParams sys;
  sys.num_devices = 2;
  sys.accuracy_floor = 0.1;
  std::vector<DeviceParams> params(2);
  std::vector<DeviceState> states(2, DeviceState{4e7, 1e-2, 1.0, 3e4, 1000.0});
  auto one = env::evaluate_round(RoundAction{{1, 0}, {1, 1}}, states, params, sys);
  auto both = env::evaluate_round(RoundAction{{1, 1}, {1, 1}}, states, params, sys);
  double e1 = 3.456 + 5e4 / (3e4 * std::log2(1.0 + 1e-2 / (1e-8 * 3e4)));
  EXPECT_NEAR(one.total_energy(), e1, 1e-9);
  EXPECT_NEAR(both.total_energy(), 2 * e1, 1e-9);
  EXPECT_DOUBLE_EQ(one.evenness_penalty, 0.5);
  EXPECT_EQ(both.evenness_penalty, 0.0);
  EXPECT_NEAR(one.reward, std::log1p(0.168) / e1 - 0.5, 1e-12);
  EXPECT_NEAR(both.reward, std::log1p(0.336) / (2 * e1), 1e-12);
}

TEST(Step, AccuracyFloorIsPenalizedNotRepaired) {
  SimConfig c = small_config(3, 3);
  c.system.accuracy_floor = 1.0;
  c.accuracy_penalty = 1.0;
  EdgeIoTEnv env(c);
  env.reset(2);
  auto r = env.step(RoundAction{{1, 0, 0}, {1, 1, 1}});
  EXPECT_TRUE(r.accuracy_penalized);
  EXPECT_DOUBLE_EQ(r.reward, r.outcome.reward - 1.0);
  EXPECT_EQ(r.applied.num_selected(), 1u);
}

TEST(Step, BatteryFollowsConsumptionAndHarvest) {
  SimConfig c = small_config(4, 10);
  c.arrivals.harvest = Distribution::uniform(100.0, 100.0);
  EdgeIoTEnv env(c);
  env.reset(8);
  auto before = env.true_state();
  auto r = env.step(RoundAction{{1, 0, 1, 0}, {1, 1, 1, 1}});
  auto after = env.true_state();
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(after.devices[k].battery,
              before.devices[k].battery - r.outcome.per_device_energy[k] + 100.0);
  }
}

TEST(Step, MaskingAndReconstruction) {
  SimConfig c = small_config(5, 40);
  EdgeIoTEnv env(c);
  env.reset(12);
  std::mt19937_64 rng(3);
  const auto& a = c.arrivals;
  const double scale[5] = {a.data.scale(), a.uplink_gain.scale(), a.downlink_gain.scale(),
                           a.bandwidth.scale(), c.initial_battery};
  while (!env.done()) {
    auto r = env.step(random_action(5, rng));
    auto st = env.true_state();
    for (std::size_t k = 0; k < 5; ++k) {
      const auto& d = st.devices[k];
      const double raw[5] = {d.data_size, d.uplink_gain, d.downlink_gain, d.bandwidth, d.battery};
      for (std::size_t f = 0; f < 5; ++f) {
        double v = r.observation.field(k, f);
        if (r.applied.selected[k] == 0) {
          EXPECT_EQ(v, 0.0);
        } else {
          EXPECT_EQ(v, raw[f] / scale[f]);
        }
      }
    }
    EXPECT_EQ(r.observation.values.back(), st.round_index / 40.0);
  }
}

TEST(Step, InvariantsOverRandomEpisodes) {
  std::mt19937_64 rng(43);
  for (int ep = 0; ep < 5; ++ep) {
    SimConfig c = small_config(8, 100);
    c.initial_battery = 5.0;  // makes constraint 15 bind
    c.arrivals.harvest = Distribution::uniform(1.0, 6.0);
    EdgeIoTEnv env(c);
    env.reset(100 + ep);
    while (!env.done()) {
      auto r = env.step(random_action(8, rng));
      for (const auto& d : env.true_state().devices) EXPECT_GE(d.battery, 0.0);
      // reward recomputable from the outcome
      double recomputed =
          r.outcome.total_energy() > 0.0
              ? r.outcome.accuracy / r.outcome.total_energy() - r.outcome.evenness_penalty
              : -r.outcome.evenness_penalty;
      if (r.accuracy_penalized) recomputed -= c.accuracy_penalty;
      EXPECT_EQ(r.reward, recomputed);
      for (auto v : r.outcome.violations) {
        EXPECT_TRUE(v == Constraint::AccuracyFloor || v == Constraint::Selection ||
                    v == Constraint::Deadline);
      }
    }
  }
}

TEST(Distribution, NormalRespectsFloorAndScale) {
  auto d = Distribution::normal(3e4, 4e3, 1.5e3);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) EXPECT_GT(d.sample(rng), 1.5e3);
  EXPECT_EQ(d.scale(), 3e4 + 3 * 4e3);
  EXPECT_EQ(Distribution::uniform(1.0, 5.0).scale(), 5.0);
  EXPECT_THROW(Distribution::uniform(0.0, 5.0).validate("x"), ConfigError);
  EXPECT_THROW(Distribution::normal(1.0, 1.0, 2.0).validate("x"), ConfigError);
}
