#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fldlt3/env_model.hpp"
#include "fldlt3/errors.hpp"
#include "oracles.hpp"

using namespace fldlt3;
using namespace fldlt3::env;

namespace {

DeviceParams dev(double f = 3e9) {
  DeviceParams p;
  p.cpu_freq = f;
  return p;
}

void expect_rel(double got, double want, double tol) {
  EXPECT_LE(std::fabs(got - want), tol * std::fabs(want)) << "got " << got << " want " << want;
}

// Worked instance used by several tests: one device, D=4e7, b=3e4, P=1,
// G=1e-2, H=1, 1000 J battery.
struct Worked {
  SystemParams sys;
  std::vector<DeviceParams> params{dev()};
  std::vector<DeviceState> states{DeviceState{4e7, 1e-2, 1.0, 3e4, 1000.0}};
  RoundAction action{{1}, {1.0}};
  Worked() {
    sys.server_power = 500.0;
    sys.num_devices = 1;
  }
};

}  // namespace

TEST(LocalTrainingTime, Examples) {
  EXPECT_EQ(local_training_time(dev(), 0.0, 4), 0.0);
  expect_rel(local_training_time(dev(), 4e7, 4), 1.0666666666666667, 1e-12);
  expect_rel(local_training_time(dev(2e9), 1.6e7, 4), 0.64, 1e-12);
}

TEST(LocalTrainingTime, RejectsNonPositiveFrequency) {
  EXPECT_THROW(local_training_time(dev(0.0), 1.0, 4), InvalidParameter);
  EXPECT_THROW(local_training_time(dev(-1.0), 1.0, 4), InvalidParameter);
}

TEST(ComputationEnergy, Examples) {
  EXPECT_EQ(computation_energy(dev(), 0.0, 4), 0.0);
  expect_rel(computation_energy(dev(), 4e7, 4), 3.456, 1e-12);
  EXPECT_EQ(computation_energy(dev(6e9), 4e7, 4), 4.0 * computation_energy(dev(3e9), 4e7, 4));
}

TEST(UplinkRate, Examples) {
  EXPECT_EQ(uplink_rate(3e4, 0.0, 1e-2, 1e-8), 0.0);
  expect_rel(uplink_rate(3e4, 1.0, 1e-2, 1e-8), 3e4 * std::log2(1.0 + 1.0 / 3e-2 * 1e0), 1e-12);
  expect_rel(uplink_rate(3e4, 1.0, 1e-2, 1e-8), 1.5304e5, 1e-4);
  expect_rel(uplink_rate(5e4, 60.0, 1e-1, 1e-8), 6.776e5, 1e-4);
}

TEST(UplinkRate, StrictlyIncreasingInPowerAndGain) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    double b = 1e4 + 4e4 * u(rng);
    double p = 0.1 + 59.9 * u(rng);
    double g = 1e-3 + 0.099 * u(rng);
    double base = uplink_rate(b, p, g, 1e-8);
    EXPECT_GT(uplink_rate(b, p * 1.01, g, 1e-8), base);
    EXPECT_GT(uplink_rate(b, p, g * 1.01, 1e-8), base);
  }
}

TEST(DownlinkRate, Examples) {
  EXPECT_EQ(downlink_rate(3e4, 0.0, 1.0, 1e-8), 0.0);
  expect_rel(downlink_rate(3e4, 500.0, 1.0, 1e-8), 6.198e5, 1e-3);
  EXPECT_EQ(downlink_rate(3e4, 500.0, 1.0, 1e-8), uplink_rate(3e4, 500.0, 1.0, 1e-8));
}

TEST(TransferTimes, Examples) {
  expect_rel(download_time(1e4, 6.198e5), 0.01614, 1e-3);
  EXPECT_EQ(download_time(0.0, 6.198e5), 0.0);
  EXPECT_EQ(download_time(1e4, 1e4), 1.0);
  expect_rel(upload_time(5e4, 1.5304e5), 0.3267, 1e-3);
  EXPECT_EQ(upload_time(0.0, 1.5304e5), 0.0);
  EXPECT_EQ(upload_time(5e4, 5e4), 1.0);
}

TEST(TransferTimes, ZeroRateIsADivisionHazard) {
  EXPECT_THROW(download_time(1e4, 0.0), DivisionHazard);
  EXPECT_THROW(upload_time(5e4, 0.0), DivisionHazard);
}

TEST(UploadEnergy, Examples) {
  expect_rel(upload_energy(1.0, 3e4, 1e-2, 1e-8, 5e4), 0.3267, 1e-3);
  expect_rel(upload_energy(60.0, 5e4, 1e-1, 1e-8, 5e4), 4.428, 1e-3);
  EXPECT_THROW(upload_energy(0.0, 3e4, 1e-2, 1e-8, 5e4), InvalidParameter);
}

TEST(UploadEnergy, EqualsPowerTimesUploadTime) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double p = 0.1 + 59.9 * u(rng);
    double b = 1e4 + 4e4 * u(rng);
    double g = 1e-3 + 0.099 * u(rng);
    double su = 1e3 + 1e5 * u(rng);
    double e = upload_energy(p, b, g, 1e-8, su);
    double t = upload_time(su, uplink_rate(b, p, g, 1e-8));
    EXPECT_LE(std::fabs(e - p * t), 1e-12 * std::fabs(e));
  }
}

TEST(RoundEnergy, Examples) {
  Worked w;
  expect_rel(round_energy(w.params[0], w.states[0], 1.0, w.sys), 3.456 + 0.32669, 1e-4);
  DeviceState empty = w.states[0];
  empty.data_size = 0.0;
  EXPECT_EQ(round_energy(w.params[0], empty, 1.0, w.sys),
            upload_energy(1.0, 3e4, 1e-2, 1e-8, 5e4));
  RoundAction off{{0}, {1.0}};
  auto out = evaluate_round(off, w.states, w.params, w.sys);
  EXPECT_EQ(out.per_device_energy[0], 0.0);
  EXPECT_EQ(out.per_device_time[0], 0.0);
}

TEST(RoundEnergy, DominatesEachComponent) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SystemParams sys;
  for (int i = 0; i < 300; ++i) {
    DeviceState s{1.6e7 + 6.4e7 * u(rng), 1e-3 + 0.099 * u(rng), 0.1 + 9.9 * u(rng),
                  1e4 + 4e4 * u(rng), 1000.0};
    double p = 0.1 + 59.9 * u(rng);
    double e = round_energy(dev(), s, p, sys);
    EXPECT_GE(e, computation_energy(dev(), s.data_size, sys.local_iterations));
    EXPECT_GE(e, upload_energy(p, s.bandwidth, s.uplink_gain, sys.noise_psd, sys.local_model_bits));
  }
}

TEST(RoundTime, SumsTrainUploadDownload) {
  Worked w;
  const auto& s = w.states[0];
  double want = local_training_time(w.params[0], s.data_size, 4) +
                upload_time(5e4, uplink_rate(3e4, 1.0, 1e-2, 1e-8)) +
                download_time(1e4, downlink_rate(3e4, 500.0, 1.0, 1e-8));
  EXPECT_DOUBLE_EQ(round_time(w.params[0], s, 1.0, w.sys), want);
}

TEST(BatteryUpdate, Examples) {
  expect_rel(battery_update(1000.0, 3.78, 125.0), 1121.22, 1e-12);
  EXPECT_EQ(battery_update(1000.0, 0.0, 0.0), 1000.0);
  EXPECT_EQ(battery_update(3.0, 3.0, 50.0), 50.0);
  EXPECT_THROW(battery_update(3.0, 3.5, 50.0), ContractViolation);
}

TEST(BatteryUpdate, ConservesEnergyExactly) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double prev = 1000.0 * u(rng);
    double used = prev * u(rng);
    double got = 50.0 + 150.0 * u(rng);
    EXPECT_EQ(battery_update(prev, used, got), prev - used + got);
  }
}

TEST(FlAccuracy, Examples) {
  std::vector<std::uint8_t> none(40, 0);
  std::vector<std::uint8_t> all(40, 1);
  std::vector<double> d(40, 4e7);
  std::vector<double> mu(40, 4.2e-9);
  EXPECT_EQ(fl_accuracy(none, d, mu), 0.0);
  expect_rel(fl_accuracy(all, d, mu), std::log(7.72), 1e-12);
  expect_rel(fl_accuracy(all, d, mu), 2.0437, 1e-4);
  std::vector<std::uint8_t> one{1};
  std::vector<double> dd{std::exp(1.0) - 1.0};
  std::vector<double> mm{1.0};
  EXPECT_DOUBLE_EQ(fl_accuracy(one, dd, mm), 1.0);
}

TEST(FlAccuracy, PermutationInvariantAndLogAdditive) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::size_t k = 1 + rng() % 12;
    std::vector<std::uint8_t> sel(k);
    std::vector<double> d(k), mu(k);
    double x1 = 0.0, x2 = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sel[j] = static_cast<std::uint8_t>(rng() % 2);
      d[j] = 1e7 * u(rng);
      mu[j] = 1e-8 * u(rng);
      if (sel[j]) (j % 2 ? x1 : x2) += mu[j] * d[j];
    }
    double g = fl_accuracy(sel, d, mu);
    EXPECT_NEAR(g, std::log1p(x1 + x2), 1e-12 * std::max(1.0, g));
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::uint8_t> s2(k);
    std::vector<double> d2(k), m2(k);
    for (std::size_t j = 0; j < k; ++j) {
      s2[j] = sel[idx[j]];
      d2[j] = d[idx[j]];
      m2[j] = mu[idx[j]];
    }
    EXPECT_NEAR(fl_accuracy(s2, d2, m2), g, 1e-12 * std::max(1.0, g));
  }
}

TEST(FlAccuracy, MonotoneInSelectedDataSize) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    std::size_t k = 1 + rng() % 10;
    std::vector<std::uint8_t> sel(k);
    std::vector<double> d(k), mu(k, 4.2e-9);
    for (std::size_t j = 0; j < k; ++j) {
      sel[j] = static_cast<std::uint8_t>(rng() % 2);
      d[j] = 8e7 * u(rng);
    }
    std::size_t j = rng() % k;
    double before = fl_accuracy(sel, d, mu);
    d[j] += 1e7 * u(rng);
    EXPECT_GE(fl_accuracy(sel, d, mu), before);
  }
}

TEST(FlAccuracy, ConfigurableLogBase) {
  std::vector<std::uint8_t> one{1};
  std::vector<double> d{7.0};
  std::vector<double> mu{1.0};
  EXPECT_DOUBLE_EQ(fl_accuracy(one, d, mu, 2.0), 3.0);
}

TEST(DataEvenness, Examples) {
  std::vector<double> d{1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(data_evenness(std::vector<std::uint8_t>{1, 1, 1, 1}, d, 1.0), 0.0);
  EXPECT_EQ(data_evenness(std::vector<std::uint8_t>{0, 0, 0, 0}, d, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(data_evenness(std::vector<std::uint8_t>{1, 0, 0, 1}, d, 1.0), 0.5);
  EXPECT_THROW(data_evenness(std::vector<std::uint8_t>{1, 1}, std::vector<double>{0.0, 0.0}, 1.0),
               DegenerateInput);
}

TEST(DataEvenness, InUnitIntervalAndZeroOnlyWhenAllDataSelected) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    std::size_t k = 1 + rng() % 10;
    std::vector<std::uint8_t> sel(k);
    std::vector<double> d(k);
    bool all = true;
    for (std::size_t j = 0; j < k; ++j) {
      sel[j] = static_cast<std::uint8_t>(rng() % 2);
      d[j] = 1.0 + u(rng);
      all = all && sel[j];
    }
    double e = data_evenness(sel, d, 1.0);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 1.0);
    EXPECT_EQ(e == 0.0, all);
  }
}

TEST(RoundReward, Examples) {
  expect_rel(round_reward(2.0437, 76.0, 0.0), 0.02689, 1e-3);
  EXPECT_DOUBLE_EQ(round_reward(2.0, 10.0, 0.25), 0.2 - 0.25);
  EXPECT_THROW(round_reward(1.0, 0.0, 0.0), InvariantViolation);
}

TEST(RoundReward, DoublingEnergyHalvesTheRatioTerm) {
  for (double e : {1.0, 3.5, 76.0, 1234.5}) {
    EXPECT_EQ(round_reward(2.0, 2.0 * e, 0.0), round_reward(2.0, e, 0.0) / 2.0);
  }
}

TEST(RoundReward, SelectedDeviceWithDataGivesPositiveAccuracy) {
  Worked w;
  auto out = evaluate_round(w.action, w.states, w.params, w.sys);
  EXPECT_GT(out.accuracy, 0.0);
  EXPECT_DOUBLE_EQ(out.accuracy, std::log1p(4.2e-9 * 4e7));
}

TEST(CheckConstraints, AllZeroSelectionIsConstraint18Only) {
  Worked w;
  RoundAction off{{0}, {1.0}};
  auto out = evaluate_round(off, w.states, w.params, w.sys);
  ASSERT_EQ(out.violations.size(), 1u);
  EXPECT_EQ(out.violations[0], Constraint::Selection);
  EXPECT_EQ(to_string(out.violations[0]), "constraint-18");
}

TEST(CheckConstraints, LowBatteryIsConstraint15) {
  Worked w;
  w.sys.accuracy_floor = 0.1;
  double e = round_energy(w.params[0], w.states[0], 1.0, w.sys);
  w.states[0].battery = 0.5 * e;
  auto out = evaluate_round(w.action, w.states, w.params, w.sys);
  ASSERT_EQ(out.violations.size(), 1u);
  EXPECT_EQ(out.violations[0], Constraint::Energy);
}

namespace {

// Three devices of the worked kind: Gamma = ln(1 + 3 * 0.168) > 0.4, every
// device finishes well inside 3 s, and 9e4 Hz fits in 1e6.
struct Feasible {
  SystemParams sys;
  std::vector<DeviceParams> params{dev(), dev(), dev()};
  std::vector<DeviceState> states;
  RoundAction action{{1, 1, 1}, {1.0, 1.0, 1.0}};
  Feasible() {
    sys.server_power = 500.0;
    sys.num_devices = 3;
    sys.accuracy_floor = 0.4;
    states.assign(3, DeviceState{4e7, 1e-2, 1.0, 3e4, 1000.0});
  }
  std::vector<Constraint> check() const {
    std::vector<double> t(3), e(3);
    for (std::size_t k = 0; k < 3; ++k) {
      if (!action.selected[k]) continue;
      double p = std::clamp(action.power[k], params[k].power_min, params[k].power_max);
      t[k] = round_time(params[k], states[k], p, sys);
      e[k] = round_energy(params[k], states[k], p, sys);
    }
    return check_constraints(action, states, params, sys, t, e);
  }
};

}  // namespace

TEST(CheckConstraints, FeasibleHandBuiltInstanceIsClean) {
  Feasible f;
  EXPECT_TRUE(f.check().empty());
  auto out = evaluate_round(f.action, f.states, f.params, f.sys);
  EXPECT_TRUE(out.feasible);
}

TEST(CheckConstraints, EachMutationAddsExactlyItsConstraint) {
  auto only = [](const std::vector<Constraint>& v, Constraint c) {
    return v.size() == 1 && v[0] == c;
  };
  {
    Feasible f;
    f.action.selected[1] = 2;
    EXPECT_TRUE(only(f.check(), Constraint::Binary));
  }
  {
    Feasible f;
    f.action.power[0] = 61.0;
    // power is clamped when computing energy/time, so only the bound is hit
    EXPECT_TRUE(only(f.check(), Constraint::PowerBounds));
  }
  {
    Feasible f;
    f.states[2].battery = 1.0;
    EXPECT_TRUE(only(f.check(), Constraint::Energy));
  }
  {
    Feasible f;
    f.params[0].cpu_freq = 1e9;  // 3.2 s of training
    f.params[0].capacitance_coeff = 1e-29;
    EXPECT_TRUE(only(f.check(), Constraint::Deadline));
  }
  {
    Feasible f;
    f.sys.bandwidth_cap = 8e4;
    EXPECT_TRUE(only(f.check(), Constraint::Bandwidth));
  }
  {
    Feasible f;
    f.sys.accuracy_floor = 0.9;
    EXPECT_TRUE(only(f.check(), Constraint::AccuracyFloor));
  }
}

TEST(CheckConstraints, OrderIsFixed) {
  Feasible f;
  f.action.selected[1] = 2;
  f.action.power[0] = 61.0;
  f.states[2].battery = 1.0;
  f.sys.bandwidth_cap = 1e4;
  f.sys.round_deadline = 0.5;
  f.sys.accuracy_floor = 0.99;
  std::vector<Constraint> want{Constraint::Binary, Constraint::PowerBounds, Constraint::Energy,
                               Constraint::Deadline, Constraint::Bandwidth,
                               Constraint::AccuracyFloor};
  EXPECT_EQ(f.check(), want);
}

TEST(EvaluateRound, OutcomeInvariants) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SystemParams sys;
  for (int i = 0; i < 300; ++i) {
    std::size_t k = 1 + rng() % 12;
    std::vector<DeviceParams> params(k, dev());
    std::vector<DeviceState> states(k);
    RoundAction a = RoundAction::none(k);
    for (std::size_t j = 0; j < k; ++j) {
      states[j] = DeviceState{1.6e7 + 6.4e7 * u(rng), 1e-3 + 0.099 * u(rng), 0.1 + 9.9 * u(rng),
                              1e4 + 4e4 * u(rng), 1000.0 * u(rng)};
      a.selected[j] = static_cast<std::uint8_t>(rng() % 2);
      a.power[j] = 0.1 + 59.9 * u(rng);
    }
    auto out = evaluate_round(a, states, params, sys);
    for (std::size_t j = 0; j < k; ++j) {
      if (!a.selected[j]) {
        EXPECT_EQ(out.per_device_energy[j], 0.0);
        EXPECT_EQ(out.per_device_time[j], 0.0);
      }
    }
    EXPECT_GE(out.accuracy, 0.0);
    EXPECT_GE(out.evenness_penalty, 0.0);
    EXPECT_LE(out.evenness_penalty, 1.0);
    if (a.num_selected() > 0) EXPECT_LT(out.evenness_penalty, 1.0);
  }
}

TEST(EnvModel, MatchesLongDoubleOracle) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    DeviceParams p = dev(2e9 + 2e9 * u(rng));
    double d = 1.6e7 + 6.4e7 * u(rng);
    double b = 1e4 + 4e4 * u(rng);
    double pw = 0.1 + 59.9 * u(rng);
    double g = 1e-3 + 0.099 * u(rng);
    EXPECT_LT(oracle::rel_err(local_training_time(p, d, 4),
                              oracle::train_time(p.cpu_cycles_per_bit, d, 4, p.cpu_freq)),
              1e-12);
    EXPECT_LT(oracle::rel_err(computation_energy(p, d, 4),
                              oracle::cmp_energy(4, p.capacitance_coeff, p.cpu_cycles_per_bit, d,
                                                 p.cpu_freq)),
              1e-12);
    EXPECT_LT(oracle::rel_err(uplink_rate(b, pw, g, 1e-8), oracle::rate(b, pw, g, 1e-8)), 1e-12);
    EXPECT_LT(oracle::rel_err(upload_energy(pw, b, g, 1e-8, 5e4),
                              oracle::up_energy(pw, b, g, 1e-8, 5e4)),
              1e-12);
  }
}

TEST(Validation, RejectsBadParameters) {
  DeviceParams p;
  p.power_min = 70.0;
  EXPECT_THROW(p.validate(), InvalidParameter);
  SystemParams s;
  s.accuracy_floor = 0.0;
  EXPECT_THROW(s.validate(), InvalidParameter);
  s = SystemParams{};
  s.evenness_coeff = 1.5;
  EXPECT_THROW(s.validate(), InvalidParameter);
  s = SystemParams{};
  EXPECT_NO_THROW(s.validate());
  EXPECT_NO_THROW(DeviceParams{}.validate());
}
