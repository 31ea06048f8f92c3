#include "fldlt3/harness/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "fldlt3/errors.hpp"

namespace fldlt3::harness {

using nlohmann::json;
using nlohmann::ordered_json;

std::string to_string(AgentKind a) {
  switch (a) {
    case AgentKind::Fldlt3: return "fldlt3";
    case AgentKind::Fldlt3NoLstm: return "fldlt3-nolstm";
    case AgentKind::FedAecs: return "fedaecs";
    case AgentKind::FedCs: return "fedcs";
    case AgentKind::FedAvg: return "fedavg";
  }
  return "unknown";
}

AgentKind agent_from_string(const std::string& name) {
  for (auto a : {AgentKind::Fldlt3, AgentKind::Fldlt3NoLstm, AgentKind::FedAecs, AgentKind::FedCs,
                 AgentKind::FedAvg}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown agent '" + name + "'");
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::None: return "none";
    case SweepAxis::Devices: return "K";
    case SweepAxis::DataMean: return "data_mean";
    case SweepAxis::BandwidthMean: return "bandwidth_mean";
  }
  return "unknown";
}

SweepAxis axis_from_string(const std::string& name) {
  for (auto a : {SweepAxis::None, SweepAxis::Devices, SweepAxis::DataMean, SweepAxis::BandwidthMean}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown sweep axis '" + name + "'");
}

std::vector<double> Sweep::points() const {
  if (axis == SweepAxis::None) return {0.0};
  return values;
}

namespace {

/// Reads known keys from one JSON object and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }
  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  [[nodiscard]] std::string path(const char* key) const { return where_ + "." + key; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

sim::Distribution parse_distribution(const json& j, const std::string& where) {
  Reader r(j, where);
  std::string kind = "uniform";
  r.get("kind", kind);
  if (kind == "uniform") {
    double lo = 0.0;
    double hi = 0.0;
    r.get("lo", lo);
    r.get("hi", hi);
    return sim::Distribution::uniform(lo, hi);
  }
  if (kind == "normal") {
    double mean = 0.0;
    double stddev = 0.0;
    double floor = 0.0;
    r.get("mean", mean);
    r.get("stddev", stddev);
    r.get("floor", floor);
    return sim::Distribution::normal(mean, stddev, floor);
  }
  throw ConfigError(where + ".kind: expected 'uniform' or 'normal'");
}

ordered_json distribution_json(const sim::Distribution& d) {
  if (d.kind == sim::Distribution::Kind::Uniform) {
    return ordered_json{{"kind", "uniform"}, {"lo", d.a}, {"hi", d.b}};
  }
  return ordered_json{{"kind", "normal"}, {"mean", d.a}, {"stddev", d.b}, {"floor", d.floor}};
}

void parse_system(const json& j, env::SystemParams& s) {
  Reader r(j, "system");
  r.get("noise_psd", s.noise_psd);
  r.get("server_power", s.server_power);
  r.get("global_model_bits", s.global_model_bits);
  r.get("local_model_bits", s.local_model_bits);
  r.get("local_iterations", s.local_iterations);
  r.get("bandwidth_cap", s.bandwidth_cap);
  r.get("round_deadline", s.round_deadline);
  r.get("accuracy_floor", s.accuracy_floor);
  r.get("evenness_coeff", s.evenness_coeff);
}

void parse_arrivals(const json& j, sim::ArrivalProcess& a) {
  Reader r(j, "arrivals");
  if (auto* c = r.child("data")) a.data = parse_distribution(*c, "arrivals.data");
  if (auto* c = r.child("bandwidth")) a.bandwidth = parse_distribution(*c, "arrivals.bandwidth");
  if (auto* c = r.child("uplink_gain")) a.uplink_gain = parse_distribution(*c, "arrivals.uplink_gain");
  if (auto* c = r.child("downlink_gain")) {
    a.downlink_gain = parse_distribution(*c, "arrivals.downlink_gain");
  }
  if (auto* c = r.child("harvest")) a.harvest = parse_distribution(*c, "arrivals.harvest");
  r.get("seed", a.seed);
}

void parse_device(const json& j, sim::SimConfig& env) {
  Reader r(j, "device");
  r.get("cpu_cycles_per_bit", env.device.cpu_cycles_per_bit);
  r.get("capacitance_coeff", env.device.capacitance_coeff);
  r.get("power_min", env.device.power_min);
  r.get("power_max", env.device.power_max);
  r.get("accuracy_weight", env.device.accuracy_weight);
  r.get("cpu_freq_min", env.cpu_freq_min);
  r.get("cpu_freq_max", env.cpu_freq_max);
}

void parse_battery(const json& j, sim::SimConfig& env) {
  Reader r(j, "battery");
  r.get("initial", env.initial_battery);
  if (auto* c = r.child("capacity"); c != nullptr && !c->is_null()) {
    env.battery_capacity = c->get<double>();
  }
}

void parse_td3(const json& j, td3::Td3Config& t) {
  Reader r(j, "td3");
  r.get("gamma", t.gamma);
  r.get("tau", t.tau);
  r.get("policy_delay", t.policy_delay);
  r.get("batch_size", t.batch_size);
  r.get("buffer_capacity", t.buffer_capacity);
  r.get("exploration_noise", t.exploration_noise);
  r.get("target_noise", t.target_noise);
  r.get("target_noise_clip", t.target_noise_clip);
  r.get("warmup_steps", t.warmup_steps);
  r.get("sequence_length", t.sequence_length);
  r.get("burn_in", t.burn_in);
  r.get("actor_lr", t.actor_lr);
  r.get("critic_lr", t.critic_lr);
  r.get("selection_threshold", t.selection_threshold);
  r.get("ff_width", t.ff_width);
  r.get("ff_depth", t.ff_depth);
  r.get("embed_width", t.embed_width);
  r.get("lstm_units", t.lstm_units);
  r.get("recurrent", t.recurrent);
}

void parse_baseline(const json& j, baselines::BaselineConfig& b) {
  Reader r(j, "baseline");
  if (auto* c = r.child("fixed_power"); c != nullptr && !c->is_null()) {
    b.fixed_power = c->get<double>();
  }
  r.get("ratio_floor", b.ratio_floor);
}

void parse_sweep(const json& j, Sweep& s) {
  Reader r(j, "sweep");
  std::string axis = "none";
  r.get("axis", axis);
  s.axis = axis_from_string(axis);
  r.get("values", s.values);
  r.get("stddev", s.stddev);
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  {
    Reader r(j, "config");
    if (auto* c = r.child("system")) parse_system(*c, cfg.env.system);
    if (auto* c = r.child("arrivals")) parse_arrivals(*c, cfg.env.arrivals);
    if (auto* c = r.child("device")) parse_device(*c, cfg.env);
    if (auto* c = r.child("battery")) parse_battery(*c, cfg.env);
    r.get("accuracy_penalty", cfg.env.accuracy_penalty);
    r.get("num_devices", cfg.env.system.num_devices);
    r.get("num_rounds", cfg.env.system.num_rounds);
    std::string agent = to_string(cfg.agent);
    r.get("agent", agent);
    cfg.agent = agent_from_string(agent);
    if (auto* c = r.child("td3")) parse_td3(*c, cfg.td3);
    if (auto* c = r.child("baseline")) parse_baseline(*c, cfg.baseline);
    r.get("seeds", cfg.seeds);
    if (auto* c = r.child("sweep")) parse_sweep(*c, cfg.sweep);
    std::string output = cfg.output.string();
    r.get("output", output);
    cfg.output = output;
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  td3.validate();
  if (sweep.axis != SweepAxis::None && sweep.values.empty()) {
    throw ConfigError("sweep values are required when an axis is set");
  }
  for (double v : sweep.values) {
    switch (sweep.axis) {
      case SweepAxis::Devices:
        if (v < kMinSweepDevices || v > kMaxSweepDevices ||
            v != static_cast<double>(static_cast<int>(v))) {
          throw ConfigError(fmt::format("device-count sweep values must be integers in [{}, {}]",
                                        kMinSweepDevices, kMaxSweepDevices));
        }
        break;
      case SweepAxis::DataMean:
      case SweepAxis::BandwidthMean:
        if (!(v > 0.0)) throw ConfigError("sweep means must be positive");
        if (!(sweep.stddev >= 0.0)) throw ConfigError("sweep stddev must be non-negative");
        break;
      case SweepAxis::None:
        break;
    }
  }
  for (double v : sweep.points()) env_at(v).validate();
  baselines::BaselineConfig b = baseline;
  std::vector<env::DeviceParams> one{env.device};
  b.validate(one);
}

sim::SimConfig ExperimentConfig::env_at(double v) const {
  sim::SimConfig e = env;
  switch (sweep.axis) {
    case SweepAxis::None:
      break;
    case SweepAxis::Devices:
      e.system.num_devices = static_cast<int>(v);
      break;
    case SweepAxis::DataMean:
      e.arrivals.data = sim::Distribution::normal(v, sweep.stddev, 0.05 * v);
      break;
    case SweepAxis::BandwidthMean:
      e.arrivals.bandwidth = sim::Distribution::normal(v, sweep.stddev, 0.05 * v);
      break;
  }
  return e;
}

ordered_json env_to_json(const sim::SimConfig& env) {
  const auto& s = env.system;
  ordered_json j;
  j["system"] = {{"noise_psd", s.noise_psd},
                 {"server_power", s.server_power},
                 {"global_model_bits", s.global_model_bits},
                 {"local_model_bits", s.local_model_bits},
                 {"local_iterations", s.local_iterations},
                 {"bandwidth_cap", s.bandwidth_cap},
                 {"round_deadline", s.round_deadline},
                 {"accuracy_floor", s.accuracy_floor},
                 {"evenness_coeff", s.evenness_coeff}};
  j["arrivals"] = {{"data", distribution_json(env.arrivals.data)},
                   {"bandwidth", distribution_json(env.arrivals.bandwidth)},
                   {"uplink_gain", distribution_json(env.arrivals.uplink_gain)},
                   {"downlink_gain", distribution_json(env.arrivals.downlink_gain)},
                   {"harvest", distribution_json(env.arrivals.harvest)},
                   {"seed", env.arrivals.seed}};
  j["device"] = {{"cpu_cycles_per_bit", env.device.cpu_cycles_per_bit},
                 {"capacitance_coeff", env.device.capacitance_coeff},
                 {"power_min", env.device.power_min},
                 {"power_max", env.device.power_max},
                 {"accuracy_weight", env.device.accuracy_weight},
                 {"cpu_freq_min", env.cpu_freq_min},
                 {"cpu_freq_max", env.cpu_freq_max}};
  j["battery"] = {{"initial", env.initial_battery},
                  {"capacity", env.battery_capacity ? ordered_json(*env.battery_capacity)
                                                    : ordered_json(nullptr)}};
  j["accuracy_penalty"] = env.accuracy_penalty;
  j["num_devices"] = s.num_devices;
  j["num_rounds"] = s.num_rounds;
  return j;
}

ordered_json to_json(const ExperimentConfig& cfg) {
  ordered_json j = env_to_json(cfg.env);
  j["agent"] = to_string(cfg.agent);
  const auto& t = cfg.td3;
  j["td3"] = {{"gamma", t.gamma},
              {"tau", t.tau},
              {"policy_delay", t.policy_delay},
              {"batch_size", t.batch_size},
              {"buffer_capacity", t.buffer_capacity},
              {"exploration_noise", t.exploration_noise},
              {"target_noise", t.target_noise},
              {"target_noise_clip", t.target_noise_clip},
              {"warmup_steps", t.warmup_steps},
              {"sequence_length", t.sequence_length},
              {"burn_in", t.burn_in},
              {"actor_lr", t.actor_lr},
              {"critic_lr", t.critic_lr},
              {"selection_threshold", t.selection_threshold},
              {"ff_width", t.ff_width},
              {"ff_depth", t.ff_depth},
              {"embed_width", t.embed_width},
              {"lstm_units", t.lstm_units},
              {"recurrent", t.recurrent}};
  j["baseline"] = {{"fixed_power", cfg.baseline.fixed_power ? ordered_json(*cfg.baseline.fixed_power)
                                                            : ordered_json(nullptr)},
                   {"ratio_floor", cfg.baseline.ratio_floor}};
  j["seeds"] = cfg.seeds;
  j["sweep"] = {{"axis", to_string(cfg.sweep.axis)},
                {"values", cfg.sweep.values},
                {"stddev", cfg.sweep.stddev}};
  j["output"] = cfg.output.string();
  return j;
}

}  // namespace fldlt3::harness
