#include "fldlt3/harness/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fldlt3/errors.hpp"

namespace fldlt3::harness {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<td3::RoundRecord> play_baseline(const sim::SimConfig& env_cfg, AgentKind agent,
                                            const baselines::BaselineConfig& bcfg,
                                            std::uint64_t seed) {
  sim::EdgeIoTEnv env(env_cfg);
  env.reset(seed);
  // separate stream so FedAvg's shuffles do not perturb the environment draws
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<td3::RoundRecord> out;
  out.reserve(static_cast<std::size_t>(env_cfg.system.num_rounds));
  int round = 0;
  while (!env.done()) {
    auto t0 = std::chrono::steady_clock::now();
    const auto state = env.true_state();
    const auto& params = env.device_params();
    env::RoundAction action;
    switch (agent) {
      case AgentKind::FedAvg:
        action = baselines::fedavg_select(state, params, env_cfg.system, bcfg, rng);
        break;
      case AgentKind::FedCs:
        action = baselines::fedcs_select(state, params, env_cfg.system, bcfg);
        break;
      case AgentKind::FedAecs:
        action = baselines::fedaecs_select(state, params, env_cfg.system, bcfg).action;
        break;
      default:
        throw ContractViolation("play_baseline: not a baseline agent");
    }
    auto step = env.step(action);
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(td3::make_record(++round, step, dt));
  }
  return out;
}

}  // namespace

std::vector<td3::RoundRecord> play_agent(const sim::SimConfig& env_cfg, AgentKind agent,
                                         const td3::Td3Config& td3_cfg,
                                         const baselines::BaselineConfig& baseline_cfg,
                                         std::uint64_t seed) {
  if (agent == AgentKind::Fldlt3 || agent == AgentKind::Fldlt3NoLstm) {
    td3::Td3Config t = td3_cfg;
    if (agent == AgentKind::Fldlt3NoLstm) t.recurrent = false;
    sim::EdgeIoTEnv env(env_cfg);
    const auto k = static_cast<std::size_t>(env_cfg.system.num_devices);
    td3::Td3Agent learner(t, env.observation_size(), 2 * k, seed);
    return td3::run_episode(env, learner, true, seed).rounds;
  }
  return play_baseline(env_cfg, agent, baseline_cfg, seed);
}

std::string make_run_id(AgentKind agent, const Sweep& sweep, double value, std::uint64_t seed) {
  if (sweep.axis == SweepAxis::None) return fmt::format("{}_s{}", to_string(agent), seed);
  return fmt::format("{}_{}-{:g}_s{}", to_string(agent), to_string(sweep.axis), value, seed);
}

std::string env_fingerprint(const sim::SimConfig& env) {
  ordered_json j = env_to_json(env);
  // seeds differ between runs of one experiment and are not part of the setup
  j["arrivals"].erase("seed");
  const std::string text = j.dump();
  // FNV-1a, stable across platforms unlike std::hash
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string format_row(const RunResult& run, const td3::RoundRecord& r) {
  return fmt::format("{},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{:.6f}", run.run_id,
                     run.seed, to_string(run.agent), r.round, r.reward, r.accuracy,
                     r.total_energy, r.evenness, r.num_selected, r.accuracy_violations,
                     r.wall_clock);
}

void write_metrics(const fs::path& path, const RunResult& run) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics file " + path.string());
  out << kMetricsHeader << '\n';
  for (const auto& r : run.rounds) out << format_row(run, r) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

double final_window_mean(const std::vector<td3::RoundRecord>& rounds, int window) {
  if (rounds.empty()) throw DegenerateInput("final_window_mean: empty run");
  const std::size_t w = std::min(rounds.size(), static_cast<std::size_t>(std::max(window, 1)));
  double sum = 0.0;
  for (std::size_t i = rounds.size() - w; i < rounds.size(); ++i) sum += rounds[i].reward;
  return sum / static_cast<double>(w);
}

ordered_json make_summary(const ExperimentConfig& cfg, const std::vector<RunResult>& runs) {
  ordered_json points = ordered_json::array();
  for (double v : cfg.sweep.points()) {
    std::vector<double> means;
    ordered_json per_seed = ordered_json::array();
    for (const auto& run : runs) {
      if (run.sweep_value != v) continue;
      double m = final_window_mean(run.rounds, kSummaryWindow);
      means.push_back(m);
      per_seed.push_back({{"run_id", run.run_id}, {"seed", run.seed}, {"final_mean", m}});
    }
    double mean = 0.0;
    for (double m : means) mean += m;
    mean /= static_cast<double>(std::max<std::size_t>(means.size(), 1));
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    // sample standard deviation; zero with a single seed
    double sd = means.size() > 1 ? std::sqrt(var / static_cast<double>(means.size() - 1)) : 0.0;
    ordered_json p;
    p["sweep_value"] = v;
    p["env_fingerprint"] = env_fingerprint(cfg.env_at(v));
    p["window"] = kSummaryWindow;
    p["reward_mean"] = mean;
    p["reward_std"] = sd;
    p["runs"] = per_seed;
    points.push_back(p);
  }
  ordered_json j;
  j["agent"] = to_string(cfg.agent);
  j["sweep_axis"] = to_string(cfg.sweep.axis);
  j["points"] = points;
  return j;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(cfg.output, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output.string() + ": " + ec.message());

  struct Job {
    double value;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double v : cfg.sweep.points()) {
    for (auto s : cfg.seeds) jobs.push_back({v, s});
  }
  std::vector<RunResult> results(jobs.size());

  auto run_one = [&](std::size_t i) {
    const Job& job = jobs[i];
    RunResult r;
    r.agent = cfg.agent;
    r.sweep_value = job.value;
    r.seed = job.seed;
    r.run_id = make_run_id(cfg.agent, cfg.sweep, job.value, job.seed);
    spdlog::info("run {} started", r.run_id);
    const sim::SimConfig env = cfg.env_at(job.value);
    r.rounds = play_agent(env, cfg.agent, cfg.td3, cfg.baseline, job.seed);
    write_metrics(cfg.output / (r.run_id + ".csv"), r);
    ordered_json meta;
    meta["run_id"] = r.run_id;
    meta["agent"] = to_string(r.agent);
    meta["seed"] = r.seed;
    meta["sweep_axis"] = to_string(cfg.sweep.axis);
    meta["sweep_value"] = r.sweep_value;
    meta["env_fingerprint"] = env_fingerprint(env);
    meta["environment"] = env_to_json(env);
    const fs::path meta_path = cfg.output / (r.run_id + ".meta.json");
    std::ofstream out(meta_path);
    if (!out) throw IoError("cannot write " + meta_path.string());
    out << meta.dump(2) << '\n';
    spdlog::info("run {} finished, final-window reward {:.6g}", r.run_id,
                 final_window_mean(r.rounds, kSummaryWindow));
    results[i] = std::move(r);
  };

  const int workers = std::max(1, std::min<int>(opts.jobs, static_cast<int>(jobs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      run_one(i);
      if (opts.on_run_done) opts.on_run_done(results[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    if (opts.on_run_done) {
      for (const auto& r : results) opts.on_run_done(r);
    }
  }

  const fs::path summary_path = cfg.output / ("summary_" + to_string(cfg.agent) + ".json");
  std::ofstream out(summary_path);
  if (!out) throw IoError("cannot write " + summary_path.string());
  out << make_summary(cfg, results).dump(2) << '\n';
  return results;
}

}  // namespace fldlt3::harness
