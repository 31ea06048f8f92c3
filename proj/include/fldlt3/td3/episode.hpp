#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fldlt3/edgeiot_sim.hpp"
#include "fldlt3/td3/agent.hpp"

namespace fldlt3::td3 {

/// Per-round summary shared by the learning agent and the baselines.
struct RoundRecord {
  int round = 0;  // 1-based within the episode
  double reward = 0.0;
  double ae_gain = 0.0;  // accuracy / energy - evenness, before the accuracy-floor penalty
  double accuracy = 0.0;
  double total_energy = 0.0;
  double evenness = 0.0;
  std::size_t num_selected = 0;
  int accuracy_violations = 0;
  double wall_clock = 0.0;  // s
};

RoundRecord make_record(int round, const sim::StepResult& step, double wall_clock);

struct EpisodeMetrics {
  double cumulative_reward = 0.0;
  std::vector<double> rewards;
  std::vector<double> ae_gain;
  std::vector<RoundRecord> rounds;
  std::size_t train_calls = 0;
  std::size_t train_updates = 0;
};

/// Couples one agent with one environment and carries the observation and
/// previous action across rounds, so an episode can be played in pieces
/// (e.g. a training stretch followed by greedy rounds).
class Fldlt3Driver {
 public:
  Fldlt3Driver(Td3Agent& agent, sim::EdgeIoTEnv& env);

  void reset(std::uint64_t env_seed);

  /// Plays one round. When training: random actions for the first
  /// warmup_steps agent steps, noisy actions afterwards, storing every
  /// transition and calling train_step once per post-warmup round.
  RoundRecord play_round(bool train);

  /// Plays `rounds` rounds or until the episode ends.
  EpisodeMetrics play(int rounds, bool train);

  [[nodiscard]] bool done() const { return env_.done(); }
  [[nodiscard]] const TrainDiagnostics& last_diagnostics() const { return last_diag_; }
  [[nodiscard]] const ActionCodec& codec() const { return codec_; }

  std::function<void(const TrainDiagnostics&)> on_train;

 private:
  Td3Agent& agent_;
  sim::EdgeIoTEnv& env_;
  ActionCodec codec_;
  nn::Vector observation_;
  nn::Vector prev_action_;
  std::size_t train_calls_ = 0;
  std::size_t train_updates_ = 0;
  TrainDiagnostics last_diag_;
};

/// Resets `env` with `env_seed` and plays a whole episode.
EpisodeMetrics run_episode(sim::EdgeIoTEnv& env, Td3Agent& agent, bool train,
                           std::uint64_t env_seed);

}  // namespace fldlt3::td3
