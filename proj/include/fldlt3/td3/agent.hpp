#pragma once

// Twin-delayed deterministic policy gradient agent with recurrent two-branch
// actor and critics, trained from replayed fixed-length sequences.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "json.hpp"

#include "fldlt3/env_model.hpp"
#include "fldlt3/nn/adam.hpp"
#include "fldlt3/nn/two_branch.hpp"
#include "fldlt3/td3/replay_buffer.hpp"

namespace fldlt3::td3 {

struct Td3Config {
  double gamma = 0.99;
  double tau = 5e-3;  // soft-update coefficient phi
  int policy_delay = 10;
  int batch_size = 45;
  std::size_t buffer_capacity = 500000;
  double exploration_noise = 0.5;
  double target_noise = 0.5;
  double target_noise_clip = 0.5;
  int warmup_steps = 45;
  int sequence_length = 8;
  int burn_in = 4;  // leading steps of each sequence that only warm the LSTM state
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  double selection_threshold = 0.0;
  // network sizes; the full-scale setting is 512 everywhere
  int ff_width = 64;
  int ff_depth = 5;
  int embed_width = 64;
  int lstm_units = 64;
  bool recurrent = true;

  void validate() const;
};

enum class ActMode { ExploreRandom, ExploreNoisy, Greedy };

struct TrainDiagnostics {
  bool trained = false;
  bool policy_updated = false;
  std::size_t valid_sequences = 0;
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  std::optional<double> actor_loss;
  double target_mean = 0.0;
  double target_min = 0.0;
  double target_max = 0.0;
  double q1_mean = 0.0;
  double max_abs_target_noise = 0.0;
  // max over the batch of y - y_m; the clipped double-Q target never exceeds
  // either single-critic target, so both are <= 0
  double target_over_single_1 = 0.0;
  double target_over_single_2 = 0.0;
};

/// Maps raw policy outputs (first K selection components, then K power
/// components, nominally in [-1, 1]) to a round action.
class ActionCodec {
 public:
  ActionCodec(std::vector<env::DeviceParams> params, double selection_threshold);

  [[nodiscard]] env::RoundAction decode(const nn::Vector& raw) const;
  [[nodiscard]] std::size_t num_devices() const { return params_.size(); }
  [[nodiscard]] std::size_t action_dim() const { return 2 * params_.size(); }

  /// Power for a raw component: affine from [-1, 1] onto [P_min, P_max],
  /// clamped.
  static double decode_power(double raw, const env::DeviceParams& p);

 private:
  std::vector<env::DeviceParams> params_;
  double threshold_;
};

nn::Vector clip_unit(const nn::Vector& raw);

class Td3Agent {
 public:
  Td3Agent(Td3Config config, std::size_t observation_dim, std::size_t action_dim,
           std::uint64_t seed);

  /// Clears the acting policy's recurrent state.
  void begin_episode();

  /// Raw action before clipping: uniform in [-1, 1] (random), policy output
  /// plus Gaussian noise (noisy), or the policy output (greedy). The acting
  /// LSTM state advances in every mode.
  nn::Vector act(const nn::Vector& observation, const nn::Vector& prev_action, ActMode mode);

  void store(Transition t);
  void end_episode() { buffer_.mark_episode_boundary(); }

  /// Environment steps taken while training, across episodes.
  [[nodiscard]] long long env_steps() const { return env_steps_; }
  long long count_env_step() { return ++env_steps_; }

  /// One critic update; every `policy_delay`-th step index also updates the
  /// policy and soft-updates all three target networks.
  TrainDiagnostics train_step(long long step_index);

  [[nodiscard]] const Td3Config& config() const { return config_; }
  [[nodiscard]] const ReplayBuffer& buffer() const { return buffer_; }
  [[nodiscard]] std::size_t observation_dim() const { return obs_dim_; }
  [[nodiscard]] std::size_t action_dim() const { return act_dim_; }

  nn::TwoBranchNet& policy() { return policy_; }
  nn::TwoBranchNet& policy_target() { return policy_target_; }
  nn::TwoBranchNet& critic(int i) { return critics_.at(static_cast<std::size_t>(i)); }
  nn::TwoBranchNet& critic_target(int i) { return critic_targets_.at(static_cast<std::size_t>(i)); }
  [[nodiscard]] const nn::TwoBranchNet& policy() const { return policy_; }

  /// Critic estimate for a single (observation, action, previous action)
  /// without recurrent context.
  double q_value(int critic_index, const nn::Vector& observation, const nn::Vector& action,
                 const nn::Vector& prev_action) const;

  std::mt19937_64& rng() { return rng_; }

  [[nodiscard]] nlohmann::ordered_json checkpoint() const;
  void restore(const nlohmann::ordered_json& j);

 private:
  struct Batch {
    std::vector<nn::Matrix> obs, prev, action, next_obs;
    std::vector<Eigen::RowVectorXd> reward, not_done;
  };
  Batch sample_batch();

  Td3Config config_;
  std::size_t obs_dim_;
  std::size_t act_dim_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  nn::TwoBranchNet policy_, policy_target_;
  std::array<nn::TwoBranchNet, 2> critics_, critic_targets_;
  nn::AdamState policy_opt_;
  std::array<nn::AdamState, 2> critic_opts_;
  ReplayBuffer buffer_;
  nn::LSTMState acting_state_;
  long long env_steps_ = 0;
};

}  // namespace fldlt3::td3
