#include "fldlt3/td3/agent.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "fldlt3/errors.hpp"
#include "fldlt3/nn/checkpoint.hpp"

namespace fldlt3::td3 {

using nn::Matrix;
using nn::Vector;

void Td3Config::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  require(policy_delay >= 1, "policy_delay must be at least 1");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(buffer_capacity >= 1, "buffer_capacity must be at least 1");
  require(exploration_noise >= 0.0 && target_noise >= 0.0 && target_noise_clip >= 0.0,
          "noise parameters must be non-negative");
  require(warmup_steps >= 0, "warmup_steps must be non-negative");
  require(sequence_length >= 1, "sequence_length must be at least 1");
  require(burn_in >= 0 && burn_in < sequence_length, "burn_in must lie in [0, sequence_length)");
  require(actor_lr > 0.0 && critic_lr > 0.0, "learning rates must be positive");
  require(ff_width >= 1 && ff_depth >= 1 && embed_width >= 1 && lstm_units >= 1,
          "network sizes must be positive");
}

ActionCodec::ActionCodec(std::vector<env::DeviceParams> params, double selection_threshold)
    : params_(std::move(params)), threshold_(selection_threshold) {}

double ActionCodec::decode_power(double raw, const env::DeviceParams& p) {
  const double affine = p.power_min + 0.5 * (raw + 1.0) * (p.power_max - p.power_min);
  return std::clamp(affine, p.power_min, p.power_max);
}

env::RoundAction ActionCodec::decode(const Vector& raw) const {
  const std::size_t k_count = params_.size();
  if (static_cast<std::size_t>(raw.size()) != 2 * k_count) {
    throw ShapeMismatch("raw action must have 2K components");
  }
  env::RoundAction a = env::RoundAction::none(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    a.selected[k] = raw(i) > threshold_ ? 1 : 0;
    a.power[k] = decode_power(raw(i + static_cast<Eigen::Index>(k_count)), params_[k]);
  }
  return a;
}

Vector clip_unit(const Vector& raw) { return raw.cwiseMax(-1.0).cwiseMin(1.0); }

namespace {

Matrix stack(std::initializer_list<const Matrix*> parts) {
  Eigen::Index rows = 0;
  for (const Matrix* p : parts) rows += p->rows();
  Matrix out(rows, parts.begin()[0]->cols());
  Eigen::Index r = 0;
  for (const Matrix* p : parts) {
    out.middleRows(r, p->rows()) = *p;
    r += p->rows();
  }
  return out;
}

nn::NetShape make_shape(const Td3Config& c, std::size_t in, std::size_t out,
                        nn::Activation act) {
  nn::NetShape s;
  s.input_dim = static_cast<Eigen::Index>(in);
  s.output_dim = static_cast<Eigen::Index>(out);
  s.ff_width = c.ff_width;
  s.ff_depth = c.ff_depth;
  s.embed_width = c.embed_width;
  s.lstm_units = c.lstm_units;
  s.recurrent = c.recurrent;
  s.output_activation = act;
  return s;
}

}  // namespace

Td3Agent::Td3Agent(Td3Config config, std::size_t observation_dim, std::size_t action_dim,
                   std::uint64_t seed)
    : config_(config),
      obs_dim_(observation_dim),
      act_dim_(action_dim),
      seed_(seed),
      rng_(seed),
      buffer_(config.buffer_capacity, static_cast<std::size_t>(config.sequence_length)) {
  config_.validate();
  const auto policy_shape =
      make_shape(config_, obs_dim_ + act_dim_, act_dim_, nn::Activation::Tanh);
  const auto critic_shape =
      make_shape(config_, obs_dim_ + 2 * act_dim_, 1, nn::Activation::Identity);
  policy_ = nn::TwoBranchNet(policy_shape);
  policy_.initialize(rng_);
  policy_target_ = nn::TwoBranchNet(policy_shape);
  nn::copy_parameters(policy_target_, policy_);
  for (std::size_t m = 0; m < 2; ++m) {
    critics_[m] = nn::TwoBranchNet(critic_shape);
    critics_[m].initialize(rng_);
    critic_targets_[m] = nn::TwoBranchNet(critic_shape);
    nn::copy_parameters(critic_targets_[m], critics_[m]);
    critic_opts_[m] = nn::AdamState(std::as_const(critics_[m]).params(), config_.critic_lr);
  }
  policy_opt_ = nn::AdamState(std::as_const(policy_).params(), config_.actor_lr);
  begin_episode();
}

void Td3Agent::begin_episode() { acting_state_ = policy_.initial_state(1); }

Vector Td3Agent::act(const Vector& observation, const Vector& prev_action, ActMode mode) {
  if (static_cast<std::size_t>(observation.size()) != obs_dim_ ||
      static_cast<std::size_t>(prev_action.size()) != act_dim_) {
    throw ShapeMismatch("act: observation or previous action has wrong size");
  }
  Matrix input(obs_dim_ + act_dim_, 1);
  input << observation, prev_action;
  nn::LSTMState next;
  const Vector out = policy_.forward(input, acting_state_, next).col(0);
  acting_state_ = std::move(next);

  switch (mode) {
    case ActMode::ExploreRandom: {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      Vector raw(static_cast<Eigen::Index>(act_dim_));
      for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = u(rng_);
      return raw;
    }
    case ActMode::ExploreNoisy: {
      std::normal_distribution<double> noise(0.0, config_.exploration_noise);
      Vector raw = out;
      if (config_.exploration_noise > 0.0) {
        for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += noise(rng_);
      }
      return raw;
    }
    case ActMode::Greedy:
      break;
  }
  return out;
}

void Td3Agent::store(Transition t) {
  if (static_cast<std::size_t>(t.observation.size()) != obs_dim_ ||
      static_cast<std::size_t>(t.next_observation.size()) != obs_dim_ ||
      static_cast<std::size_t>(t.action.size()) != act_dim_ ||
      static_cast<std::size_t>(t.prev_action.size()) != act_dim_) {
    throw ShapeMismatch("transition vectors do not match agent dimensions");
  }
  buffer_.store(std::move(t));
}

Td3Agent::Batch Td3Agent::sample_batch() {
  const auto n = static_cast<Eigen::Index>(config_.batch_size);
  const auto len = static_cast<std::size_t>(config_.sequence_length);
  const auto ends = buffer_.sample_ends(static_cast<std::size_t>(config_.batch_size), rng_);
  Batch b;
  const auto od = static_cast<Eigen::Index>(obs_dim_);
  const auto ad = static_cast<Eigen::Index>(act_dim_);
  for (std::size_t s = 0; s < len; ++s) {
    b.obs.emplace_back(od, n);
    b.next_obs.emplace_back(od, n);
    b.prev.emplace_back(ad, n);
    b.action.emplace_back(ad, n);
    b.reward.emplace_back(n);
    b.not_done.emplace_back(n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t start = ends[static_cast<std::size_t>(i)] + 1 - len;
    for (std::size_t s = 0; s < len; ++s) {
      const Transition& t = buffer_.at(start + s);
      b.obs[s].col(i) = t.observation;
      b.next_obs[s].col(i) = t.next_observation;
      b.prev[s].col(i) = t.prev_action;
      b.action[s].col(i) = t.action;
      b.reward[s](i) = t.reward;
      b.not_done[s](i) = t.done ? 0.0 : 1.0;
    }
  }
  return b;
}

TrainDiagnostics Td3Agent::train_step(long long step_index) {
  TrainDiagnostics diag;
  diag.valid_sequences = buffer_.valid_sequences();
  if (diag.valid_sequences < static_cast<std::size_t>(config_.batch_size)) return diag;
  diag.trained = true;

  const Batch b = sample_batch();
  const auto len = static_cast<std::size_t>(config_.sequence_length);
  const auto burn = static_cast<std::size_t>(config_.burn_in);
  const Eigen::Index n = config_.batch_size;
  const auto ad = static_cast<Eigen::Index>(act_dim_);
  const double loss_count = static_cast<double>(n) * static_cast<double>(len - burn);

  // Smoothed target actions from the target policy on (S', A).
  std::vector<Matrix> target_policy_in(len);
  for (std::size_t s = 0; s < len; ++s) target_policy_in[s] = stack({&b.next_obs[s], &b.action[s]});
  nn::NetTape scratch;
  auto next_actions = policy_target_.forward_sequence(target_policy_in,
                                                      policy_target_.initial_state(n), scratch);
  std::normal_distribution<double> target_noise(0.0, config_.target_noise);
  const double clip = config_.target_noise_clip;
  for (auto& a : next_actions) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double rho = config_.target_noise > 0.0
                             ? std::clamp(target_noise(rng_), -clip, clip)
                             : 0.0;
      diag.max_abs_target_noise = std::max(diag.max_abs_target_noise, std::abs(rho));
      a.data()[i] = std::clamp(a.data()[i] + rho, -1.0, 1.0);
    }
  }

  std::vector<Matrix> target_critic_in(len);
  for (std::size_t s = 0; s < len; ++s) {
    target_critic_in[s] = stack({&b.next_obs[s], &next_actions[s], &b.action[s]});
  }
  auto tq1 = critic_targets_[0].forward_sequence(target_critic_in,
                                                 critic_targets_[0].initial_state(n), scratch);
  auto tq2 = critic_targets_[1].forward_sequence(target_critic_in,
                                                 critic_targets_[1].initial_state(n), scratch);
  std::vector<Eigen::RowVectorXd> y(len);
  diag.target_min = std::numeric_limits<double>::infinity();
  diag.target_max = -std::numeric_limits<double>::infinity();
  diag.target_over_single_1 = -std::numeric_limits<double>::infinity();
  diag.target_over_single_2 = -std::numeric_limits<double>::infinity();
  double y_sum = 0.0;
  for (std::size_t s = 0; s < len; ++s) {
    const Eigen::RowVectorXd discount = config_.gamma * b.not_done[s];
    const Eigen::RowVectorXd y1 = b.reward[s] + discount.cwiseProduct(tq1[s].row(0));
    const Eigen::RowVectorXd y2 = b.reward[s] + discount.cwiseProduct(tq2[s].row(0));
    y[s] = b.reward[s] + discount.cwiseProduct(tq1[s].row(0).cwiseMin(tq2[s].row(0)));
    if (s < burn) continue;
    diag.target_over_single_1 = std::max(diag.target_over_single_1, (y[s] - y1).maxCoeff());
    diag.target_over_single_2 = std::max(diag.target_over_single_2, (y[s] - y2).maxCoeff());
    diag.target_min = std::min(diag.target_min, y[s].minCoeff());
    diag.target_max = std::max(diag.target_max, y[s].maxCoeff());
    y_sum += y[s].sum();
  }
  diag.target_mean = y_sum / loss_count;

  // Critic regression on (S, A, A-) toward y.
  std::vector<Matrix> critic_in(len);
  for (std::size_t s = 0; s < len; ++s) critic_in[s] = stack({&b.obs[s], &b.action[s], &b.prev[s]});
  for (std::size_t m = 0; m < 2; ++m) {
    nn::NetTape tape;
    auto q = critics_[m].forward_sequence(critic_in, critics_[m].initial_state(n), tape);
    std::vector<Matrix> grads(len, Matrix::Zero(1, n));
    double loss = 0.0;
    double q_sum = 0.0;
    for (std::size_t s = burn; s < len; ++s) {
      const Eigen::RowVectorXd err = q[s].row(0) - y[s];
      loss += err.squaredNorm();
      q_sum += q[s].sum();
      grads[s].row(0) = (2.0 / loss_count) * err;
    }
    critics_[m].zero_grad();
    critics_[m].backward(tape, grads);
    nn::adam_step(critics_[m].params(), critic_opts_[m]);
    (m == 0 ? diag.critic1_loss : diag.critic2_loss) = loss / loss_count;
    if (m == 0) diag.q1_mean = q_sum / loss_count;
  }

  if (step_index % config_.policy_delay != 0) return diag;
  diag.policy_updated = true;

  // Deterministic policy gradient through critic 1.
  std::vector<Matrix> policy_in(len);
  for (std::size_t s = 0; s < len; ++s) policy_in[s] = stack({&b.obs[s], &b.prev[s]});
  nn::NetTape policy_tape;
  auto actions = policy_.forward_sequence(policy_in, policy_.initial_state(n), policy_tape);
  for (std::size_t s = 0; s < len; ++s) critic_in[s] = stack({&b.obs[s], &actions[s], &b.prev[s]});
  nn::NetTape critic_tape;
  auto q = critics_[0].forward_sequence(critic_in, critics_[0].initial_state(n), critic_tape);
  std::vector<Matrix> q_grads(len, Matrix::Zero(1, n));
  double actor_loss = 0.0;
  for (std::size_t s = burn; s < len; ++s) {
    actor_loss -= q[s].sum();
    q_grads[s].setConstant(-1.0 / loss_count);
  }
  diag.actor_loss = actor_loss / loss_count;
  const auto input_grads = critics_[0].backward(critic_tape, q_grads);
  critics_[0].zero_grad();
  std::vector<Matrix> action_grads(len);
  const auto od = static_cast<Eigen::Index>(obs_dim_);
  for (std::size_t s = 0; s < len; ++s) action_grads[s] = input_grads[s].middleRows(od, ad);
  policy_.zero_grad();
  policy_.backward(policy_tape, action_grads);
  nn::adam_step(policy_.params(), policy_opt_);

  nn::soft_update(policy_target_, policy_, config_.tau);
  for (std::size_t m = 0; m < 2; ++m) nn::soft_update(critic_targets_[m], critics_[m], config_.tau);
  return diag;
}

double Td3Agent::q_value(int critic_index, const Vector& observation, const Vector& action,
                         const Vector& prev_action) const {
  const auto& net = critics_.at(static_cast<std::size_t>(critic_index));
  Matrix input(obs_dim_ + 2 * act_dim_, 1);
  input << observation, action, prev_action;
  nn::LSTMState next;
  return net.forward(input, net.initial_state(1), next)(0, 0);
}

nlohmann::ordered_json Td3Agent::checkpoint() const {
  nlohmann::ordered_json j;
  j["format"] = "fldlt3-agent-v1";
  j["seed"] = seed_;
  j["observation_dim"] = obs_dim_;
  j["action_dim"] = act_dim_;
  std::ostringstream rng_state;
  rng_state << rng_;
  j["rng_state"] = rng_state.str();
  j["env_steps"] = env_steps_;
  auto& nets = j["networks"];
  nets["policy"] = nn::to_json(policy_.params());
  nets["policy_target"] = nn::to_json(policy_target_.params());
  nets["critic1"] = nn::to_json(critics_[0].params());
  nets["critic2"] = nn::to_json(critics_[1].params());
  nets["critic1_target"] = nn::to_json(critic_targets_[0].params());
  nets["critic2_target"] = nn::to_json(critic_targets_[1].params());
  auto& opts = j["optimizers"];
  opts["policy"] = nn::to_json(policy_opt_);
  opts["critic1"] = nn::to_json(critic_opts_[0]);
  opts["critic2"] = nn::to_json(critic_opts_[1]);
  j["buffer"] = {{"size", buffer_.size()},
                 {"capacity", buffer_.capacity()},
                 {"episodes", buffer_.num_episodes()},
                 {"valid_sequences", buffer_.valid_sequences()}};
  return j;
}

void Td3Agent::restore(const nlohmann::ordered_json& j) {
  if (j.at("format").get<std::string>() != "fldlt3-agent-v1") {
    throw ConfigError("unrecognized checkpoint format");
  }
  if (j.at("observation_dim").get<std::size_t>() != obs_dim_ ||
      j.at("action_dim").get<std::size_t>() != act_dim_) {
    throw ShapeMismatch("checkpoint dimensions do not match agent");
  }
  const auto& nets = j.at("networks");
  nn::from_json(nets.at("policy"), policy_.params());
  nn::from_json(nets.at("policy_target"), policy_target_.params());
  nn::from_json(nets.at("critic1"), critics_[0].params());
  nn::from_json(nets.at("critic2"), critics_[1].params());
  nn::from_json(nets.at("critic1_target"), critic_targets_[0].params());
  nn::from_json(nets.at("critic2_target"), critic_targets_[1].params());
  const auto& opts = j.at("optimizers");
  policy_opt_ = nn::adam_from_json(opts.at("policy"));
  critic_opts_[0] = nn::adam_from_json(opts.at("critic1"));
  critic_opts_[1] = nn::adam_from_json(opts.at("critic2"));
  std::istringstream rng_state(j.at("rng_state").get<std::string>());
  rng_state >> rng_;
  seed_ = j.at("seed").get<std::uint64_t>();
  env_steps_ = j.at("env_steps").get<long long>();
  begin_episode();
}

}  // namespace fldlt3::td3
