#include "fldlt3/td3/episode.hpp"

#include <chrono>

#include "fldlt3/errors.hpp"

namespace fldlt3::td3 {

namespace {

nn::Vector to_vector(const sim::Observation& obs) {
  return Eigen::Map<const nn::Vector>(obs.values.data(), static_cast<Eigen::Index>(obs.values.size()));
}

}  // namespace

RoundRecord make_record(int round, const sim::StepResult& step, double wall_clock) {
  RoundRecord r;
  r.round = round;
  r.reward = step.reward;
  r.ae_gain = step.outcome.reward;
  r.accuracy = step.outcome.accuracy;
  r.total_energy = step.outcome.total_energy();
  r.evenness = step.outcome.evenness_penalty;
  r.num_selected = step.applied.num_selected();
  r.accuracy_violations = step.accuracy_penalized ? 1 : 0;
  r.wall_clock = wall_clock;
  return r;
}

Fldlt3Driver::Fldlt3Driver(Td3Agent& agent, sim::EdgeIoTEnv& env)
    : agent_(agent), env_(env), codec_({}, agent.config().selection_threshold) {
  if (agent.observation_dim() != env.observation_size() ||
      agent.action_dim() != 2 * static_cast<std::size_t>(env.num_devices())) {
    throw ShapeMismatch("agent dimensions do not match the environment");
  }
}

void Fldlt3Driver::reset(std::uint64_t env_seed) {
  observation_ = to_vector(env_.reset(env_seed));
  codec_ = ActionCodec(env_.device_params(), agent_.config().selection_threshold);
  prev_action_ = nn::Vector::Zero(static_cast<Eigen::Index>(agent_.action_dim()));
  agent_.begin_episode();
  agent_.end_episode();
}

RoundRecord Fldlt3Driver::play_round(bool train) {
  if (observation_.size() == 0) throw LifecycleError("driver used before reset");
  const auto started = std::chrono::steady_clock::now();
  const int round = env_.true_state().round_index + 1;

  ActMode mode = ActMode::Greedy;
  if (train) {
    mode = agent_.env_steps() < agent_.config().warmup_steps ? ActMode::ExploreRandom
                                                       : ActMode::ExploreNoisy;
  }
  const nn::Vector action = clip_unit(agent_.act(observation_, prev_action_, mode));
  const env::RoundAction decoded = codec_.decode(action);
  sim::StepResult step = env_.step(decoded);
  const nn::Vector next_observation = to_vector(step.observation);

  if (train) {
    const long long step_index = agent_.count_env_step();
    agent_.store(Transition{prev_action_, observation_, action, decoded, step.reward,
                            next_observation, step.done});
    if (step_index > agent_.config().warmup_steps) {
      ++train_calls_;
      last_diag_ = agent_.train_step(step_index);
      if (last_diag_.trained) ++train_updates_;
      if (on_train) on_train(last_diag_);
    }
  }
  prev_action_ = action;
  observation_ = next_observation;
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return make_record(round, step, elapsed);
}

EpisodeMetrics Fldlt3Driver::play(int rounds, bool train) {
  EpisodeMetrics m;
  const std::size_t calls_before = train_calls_;
  const std::size_t updates_before = train_updates_;
  for (int i = 0; i < rounds && !env_.done(); ++i) {
    RoundRecord r = play_round(train);
    m.cumulative_reward += r.reward;
    m.rewards.push_back(r.reward);
    m.ae_gain.push_back(r.ae_gain);
    m.rounds.push_back(r);
  }
  m.train_calls = train_calls_ - calls_before;
  m.train_updates = train_updates_ - updates_before;
  return m;
}

EpisodeMetrics run_episode(sim::EdgeIoTEnv& env, Td3Agent& agent, bool train,
                           std::uint64_t env_seed) {
  Fldlt3Driver driver(agent, env);
  driver.reset(env_seed);
  return driver.play(env.config().system.num_rounds, train);
}

}  // namespace fldlt3::td3
