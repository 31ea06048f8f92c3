#pragma once

#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "fldlt3/env_model.hpp"
#include "fldlt3/nn/param.hpp"

namespace fldlt3::td3 {

struct Transition {
  nn::Vector prev_action;       // A_{alpha-}
  nn::Vector observation;       // S^o_alpha
  nn::Vector action;            // A_alpha, clipped raw policy output
  env::RoundAction decoded;     // selection bits and powers sent to the environment
  double reward = 0.0;
  nn::Vector next_observation;  // S^o_{alpha'}
  bool done = false;            // last transition of its episode
};

/// Ring buffer of transitions that samples contiguous, single-episode
/// sequences of a fixed length uniformly over their end positions.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t sequence_length);

  void store(Transition t);
  /// Starts a new episode even if the previous one was not marked done.
  void mark_episode_boundary();

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] std::size_t sequence_length() const { return sequence_length_; }
  [[nodiscard]] std::size_t num_episodes() const { return episodes_.size(); }

  /// Logical index, 0 = oldest retained transition.
  [[nodiscard]] const Transition& at(std::size_t index) const;
  [[nodiscard]] std::uint64_t episode_of(std::size_t index) const;

  [[nodiscard]] bool sequence_valid(std::size_t end) const;
  [[nodiscard]] std::size_t valid_sequences() const;

  /// Logical end indices of `count` sequences, sampled with replacement.
  std::vector<std::size_t> sample_ends(std::size_t count, std::mt19937_64& rng) const;

 private:
  [[nodiscard]] std::size_t physical(std::size_t index) const { return (head_ + index) % capacity_; }

  std::size_t capacity_;
  std::size_t sequence_length_;
  std::vector<Transition> items_;
  std::vector<std::uint64_t> episode_ids_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
  std::uint64_t current_episode_ = 0;
  bool boundary_pending_ = false;
  // (episode id, retained transitions) oldest first
  std::deque<std::pair<std::uint64_t, std::size_t>> episodes_;
};

}  // namespace fldlt3::td3
