#include "fldlt3/td3/replay_buffer.hpp"

#include "fldlt3/errors.hpp"

namespace fldlt3::td3 {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t sequence_length)
    : capacity_(capacity), sequence_length_(sequence_length) {
  if (capacity == 0) throw InvalidParameter("replay capacity must be positive");
  if (sequence_length == 0 || sequence_length > capacity) {
    throw InvalidParameter("sequence length must be in [1, capacity]");
  }
}

void ReplayBuffer::mark_episode_boundary() {
  if (!episodes_.empty() && episodes_.back().first == current_episode_) boundary_pending_ = true;
}

void ReplayBuffer::store(Transition t) {
  if (boundary_pending_) {
    ++current_episode_;
    boundary_pending_ = false;
  }
  const bool done = t.done;
  if (size_ == capacity_) {
    auto& oldest = episodes_.front();
    if (--oldest.second == 0) episodes_.pop_front();
    items_[head_] = std::move(t);
    episode_ids_[head_] = current_episode_;
    head_ = (head_ + 1) % capacity_;
  } else if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    episode_ids_.push_back(current_episode_);
    ++size_;
  }
  if (episodes_.empty() || episodes_.back().first != current_episode_) {
    episodes_.emplace_back(current_episode_, 0);
  }
  ++episodes_.back().second;
  if (done) boundary_pending_ = true;
}

const Transition& ReplayBuffer::at(std::size_t index) const {
  if (index >= size_) throw InvalidParameter("replay index out of range");
  return items_[physical(index)];
}

std::uint64_t ReplayBuffer::episode_of(std::size_t index) const {
  if (index >= size_) throw InvalidParameter("replay index out of range");
  return episode_ids_[physical(index)];
}

bool ReplayBuffer::sequence_valid(std::size_t end) const {
  if (end >= size_ || end + 1 < sequence_length_) return false;
  return episode_of(end + 1 - sequence_length_) == episode_of(end);
}

std::size_t ReplayBuffer::valid_sequences() const {
  std::size_t n = 0;
  for (const auto& [id, count] : episodes_) {
    if (count >= sequence_length_) n += count - sequence_length_ + 1;
  }
  return n;
}

std::vector<std::size_t> ReplayBuffer::sample_ends(std::size_t count, std::mt19937_64& rng) const {
  if (valid_sequences() == 0) throw LifecycleError("no complete sequence to sample");
  std::uniform_int_distribution<std::size_t> pick(sequence_length_ - 1, size_ - 1);
  std::vector<std::size_t> out;
  out.reserve(count);
  while (out.size() < count) {
    const std::size_t end = pick(rng);
    if (sequence_valid(end)) out.push_back(end);
  }
  return out;
}

}  // namespace fldlt3::td3
