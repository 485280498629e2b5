#include "inneratt/train/replay_buffer.hpp"

#include <string>
#include <unordered_set>

#include "inneratt/nn/errors.hpp"

namespace inneratt::train {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ContractError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[head_] = t;
  }
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw ContractError("replay index " + std::to_string(i) + " out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  return data_[(oldest + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, Rng& rng) const {
  if (batch > size_) {
    throw ContractError("batch of " + std::to_string(batch) + " from a buffer of " +
                        std::to_string(size_));
  }
  // Floyd's algorithm: distinct indices without materializing a permutation.
  std::vector<std::size_t> out;
  out.reserve(batch);
  std::unordered_set<std::size_t> taken;
  for (std::size_t j = size_ - batch; j < size_; ++j) {
    const std::size_t t = rng.below(j + 1);
    if (taken.insert(t).second) {
      out.push_back(t);
    } else {
      taken.insert(j);
      out.push_back(j);
    }
  }
  return out;
}

bool ReplayBuffer::operator==(const ReplayBuffer& other) const {
  if (capacity_ != other.capacity_ || size_ != other.size_) return false;
  for (std::size_t i = 0; i < size_; ++i) {
    if (!(at(i) == other.at(i))) return false;
  }
  return true;
}

Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& indices) {
  constexpr std::size_t n = env::kRobotCount;
  constexpr std::size_t d = env::kObservationSize;
  const std::size_t b = indices.size();
  Batch out;
  out.rewards = nn::NdArray({b, n});
  out.done.resize(b);
  out.actions.assign(n, std::vector<std::size_t>(b));
  for (std::size_t i = 0; i < n; ++i) {
    out.obs.emplace_back(nn::Shape{b, d});
    out.next_obs.emplace_back(nn::Shape{b, d});
  }
  for (std::size_t k = 0; k < b; ++k) {
    const Transition& t = buffer.at(indices[k]);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(t.obs[i].begin(), t.obs[i].end(), out.obs[i].data().begin() + k * d);
      std::copy(t.next_obs[i].begin(), t.next_obs[i].end(),
                out.next_obs[i].data().begin() + k * d);
      out.actions[i][k] = t.actions[i];
      out.rewards(k, i) = t.rewards[i];
    }
    out.done[k] = t.done ? 1.0 : 0.0;
  }
  return out;
}

nn::NdArray one_hot(const std::vector<std::size_t>& actions, std::size_t n) {
  nn::NdArray out({actions.size(), n});
  for (std::size_t b = 0; b < actions.size(); ++b) {
    if (actions[b] >= n) throw ContractError("action " + std::to_string(actions[b]) + " out of range");
    out(b, actions[b]) = 1.0;
  }
  return out;
}

}  // namespace inneratt::train
