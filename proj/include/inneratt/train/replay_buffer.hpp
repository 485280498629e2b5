#ifndef INNERATT_TRAIN_REPLAY_BUFFER_HPP_
#define INNERATT_TRAIN_REPLAY_BUFFER_HPP_

#include <array>
#include <cstddef>
#include <vector>

#include "inneratt/env/rescue_env.hpp"
#include "inneratt/nn/ndarray.hpp"
#include "inneratt/nn/random.hpp"

namespace inneratt::train {

// One joint step: (o, a, r, o', done) for all robots.
struct Transition {
  std::array<env::Observation, env::kRobotCount> obs{};
  std::array<std::size_t, env::kRobotCount> actions{};
  std::array<double, env::kRobotCount> rewards{};
  std::array<env::Observation, env::kRobotCount> next_obs{};
  bool done = false;
  bool operator==(const Transition&) const = default;
};

// Bounded FIFO of transitions; the oldest entry is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition& t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  // i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;

  // Distinct indices drawn uniformly; throws ContractError if batch > size.
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;

  bool operator==(const ReplayBuffer& other) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next write position
  std::size_t size_ = 0;
  std::vector<Transition> data_;
};

// Column-organized minibatch consumed by the update rules.
struct Batch {
  std::vector<nn::NdArray> obs;       // per robot, B x obs_dim
  std::vector<nn::NdArray> next_obs;  // per robot, B x obs_dim
  std::vector<std::vector<std::size_t>> actions;  // [robot][b]
  nn::NdArray rewards;                // B x robots
  std::vector<double> done;           // B

  std::size_t size() const { return done.size(); }
  std::size_t robots() const { return obs.size(); }
  bool operator==(const Batch&) const = default;
};

Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& indices);

// B x n one-hot rows.
nn::NdArray one_hot(const std::vector<std::size_t>& actions, std::size_t n);

}  // namespace inneratt::train

#endif  // INNERATT_TRAIN_REPLAY_BUFFER_HPP_
