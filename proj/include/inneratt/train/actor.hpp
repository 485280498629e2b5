#ifndef INNERATT_TRAIN_ACTOR_HPP_
#define INNERATT_TRAIN_ACTOR_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "inneratt/nn/ops.hpp"
#include "inneratt/nn/params.hpp"

namespace inneratt::train {

using nn::NdArray;
using nn::Tape;
using nn::Var;

// Per-robot policy nets: obs -> hidden (ReLU) -> action logits. Each policy
// reads only its own robot's observation.
struct ActorParams {
  std::vector<nn::Linear> hidden;
  std::vector<nn::Linear> output;

  static ActorParams init(std::size_t robots, std::size_t obs_dim, std::size_t hidden_dim,
                          std::size_t action_dim, Rng& rng);

  std::size_t robots() const { return hidden.size(); }
  std::size_t obs_dim() const { return hidden.front().in(); }
  std::size_t action_dim() const { return output.front().out(); }

  nn::ParamList parameters();
  nn::ConstParamList parameters() const;
  bool operator==(const ActorParams&) const = default;
};

struct ActorVars {
  std::vector<Var> hidden_w, hidden_b, output_w, output_b;
  std::vector<Var> leaves() const;
};

ActorVars bind(Tape& tape, const ActorParams& params, bool trainable);

// B x action_dim logits for one robot.
Var policy_logits(const ActorVars& vars, std::size_t robot, Var obs);

// Action probabilities for a batch of observations (B x action_dim).
NdArray policy_probabilities(const ActorParams& params, std::size_t robot, const NdArray& obs);

// Single-observation fast path used during rollouts.
std::vector<double> action_probabilities(const ActorParams& params, std::size_t robot,
                                         std::span<const double> obs);

}  // namespace inneratt::train

#endif  // INNERATT_TRAIN_ACTOR_HPP_
