#include "inneratt/train/actor.hpp"

#include <cmath>
#include <string>

#include "inneratt/nn/errors.hpp"

namespace inneratt::train {

ActorParams ActorParams::init(std::size_t robots, std::size_t obs_dim, std::size_t hidden_dim,
                              std::size_t action_dim, Rng& rng) {
  ActorParams p;
  for (std::size_t i = 0; i < robots; ++i) {
    p.hidden.push_back(nn::Linear::init(obs_dim, hidden_dim, rng));
    p.output.push_back(nn::Linear::init(hidden_dim, action_dim, rng));
  }
  return p;
}

namespace {

template <class Self, class List>
List collect(Self& p) {
  List out;
  for (std::size_t i = 0; i < p.hidden.size(); ++i) {
    const std::string prefix = "actor." + std::to_string(i);
    out.push_back({prefix + ".hidden.weight", &p.hidden[i].weight});
    out.push_back({prefix + ".hidden.bias", &p.hidden[i].bias});
    out.push_back({prefix + ".output.weight", &p.output[i].weight});
    out.push_back({prefix + ".output.bias", &p.output[i].bias});
  }
  return out;
}

}  // namespace

nn::ParamList ActorParams::parameters() { return collect<ActorParams, nn::ParamList>(*this); }

nn::ConstParamList ActorParams::parameters() const {
  return collect<const ActorParams, nn::ConstParamList>(*this);
}

std::vector<Var> ActorVars::leaves() const {
  std::vector<Var> out;
  for (std::size_t i = 0; i < hidden_w.size(); ++i) {
    out.push_back(hidden_w[i]);
    out.push_back(hidden_b[i]);
    out.push_back(output_w[i]);
    out.push_back(output_b[i]);
  }
  return out;
}

ActorVars bind(Tape& tape, const ActorParams& params, bool trainable) {
  auto put = [&](const NdArray& a) { return trainable ? tape.leaf(a) : tape.constant(a); };
  ActorVars v;
  for (std::size_t i = 0; i < params.hidden.size(); ++i) {
    v.hidden_w.push_back(put(params.hidden[i].weight));
    v.hidden_b.push_back(put(params.hidden[i].bias));
    v.output_w.push_back(put(params.output[i].weight));
    v.output_b.push_back(put(params.output[i].bias));
  }
  return v;
}

Var policy_logits(const ActorVars& vars, std::size_t robot, Var obs) {
  if (robot >= vars.hidden_w.size()) {
    throw ContractError("policy for robot " + std::to_string(robot) + " does not exist");
  }
  Var h = nn::relu(nn::linear(obs, vars.hidden_w[robot], vars.hidden_b[robot]));
  return nn::linear(h, vars.output_w[robot], vars.output_b[robot]);
}

NdArray policy_probabilities(const ActorParams& params, std::size_t robot, const NdArray& obs) {
  Tape tape;
  ActorVars vars = bind(tape, params, false);
  return nn::softmax_rows(policy_logits(vars, robot, tape.constant(obs))).value();
}

std::vector<double> action_probabilities(const ActorParams& params, std::size_t robot,
                                         std::span<const double> obs) {
  if (robot >= params.robots()) {
    throw ContractError("policy for robot " + std::to_string(robot) + " does not exist");
  }
  const nn::Linear& l1 = params.hidden[robot];
  const nn::Linear& l2 = params.output[robot];
  if (obs.size() != l1.in()) {
    throw DimensionError("policy input length " + std::to_string(obs.size()) + " vs " +
                         std::to_string(l1.in()));
  }
  std::vector<double> h(l1.bias.data().begin(), l1.bias.data().end());
  for (std::size_t r = 0; r < l1.in(); ++r) {
    const double x = obs[r];
    if (x == 0.0) continue;
    for (std::size_t c = 0; c < h.size(); ++c) h[c] += x * l1.weight(r, c);
  }
  std::vector<double> logits(l2.bias.data().begin(), l2.bias.data().end());
  for (std::size_t r = 0; r < h.size(); ++r) {
    if (h[r] <= 0.0) continue;
    for (std::size_t c = 0; c < logits.size(); ++c) logits[c] += h[r] * l2.weight(r, c);
  }
  double m = logits[0];
  for (double v : logits) m = std::max(m, v);
  double total = 0.0;
  for (double& v : logits) total += (v = std::exp(v - m));
  for (double& v : logits) v /= total;
  return logits;
}

}  // namespace inneratt::train
