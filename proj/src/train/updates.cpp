#include "inneratt/train/updates.hpp"

#include <cmath>
#include <string>

#include "inneratt/analysis/analysis.hpp"
#include "inneratt/nn/errors.hpp"

namespace inneratt::train {

namespace {

std::vector<NdArray> gather_grads(const Tape& tape, const std::vector<Var>& leaves) {
  std::vector<NdArray> grads;
  grads.reserve(leaves.size());
  for (const Var& v : leaves) grads.push_back(tape.grad(v));
  return grads;
}

critic::JointInput joint(const std::vector<NdArray>& obs,
                         const std::vector<std::vector<std::size_t>>& actions,
                         std::size_t action_dim) {
  critic::JointInput in;
  in.observations = obs;
  for (const auto& a : actions) in.actions.push_back(one_hot(a, action_dim));
  return in;
}

std::vector<std::size_t> sample_rows(const NdArray& probs, Rng& rng) {
  std::vector<std::size_t> out(probs.rows());
  for (std::size_t b = 0; b < probs.rows(); ++b) {
    out[b] = rng.categorical(probs.data().subspan(b * probs.cols(), probs.cols()));
  }
  return out;
}

}  // namespace

std::vector<NdArray> critic_targets(const Batch& batch, const critic::CriticParams& target,
                                    const ActorParams& actor, const UpdateSettings& settings,
                                    Rng& rng) {
  const std::size_t n = batch.robots();
  const std::size_t a_dim = actor.action_dim();
  std::vector<NdArray> probs, log_probs;
  std::vector<std::vector<std::size_t>> next_actions;
  for (std::size_t i = 0; i < n; ++i) {
    Tape tape;
    ActorVars vars = bind(tape, actor, false);
    Var logp = nn::log_softmax_rows(policy_logits(vars, i, tape.constant(batch.next_obs[i])));
    log_probs.push_back(logp.value());
    probs.push_back(nn::exp(logp).value());
    next_actions.push_back(sample_rows(probs.back(), rng));
  }
  std::vector<NdArray> q_next =
      critic::evaluate(target, joint(batch.next_obs, next_actions, a_dim), settings.attention);

  std::vector<NdArray> y;
  for (std::size_t i = 0; i < n; ++i) {
    NdArray yi({batch.size(), 1});
    for (std::size_t b = 0; b < batch.size(); ++b) {
      double soft_value = 0.0;
      for (std::size_t a = 0; a < a_dim; ++a) {
        soft_value += probs[i](b, a) *
                      (q_next[i](b, a) - settings.entropy_temperature * log_probs[i](b, a));
      }
      yi[b] = batch.rewards(b, i) + settings.gamma * (1.0 - batch.done[b]) * soft_value;
    }
    y.push_back(std::move(yi));
  }
  return y;
}

namespace {

Var critic_loss_on_tape(Tape& tape, const critic::CriticVars& vars,
                        const critic::CriticShape& shape, const Batch& batch,
                        const std::vector<NdArray>& targets, critic::AttentionMode mode,
                        critic::AttentionRecord* record) {
  critic::CriticForward fwd =
      critic::forward(tape, vars, shape, joint(batch.obs, batch.actions, shape.action_dim), mode);
  Var total;
  for (std::size_t i = 0; i < batch.robots(); ++i) {
    Var err = nn::sub(nn::pick(fwd.q[i], batch.actions[i]), tape.constant(targets[i]));
    Var mse = nn::mean(nn::square(err));
    total = total.valid() ? nn::add(total, mse) : mse;
  }
  if (record != nullptr) *record = std::move(fwd.record);
  return total;
}

}  // namespace

double critic_loss(const Batch& batch, const critic::CriticParams& params,
                   const std::vector<NdArray>& targets, critic::AttentionMode mode) {
  Tape tape;
  critic::CriticVars vars = critic::bind(tape, params, false);
  return critic_loss_on_tape(tape, vars, params.shape, batch, targets, mode, nullptr).value()[0];
}

CriticUpdateStats critic_update(const Batch& batch, critic::CriticParams& params,
                                const critic::CriticParams& target, const ActorParams& actor,
                                nn::AdamState& optimizer, const UpdateSettings& settings,
                                Rng& rng) {
  if (batch.size() == 0) throw ContractError("critic update on an empty batch");
  std::vector<NdArray> y = critic_targets(batch, target, actor, settings, rng);
  Tape tape;
  critic::CriticVars vars = critic::bind(tape, params, true);
  critic::AttentionRecord record;
  Var loss =
      critic_loss_on_tape(tape, vars, params.shape, batch, y, settings.attention, &record);
  tape.backward(loss);
  nn::adam_step(params.parameters(), gather_grads(tape, vars.leaves()), optimizer, settings.adam);

  CriticUpdateStats stats;
  stats.loss = loss.value()[0];
  stats.head_entropy = analysis::mean_head_entropy(record);
  return stats;
}

std::vector<NdArray> td_baselines(const ActorParams& actor, const Batch& batch,
                                  const std::vector<NdArray>& q) {
  std::vector<NdArray> out;
  for (std::size_t i = 0; i < batch.robots(); ++i) {
    NdArray p = policy_probabilities(actor, i, batch.obs[i]);
    require_same_shape(p, q.at(i), "td_baselines");
    NdArray b({p.rows(), 1});
    for (std::size_t r = 0; r < p.rows(); ++r) {
      for (std::size_t a = 0; a < p.cols(); ++a) b[r] += p(r, a) * q[i](r, a);
    }
    out.push_back(std::move(b));
  }
  return out;
}

Var td_policy_loss(Tape& tape, const ActorVars& actor, const Batch& batch,
                   const std::vector<NdArray>& q, const std::vector<NdArray>& baselines,
                   double entropy_temperature) {
  Var total;
  for (std::size_t i = 0; i < batch.robots(); ++i) {
    Var logp = nn::log_softmax_rows(policy_logits(actor, i, tape.constant(batch.obs[i])));
    Var p = nn::exp(logp);
    NdArray advantage = q.at(i);
    for (std::size_t b = 0; b < advantage.rows(); ++b) {
      for (std::size_t a = 0; a < advantage.cols(); ++a) advantage(b, a) -= baselines.at(i)[b];
    }
    Var gain = nn::row_sum(nn::mul(p, tape.constant(advantage)));
    Var neg_entropy = nn::row_sum(nn::mul(p, logp));
    Var objective = nn::sub(gain, nn::scale(neg_entropy, entropy_temperature));
    Var li = nn::scale(nn::mean(objective), -1.0);
    total = total.valid() ? nn::add(total, li) : li;
  }
  return total;
}

std::vector<NdArray> sampled_policy_q(const Batch& batch, const ActorParams& actor,
                                      const critic::CriticParams& critic,
                                      critic::AttentionMode mode, Rng& rng) {
  std::vector<std::vector<std::size_t>> sampled;
  for (std::size_t i = 0; i < batch.robots(); ++i) {
    sampled.push_back(sample_rows(policy_probabilities(actor, i, batch.obs[i]), rng));
  }
  return critic::evaluate(critic, joint(batch.obs, sampled, actor.action_dim()), mode);
}

double actor_update_td(const Batch& batch, ActorParams& actor, const critic::CriticParams& critic,
                       nn::AdamState& optimizer, const UpdateSettings& settings, Rng& rng) {
  if (batch.size() == 0) throw ContractError("actor update on an empty batch");
  std::vector<NdArray> q = sampled_policy_q(batch, actor, critic, settings.attention, rng);
  std::vector<NdArray> baselines = td_baselines(actor, batch, q);
  Tape tape;
  ActorVars vars = bind(tape, actor, true);
  Var loss = td_policy_loss(tape, vars, batch, q, baselines, settings.entropy_temperature);
  tape.backward(loss);
  nn::adam_step(actor.parameters(), gather_grads(tape, vars.leaves()), optimizer, settings.adam);
  return loss.value()[0];
}

void PpoSegment::append(const Transition& t, const std::vector<std::vector<double>>& probs) {
  const std::size_t n = t.obs.size();
  const std::size_t d = t.obs[0].size();
  const std::size_t a_dim = probs.at(0).size();
  const std::size_t b = size();
  auto grow = [](NdArray& m, std::size_t cols) {
    std::vector<double> data = std::move(m.storage());
    data.resize(data.size() + cols, 0.0);
    const std::size_t rows = data.size() / cols;
    m = NdArray({rows, cols}, std::move(data));
  };
  if (steps.obs.empty()) {
    steps.obs.assign(n, NdArray({0, d}));
    steps.actions.assign(n, {});
    steps.rewards = NdArray({0, n});
    behavior_probs.assign(n, NdArray({0, a_dim}));
  }
  for (std::size_t i = 0; i < n; ++i) {
    grow(steps.obs[i], d);
    std::copy(t.obs[i].begin(), t.obs[i].end(), steps.obs[i].data().begin() + b * d);
    steps.actions[i].push_back(t.actions[i]);
    grow(behavior_probs[i], a_dim);
    std::copy(probs[i].begin(), probs[i].end(), behavior_probs[i].data().begin() + b * a_dim);
  }
  grow(steps.rewards, n);
  for (std::size_t i = 0; i < n; ++i) steps.rewards(b, i) = t.rewards[i];
  steps.done.push_back(t.done ? 1.0 : 0.0);
}

void PpoSegment::clear() { *this = PpoSegment{}; }

Var clipped_surrogate(Var log_prob_new, const NdArray& log_prob_old, const NdArray& advantage,
                      double clip) {
  Tape& tape = *log_prob_new.tape();
  Var ratio = nn::exp(nn::sub(log_prob_new, tape.constant(log_prob_old)));
  Var adv = tape.constant(advantage);
  Var unclipped = nn::mul(ratio, adv);
  Var clipped = nn::mul(nn::clamp(ratio, 1.0 - clip, 1.0 + clip), adv);
  return nn::mean(nn::minimum(unclipped, clipped));
}

std::vector<NdArray> ppo_advantages(const PpoSegment& segment, const critic::CriticParams& critic,
                                    critic::AttentionMode mode) {
  if (segment.behavior_probs.size() != segment.steps.robots() || segment.size() == 0) {
    throw ContractError("PPO segment is missing behavior probabilities");
  }
  const std::size_t a_dim = segment.behavior_probs[0].cols();
  std::vector<NdArray> q =
      critic::evaluate(critic, joint(segment.steps.obs, segment.steps.actions, a_dim), mode);
  std::vector<NdArray> out;
  for (std::size_t i = 0; i < q.size(); ++i) {
    NdArray adv({segment.size(), 1});
    for (std::size_t b = 0; b < segment.size(); ++b) {
      double baseline = 0.0;
      for (std::size_t a = 0; a < a_dim; ++a) baseline += segment.behavior_probs[i](b, a) * q[i](b, a);
      adv[b] = q[i](b, segment.steps.actions[i][b]) - baseline;
    }
    out.push_back(std::move(adv));
  }
  return out;
}

Var ppo_policy_loss(Tape& tape, const ActorVars& actor, const PpoSegment& segment,
                    const std::vector<NdArray>& advantages, const UpdateSettings& settings) {
  Var total;
  for (std::size_t i = 0; i < segment.steps.robots(); ++i) {
    Var logp = nn::log_softmax_rows(policy_logits(actor, i, tape.constant(segment.steps.obs[i])));
    NdArray old({segment.size(), 1});
    for (std::size_t b = 0; b < segment.size(); ++b) {
      old[b] = std::log(segment.behavior_probs[i](b, segment.steps.actions[i][b]));
    }
    Var surrogate =
        clipped_surrogate(nn::pick(logp, segment.steps.actions[i]), old, advantages[i],
                          settings.ppo_clip);
    Var neg_entropy = nn::mean(nn::row_sum(nn::mul(nn::exp(logp), logp)));
    Var li = nn::sub(nn::scale(neg_entropy, settings.entropy_temperature), surrogate);
    total = total.valid() ? nn::add(total, li) : li;
  }
  return total;
}

double actor_update_ppo(const PpoSegment& segment, ActorParams& actor,
                        const critic::CriticParams& critic, nn::AdamState& optimizer,
                        const UpdateSettings& settings) {
  std::vector<NdArray> advantages = ppo_advantages(segment, critic, settings.attention);
  double last = 0.0;
  for (std::size_t epoch = 0; epoch < settings.ppo_epochs; ++epoch) {
    Tape tape;
    ActorVars vars = bind(tape, actor, true);
    Var loss = ppo_policy_loss(tape, vars, segment, advantages, settings);
    tape.backward(loss);
    nn::adam_step(actor.parameters(), gather_grads(tape, vars.leaves()), optimizer, settings.adam);
    last = loss.value()[0];
  }
  return last;
}

void soft_update_targets(const nn::ParamList& target, const nn::ConstParamList& params,
                         double tau) {
  if (target.size() != params.size()) {
    throw DimensionError("soft update over " + std::to_string(target.size()) + " vs " +
                         std::to_string(params.size()) + " arrays");
  }
  for (std::size_t k = 0; k < target.size(); ++k) {
    nn::require_same_shape(*target[k].array, *params[k].array, "soft_update_targets");
    auto t = target[k].array->data();
    auto p = params[k].array->data();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = (1.0 - tau) * t[i] + tau * p[i];
  }
}

}  // namespace inneratt::train
