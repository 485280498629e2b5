#ifndef INNERATT_TRAIN_UPDATES_HPP_
#define INNERATT_TRAIN_UPDATES_HPP_

#include <vector>

#include "inneratt/critic/critic.hpp"
#include "inneratt/nn/adam.hpp"
#include "inneratt/train/actor.hpp"
#include "inneratt/train/replay_buffer.hpp"

namespace inneratt::train {

struct UpdateSettings {
  double gamma = 0.99;
  double entropy_temperature = 0.01;
  double ppo_clip = 0.2;
  std::size_t ppo_epochs = 4;
  critic::AttentionMode attention = critic::AttentionMode::kLearned;
  nn::AdamConfig adam;
};

struct CriticUpdateStats {
  double loss = 0.0;
  // Mean attention entropy per head over the batch and all robots.
  std::vector<double> head_entropy;
};

// Soft TD targets y_i = r_i + gamma (1 - done) sum_a pi_i(a|o'_i)
// (Qbar_i(o', a) - T log pi_i(a|o'_i)), teammates' next actions sampled from
// their current policies.
std::vector<NdArray> critic_targets(const Batch& batch, const critic::CriticParams& target,
                                    const ActorParams& actor, const UpdateSettings& settings,
                                    Rng& rng);

// Mean squared error summed over robots, before the optimizer step.
double critic_loss(const Batch& batch, const critic::CriticParams& params,
                   const std::vector<NdArray>& targets, critic::AttentionMode mode);

// One Adam step on the critic toward critic_targets(). Returns the loss.
CriticUpdateStats critic_update(const Batch& batch, critic::CriticParams& params,
                                const critic::CriticParams& target, const ActorParams& actor,
                                nn::AdamState& optimizer, const UpdateSettings& settings,
                                Rng& rng);

// Counterfactual baselines b_i = sum_a pi_i(a|o_i) Q_i(o, a) under the
// current policies, per robot as B x 1.
std::vector<NdArray> td_baselines(const ActorParams& actor, const Batch& batch,
                                  const std::vector<NdArray>& q);

// -mean[sum_a pi_i(a) (Q_i(o, a) - b_i) + T H(pi_i)] summed over robots, with
// the baselines held fixed. `q` holds each robot's B x A critic values.
Var td_policy_loss(Tape& tape, const ActorVars& actor, const Batch& batch,
                   const std::vector<NdArray>& q, const std::vector<NdArray>& baselines,
                   double entropy_temperature);

// Critic values with teammates' actions sampled from the current policies.
std::vector<NdArray> sampled_policy_q(const Batch& batch, const ActorParams& actor,
                                      const critic::CriticParams& critic,
                                      critic::AttentionMode mode, Rng& rng);

// One Adam step on every policy. Returns the loss.
double actor_update_td(const Batch& batch, ActorParams& actor, const critic::CriticParams& critic,
                       nn::AdamState& optimizer, const UpdateSettings& settings, Rng& rng);

// On-policy steps with the behavior policy's action probabilities.
struct PpoSegment {
  Batch steps;  // obs/actions/rewards; next_obs unused
  std::vector<NdArray> behavior_probs;  // per robot, B x A

  std::size_t size() const { return steps.size(); }
  void append(const Transition& t, const std::vector<std::vector<double>>& probs);
  void clear();
  bool operator==(const PpoSegment&) const = default;
};

// Clipped surrogate min(rho A, clip(rho, 1-eps, 1+eps) A) averaged over rows.
Var clipped_surrogate(Var log_prob_new, const NdArray& log_prob_old, const NdArray& advantage,
                      double clip);

// Advantages Q_i(o, a_i) - sum_a pi_old(a) Q_i(o, a), per robot as B x 1.
std::vector<NdArray> ppo_advantages(const PpoSegment& segment, const critic::CriticParams& critic,
                                    critic::AttentionMode mode);

Var ppo_policy_loss(Tape& tape, const ActorVars& actor, const PpoSegment& segment,
                    const std::vector<NdArray>& advantages, const UpdateSettings& settings);

// settings.ppo_epochs full-segment steps. Returns the last epoch's loss.
double actor_update_ppo(const PpoSegment& segment, ActorParams& actor,
                        const critic::CriticParams& critic, nn::AdamState& optimizer,
                        const UpdateSettings& settings);

// target <- (1 - tau) target + tau params.
void soft_update_targets(const nn::ParamList& target, const nn::ConstParamList& params,
                         double tau);

}  // namespace inneratt::train

#endif  // INNERATT_TRAIN_UPDATES_HPP_
