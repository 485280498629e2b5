#ifndef INNERATT_TRAIN_ROLLOUT_HPP_
#define INNERATT_TRAIN_ROLLOUT_HPP_

#include <cstdint>
#include <functional>
#include <vector>

#include "inneratt/env/rescue_env.hpp"
#include "inneratt/train/actor.hpp"
#include "inneratt/train/replay_buffer.hpp"

namespace inneratt::train {

enum class ActionRule { kSample, kGreedy, kUniformRandom };

struct EpisodeResult {
  std::vector<Transition> transitions;
  // Behavior probabilities per step and robot (kSample only).
  std::vector<std::vector<std::vector<double>>> probs;
  std::vector<env::RescueEvent> events;
  // Sum over steps of the robots' mean reward.
  double reward = 0.0;
  std::size_t steps = 0;
};

// Seed streams derived from a run's base seed.
inline constexpr std::uint64_t kEpisodeStream = 1;
inline constexpr std::uint64_t kUpdateStream = 2;
inline constexpr std::uint64_t kInitStream = 3;
inline constexpr std::uint64_t kCollectStream = 4;
inline constexpr std::uint64_t kEvalStream = 5;

// Called after every step with the world after the step, e.g. for traces.
using StepObserver = std::function<void(const env::WorldState& before,
                                        const std::vector<env::Observation>& obs,
                                        std::span<const std::size_t> actions,
                                        const env::StepResult& result)>;

// One episode from a fresh reset. The environment and the action sampler
// draw from separate streams derived from `seed`.
EpisodeResult run_episode(const ActorParams& actor, env::Scenario scenario,
                          const env::EnvConfig& config, std::uint64_t seed,
                          std::size_t episode_index, ActionRule rule,
                          const StepObserver& observer = {});

// Runs episodes first..first+count-1 concurrently on up to `workers` threads,
// each seeded by its index; results come back in episode order, so the
// outcome does not depend on scheduling.
std::vector<EpisodeResult> run_episodes(const ActorParams& actor, env::Scenario scenario,
                                        const env::EnvConfig& config, std::uint64_t seed,
                                        std::size_t first, std::size_t count,
                                        std::size_t workers, ActionRule rule);

struct Collected {
  std::vector<Transition> transitions;  // worker 0's steps, then worker 1's, ...
  std::vector<env::RescueEvent> events;
};

// Each worker steps its own seeded environment exactly `steps` times,
// resetting whenever an episode ends.
Collected collect(const ActorParams& actor, env::Scenario scenario, const env::EnvConfig& config,
                  std::uint64_t seed, std::size_t workers, std::size_t steps);

struct EvalSummary {
  std::vector<double> episode_rewards;
  std::vector<env::RescueEvent> events;
  double mean = 0.0;
  double standard_error = 0.0;
};

EvalSummary evaluate_policy(const ActorParams& actor, env::Scenario scenario,
                            const env::EnvConfig& config, std::uint64_t seed,
                            std::size_t episodes, ActionRule rule, std::size_t workers = 1);

// Mean and standard error of the mean.
void mean_and_standard_error(const std::vector<double>& xs, double& mean, double& se);

}  // namespace inneratt::train

#endif  // INNERATT_TRAIN_ROLLOUT_HPP_
