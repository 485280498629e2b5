#include "inneratt/train/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <omp.h>

#include "inneratt/nn/errors.hpp"

namespace inneratt::train {

namespace {

std::size_t choose(const std::vector<double>& probs, ActionRule rule, Rng& rng) {
  switch (rule) {
    case ActionRule::kGreedy:
      return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) -
                                      probs.begin());
    case ActionRule::kUniformRandom:
      return rng.below(probs.size());
    case ActionRule::kSample:
      break;
  }
  return rng.categorical(probs);
}

// Steps one environment, filling a transition; the world must not be done.
struct Stepper {
  const ActorParams& actor;
  ActionRule rule;
  Rng& action_rng;

  env::StepResult operator()(env::RescueEnv& world, Transition& t,
                             std::vector<std::vector<double>>& probs) const {
    std::vector<env::Observation> obs = world.observe_all();
    probs.assign(obs.size(), {});
    for (std::size_t i = 0; i < obs.size(); ++i) {
      t.obs[i] = obs[i];
      if (rule == ActionRule::kUniformRandom) {
        probs[i].assign(env::kActionCount, 1.0 / env::kActionCount);
      } else {
        probs[i] = action_probabilities(actor, i, obs[i]);
      }
      t.actions[i] = choose(probs[i], rule, action_rng);
    }
    env::StepResult r = world.step(t.actions);
    for (std::size_t i = 0; i < env::kRobotCount; ++i) {
      t.rewards[i] = r.rewards[i];
      t.next_obs[i] = world.observe(i);
    }
    // Bootstrapping stops only at true terminals, not at the time limit.
    t.done = r.terminal;
    return r;
  }
};

}  // namespace

EpisodeResult run_episode(const ActorParams& actor, env::Scenario scenario,
                          const env::EnvConfig& config, std::uint64_t seed,
                          std::size_t episode_index, ActionRule rule,
                          const StepObserver& observer) {
  if (rule != ActionRule::kUniformRandom && actor.robots() != env::kRobotCount) {
    throw ContractError("actor does not have one policy per robot");
  }
  env::RescueEnv world(config, scenario, derive_seed(seed, 0));
  Rng action_rng(derive_seed(seed, 1));
  world.reset();
  Stepper stepper{actor, rule, action_rng};
  EpisodeResult out;
  while (true) {
    Transition t;
    std::vector<std::vector<double>> probs;
    const env::WorldState before = world.state();
    env::StepResult r = stepper(world, t, probs);
    if (observer) {
      std::vector<env::Observation> obs(t.obs.begin(), t.obs.end());
      observer(before, obs, t.actions, r);
    }
    double mean = 0.0;
    for (double v : t.rewards) mean += v;
    out.reward += mean / env::kRobotCount;
    for (env::RescueEvent& e : r.events) {
      e.episode = episode_index;
      out.events.push_back(std::move(e));
    }
    out.transitions.push_back(t);
    if (rule == ActionRule::kSample) out.probs.push_back(std::move(probs));
    ++out.steps;
    if (r.done) break;
  }
  return out;
}

std::vector<EpisodeResult> run_episodes(const ActorParams& actor, env::Scenario scenario,
                                        const env::EnvConfig& config, std::uint64_t seed,
                                        std::size_t first, std::size_t count,
                                        std::size_t workers, ActionRule rule) {
  std::vector<EpisodeResult> out(count);
  const int threads = static_cast<int>(std::max<std::size_t>(1, std::min(workers, count)));
  std::exception_ptr failure;
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (std::size_t k = 0; k < count; ++k) {
    try {
      const std::size_t index = first + k;
      out[k] = run_episode(actor, scenario, config, derive_seed(seed, kEpisodeStream, index),
                           index, rule);
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Collected collect(const ActorParams& actor, env::Scenario scenario, const env::EnvConfig& config,
                  std::uint64_t seed, std::size_t workers, std::size_t steps) {
  if (workers == 0) throw ContractError("collect needs at least one worker");
  std::vector<Collected> parts(workers);
  std::exception_ptr failure;
#pragma omp parallel for num_threads(static_cast<int>(workers)) schedule(static, 1)
  for (std::size_t w = 0; w < workers; ++w) {
    try {
      const std::uint64_t worker_seed = derive_seed(seed, kCollectStream, w);
      env::RescueEnv world(config, scenario, derive_seed(worker_seed, 0));
      Rng action_rng(derive_seed(worker_seed, 1));
      world.reset();
      Stepper stepper{actor, ActionRule::kSample, action_rng};
      std::size_t episode = 0;
      for (std::size_t s = 0; s < steps; ++s) {
        Transition t;
        std::vector<std::vector<double>> probs;
        env::StepResult r = stepper(world, t, probs);
        for (env::RescueEvent& e : r.events) {
          e.episode = episode;
          parts[w].events.push_back(std::move(e));
        }
        parts[w].transitions.push_back(t);
        if (r.done) {
          world.reset();
          ++episode;
        }
      }
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  Collected out;
  for (Collected& p : parts) {
    out.transitions.insert(out.transitions.end(), p.transitions.begin(), p.transitions.end());
    out.events.insert(out.events.end(), p.events.begin(), p.events.end());
  }
  return out;
}

void mean_and_standard_error(const std::vector<double>& xs, double& mean, double& se) {
  mean = 0.0;
  se = 0.0;
  if (xs.empty()) return;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

EvalSummary evaluate_policy(const ActorParams& actor, env::Scenario scenario,
                            const env::EnvConfig& config, std::uint64_t seed,
                            std::size_t episodes, ActionRule rule, std::size_t workers) {
  EvalSummary out;
  for (EpisodeResult& r : run_episodes(actor, scenario, config, derive_seed(seed, kEvalStream),
                                       0, episodes, workers, rule)) {
    out.episode_rewards.push_back(r.reward);
    out.events.insert(out.events.end(), r.events.begin(), r.events.end());
  }
  mean_and_standard_error(out.episode_rewards, out.mean, out.standard_error);
  return out;
}

}  // namespace inneratt::train
