#include "inneratt/train/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>

#include "inneratt/critic/critic.hpp"
#include "inneratt/env/rescue_env.hpp"
#include "inneratt/train/actor.hpp"
#include "inneratt/train/updates.hpp"

namespace inneratt::train {

namespace {

constexpr double kStep = 1e-6;

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({1e-3, std::abs(a), std::abs(b)});
}

NdArray random_array(nn::Shape shape, Rng& rng) {
  NdArray a(std::move(shape));
  for (double& v : a.data()) v = rng.uniform(-1.0, 1.0);
  return a;
}

Batch random_batch(std::size_t robots, std::size_t obs_dim, std::size_t action_dim,
                   std::size_t size, Rng& rng) {
  Batch b;
  b.rewards = random_array({size, robots}, rng);
  b.done.assign(size, 0.0);
  for (std::size_t i = 0; i < robots; ++i) {
    b.obs.push_back(random_array({size, obs_dim}, rng));
    b.next_obs.push_back(random_array({size, obs_dim}, rng));
    std::vector<std::size_t> acts(size);
    for (auto& a : acts) a = rng.below(action_dim);
    b.actions.push_back(acts);
  }
  return b;
}

// Checks `indices` of each parameter (all when `sample` is 0).
void compare(const std::string& graph, const nn::ParamList& params,
             const std::vector<NdArray>& grads, const std::function<double()>& loss,
             std::size_t sample, Rng& rng, GradcheckReport& report, std::ostream* log) {
  for (std::size_t k = 0; k < params.size(); ++k) {
    NdArray& p = *params[k].array;
    std::vector<std::size_t> idx;
    if (sample == 0 || sample >= p.size()) {
      for (std::size_t i = 0; i < p.size(); ++i) idx.push_back(i);
    } else {
      for (std::size_t s = 0; s < sample; ++s) idx.push_back(rng.below(p.size()));
    }
    GradcheckEntry e{graph, params[k].name, idx.size(), 0.0};
    for (std::size_t i : idx) {
      const double saved = p[i];
      p[i] = saved + kStep;
      const double up = loss();
      p[i] = saved - kStep;
      const double down = loss();
      p[i] = saved;
      e.max_rel_error = std::max(e.max_rel_error, rel_error(grads[k][i], (up - down) / (2 * kStep)));
    }
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    report.checked += e.checked;
    if (log) *log << graph << ' ' << e.name << ": " << e.checked << " entries, max rel error "
                  << e.max_rel_error << '\n';
    report.entries.push_back(std::move(e));
  }
}

void check_critic(const critic::CriticShape& shape, std::size_t sample, Rng& rng,
                  GradcheckReport& report, std::ostream* log) {
  critic::CriticParams params = critic::CriticParams::init(shape, rng);
  // Wider weights push attention away from uniform so its gradient matters.
  for (auto& q : params.query) {
    for (double& v : q.data()) v *= 4.0;
  }
  for (auto& k : params.key) {
    for (double& v : k.data()) v *= 4.0;
  }
  Batch batch = random_batch(shape.robots, shape.obs_dim, shape.action_dim, 6, rng);
  std::vector<NdArray> targets;
  for (std::size_t i = 0; i < shape.robots; ++i) targets.push_back(random_array({6, 1}, rng));
  const auto mode = critic::AttentionMode::kLearned;

  Tape tape;
  critic::CriticVars vars = critic::bind(tape, params, true);
  critic::JointInput in;
  for (std::size_t i = 0; i < shape.robots; ++i) {
    in.observations.push_back(batch.obs[i]);
    in.actions.push_back(one_hot(batch.actions[i], shape.action_dim));
  }
  critic::CriticForward fwd = critic::forward(tape, vars, shape, in, mode);
  Var loss;
  for (std::size_t i = 0; i < shape.robots; ++i) {
    Var err = nn::sub(nn::pick(fwd.q[i], batch.actions[i]), tape.constant(targets[i]));
    Var term = nn::mean(nn::square(err));
    loss = loss.valid() ? nn::add(loss, term) : term;
  }
  tape.backward(loss);
  std::vector<NdArray> grads;
  for (const Var& v : vars.leaves()) grads.push_back(tape.grad(v));
  const std::string graph = "critic[embed " + std::to_string(shape.embed_dim) + "]";
  compare(graph, params.parameters(), grads,
          [&] { return critic_loss(batch, params, targets, mode); }, sample, rng, report, log);
}

void check_actor(Rng& rng, GradcheckReport& report, std::ostream* log) {
  const std::size_t robots = env::kRobotCount, obs = env::kObservationSize,
                    acts = env::kActionCount, rows = 6;
  ActorParams actor = ActorParams::init(robots, obs, 128, acts, rng);
  Batch batch = random_batch(robots, obs, acts, rows, rng);
  std::vector<NdArray> q;
  for (std::size_t i = 0; i < robots; ++i) q.push_back(random_array({rows, acts}, rng));
  const std::vector<NdArray> baselines = td_baselines(actor, batch, q);

  PpoSegment seg;
  seg.steps = batch;
  std::vector<NdArray> advantages;
  for (std::size_t i = 0; i < robots; ++i) {
    NdArray p = policy_probabilities(actor, i, batch.obs[i]);
    // Behavior policy slightly off the current one so ratios are not all 1.
    for (double& v : p.data()) v = 0.7 * v + 0.3 / acts;
    seg.behavior_probs.push_back(p);
    advantages.push_back(random_array({rows, 1}, rng));
  }
  UpdateSettings settings;
  settings.entropy_temperature = 0.05;
  settings.ppo_clip = 0.5;

  using Loss = std::function<Var(Tape&, const ActorVars&)>;
  const std::vector<std::pair<std::string, Loss>> losses = {
      {"actor[td]",
       [&](Tape& t, const ActorVars& v) {
         return td_policy_loss(t, v, batch, q, baselines, settings.entropy_temperature);
       }},
      {"actor[ppo]",
       [&](Tape& t, const ActorVars& v) {
         return ppo_policy_loss(t, v, seg, advantages, settings);
       }},
  };
  for (const auto& [graph, fn] : losses) {
    Tape tape;
    ActorVars vars = bind(tape, actor, true);
    tape.backward(fn(tape, vars));
    std::vector<NdArray> grads;
    for (const Var& v : vars.leaves()) grads.push_back(tape.grad(v));
    compare(graph, actor.parameters(), grads,
            [&] {
              Tape t;
              ActorVars v = bind(t, actor, false);
              return fn(t, v).value()[0];
            },
            0, rng, report, log);
  }
}

}  // namespace

GradcheckReport run_gradcheck(std::uint64_t seed, std::ostream* log) {
  Rng rng(seed);
  GradcheckReport report;
  critic::CriticShape reduced;
  reduced.embed_dim = 16;
  check_critic(reduced, 0, rng, report, log);
  check_critic(critic::CriticShape{}, 24, rng, report, log);
  check_actor(rng, report, log);
  return report;
}

}  // namespace inneratt::train
