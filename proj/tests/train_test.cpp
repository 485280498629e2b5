#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "inneratt/nn/errors.hpp"
#include "inneratt/train/rollout.hpp"
#include "inneratt/train/trainer.hpp"
#include "inneratt/train/updates.hpp"
#include "oracles.hpp"

using namespace inneratt;
using namespace inneratt::train;
using nn::NdArray;

namespace {

critic::CriticShape tiny_shape(std::size_t robots = 2) {
  return critic::CriticShape{
      .robots = robots, .obs_dim = 4, .action_dim = 3, .embed_dim = 8, .heads = 2};
}

// Constant-observation batch with uniformly random joint actions.
Batch bandit_batch(const critic::CriticShape& s, std::size_t size, Rng& rng) {
  Batch b;
  NdArray obs({size, s.obs_dim});
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < s.obs_dim; ++c) obs(r, c) = 0.25 * (c + 1.0);
  }
  b.rewards = NdArray({size, s.robots});
  b.done.assign(size, 1.0);
  for (std::size_t i = 0; i < s.robots; ++i) {
    b.obs.push_back(obs);
    b.next_obs.push_back(obs);
    std::vector<std::size_t> acts(size);
    for (auto& a : acts) a = rng.below(s.action_dim);
    b.actions.push_back(acts);
  }
  for (std::size_t r = 0; r < size; ++r) b.rewards(r, 0) = b.actions[0][r] == 0 ? 1.0 : 0.0;
  return b;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.episodes = 40;
  c.workers = 1;
  c.batch = 32;
  c.warmup = 64;
  c.update_every = 50;
  c.buffer_capacity = 500;
  c.embed_dim = 8;
  c.heads = 2;
  c.actor_hidden = 8;
  c.metrics_interval = 10;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_CASE("collect: one worker, 25 steps gives 25 full transitions") {
  Rng rng(1);
  ActorParams actor = ActorParams::init(4, env::kObservationSize, 16, env::kActionCount, rng);
  Collected c = collect(actor, env::Scenario::kS1, env::EnvConfig{}, 3, 1, 25);
  REQUIRE(c.transitions.size() == 25);
  for (const Transition& t : c.transitions) {
    CHECK(t.obs.size() == 4);
    CHECK(t.obs[0].size() == 32);
    CHECK(t.next_obs.size() == 4);
    for (std::size_t a : t.actions) CHECK(a < env::kActionCount);
  }
  Collected again = collect(actor, env::Scenario::kS1, env::EnvConfig{}, 3, 1, 25);
  CHECK(again.transitions == c.transitions);
  CHECK(again.events == c.events);
}

TEST_CASE("collect: 12 workers x 25 steps gives 300 transitions") {
  Rng rng(2);
  ActorParams actor = ActorParams::init(4, env::kObservationSize, 16, env::kActionCount, rng);
  Collected c = collect(actor, env::Scenario::kS2, env::EnvConfig{}, 5, 12, 25);
  CHECK(c.transitions.size() == 300);
  // Worker w's block equals a single-worker run with the same derived seed.
  Collected parallel_again = collect(actor, env::Scenario::kS2, env::EnvConfig{}, 5, 12, 25);
  CHECK(parallel_again.transitions == c.transitions);
}

TEST_CASE("run_episodes matches sequential single episodes") {
  Rng rng(3);
  ActorParams actor = ActorParams::init(4, env::kObservationSize, 16, env::kActionCount, rng);
  auto batch = run_episodes(actor, env::Scenario::kS3, env::EnvConfig{}, 11, 5, 4, 4,
                            ActionRule::kSample);
  REQUIRE(batch.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    EpisodeResult one = run_episode(actor, env::Scenario::kS3, env::EnvConfig{},
                                    derive_seed(11, kEpisodeStream, 5 + k), 5 + k,
                                    ActionRule::kSample);
    CHECK(one.transitions == batch[k].transitions);
    CHECK(one.reward == batch[k].reward);
    CHECK(one.steps == 25);  // S3 never terminates early
  }
}

TEST_CASE("policies read only their own 32-value observation") {
  Rng rng(4);
  ActorParams actor = ActorParams::init(4, env::kObservationSize, 16, env::kActionCount, rng);
  CHECK(actor.obs_dim() == 32);
  std::vector<double> short_obs(31, 0.0);
  CHECK_THROWS_AS(action_probabilities(actor, 0, short_obs), DimensionError);
  NdArray obs = oracle::random_array({3, 32}, rng);
  NdArray batch = policy_probabilities(actor, 2, obs);
  for (std::size_t b = 0; b < 3; ++b) {
    auto p = action_probabilities(actor, 2, obs.data().subspan(b * 32, 32));
    double total = 0.0;
    for (std::size_t a = 0; a < 5; ++a) {
      CHECK(p[a] == doctest::Approx(batch(b, a)).epsilon(1e-12));
      total += p[a];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("replay buffer: bounded FIFO, distinct samples") {
  ReplayBuffer buf(5);
  for (int k = 0; k < 8; ++k) {
    Transition t;
    t.rewards[0] = k;
    buf.push(t);
    CHECK(buf.size() <= 5);
  }
  CHECK(buf.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(buf.at(i).rewards[0] == 3.0 + i);
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto idx = buf.sample_indices(5, rng);
    std::set<std::size_t> unique(idx.begin(), idx.end());
    CHECK(unique.size() == 5);
    CHECK(*unique.rbegin() < 5);
  }
  CHECK_THROWS_AS(buf.sample_indices(6, rng), ContractError);
}

TEST_CASE("critic targets: gamma 0 and no entropy give the rewards exactly") {
  const auto s = tiny_shape(3);
  Rng rng(6);
  auto target = critic::CriticParams::init(s, rng);
  auto actor = ActorParams::init(3, s.obs_dim, 8, s.action_dim, rng);
  Batch b = bandit_batch(s, 16, rng);
  for (std::size_t r = 0; r < 16; ++r) {
    b.done[r] = 0.0;
    for (std::size_t i = 0; i < 3; ++i) b.rewards(r, i) = rng.uniform(-2, 2);
  }
  UpdateSettings settings;
  settings.gamma = 0.0;
  settings.entropy_temperature = 0.0;
  auto y = critic_targets(b, target, actor, settings, rng);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t r = 0; r < 16; ++r) CHECK(y[i][r] == b.rewards(r, i));
  }
}

TEST_CASE("critic targets: soft value of the next state") {
  const auto s = tiny_shape(2);
  Rng rng(7);
  auto target = critic::CriticParams::zeros(s);
  for (double& v : target.output[0].bias.data()) v = 2.0;
  auto actor = ActorParams::init(2, s.obs_dim, 8, s.action_dim, rng);
  Batch b = bandit_batch(s, 4, rng);
  b.done = {0.0, 1.0, 0.0, 0.0};
  UpdateSettings settings;
  settings.gamma = 0.5;
  settings.entropy_temperature = 0.1;
  auto y = critic_targets(b, target, actor, settings, rng);
  NdArray p = policy_probabilities(actor, 0, b.next_obs[0]);
  for (std::size_t r = 0; r < 4; ++r) {
    double soft = 0.0;
    for (std::size_t a = 0; a < 3; ++a) soft += p(r, a) * (2.0 - 0.1 * std::log(p(r, a)));
    const double expected = b.rewards(r, 0) + 0.5 * (1.0 - b.done[r]) * soft;
    CHECK(y[0][r] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("critic loss against zero targets is the mean squared Q") {
  const auto s = tiny_shape(3);
  Rng rng(8);
  auto params = critic::CriticParams::init(s, rng);
  Batch b = bandit_batch(s, 10, rng);
  std::vector<NdArray> zero(3, NdArray({10, 1}));
  critic::JointInput in;
  for (std::size_t i = 0; i < 3; ++i) {
    in.observations.push_back(b.obs[i]);
    in.actions.push_back(one_hot(b.actions[i], 3));
  }
  auto q = critic::evaluate(params, in, critic::AttentionMode::kLearned);
  double expected = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    double m = 0.0;
    for (std::size_t r = 0; r < 10; ++r) m += std::pow(q[i](r, b.actions[i][r]), 2);
    expected += m / 10.0;
  }
  CHECK(critic_loss(b, params, zero, critic::AttentionMode::kLearned) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("critic bandit: Q of the rewarded action converges to 1") {
  const auto s = tiny_shape(2);
  Rng rng(9);
  auto params = critic::CriticParams::init(s, rng);
  auto target = params;
  auto actor = ActorParams::init(2, s.obs_dim, 8, s.action_dim, rng);
  auto opt = nn::AdamState::zeros_like(std::as_const(params).parameters());
  UpdateSettings settings;
  settings.gamma = 0.0;
  settings.entropy_temperature = 0.0;
  settings.adam.lr = 0.01;
  for (int k = 0; k < 500; ++k) {
    Batch b = bandit_batch(s, 64, rng);
    critic_update(b, params, target, actor, opt, settings, rng);
  }
  Batch probe = bandit_batch(s, 8, rng);
  critic::JointInput in;
  for (std::size_t i = 0; i < 2; ++i) {
    in.observations.push_back(probe.obs[i]);
    in.actions.push_back(one_hot(probe.actions[i], 3));
  }
  auto q = critic::evaluate(params, in, critic::AttentionMode::kLearned);
  for (std::size_t r = 0; r < 8; ++r) {
    CHECK(q[0](r, 0) >= 0.9);
    CHECK(q[0](r, 0) <= 1.1);
  }
}

TEST_CASE("td actor: flat Q and no entropy leave the policy unchanged") {
  const auto s = tiny_shape(2);
  Rng rng(10);
  auto actor = ActorParams::init(2, s.obs_dim, 8, s.action_dim, rng);
  Batch b = bandit_batch(s, 6, rng);
  std::vector<NdArray> q(2, NdArray({6, 3}, 0.7));
  Tape tape;
  ActorVars vars = bind(tape, actor, true);
  tape.backward(td_policy_loss(tape, vars, b, q, td_baselines(actor, b, q), 0.0));
  for (const Var& v : vars.leaves()) CHECK(tape.grad(v).max_abs() == 0.0);
}

TEST_CASE("td actor: bandit policy concentrates on the best action") {
  const auto s = tiny_shape(2);
  Rng rng(11);
  auto actor = ActorParams::init(2, s.obs_dim, 8, s.action_dim, rng);
  auto opt = nn::AdamState::zeros_like(std::as_const(actor).parameters());
  Batch b = bandit_batch(s, 32, rng);
  NdArray q0({32, 3});
  for (std::size_t r = 0; r < 32; ++r) q0(r, 0) = 1.0;
  std::vector<NdArray> q = {q0, NdArray({32, 3})};
  for (int k = 0; k < 500; ++k) {
    Tape tape;
    ActorVars vars = bind(tape, actor, true);
    tape.backward(td_policy_loss(tape, vars, b, q, td_baselines(actor, b, q), 0.01));
    std::vector<NdArray> grads;
    for (const Var& v : vars.leaves()) grads.push_back(tape.grad(v));
    nn::adam_step(actor.parameters(), grads, opt, nn::AdamConfig{});
  }
  CHECK(policy_probabilities(actor, 0, b.obs[0])(0, 0) > 0.9);
}

TEST_CASE("td actor update runs against a live critic") {
  const auto s = tiny_shape(2);
  Rng rng(12);
  auto critic = critic::CriticParams::init(s, rng);
  auto actor = ActorParams::init(2, s.obs_dim, 8, s.action_dim, rng);
  auto before = actor;
  auto opt = nn::AdamState::zeros_like(std::as_const(actor).parameters());
  Batch b = bandit_batch(s, 16, rng);
  const double loss = actor_update_td(b, actor, critic, opt, UpdateSettings{}, rng);
  CHECK(std::isfinite(loss));
  CHECK_FALSE(actor == before);
  CHECK(opt.step == 1);
}

TEST_CASE("actor losses: gradients match central differences") {
  const auto s = tiny_shape(3);
  Rng rng(13);
  auto actor = ActorParams::init(3, s.obs_dim, 6, s.action_dim, rng);
  Batch b = bandit_batch(s, 5, rng);
  for (auto& o : b.obs) o = oracle::random_array(o.shape(), rng);
  std::vector<NdArray> q;
  for (int i = 0; i < 3; ++i) q.push_back(oracle::random_array({5, 3}, rng));
  const std::vector<NdArray> base = td_baselines(actor, b, q);

  PpoSegment seg;
  seg.steps = b;
  for (std::size_t i = 0; i < 3; ++i) {
    NdArray p = policy_probabilities(actor, i, b.obs[i]);
    for (double& v : p.data()) v = v * 0.8 + 0.2 / 3.0;  // off-policy so ratios differ
    seg.behavior_probs.push_back(p);
  }
  std::vector<NdArray> adv;
  for (int i = 0; i < 3; ++i) adv.push_back(oracle::random_array({5, 1}, rng));
  UpdateSettings settings;
  settings.ppo_clip = 0.5;

  using LossFn = std::function<Var(Tape&, const ActorVars&)>;
  std::vector<LossFn> losses = {
      [&](Tape& t, const ActorVars& v) { return td_policy_loss(t, v, b, q, base, 0.05); },
      [&](Tape& t, const ActorVars& v) { return ppo_policy_loss(t, v, seg, adv, settings); }};
  for (const LossFn& loss : losses) {
    Tape tape;
    ActorVars vars = bind(tape, actor, true);
    tape.backward(loss(tape, vars));
    auto leaves = vars.leaves();
    auto params = actor.parameters();
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      NdArray fd = oracle::central_difference(params[k].array, [&] {
        Tape t2;
        ActorVars v2 = bind(t2, actor, false);
        return loss(t2, v2).value()[0];
      });
      CHECK(oracle::max_rel_error(tape.grad(leaves[k]), fd) < 1e-6);
    }
  }
}

TEST_CASE("ppo surrogate: ratio 1 gives the mean advantage and the plain gradient") {
  Tape tape;
  NdArray old = NdArray::matrix(3, 1, {std::log(0.2), std::log(0.5), std::log(0.9)});
  NdArray adv = NdArray::matrix(3, 1, {1.0, -2.0, 0.5});
  Var lp = tape.leaf(old);
  Var obj = clipped_surrogate(lp, old, adv, 0.2);
  CHECK(obj.value()[0] == doctest::Approx((1.0 - 2.0 + 0.5) / 3.0));
  tape.backward(obj);
  // d/dlp of mean(exp(lp - old) A) at lp = old is A / B.
  for (std::size_t r = 0; r < 3; ++r) CHECK(tape.grad(lp)[r] == doctest::Approx(adv[r] / 3.0));
}

TEST_CASE("ppo surrogate: positive advantage beyond the clip has no gradient") {
  Tape tape;
  NdArray old = NdArray::matrix(2, 1, {std::log(0.3), std::log(0.3)});
  NdArray now = NdArray::matrix(2, 1, {std::log(0.3 * 1.3), std::log(0.3 * 1.1)});
  NdArray adv = NdArray::matrix(2, 1, {2.0, 2.0});
  Var lp = tape.leaf(now);
  Var obj = clipped_surrogate(lp, old, adv, 0.2);
  CHECK(obj.value()[0] == doctest::Approx((1.2 * 2.0 + 1.1 * 2.0) / 2.0));
  tape.backward(obj);
  CHECK(tape.grad(lp)[0] == 0.0);
  CHECK(tape.grad(lp)[1] == doctest::Approx(1.1 * 2.0 / 2.0));
}

TEST_CASE("ppo: segment without behavior probabilities is rejected") {
  const auto s = tiny_shape(2);
  Rng rng(14);
  auto critic = critic::CriticParams::init(s, rng);
  PpoSegment seg;
  seg.steps = bandit_batch(s, 4, rng);
  CHECK_THROWS_AS(ppo_advantages(seg, critic, critic::AttentionMode::kLearned), ContractError);
}

TEST_CASE("ppo: bandit policy concentrates on the best action") {
  const auto s = tiny_shape(2);
  Rng rng(15);
  auto actor = ActorParams::init(2, s.obs_dim, 8, s.action_dim, rng);
  auto opt = nn::AdamState::zeros_like(std::as_const(actor).parameters());
  UpdateSettings settings;
  const std::vector<double> q = {1.0, 0.0, 0.0};
  for (int seg_no = 0; seg_no < 125; ++seg_no) {
    PpoSegment seg;
    seg.steps = bandit_batch(s, 64, rng);
    std::vector<NdArray> adv;
    for (std::size_t i = 0; i < 2; ++i) {
      NdArray p = policy_probabilities(actor, i, seg.steps.obs[i]);
      NdArray a({64, 1});
      for (std::size_t r = 0; r < 64; ++r) {
        seg.steps.actions[i][r] = rng.categorical(p.data().subspan(r * 3, 3));
        double baseline = 0.0;
        for (std::size_t k = 0; k < 3; ++k) baseline += p(r, k) * q[k];
        a[r] = i == 0 ? q[seg.steps.actions[i][r]] - baseline : 0.0;
      }
      seg.behavior_probs.push_back(p);
      adv.push_back(a);
    }
    for (int epoch = 0; epoch < 4; ++epoch) {
      Tape tape;
      ActorVars vars = bind(tape, actor, true);
      tape.backward(ppo_policy_loss(tape, vars, seg, adv, settings));
      std::vector<NdArray> grads;
      for (const Var& v : vars.leaves()) grads.push_back(tape.grad(v));
      nn::adam_step(actor.parameters(), grads, opt, settings.adam);
    }
  }
  Batch probe = bandit_batch(s, 1, rng);
  CHECK(policy_probabilities(actor, 0, probe.obs[0])(0, 0) > 0.9);
}

TEST_CASE("ppo segment append and actor_update_ppo") {
  const auto s = tiny_shape(4);
  Rng rng(16);
  train::TrainConfig cfg = tiny_config();
  TrainerState st = TrainerState::initial(cfg);
  Collected c = collect(st.actor, env::Scenario::kS2, cfg.env, 1, 1, 30);
  PpoSegment seg;
  for (const Transition& t : c.transitions) {
    std::vector<std::vector<double>> probs;
    for (std::size_t i = 0; i < 4; ++i) probs.push_back(action_probabilities(st.actor, i, t.obs[i]));
    seg.append(t, probs);
  }
  REQUIRE(seg.size() == 30);
  CHECK(seg.steps.obs[3](29, 5) == c.transitions[29].obs[3][5]);
  UpdateSettings settings;
  auto before = st.actor;
  const double loss = actor_update_ppo(seg, st.actor, st.critic, st.actor_opt, settings);
  CHECK(std::isfinite(loss));
  CHECK(st.actor_opt.step == settings.ppo_epochs);
  CHECK_FALSE(st.actor == before);
  (void)s;
}

TEST_CASE("soft target updates") {
  Rng rng(17);
  const auto s = tiny_shape(2);
  auto online = critic::CriticParams::init(s, rng);
  auto start = critic::CriticParams::init(s, rng);

  auto target = start;
  soft_update_targets(target.parameters(), std::as_const(online).parameters(), 0.0);
  CHECK(target == start);
  soft_update_targets(target.parameters(), std::as_const(online).parameters(), 1.0);
  CHECK(target == online);

  target = start;
  const double tau = 0.05;
  double d0 = 0.0;
  {
    auto a = std::as_const(target).parameters();
    auto b = std::as_const(online).parameters();
    for (std::size_t k = 0; k < a.size(); ++k) {
      for (std::size_t i = 0; i < a[k].array->size(); ++i) {
        d0 = std::max(d0, std::abs((*a[k].array)[i] - (*b[k].array)[i]));
      }
    }
  }
  for (int k = 1; k <= 60; ++k) {
    soft_update_targets(target.parameters(), std::as_const(online).parameters(), tau);
    const double decay = std::pow(1.0 - tau, k);
    auto a = std::as_const(target).parameters();
    auto b = std::as_const(online).parameters();
    auto s0 = std::as_const(start).parameters();
    double worst = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) {
      for (std::size_t i = 0; i < a[p].array->size(); ++i) {
        const double closed = (*b[p].array)[i] + decay * ((*s0[p].array)[i] - (*b[p].array)[i]);
        CHECK((*a[p].array)[i] == doctest::Approx(closed).epsilon(1e-10));
        worst = std::max(worst, std::abs((*a[p].array)[i] - (*b[p].array)[i]));
      }
    }
    CHECK(worst <= decay * d0 * (1.0 + 1e-9));
  }

  auto wrong = critic::CriticParams::init(tiny_shape(3), rng);
  CHECK_THROWS_AS(
      soft_update_targets(target.parameters(), std::as_const(wrong).parameters(), 0.5),
      DimensionError);
}

TEST_CASE("config validation lists every violation") {
  TrainConfig c;
  c.gamma = 1.5;
  c.heads = 3;
  auto v = c.violations();
  REQUIRE(v.size() == 2);
  CHECK(v[0].find("gamma") == 0);
  CHECK(v[1].find("heads") == 0);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(TrainConfig{}.violations().empty());
}

TEST_CASE("trainer: zero episodes leaves the initial state") {
  TrainConfig c = tiny_config();
  c.episodes = 0;
  Trainer t(c);
  CHECK(t.run().empty());
  CHECK(t.state() == TrainerState::initial(c));
}

TEST_CASE("trainer: fixed seed runs are bit-identical and resume exactly") {
  for (Variant variant : {Variant::kTd, Variant::kPpo}) {
    TrainConfig c = tiny_config();
    c.variant = variant;
    c.scenario = env::Scenario::kS3;
    c.ppo_segment = 200;
    Trainer a(c);
    auto ra = a.run();
    Trainer b(c);
    auto rb = b.run();
    REQUIRE(ra.size() == 4);
    CHECK(ra == rb);
    CHECK(a.state() == b.state());
    CHECK(a.state().updates > 0);
    CHECK(std::isfinite(ra.back().critic_loss));

    Trainer first(c);
    auto r1 = first.run(20);
    Trainer second(c, first.state());
    auto r2 = second.run();
    r1.insert(r1.end(), r2.begin(), r2.end());
    CHECK(r1 == ra);
    CHECK(second.state() == a.state());
  }
}

TEST_CASE("trainer: metrics CSV header") {
  std::ostringstream out;
  write_metrics_header(out, 4);
  CHECK(out.str() ==
        "episode,mean_reward,critic_loss,actor_loss,entropy_h0,entropy_h1,entropy_h2,"
        "entropy_h3,rescues_task1,rescues_task2\n");
}
