#include "inneratt/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "inneratt/nn/errors.hpp"
#include "inneratt/train/rollout.hpp"

namespace inneratt::train {

std::string to_string(Variant v) { return v == Variant::kTd ? "td" : "ppo"; }

Variant parse_variant(const std::string& text) {
  if (text == "td" || text == "TD") return Variant::kTd;
  if (text == "ppo" || text == "PPO") return Variant::kPpo;
  throw ConfigError("unknown variant '" + text + "' (expected td or ppo)");
}

std::string to_string(critic::AttentionMode mode) {
  return mode == critic::AttentionMode::kLearned ? "inneratt" : "baseline";
}

critic::AttentionMode parse_critic(const std::string& text) {
  if (text == "inneratt" || text == "innerATT") return critic::AttentionMode::kLearned;
  if (text == "baseline") return critic::AttentionMode::kUniform;
  throw ConfigError("unknown critic '" + text + "' (expected inneratt or baseline)");
}

std::vector<std::string> TrainConfig::violations() const {
  std::vector<std::string> v;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  need(workers >= 1, "workers: must be >= 1");
  need(batch >= 1, "batch: must be >= 1");
  need(lr > 0.0 && std::isfinite(lr), "lr: must be positive");
  need(gamma >= 0.0 && gamma <= 1.0, "gamma: must lie in [0, 1]");
  need(entropy_temperature >= 0.0 && std::isfinite(entropy_temperature),
       "entropy_temperature: must be >= 0");
  need(tau >= 0.0 && tau <= 1.0, "tau: must lie in [0, 1]");
  need(update_every >= 1, "update_every: must be >= 1");
  need(buffer_capacity >= batch, "buffer_capacity: must be >= batch");
  need(warmup <= buffer_capacity, "warmup: must be <= buffer_capacity");
  need(embed_dim >= 1, "embed_dim: must be >= 1");
  need(heads >= 1 && embed_dim % std::max<std::size_t>(heads, 1) == 0,
       "heads: must be >= 1 and divide embed_dim");
  need(actor_hidden >= 1, "actor_hidden: must be >= 1");
  need(ppo_clip > 0.0 && ppo_clip < 1.0, "ppo_clip: must lie in (0, 1)");
  need(ppo_epochs >= 1, "ppo_epochs: must be >= 1");
  need(ppo_segment >= 1, "ppo_segment: must be >= 1");
  need(metrics_interval >= 1, "metrics_interval: must be >= 1");
  need(env.capture_radius > 0.0, "env.capture_radius: must be positive");
  need(env.rescue_reward >= 0.0, "env.rescue_reward: must be >= 0");
  need(env.shaping_weight >= 0.0, "env.shaping_weight: must be >= 0");
  need(env.time_penalty >= 0.0, "env.time_penalty: must be >= 0");
  need(env.episode_length >= 1, "env.episode_length: must be >= 1");
  need(env.dt > 0.0, "env.dt: must be positive");
  need(env.damping >= 0.0 && env.damping < 1.0, "env.damping: must lie in [0, 1)");
  need(env.force > 0.0, "env.force: must be positive");
  return v;
}

void TrainConfig::validate() const {
  std::vector<std::string> v = violations();
  if (v.empty()) return;
  std::string msg;
  for (std::size_t k = 0; k < v.size(); ++k) msg += (k ? "; " : "") + v[k];
  throw ConfigError(msg);
}

critic::CriticShape TrainConfig::critic_shape() const {
  critic::CriticShape s;
  s.robots = env::kRobotCount;
  s.obs_dim = env::kObservationSize;
  s.action_dim = env::kActionCount;
  s.embed_dim = embed_dim;
  s.heads = heads;
  return s;
}

UpdateSettings TrainConfig::update_settings() const {
  UpdateSettings s;
  s.gamma = gamma;
  s.entropy_temperature = entropy_temperature;
  s.ppo_clip = ppo_clip;
  s.ppo_epochs = ppo_epochs;
  s.attention = critic;
  s.adam.lr = lr;
  return s;
}

namespace {

bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

bool MetricsRecord::operator==(const MetricsRecord& o) const {
  if (episode != o.episode || rescues != o.rescues || entropy.size() != o.entropy.size()) {
    return false;
  }
  for (std::size_t h = 0; h < entropy.size(); ++h) {
    if (!same_double(entropy[h], o.entropy[h])) return false;
  }
  return same_double(mean_reward, o.mean_reward) && same_double(critic_loss, o.critic_loss) &&
         same_double(actor_loss, o.actor_loss);
}

MetricsRecord MetricsAccumulator::finish(std::size_t episode, std::size_t heads) const {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  MetricsRecord r;
  r.episode = episode;
  r.mean_reward = episodes ? reward / static_cast<double>(episodes) : nan;
  r.critic_loss = critic_updates ? critic_loss / static_cast<double>(critic_updates) : nan;
  r.actor_loss = actor_updates ? actor_loss / static_cast<double>(actor_updates) : nan;
  r.entropy.assign(heads, nan);
  if (critic_updates) {
    for (std::size_t h = 0; h < heads && h < entropy.size(); ++h) {
      r.entropy[h] = entropy[h] / static_cast<double>(critic_updates);
    }
  }
  r.rescues = rescues;
  return r;
}

TrainerState TrainerState::initial(const TrainConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.seed, kInitStream));
  TrainerState s;
  s.actor = ActorParams::init(env::kRobotCount, env::kObservationSize, config.actor_hidden,
                              env::kActionCount, rng);
  s.critic = critic::CriticParams::init(config.critic_shape(), rng);
  s.target = s.critic;
  s.actor_opt = nn::AdamState::zeros_like(std::as_const(s.actor).parameters());
  s.critic_opt = nn::AdamState::zeros_like(std::as_const(s.critic).parameters());
  s.buffer = ReplayBuffer(config.buffer_capacity);
  s.metrics.entropy.assign(config.heads, 0.0);
  return s;
}

void write_metrics_header(std::ostream& out, std::size_t heads) {
  out << "episode,mean_reward,critic_loss,actor_loss";
  for (std::size_t h = 0; h < heads; ++h) out << ",entropy_h" << h;
  out << ",rescues_task1,rescues_task2\n";
}

void write_metrics_row(std::ostream& out, const MetricsRecord& r) {
  std::ostringstream line;
  line.precision(17);
  line << r.episode << ',' << r.mean_reward << ',' << r.critic_loss << ',' << r.actor_loss;
  for (double e : r.entropy) line << ',' << e;
  line << ',' << r.rescues[0] << ',' << r.rescues[1] << '\n';
  out << line.str();
}

Trainer::Trainer(TrainConfig config) : config_(std::move(config)) {
  state_ = TrainerState::initial(config_);
}

Trainer::Trainer(TrainConfig config, TrainerState state)
    : config_(std::move(config)), state_(std::move(state)) {
  config_.validate();
  if (state_.metrics.entropy.size() != config_.heads) {
    state_.metrics.entropy.assign(config_.heads, 0.0);
  }
}

void Trainer::update_step() {
  const UpdateSettings settings = config_.update_settings();
  Rng rng(derive_seed(config_.seed, kUpdateStream, state_.updates));
  Batch batch = make_batch(state_.buffer, state_.buffer.sample_indices(config_.batch, rng));
  CriticUpdateStats stats = critic_update(batch, state_.critic, state_.target, state_.actor,
                                          state_.critic_opt, settings, rng);
  MetricsAccumulator& m = state_.metrics;
  ++m.critic_updates;
  m.critic_loss += stats.loss;
  for (std::size_t h = 0; h < stats.head_entropy.size() && h < m.entropy.size(); ++h) {
    m.entropy[h] += stats.head_entropy[h];
  }
  if (config_.variant == Variant::kTd) {
    m.actor_loss += actor_update_td(batch, state_.actor, state_.critic, state_.actor_opt,
                                    settings, rng);
    ++m.actor_updates;
  }
  soft_update_targets(state_.target.parameters(), std::as_const(state_.critic).parameters(),
                      config_.tau);
  ++state_.updates;
}

std::vector<MetricsRecord> Trainer::run(std::size_t until, const RecordFn& on_record) {
  until = std::min(until, config_.episodes);
  std::vector<MetricsRecord> records;
  const std::size_t heads = config_.heads;
  const std::size_t warm = std::max(config_.warmup, config_.batch);

  auto next_multiple = [](std::size_t x, std::size_t m) { return (x / m + 1) * m; };

  while (state_.episodes_done < until) {
    const std::size_t first = state_.episodes_done;
    const std::size_t end = std::min({until, next_multiple(first, config_.workers),
                                      next_multiple(first, config_.metrics_interval)});
    std::vector<EpisodeResult> round =
        run_episodes(state_.actor, config_.scenario, config_.env, config_.seed, first,
                     end - first, config_.workers, ActionRule::kSample);

    for (EpisodeResult& ep : round) {
      for (std::size_t s = 0; s < ep.transitions.size(); ++s) {
        state_.buffer.push(ep.transitions[s]);
        if (config_.variant == Variant::kPpo) state_.segment.append(ep.transitions[s], ep.probs[s]);
      }
      for (const env::RescueEvent& e : ep.events) {
        ++state_.metrics.rescues[static_cast<std::size_t>(e.type)];
      }
      state_.metrics.reward += ep.reward;
      ++state_.metrics.episodes;
      state_.env_steps += ep.steps;
      state_.steps_since_update += ep.steps;
    }
    state_.episodes_done = end;

    if (state_.buffer.size() < warm) {
      state_.steps_since_update = 0;
    } else {
      while (state_.steps_since_update >= config_.update_every) {
        update_step();
        state_.steps_since_update -= config_.update_every;
      }
      if (config_.variant == Variant::kPpo && state_.segment.size() >= config_.ppo_segment) {
        state_.metrics.actor_loss += actor_update_ppo(state_.segment, state_.actor, state_.critic,
                                                      state_.actor_opt,
                                                      config_.update_settings());
        ++state_.metrics.actor_updates;
        state_.segment.clear();
      }
    }

    const bool boundary = end % config_.metrics_interval == 0 || end == config_.episodes;
    if (boundary && state_.metrics.episodes > 0) {
      MetricsRecord r = state_.metrics.finish(end, heads);
      state_.metrics = MetricsAccumulator{};
      state_.metrics.entropy.assign(heads, 0.0);
      records.push_back(r);
      if (on_record) on_record(r, state_);
    }
  }
  return records;
}

}  // namespace inneratt::train
