#ifndef INNERATT_TRAIN_TRAINER_HPP_
#define INNERATT_TRAIN_TRAINER_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "inneratt/critic/critic.hpp"
#include "inneratt/env/rescue_env.hpp"
#include "inneratt/nn/adam.hpp"
#include "inneratt/train/actor.hpp"
#include "inneratt/train/replay_buffer.hpp"
#include "inneratt/train/updates.hpp"

namespace inneratt::train {

enum class Variant { kTd, kPpo };

std::string to_string(Variant v);
Variant parse_variant(const std::string& text);
std::string to_string(critic::AttentionMode mode);
critic::AttentionMode parse_critic(const std::string& text);

struct TrainConfig {
  std::size_t episodes = 25000;
  std::size_t workers = 12;
  std::size_t batch = 1024;
  double lr = 0.001;
  double gamma = 0.99;
  double entropy_temperature = 0.01;
  double tau = 0.005;
  std::size_t update_every = 100;  // environment steps per update
  std::size_t warmup = 1000;       // buffer entries before the first update
  std::size_t buffer_capacity = 100000;
  Variant variant = Variant::kTd;
  critic::AttentionMode critic = critic::AttentionMode::kLearned;
  env::Scenario scenario = env::Scenario::kS1;
  std::uint64_t seed = 1;
  std::size_t embed_dim = 128;
  std::size_t heads = 4;
  std::size_t actor_hidden = 128;
  double ppo_clip = 0.2;
  std::size_t ppo_epochs = 4;
  std::size_t ppo_segment = 1024;
  std::size_t metrics_interval = 100;  // episodes per metrics row
  bool checkpoint_replay = true;
  env::EnvConfig env;

  // Every violated constraint, empty when valid.
  std::vector<std::string> violations() const;
  // Throws ConfigError listing violations().
  void validate() const;
  critic::CriticShape critic_shape() const;
  UpdateSettings update_settings() const;
  bool operator==(const TrainConfig&) const = default;
};

struct MetricsRecord {
  std::size_t episode = 0;
  double mean_reward = 0.0;
  double critic_loss = 0.0;  // NaN when no update ran in the interval
  double actor_loss = 0.0;
  std::vector<double> entropy;  // per head
  std::array<std::size_t, env::kTaskSlots> rescues{};
  bool operator==(const MetricsRecord& o) const;
};

// Running sums for the current metrics interval.
struct MetricsAccumulator {
  std::size_t episodes = 0;
  double reward = 0.0;
  std::size_t critic_updates = 0;
  double critic_loss = 0.0;
  std::size_t actor_updates = 0;
  double actor_loss = 0.0;
  std::vector<double> entropy;
  std::array<std::size_t, env::kTaskSlots> rescues{};

  MetricsRecord finish(std::size_t episode, std::size_t heads) const;
  bool operator==(const MetricsAccumulator&) const = default;
};

struct TrainerState {
  ActorParams actor;
  critic::CriticParams critic;
  critic::CriticParams target;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;
  ReplayBuffer buffer{1};
  PpoSegment segment;
  std::size_t episodes_done = 0;
  std::size_t env_steps = 0;
  std::size_t steps_since_update = 0;
  std::size_t updates = 0;
  MetricsAccumulator metrics;

  static TrainerState initial(const TrainConfig& config);
  bool operator==(const TrainerState&) const = default;
};

void write_metrics_header(std::ostream& out, std::size_t heads);
void write_metrics_row(std::ostream& out, const MetricsRecord& r);

class Trainer {
 public:
  explicit Trainer(TrainConfig config);
  Trainer(TrainConfig config, TrainerState state);

  using RecordFn = std::function<void(const MetricsRecord&, const TrainerState&)>;

  // Trains until `until` episodes are complete (clamped to config.episodes).
  // Episodes run in rounds of up to `workers`, never crossing a multiple of
  // the worker count or the metrics interval, so stopping and resuming on a
  // metrics boundary reproduces an uninterrupted run.
  std::vector<MetricsRecord> run(std::size_t until, const RecordFn& on_record = {});
  std::vector<MetricsRecord> run(const RecordFn& on_record = {}) {
    return run(config_.episodes, on_record);
  }

  const TrainConfig& config() const { return config_; }
  const TrainerState& state() const { return state_; }
  TrainerState& mutable_state() { return state_; }

 private:
  void update_step();
  TrainConfig config_;
  TrainerState state_;
};

}  // namespace inneratt::train

#endif  // INNERATT_TRAIN_TRAINER_HPP_
