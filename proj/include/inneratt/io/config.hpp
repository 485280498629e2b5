#ifndef INNERATT_IO_CONFIG_HPP_
#define INNERATT_IO_CONFIG_HPP_

#include <string>
#include <vector>

#include "inneratt/train/trainer.hpp"

namespace inneratt::io {

// Training settings plus run plumbing. Serialized as one flat JSON object;
// environment constants use their EnvConfig names.
struct ExperimentConfig {
  train::TrainConfig train;
  std::size_t eval_episodes = 80;
  std::string output_dir = "runs";
  std::size_t checkpoint_every = 1000;  // episodes; 0 writes only the final one

  bool operator==(const ExperimentConfig&) const = default;
};

// Every accepted key, in dump order.
const std::vector<std::string>& config_keys();

// Parses and validates a JSON document. Unknown keys, wrong types and range
// violations raise ConfigError naming the key.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

// Resolved config with every key present; parses back to the same value.
std::string dump_config(const ExperimentConfig& config);

// INNERATT_THREADS, when set, replaces the worker count.
void apply_environment(ExperimentConfig& config);

}  // namespace inneratt::io

#endif  // INNERATT_IO_CONFIG_HPP_
