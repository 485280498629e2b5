#include "inneratt/io/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "inneratt/nn/errors.hpp"
#include "json.hpp"

namespace inneratt::io {

namespace {

using json = nlohmann::ordered_json;

struct Field {
  std::function<void(const json&, ExperimentConfig&)> read;
  std::function<json(const ExperimentConfig&)> write;
};

std::size_t read_count(const json& v, const std::string& key) {
  // Non-negative integer literals parse as unsigned.
  if (!v.is_number_unsigned()) throw ConfigError(key + ": expected a non-negative integer");
  return v.get<std::size_t>();
}

double read_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key + ": expected a number");
  return v.get<double>();
}

std::string read_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key + ": expected a string");
  return v.get<std::string>();
}

#define COUNT_FIELD(key, member)                                                         \
  {key,                                                                                  \
   {[](const json& v, ExperimentConfig& c) { c.member = read_count(v, key); },          \
    [](const ExperimentConfig& c) { return json(c.member); }}}
#define NUMBER_FIELD(key, member)                                                        \
  {key,                                                                                  \
   {[](const json& v, ExperimentConfig& c) { c.member = read_number(v, key); },         \
    [](const ExperimentConfig& c) { return json(c.member); }}}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      COUNT_FIELD("episodes", train.episodes),
      COUNT_FIELD("workers", train.workers),
      COUNT_FIELD("batch", train.batch),
      NUMBER_FIELD("lr", train.lr),
      NUMBER_FIELD("gamma", train.gamma),
      NUMBER_FIELD("entropy_temperature", train.entropy_temperature),
      NUMBER_FIELD("tau", train.tau),
      COUNT_FIELD("update_every", train.update_every),
      COUNT_FIELD("warmup", train.warmup),
      COUNT_FIELD("buffer_capacity", train.buffer_capacity),
      {"variant",
       {[](const json& v, ExperimentConfig& c) {
          c.train.variant = train::parse_variant(read_string(v, "variant"));
        },
        [](const ExperimentConfig& c) { return json(train::to_string(c.train.variant)); }}},
      {"critic",
       {[](const json& v, ExperimentConfig& c) {
          c.train.critic = train::parse_critic(read_string(v, "critic"));
        },
        [](const ExperimentConfig& c) { return json(train::to_string(c.train.critic)); }}},
      {"scenario",
       {[](const json& v, ExperimentConfig& c) {
          try {
            c.train.scenario = env::parse_scenario(read_string(v, "scenario"));
          } catch (const ConfigError&) {
            throw;
          } catch (const std::exception&) {
            throw ConfigError("scenario: expected s1, s2 or s3");
          }
        },
        [](const ExperimentConfig& c) { return json(env::to_string(c.train.scenario)); }}},
      {"seed",
       {[](const json& v, ExperimentConfig& c) {
          c.train.seed = read_count(v, "seed");
        },
        [](const ExperimentConfig& c) { return json(c.train.seed); }}},
      COUNT_FIELD("embed_dim", train.embed_dim),
      COUNT_FIELD("heads", train.heads),
      COUNT_FIELD("actor_hidden", train.actor_hidden),
      NUMBER_FIELD("ppo_clip", train.ppo_clip),
      COUNT_FIELD("ppo_epochs", train.ppo_epochs),
      COUNT_FIELD("ppo_segment", train.ppo_segment),
      COUNT_FIELD("metrics_interval", train.metrics_interval),
      {"checkpoint_replay",
       {[](const json& v, ExperimentConfig& c) {
          if (!v.is_boolean()) throw ConfigError("checkpoint_replay: expected true or false");
          c.train.checkpoint_replay = v.get<bool>();
        },
        [](const ExperimentConfig& c) { return json(c.train.checkpoint_replay); }}},
      NUMBER_FIELD("capture_radius", train.env.capture_radius),
      NUMBER_FIELD("rescue_reward", train.env.rescue_reward),
      NUMBER_FIELD("shaping_weight", train.env.shaping_weight),
      NUMBER_FIELD("time_penalty", train.env.time_penalty),
      COUNT_FIELD("episode_length", train.env.episode_length),
      NUMBER_FIELD("dt", train.env.dt),
      NUMBER_FIELD("damping", train.env.damping),
      NUMBER_FIELD("force", train.env.force),
      COUNT_FIELD("eval_episodes", eval_episodes),
      {"output_dir",
       {[](const json& v, ExperimentConfig& c) { c.output_dir = read_string(v, "output_dir"); },
        [](const ExperimentConfig& c) { return json(c.output_dir); }}},
      COUNT_FIELD("checkpoint_every", checkpoint_every),
  };
  return table;
}

#undef COUNT_FIELD
#undef NUMBER_FIELD

// TrainConfig messages start with the key; env constants are reported
// under their flat names.
std::string flat_key_message(const std::string& message) {
  const std::string prefix = "env.";
  return message.rfind(prefix, 0) == 0 ? message.substr(prefix.size()) : message;
}

void validate(const ExperimentConfig& c) {
  std::vector<std::string> v;
  for (const std::string& m : c.train.violations()) v.push_back(flat_key_message(m));
  if (c.eval_episodes < 1) v.push_back("eval_episodes: must be >= 1");
  if (c.output_dir.empty()) v.push_back("output_dir: must not be empty");
  if (c.checkpoint_every % std::max<std::size_t>(c.train.metrics_interval, 1) != 0) {
    v.push_back("checkpoint_every: must be a multiple of metrics_interval");
  }
  if (v.empty()) return;
  std::string msg;
  for (std::size_t k = 0; k < v.size(); ++k) msg += (k ? "; " : "") + v[k];
  throw ConfigError(msg);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) out.push_back(k);
    return out;
  }();
  return keys;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("top level must be a JSON object");
  std::map<std::string, const Field*> by_key;
  for (const auto& [k, f] : fields()) by_key[k] = &f;
  ExperimentConfig config;
  for (const auto& [key, value] : doc.items()) {
    auto it = by_key.find(key);
    if (it == by_key.end()) throw ConfigError(key + ": unknown key");
    it->second->read(value, config);
  }
  validate(config);
  return config;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

std::string dump_config(const ExperimentConfig& config) {
  json doc = json::object();
  for (const auto& [k, f] : fields()) doc[k] = f.write(config);
  return doc.dump(2) + "\n";
}

void apply_environment(ExperimentConfig& config) {
  const char* raw = std::getenv("INNERATT_THREADS");
  if (raw == nullptr || *raw == '\0') return;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(raw, &end, 10);
  if (*end != '\0' || n == 0 || raw[0] == '-') {
    throw ConfigError(std::string("INNERATT_THREADS: expected a positive integer, got '") + raw +
                      "'");
  }
  config.train.workers = static_cast<std::size_t>(n);
}

}  // namespace inneratt::io
