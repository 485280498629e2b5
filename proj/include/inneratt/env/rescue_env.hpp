#ifndef INNERATT_ENV_RESCUE_ENV_HPP_
#define INNERATT_ENV_RESCUE_ENV_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "inneratt/nn/random.hpp"

namespace inneratt::env {

enum class Capability { kFood = 0, kInformation = 1, kMedicine = 2 };
enum class RobotKind { kFoodDelivery, kNavigation, kMedicalAssistance };
enum class TaskType { kTask1 = 0, kTask2 = 1 };
enum class Scenario { kS1, kS2, kS3 };

inline constexpr std::size_t kRobotCount = 4;
inline constexpr std::size_t kTaskSlots = 2;
inline constexpr std::size_t kActionCount = 5;
inline constexpr std::size_t kCapabilityCount = 3;
inline constexpr std::size_t kObservationSize =
    2 + 2 + kCapabilityCount + (kRobotCount - 1) * (2 + kCapabilityCount) + kTaskSlots * 5;
static_assert(kObservationSize == 32);

// Robot indices in the team.
inline constexpr std::size_t kFood1 = 0;
inline constexpr std::size_t kFood2 = 1;
inline constexpr std::size_t kNavigator = 2;
inline constexpr std::size_t kMedic = 3;

struct RobotSpec {
  RobotKind kind;
  double max_speed;  // m/s
  double mass;       // kg
  Capability capability;

  static RobotSpec of(RobotKind kind);
};

// Food, Food, Navigation, Medical assistance.
const std::array<RobotSpec, kRobotCount>& team();

// Task1 needs {Food, Medicine}; Task2 needs {Food, Information}.
std::array<Capability, 2> required_capabilities(TaskType type);

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

double distance(Vec2 a, Vec2 b);

struct TaskInstance {
  TaskType type = TaskType::kTask1;
  Vec2 position;
  bool active = false;
  bool operator==(const TaskInstance&) const = default;
};

struct RobotState {
  Vec2 position;
  Vec2 velocity;
  bool operator==(const RobotState&) const = default;
};

// Task slot k always holds the task of type k.
struct WorldState {
  std::array<RobotState, kRobotCount> robots;
  std::array<TaskInstance, kTaskSlots> tasks;
  std::size_t step = 0;
  Scenario scenario = Scenario::kS1;

  std::size_t active_tasks() const;
  bool operator==(const WorldState&) const = default;
};

struct EnvConfig {
  double capture_radius = 0.15;
  double rescue_reward = 10.0;
  double shaping_weight = 0.1;
  double time_penalty = 0.01;
  std::size_t episode_length = 25;
  double dt = 0.1;
  double damping = 0.25;
  double force = 5.0;
  bool operator==(const EnvConfig&) const = default;
};

struct RescueEvent {
  TaskType type = TaskType::kTask1;
  std::vector<std::size_t> contributors;  // ascending robot indices
  std::size_t episode = 0;
  std::size_t step = 0;
  bool operator==(const RescueEvent&) const = default;
};

using Observation = std::array<double, kObservationSize>;

// Discrete actions: none, +x, -x, +y, -y.
enum class Action : std::size_t { kNone = 0, kRight, kLeft, kUp, kDown };

WorldState reset(Scenario scenario, Rng& rng);

// Tasks whose capability requirements are covered within the capture radius,
// with the nearest robot per capability (lowest index on exact ties).
std::vector<RescueEvent> capture_check(const WorldState& state, const EnvConfig& config);

Observation observe(const WorldState& state, std::size_t robot);

struct StepResult {
  std::array<double, kRobotCount> rewards{};
  std::vector<RescueEvent> events;
  bool terminal = false;   // no further reward reachable (S1 after rescue)
  bool done = false;       // episode over (terminal or time limit)
};

// Advances the world one tick. Rescued tasks respawn in S2/S3 and end the
// episode in S1.
StepResult step(WorldState& state, std::span<const std::size_t> joint_action,
                const EnvConfig& config, Rng& rng);

// Owns a world plus its random stream.
class RescueEnv {
 public:
  RescueEnv(EnvConfig config, Scenario scenario, std::uint64_t seed);

  const WorldState& reset();
  StepResult step(std::span<const std::size_t> joint_action);
  Observation observe(std::size_t robot) const;
  std::vector<Observation> observe_all() const;

  const WorldState& state() const { return state_; }
  // Replaces the world, e.g. for scripted evaluations.
  void set_state(const WorldState& state) { state_ = state; }
  const EnvConfig& config() const { return config_; }
  Scenario scenario() const { return scenario_; }

 private:
  EnvConfig config_;
  Scenario scenario_;
  Rng rng_;
  WorldState state_;
};

std::string to_string(Scenario scenario);
Scenario parse_scenario(const std::string& text);
std::string to_string(TaskType type);

// One CSV row per step: episode, step, per-robot x, y, vx, vy, action,
// reward, then task1/task2 rescue flags.
class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out);
  void write(std::size_t episode, const WorldState& after,
             std::span<const std::size_t> joint_action, const StepResult& result);

 private:
  std::ostream& out_;
};

}  // namespace inneratt::env

#endif  // INNERATT_ENV_RESCUE_ENV_HPP_
