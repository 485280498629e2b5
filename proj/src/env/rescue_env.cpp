#include "inneratt/env/rescue_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "inneratt/nn/errors.hpp"

namespace inneratt::env {

RobotSpec RobotSpec::of(RobotKind kind) {
  switch (kind) {
    case RobotKind::kFoodDelivery:
      return {kind, 1.0, 1.0, Capability::kFood};
    case RobotKind::kNavigation:
      return {kind, 1.5, 0.5, Capability::kInformation};
    case RobotKind::kMedicalAssistance:
      return {kind, 1.5, 0.5, Capability::kMedicine};
  }
  throw ContractError("unknown robot kind");
}

const std::array<RobotSpec, kRobotCount>& team() {
  static const std::array<RobotSpec, kRobotCount> kTeam = {
      RobotSpec::of(RobotKind::kFoodDelivery), RobotSpec::of(RobotKind::kFoodDelivery),
      RobotSpec::of(RobotKind::kNavigation), RobotSpec::of(RobotKind::kMedicalAssistance)};
  return kTeam;
}

std::array<Capability, 2> required_capabilities(TaskType type) {
  if (type == TaskType::kTask1) return {Capability::kFood, Capability::kMedicine};
  return {Capability::kFood, Capability::kInformation};
}

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::size_t WorldState::active_tasks() const {
  return static_cast<std::size_t>(
      std::count_if(tasks.begin(), tasks.end(), [](const TaskInstance& t) { return t.active; }));
}

namespace {

Vec2 random_point(Rng& rng) { return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)}; }

void spawn(WorldState& state, TaskType type, Rng& rng) {
  TaskInstance& slot = state.tasks[static_cast<std::size_t>(type)];
  slot.type = type;
  slot.position = random_point(rng);
  slot.active = true;
}

// Nearest holder of a capability; ties go to the lower index.
std::size_t nearest_holder(const WorldState& state, Capability cap, Vec2 target,
                           double* dist) {
  std::size_t best = kRobotCount;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < kRobotCount; ++r) {
    if (team()[r].capability != cap) continue;
    const double d = distance(state.robots[r].position, target);
    if (d < best_d) {
      best = r;
      best_d = d;
    }
  }
  *dist = best_d;
  return best;
}

Vec2 action_direction(std::size_t action) {
  switch (static_cast<Action>(action)) {
    case Action::kNone:
      return {0.0, 0.0};
    case Action::kRight:
      return {1.0, 0.0};
    case Action::kLeft:
      return {-1.0, 0.0};
    case Action::kUp:
      return {0.0, 1.0};
    case Action::kDown:
      return {0.0, -1.0};
  }
  throw ContractError("invalid action " + std::to_string(action));
}

void clamp_speed(Vec2& v, double max_speed) {
  double speed = std::hypot(v.x, v.y);
  if (speed <= max_speed) return;
  double factor = max_speed / speed;
  do {
    v.x *= factor;
    v.y *= factor;
    speed = std::hypot(v.x, v.y);
    factor = std::nextafter(1.0, 0.0);
  } while (speed > max_speed);
}

}  // namespace

WorldState reset(Scenario scenario, Rng& rng) {
  WorldState state;
  state.scenario = scenario;
  for (RobotState& r : state.robots) {
    r.position = random_point(rng);
    r.velocity = {};
  }
  for (std::size_t k = 0; k < kTaskSlots; ++k) {
    state.tasks[k].type = static_cast<TaskType>(k);
  }
  switch (scenario) {
    case Scenario::kS1:
      spawn(state, rng.below(2) == 0 ? TaskType::kTask1 : TaskType::kTask2, rng);
      break;
    case Scenario::kS2:
      spawn(state, TaskType::kTask1, rng);
      spawn(state, TaskType::kTask2, rng);
      break;
    case Scenario::kS3:
      switch (rng.below(3)) {
        case 0:
          spawn(state, TaskType::kTask1, rng);
          break;
        case 1:
          spawn(state, TaskType::kTask2, rng);
          break;
        default:
          spawn(state, TaskType::kTask1, rng);
          spawn(state, TaskType::kTask2, rng);
          break;
      }
      break;
  }
  return state;
}

std::vector<RescueEvent> capture_check(const WorldState& state, const EnvConfig& config) {
  std::vector<RescueEvent> events;
  for (const TaskInstance& task : state.tasks) {
    if (!task.active) continue;
    RescueEvent event;
    event.type = task.type;
    event.step = state.step;
    bool covered = true;
    for (Capability cap : required_capabilities(task.type)) {
      double d = 0.0;
      const std::size_t who = nearest_holder(state, cap, task.position, &d);
      if (who == kRobotCount || d > config.capture_radius) {
        covered = false;
        break;
      }
      event.contributors.push_back(who);
    }
    if (!covered) continue;
    std::sort(event.contributors.begin(), event.contributors.end());
    events.push_back(std::move(event));
  }
  return events;
}

Observation observe(const WorldState& state, std::size_t robot) {
  if (robot >= kRobotCount) {
    throw ContractError("observe: robot " + std::to_string(robot) + " out of range");
  }
  Observation o{};
  std::size_t k = 0;
  const RobotState& self = state.robots[robot];
  auto put_capability = [&](Capability cap) {
    for (std::size_t c = 0; c < kCapabilityCount; ++c) {
      o[k++] = static_cast<std::size_t>(cap) == c ? 1.0 : 0.0;
    }
  };
  o[k++] = self.velocity.x;
  o[k++] = self.velocity.y;
  o[k++] = self.position.x;
  o[k++] = self.position.y;
  put_capability(team()[robot].capability);
  for (std::size_t j = 0; j < kRobotCount; ++j) {
    if (j == robot) continue;
    o[k++] = state.robots[j].position.x - self.position.x;
    o[k++] = state.robots[j].position.y - self.position.y;
    put_capability(team()[j].capability);
  }
  for (const TaskInstance& task : state.tasks) {
    if (task.active) {
      o[k++] = 1.0;
      o[k++] = task.position.x - self.position.x;
      o[k++] = task.position.y - self.position.y;
      o[k++] = task.type == TaskType::kTask1 ? 1.0 : 0.0;
      o[k++] = task.type == TaskType::kTask2 ? 1.0 : 0.0;
    } else {
      k += 5;
    }
  }
  return o;
}

StepResult step(WorldState& state, std::span<const std::size_t> joint_action,
                const EnvConfig& config, Rng& rng) {
  if (joint_action.size() != kRobotCount) {
    throw ContractError("step needs " + std::to_string(kRobotCount) + " actions, got " +
                        std::to_string(joint_action.size()));
  }
  for (std::size_t a : joint_action) {
    if (a >= kActionCount) throw ContractError("invalid action index " + std::to_string(a));
  }

  for (std::size_t r = 0; r < kRobotCount; ++r) {
    const RobotSpec& spec = team()[r];
    RobotState& robot = state.robots[r];
    const Vec2 u = action_direction(joint_action[r]);
    const double accel = config.force / spec.mass;
    robot.velocity.x = (1.0 - config.damping) * robot.velocity.x + accel * u.x * config.dt;
    robot.velocity.y = (1.0 - config.damping) * robot.velocity.y + accel * u.y * config.dt;
    clamp_speed(robot.velocity, spec.max_speed);
    robot.position.x = std::clamp(robot.position.x + robot.velocity.x * config.dt, -1.0, 1.0);
    robot.position.y = std::clamp(robot.position.y + robot.velocity.y * config.dt, -1.0, 1.0);
  }

  StepResult result;
  result.events = capture_check(state, config);

  // Shared shaping: distance still to cover for each requirement.
  double shortfall = 0.0;
  for (const TaskInstance& task : state.tasks) {
    if (!task.active) continue;
    for (Capability cap : required_capabilities(task.type)) {
      double d = 0.0;
      nearest_holder(state, cap, task.position, &d);
      shortfall += std::max(0.0, d - config.capture_radius);
    }
  }
  result.rewards.fill(-config.shaping_weight * shortfall - config.time_penalty);
  for (const RescueEvent& event : result.events) {
    for (std::size_t who : event.contributors) result.rewards[who] += config.rescue_reward;
    TaskInstance& task = state.tasks[static_cast<std::size_t>(event.type)];
    if (state.scenario == Scenario::kS1) {
      task.active = false;
    } else {
      spawn(state, event.type, rng);
    }
  }

  state.step += 1;
  result.terminal = state.scenario == Scenario::kS1 && state.active_tasks() == 0;
  result.done = result.terminal || state.step >= config.episode_length;
  return result;
}

RescueEnv::RescueEnv(EnvConfig config, Scenario scenario, std::uint64_t seed)
    : config_(config), scenario_(scenario), rng_(seed) {
  state_ = env::reset(scenario_, rng_);
}

const WorldState& RescueEnv::reset() {
  state_ = env::reset(scenario_, rng_);
  return state_;
}

StepResult RescueEnv::step(std::span<const std::size_t> joint_action) {
  return env::step(state_, joint_action, config_, rng_);
}

Observation RescueEnv::observe(std::size_t robot) const { return env::observe(state_, robot); }

std::vector<Observation> RescueEnv::observe_all() const {
  std::vector<Observation> out;
  for (std::size_t r = 0; r < kRobotCount; ++r) out.push_back(observe(r));
  return out;
}

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::kS1:
      return "s1";
    case Scenario::kS2:
      return "s2";
    case Scenario::kS3:
      return "s3";
  }
  return "?";
}

Scenario parse_scenario(const std::string& text) {
  if (text == "s1" || text == "S1") return Scenario::kS1;
  if (text == "s2" || text == "S2") return Scenario::kS2;
  if (text == "s3" || text == "S3") return Scenario::kS3;
  throw ContractError("unknown scenario '" + text + "' (expected s1, s2 or s3)");
}

std::string to_string(TaskType type) { return type == TaskType::kTask1 ? "task1" : "task2"; }

TrajectoryWriter::TrajectoryWriter(std::ostream& out) : out_(out) {
  out_ << "episode,step";
  for (std::size_t r = 0; r < kRobotCount; ++r) {
    out_ << ",x" << r << ",y" << r << ",vx" << r << ",vy" << r << ",action" << r << ",reward"
         << r;
  }
  out_ << ",rescued_task1,rescued_task2\n";
}

void TrajectoryWriter::write(std::size_t episode, const WorldState& after,
                             std::span<const std::size_t> joint_action,
                             const StepResult& result) {
  out_ << episode << ',' << after.step;
  for (std::size_t r = 0; r < kRobotCount; ++r) {
    const RobotState& s = after.robots[r];
    out_ << ',' << s.position.x << ',' << s.position.y << ',' << s.velocity.x << ','
         << s.velocity.y << ',' << joint_action[r] << ',' << result.rewards[r];
  }
  int flags[2] = {0, 0};
  for (const RescueEvent& e : result.events) flags[static_cast<std::size_t>(e.type)] = 1;
  out_ << ',' << flags[0] << ',' << flags[1] << '\n';
}

}  // namespace inneratt::env
