#include "inneratt/analysis/trace.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "inneratt/nn/errors.hpp"

namespace inneratt::analysis {

std::size_t TraceRow::argmax_total(std::size_t robot) const {
  std::size_t best = robot == 0 ? 1 : 0;
  for (std::size_t j = 0; j < total.size(); ++j) {
    if (j != robot && total[j] > total[best]) best = j;
  }
  return best;
}

AttentionTrace attention_trace(const critic::CriticParams& params, critic::AttentionMode mode,
                               std::size_t robot, std::span<const train::Transition> steps) {
  const std::size_t n = params.shape.robots;
  if (robot >= n) throw ContractError("trace robot index out of range");
  if (n != env::kRobotCount || params.shape.obs_dim != env::kObservationSize) {
    throw DimensionError("trace needs a critic sized for the rescue environment");
  }
  AttentionTrace trace;
  trace.robot = robot;
  trace.heads = params.shape.heads;
  trace.robots = n;
  if (steps.empty()) return trace;

  critic::JointInput in;
  for (std::size_t i = 0; i < n; ++i) {
    nn::NdArray obs({steps.size(), env::kObservationSize});
    std::vector<std::size_t> acts;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      std::copy(steps[s].obs[i].begin(), steps[s].obs[i].end(),
                obs.data().begin() + s * env::kObservationSize);
      acts.push_back(steps[s].actions[i]);
    }
    in.observations.push_back(std::move(obs));
    in.actions.push_back(train::one_hot(acts, params.shape.action_dim));
  }
  critic::AttentionRecord record;
  critic::evaluate(params, in, mode, &record);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    TraceRow row;
    row.step = s;
    row.weights.assign(trace.heads, std::vector<double>(n, 0.0));
    row.total.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == robot) continue;
      for (std::size_t h = 0; h < trace.heads; ++h) row.weights[h][j] = record.at(s, h, robot, j);
      row.total[j] = record.head_mean(s, robot, j);
    }
    trace.rows.push_back(std::move(row));
  }
  return trace;
}

void write_trace_csv(std::ostream& out, const AttentionTrace& trace) {
  out << "step";
  for (std::size_t h = 0; h < trace.heads; ++h) {
    for (std::size_t j = 0; j < trace.robots; ++j) {
      if (j != trace.robot) out << ",h" << h << "_r" << j;
    }
  }
  for (std::size_t j = 0; j < trace.robots; ++j) {
    if (j != trace.robot) out << ",total_r" << j;
  }
  out << '\n';
  const auto old_precision = out.precision(17);
  for (const TraceRow& row : trace.rows) {
    out << row.step;
    for (std::size_t h = 0; h < trace.heads; ++h) {
      for (std::size_t j = 0; j < trace.robots; ++j) {
        if (j != trace.robot) out << ',' << row.weights[h][j];
      }
    }
    for (std::size_t j = 0; j < trace.robots; ++j) {
      if (j != trace.robot) out << ',' << row.total[j];
    }
    out << '\n';
  }
  out.precision(old_precision);
}

namespace {

// Steers toward a point along the axis with the larger remaining gap,
// braking when the current velocity would already carry the robot there.
std::size_t steer(const env::RobotState& r, env::Vec2 goal, double dt) {
  const double dx = goal.x - (r.position.x + r.velocity.x * dt);
  const double dy = goal.y - (r.position.y + r.velocity.y * dt);
  constexpr double kSlack = 0.03;
  if (std::abs(dx) < kSlack && std::abs(dy) < kSlack) return 0;
  if (std::abs(dx) >= std::abs(dy)) {
    return static_cast<std::size_t>(dx > 0 ? env::Action::kRight : env::Action::kLeft);
  }
  return static_cast<std::size_t>(dy > 0 ? env::Action::kUp : env::Action::kDown);
}

}  // namespace

ScriptedEpisode scripted_handoff_episode(const env::EnvConfig& config, std::uint64_t seed) {
  env::RescueEnv world(config, env::Scenario::kS2, seed);
  world.reset();
  env::WorldState start = world.state();
  const env::Vec2 victim1{-0.5, 0.1};
  const env::Vec2 victim2{0.5, -0.1};
  start.tasks[0] = {env::TaskType::kTask1, victim1, true};
  start.tasks[1] = {env::TaskType::kTask2, victim2, true};
  start.robots[env::kFood1] = {{-0.95, 0.1}, {}};
  start.robots[env::kFood2] = {{0.0, -0.95}, {}};
  start.robots[env::kMedic] = {{victim1.x, victim1.y + 0.05}, {}};
  start.robots[env::kNavigator] = {{victim2.x, victim2.y + 0.05}, {}};
  start.step = 0;
  world.set_state(start);

  ScriptedEpisode out;
  int stage = 1;
  std::size_t linger = 0;
  while (true) {
    train::Transition t;
    for (std::size_t i = 0; i < env::kRobotCount; ++i) t.obs[i] = world.observe(i);
    const env::Vec2 goal = stage == 1 ? victim1 : victim2;
    t.actions = {};
    t.actions[env::kFood1] = steer(world.state().robots[env::kFood1], goal, config.dt);
    const env::StepResult r = world.step(t.actions);
    for (std::size_t i = 0; i < env::kRobotCount; ++i) {
      t.rewards[i] = r.rewards[i];
      t.next_obs[i] = world.observe(i);
    }
    t.done = r.terminal;
    out.steps.push_back(t);
    out.stage.push_back(stage);
    for (const env::RescueEvent& e : r.events) out.events.push_back(e);
    if (r.done) break;
    // Stay with the medical robot briefly after the first rescue, then move on.
    const bool rescued1 = std::any_of(r.events.begin(), r.events.end(), [](const auto& e) {
      return e.type == env::TaskType::kTask1;
    });
    if (stage == 1 && (rescued1 || linger > 0)) {
      if (++linger > 2) stage = 2;
    }
  }
  return out;
}

}  // namespace inneratt::analysis
