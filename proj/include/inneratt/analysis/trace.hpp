#ifndef INNERATT_ANALYSIS_TRACE_HPP_
#define INNERATT_ANALYSIS_TRACE_HPP_

#include <iosfwd>
#include <span>
#include <vector>

#include "inneratt/critic/critic.hpp"
#include "inneratt/env/rescue_env.hpp"
#include "inneratt/train/replay_buffer.hpp"

namespace inneratt::analysis {

// Per step: weights[head][j] for the monitored robot (0 at j == robot) and
// total[j], the mean over heads.
struct TraceRow {
  std::size_t step = 0;
  std::vector<std::vector<double>> weights;
  std::vector<double> total;

  // Teammate with the largest head-mean weight (lowest index on ties).
  std::size_t argmax_total(std::size_t robot) const;
};

struct AttentionTrace {
  std::size_t robot = 0;
  std::size_t heads = 0;
  std::size_t robots = 0;
  std::vector<TraceRow> rows;
};

// Attention the critic pays from `robot` to each teammate at every step of
// a recorded episode, using the observations and actions taken.
AttentionTrace attention_trace(const critic::CriticParams& params, critic::AttentionMode mode,
                               std::size_t robot, std::span<const train::Transition> steps);

// Columns: step, h<k>_r<j> for every head and teammate, total_r<j>.
void write_trace_csv(std::ostream& out, const AttentionTrace& trace);

// Scripted S2 episode: food robot 0 first joins the medical robot at the
// Task 1 victim, then the navigation robot at the Task 2 victim. `stage`
// holds 1 or 2 per step.
struct ScriptedEpisode {
  std::vector<train::Transition> steps;
  std::vector<int> stage;
  std::vector<env::RescueEvent> events;
};

ScriptedEpisode scripted_handoff_episode(const env::EnvConfig& config, std::uint64_t seed);

}  // namespace inneratt::analysis

#endif  // INNERATT_ANALYSIS_TRACE_HPP_
