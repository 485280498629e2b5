#ifndef INNERATT_IO_RUN_HPP_
#define INNERATT_IO_RUN_HPP_

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "inneratt/analysis/analysis.hpp"
#include "inneratt/io/checkpoint.hpp"
#include "inneratt/train/rollout.hpp"

namespace inneratt::io {

// Trains into config.output_dir: resolved config.json, metrics.csv (appended
// when resuming), checkpoint_<episode>.iatt every checkpoint_every episodes
// and final.iatt. Progress lines go to `progress` when given.
Checkpoint run_training(const ExperimentConfig& config, const Checkpoint* resume = nullptr,
                        std::ostream* progress = nullptr);

struct EvalReport {
  train::EvalSummary summary;
  std::array<analysis::FoodSplit, env::kTaskSlots> splits;
  std::array<std::size_t, env::kTaskSlots> rescues{};
};

EvalReport evaluate_checkpoint(const Checkpoint& checkpoint, std::size_t episodes,
                               train::ActionRule rule, std::uint64_t seed);

void write_eval_report(std::ostream& out, const EvalReport& report);

// Critic embeddings gathered from greedy evaluation episodes.
std::vector<analysis::EmbeddingScene> evaluation_embeddings(const Checkpoint& checkpoint,
                                                            std::size_t episodes,
                                                            std::uint64_t seed);

}  // namespace inneratt::io

#endif  // INNERATT_IO_RUN_HPP_
