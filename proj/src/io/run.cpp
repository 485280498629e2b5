#include "inneratt/io/run.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include "inneratt/nn/errors.hpp"

namespace inneratt::io {

namespace fs = std::filesystem;

Checkpoint run_training(const ExperimentConfig& config, const Checkpoint* resume,
                        std::ostream* progress) {
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "config.json");
    out << dump_config(config);
  }
  const fs::path metrics_path = dir / "metrics.csv";
  const bool append = resume != nullptr && fs::exists(metrics_path);
  std::ofstream metrics(metrics_path, append ? std::ios::app : std::ios::trunc);
  if (!metrics) throw CheckpointError("cannot write " + metrics_path.string());
  if (!append) train::write_metrics_header(metrics, config.train.heads);

  train::Trainer trainer = resume ? train::Trainer(config.train, resume->state)
                                  : train::Trainer(config.train);
  trainer.run([&](const train::MetricsRecord& r, const train::TrainerState& state) {
    train::write_metrics_row(metrics, r);
    metrics.flush();
    if (progress) {
      *progress << "episode " << r.episode << "  reward " << r.mean_reward << "  critic "
                << r.critic_loss << "  rescues " << r.rescues[0] << '/' << r.rescues[1]
                << std::endl;
    }
    if (config.checkpoint_every > 0 && r.episode % config.checkpoint_every == 0) {
      save_checkpoint((dir / ("checkpoint_" + std::to_string(r.episode) + ".iatt")).string(),
                      {config, state});
    }
  });
  Checkpoint final{config, trainer.state()};
  save_checkpoint((dir / "final.iatt").string(), final);
  return final;
}

EvalReport evaluate_checkpoint(const Checkpoint& checkpoint, std::size_t episodes,
                               train::ActionRule rule, std::uint64_t seed) {
  const train::TrainConfig& c = checkpoint.config.train;
  EvalReport r;
  r.summary = train::evaluate_policy(checkpoint.state.actor, c.scenario, c.env, seed, episodes,
                                     rule, c.workers);
  r.splits = analysis::food_splits(r.summary.events);
  for (const env::RescueEvent& e : r.summary.events) {
    ++r.rescues[static_cast<std::size_t>(e.type)];
  }
  return r;
}

void write_eval_report(std::ostream& out, const EvalReport& r) {
  out << "episodes " << r.summary.episode_rewards.size() << "\n";
  out << "mean reward " << r.summary.mean << " (standard error " << r.summary.standard_error
      << ")\n";
  out << "rescues task1 " << r.rescues[0] << ", task2 " << r.rescues[1] << "\n";
  for (const analysis::FoodSplit& s : r.splits) {
    out << env::to_string(s.type) << " partner robot " << s.partner << ": food1 "
        << s.counts[0] << ", food2 " << s.counts[1];
    if (s.chi) {
      const double total = static_cast<double>(s.counts[0] + s.counts[1]);
      out << ", rates " << s.counts[0] / total << '/' << s.counts[1] / total << ", chi2 "
          << s.chi->statistic << (s.chi->uniform ? " < " : " >= ")
          << analysis::kChiSquareCritical1;
    } else {
      out << ", rates undefined";
    }
    out << "\n";
  }
}

std::vector<analysis::EmbeddingScene> evaluation_embeddings(const Checkpoint& checkpoint,
                                                            std::size_t episodes,
                                                            std::uint64_t seed) {
  const train::TrainConfig& c = checkpoint.config.train;
  auto runs = train::run_episodes(checkpoint.state.actor, c.scenario, c.env,
                                  derive_seed(seed, train::kEvalStream), 0, episodes, 1,
                                  train::ActionRule::kGreedy);
  critic::JointInput in;
  std::size_t rows = 0;
  for (const auto& r : runs) rows += r.transitions.size();
  if (rows == 0) throw ContractError("no evaluation steps to embed");
  const auto& shape = checkpoint.state.critic.shape;
  for (std::size_t i = 0; i < shape.robots; ++i) {
    nn::NdArray obs({rows, shape.obs_dim});
    std::vector<std::size_t> acts;
    std::size_t row = 0;
    for (const auto& r : runs) {
      for (const auto& t : r.transitions) {
        std::copy(t.obs[i].begin(), t.obs[i].end(), obs.data().begin() + row * shape.obs_dim);
        acts.push_back(t.actions[i]);
        ++row;
      }
    }
    in.observations.push_back(std::move(obs));
    in.actions.push_back(train::one_hot(acts, shape.action_dim));
  }
  return analysis::critic_embeddings(checkpoint.state.critic, in);
}

}  // namespace inneratt::io
