// Command-line front end: train, eval, robustness, trace, gradcheck, plot.
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "inneratt/analysis/analysis.hpp"
#include "inneratt/analysis/trace.hpp"
#include "inneratt/io/checkpoint.hpp"
#include "inneratt/io/config.hpp"
#include "inneratt/io/metrics.hpp"
#include "inneratt/io/run.hpp"
#include "inneratt/nn/errors.hpp"
#include "inneratt/train/gradcheck.hpp"

using namespace inneratt;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Failure("cannot write " + path);
  return out;
}

int cmd_train(const std::string& config_path, const std::string& variant,
              const std::string& critic_name, const std::string& scenario,
              std::optional<std::uint64_t> seed, std::optional<std::size_t> episodes,
              const std::string& out_dir, const std::string& resume_path) {
  std::optional<io::Checkpoint> resume;
  io::ExperimentConfig config;
  if (!resume_path.empty()) {
    resume = io::load_checkpoint(resume_path);
    config = resume->config;
  } else if (!config_path.empty()) {
    config = io::parse_config(config_path);
  }
  if (!variant.empty()) config.train.variant = train::parse_variant(variant);
  if (!critic_name.empty()) config.train.critic = train::parse_critic(critic_name);
  if (!scenario.empty()) {
    try {
      config.train.scenario = env::parse_scenario(scenario);
    } catch (const std::exception&) {
      throw ConfigError("scenario: expected s1, s2 or s3");
    }
  }
  if (seed) config.train.seed = *seed;
  if (episodes) config.train.episodes = *episodes;
  if (!out_dir.empty()) config.output_dir = out_dir;
  io::apply_environment(config);
  // Re-validate after overrides by round-tripping through the parser.
  config = io::parse_config_text(io::dump_config(config));
  std::cout << "training " << train::to_string(config.train.variant) << '-'
            << train::to_string(config.train.critic) << " on "
            << env::to_string(config.train.scenario) << " for " << config.train.episodes
            << " episodes into " << config.output_dir << std::endl;
  io::Checkpoint final = io::run_training(config, resume ? &*resume : nullptr, &std::cout);
  std::cout << "wrote " << config.output_dir << "/final.iatt after "
            << final.state.episodes_done << " episodes" << std::endl;
  return 0;
}

train::ActionRule parse_rule(const std::string& policy) {
  if (policy == "greedy") return train::ActionRule::kGreedy;
  if (policy == "sample") return train::ActionRule::kSample;
  if (policy == "random") return train::ActionRule::kUniformRandom;
  throw Failure("policy must be greedy, sample or random");
}

int cmd_eval(const std::string& path, std::size_t episodes, const std::string& policy,
             std::uint64_t seed, const std::string& events_path) {
  io::Checkpoint ck = io::load_checkpoint(path);
  io::EvalReport report = io::evaluate_checkpoint(ck, episodes, parse_rule(policy), seed);
  std::cout << "policy " << policy << " on " << env::to_string(ck.config.train.scenario)
            << "\n";
  io::write_eval_report(std::cout, report);
  if (!events_path.empty()) {
    std::ofstream out = open_out(events_path);
    out << "episode,step,type,contributor_a,contributor_b\n";
    for (const env::RescueEvent& e : report.summary.events) {
      out << e.episode << ',' << e.step << ',' << env::to_string(e.type);
      for (std::size_t c : e.contributors) out << ',' << c;
      out << '\n';
    }
  }
  return 0;
}

int cmd_robustness(const std::string& path, double delta1, std::size_t trials,
                   std::size_t episodes, std::uint64_t seed, const std::string& csv_path) {
  io::Checkpoint ck = io::load_checkpoint(path);
  auto scenes = io::evaluation_embeddings(ck, episodes, seed);
  analysis::PerturbationSettings settings;
  settings.delta1 = delta1;
  settings.trials = trials;
  Rng rng(derive_seed(seed, 9));
  analysis::RobustnessReport report =
      analysis::perturbation_experiment(ck.state.critic, scenes, settings, rng);
  analysis::write_summary(std::cout, report);
  if (!csv_path.empty()) {
    std::ofstream out = open_out(csv_path);
    analysis::write_exceedance_csv(out, report);
  }
  if (!report.passed()) throw Failure("robustness checks failed");
  return 0;
}

int cmd_trace(const std::string& path, std::size_t robot, std::uint64_t seed, bool scripted,
              const std::string& out_path) {
  io::Checkpoint ck = io::load_checkpoint(path);
  std::vector<train::Transition> steps;
  if (scripted) {
    steps = analysis::scripted_handoff_episode(ck.config.train.env, seed).steps;
  } else {
    steps = train::run_episode(ck.state.actor, ck.config.train.scenario, ck.config.train.env,
                               derive_seed(seed, train::kEvalStream), 0,
                               train::ActionRule::kGreedy)
                .transitions;
  }
  analysis::AttentionTrace trace =
      analysis::attention_trace(ck.state.critic, ck.config.train.critic, robot, steps);
  if (out_path.empty()) {
    analysis::write_trace_csv(std::cout, trace);
  } else {
    std::ofstream out = open_out(out_path);
    analysis::write_trace_csv(out, trace);
  }
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, bool verbose) {
  train::GradcheckReport r = train::run_gradcheck(seed, verbose ? &std::cout : nullptr);
  std::cout << "checked " << r.checked << " gradient entries, max relative error "
            << r.max_rel_error << std::endl;
  if (!r.passed()) throw Failure("gradient check failed: max relative error >= 1e-4");
  return 0;
}

int cmd_plot(const std::string& metrics, const std::string& out_path, std::size_t robots) {
  io::CsvTable table = io::read_csv_file(metrics);
  std::ofstream out = open_out(out_path);
  io::write_entropy_svg(out, table, std::log(static_cast<double>(robots - 1)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"innerATT multi-robot rescue training and analysis"};
  app.require_subcommand(1);

  std::string config_path, variant, critic_name, scenario, out_dir, resume_path;
  std::optional<std::uint64_t> train_seed;
  std::optional<std::size_t> train_episodes;
  auto* train_cmd = app.add_subcommand("train", "train policies and critic");
  train_cmd->add_option("--config", config_path, "JSON config")->check(CLI::ExistingFile);
  train_cmd->add_option("--variant", variant, "td or ppo")->check(CLI::IsMember({"td", "ppo"}));
  train_cmd->add_option("--critic", critic_name, "inneratt or baseline")
      ->check(CLI::IsMember({"inneratt", "baseline"}));
  train_cmd->add_option("--scenario", scenario, "s1, s2 or s3")
      ->check(CLI::IsMember({"s1", "s2", "s3"}));
  train_cmd->add_option("--seed", train_seed, "base seed");
  train_cmd->add_option("--episodes", train_episodes, "total episodes");
  train_cmd->add_option("--out", out_dir, "output directory");
  train_cmd->add_option("--resume", resume_path, "continue from a checkpoint")
      ->check(CLI::ExistingFile);

  std::string ck_path, policy = "greedy", events_path, csv_path, trace_out;
  std::size_t eval_episodes = 80, trials = 1000, embed_episodes = 4, robot = 0;
  std::uint64_t seed = 1;
  double delta1 = 0.1;
  bool scripted = false, verbose = false;

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ck_path)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--episodes", eval_episodes, "evaluation window")->capture_default_str();
  eval_cmd->add_option("--policy", policy, "greedy, sample or random")
      ->check(CLI::IsMember({"greedy", "sample", "random"}))
      ->capture_default_str();
  eval_cmd->add_option("--seed", seed)->capture_default_str();
  eval_cmd->add_option("--events", events_path, "write rescue events CSV");

  auto* rob_cmd = app.add_subcommand("robustness", "embedding perturbation experiment");
  rob_cmd->add_option("--checkpoint", ck_path)->required()->check(CLI::ExistingFile);
  rob_cmd->add_option("--delta1", delta1, "perturbation norm bound")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  rob_cmd->add_option("--trials", trials)->check(CLI::PositiveNumber)->capture_default_str();
  rob_cmd->add_option("--episodes", embed_episodes, "episodes sampled for embeddings")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  rob_cmd->add_option("--seed", seed)->capture_default_str();
  rob_cmd->add_option("--csv", csv_path, "write the exceedance table");

  auto* trace_cmd = app.add_subcommand("trace", "per-step attention of one robot");
  trace_cmd->add_option("--checkpoint", ck_path)->required()->check(CLI::ExistingFile);
  trace_cmd->add_option("--robot", robot)->required()->check(CLI::Range(0, 3));
  trace_cmd->add_option("--seed", seed)->capture_default_str();
  trace_cmd->add_flag("--scripted", scripted, "use the scripted S2 hand-off episode");
  trace_cmd->add_option("--out", trace_out, "CSV path (default stdout)");

  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  grad_cmd->add_option("--seed", seed)->capture_default_str();
  grad_cmd->add_flag("--verbose", verbose, "print every parameter");

  std::string metrics_path, svg_path;
  auto* plot_cmd = app.add_subcommand("plot", "entropy curves from a metrics CSV");
  plot_cmd->add_option("--metrics", metrics_path)->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--out", svg_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app.help() << "error: " << e.what() << std::endl;
    return 2;
  }

  try {
    if (train_cmd->parsed()) {
      return cmd_train(config_path, variant, critic_name, scenario, train_seed, train_episodes,
                       out_dir, resume_path);
    }
    if (eval_cmd->parsed()) return cmd_eval(ck_path, eval_episodes, policy, seed, events_path);
    if (rob_cmd->parsed()) {
      return cmd_robustness(ck_path, delta1, trials, embed_episodes, seed, csv_path);
    }
    if (trace_cmd->parsed()) return cmd_trace(ck_path, robot, seed, scripted, trace_out);
    if (grad_cmd->parsed()) return cmd_gradcheck(seed, verbose);
    if (plot_cmd->parsed()) return cmd_plot(metrics_path, svg_path, env::kRobotCount);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error: " << msg << std::endl;
    return 1;
  }
  return 2;
}
