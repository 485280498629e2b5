#ifndef INNERATT_ANALYSIS_ANALYSIS_HPP_
#define INNERATT_ANALYSIS_ANALYSIS_HPP_

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inneratt/critic/critic.hpp"
#include "inneratt/env/rescue_env.hpp"
#include "inneratt/nn/random.hpp"

namespace inneratt::analysis {

using nn::NdArray;

// Num[i][j]: rescues performed jointly by robots i and j, overall and per
// task type. Symmetric with a zero diagonal.
struct CooperationTable {
  using Counts = std::array<std::array<std::size_t, env::kRobotCount>, env::kRobotCount>;
  Counts total{};
  std::array<Counts, env::kTaskSlots> by_task{};

  static CooperationTable from_events(std::span<const env::RescueEvent> events);
  const Counts& counts(std::optional<env::TaskType> type) const;
};

// rate_ij = Num_ij / sum_k Num_ik over teammates j (entry i is 0). Empty when
// robot i took part in no joint rescue, since the rate is then undefined.
std::optional<std::array<double, env::kRobotCount>> cooperation_rates(
    const CooperationTable& table, std::size_t i,
    std::optional<env::TaskType> type = std::nullopt);
std::optional<std::array<double, env::kRobotCount>> cooperation_rates(
    std::span<const env::RescueEvent> events, std::size_t i,
    std::optional<env::TaskType> type = std::nullopt);

struct ChiSquare {
  double statistic = 0.0;
  bool uniform = false;  // statistic below the 0.05 critical value
};

inline constexpr double kChiSquareCritical1 = 3.84;

// Two-category goodness of fit against an even split.
ChiSquare chi_square_uniform(std::array<std::size_t, 2> counts);

// How often each food robot teamed with a task type's non-food partner
// (medical for Task 1, navigation for Task 2): the two cooperation counts
// of that partner's rate row.
struct FoodSplit {
  env::TaskType type = env::TaskType::kTask1;
  std::size_t partner = 0;
  std::array<std::size_t, 2> counts{};  // food robot 1, food robot 2
  std::optional<ChiSquare> chi;          // empty without rescues
};

std::array<FoodSplit, env::kTaskSlots> food_splits(std::span<const env::RescueEvent> events);

// Sum of the defined per-task statistics; empty when no task was rescued.
std::optional<double> food_split_statistic(const std::array<FoodSplit, env::kTaskSlots>& splits);

// -sum_j a_j ln a_j, treating 0 ln 0 as 0.
double entropy(std::span<const double> weights);

// Entropy of robot i's teammate distribution for one head, per batch row.
std::vector<double> attention_entropy(const critic::AttentionRecord& record, std::size_t head,
                                      std::size_t robot);

// Per head, entropy averaged over batch rows and robots.
std::vector<double> mean_head_entropy(const critic::AttentionRecord& record);

// Largest singular value.
double spectral_norm(const NdArray& m);

// One critic input's embeddings, one row per robot: `query` feeds the query
// side of robot i's scores and `key` the key side when i is a teammate.
struct EmbeddingScene {
  std::vector<std::vector<double>> query;
  std::vector<std::vector<double>> key;
};

// Embeddings the critic computes for a batch of joint inputs, one scene per row.
std::vector<EmbeddingScene> critic_embeddings(const critic::CriticParams& params,
                                              const critic::JointInput& input);

// Raw score S_ij = (W_k e_j) . (W_q e_i) for one head.
double attention_score(const critic::CriticParams& params, std::size_t head,
                       std::span<const double> query_embedding,
                       std::span<const double> key_embedding);

struct PerturbationSettings {
  double delta1 = 0.1;
  std::size_t trials = 1000;
  std::vector<double> epsilons;  // empty: multiples of the bound
};

struct ExceedanceRow {
  double epsilon = 0.0;
  double frequency = 0.0;  // fraction of |dS| samples >= epsilon
  double markov_bound = 0.0;
  bool informative = false;  // bound < 1
  bool holds = true;
};

struct RobustnessReport {
  double delta1 = 0.0;
  double delta2 = 0.0;  // max observed query embedding norm
  std::vector<double> query_norms;  // ||W_q||_2 per head
  std::vector<double> key_norms;    // ||W_k||_2 per head
  double bound = 0.0;  // max over heads of ||W_q|| ||W_k|| delta1 delta2
  std::size_t trials = 0;
  std::vector<double> samples;  // |dS_ij| for every trial and i != j
  double max_identity_error = 0.0;   // |recomputed - predicted dS|
  double max_locality_error = 0.0;   // change of scores not involving key j
  double max_query_side_change = 0.0;  // row j's own scores (reported only)
  std::size_t bound_violations = 0;
  std::vector<ExceedanceRow> exceedance;

  bool identity_holds(double tol = 1e-10) const { return max_identity_error < tol; }
  bool locality_holds(double tol = 1e-12) const { return max_locality_error <= tol; }
  bool bound_holds() const { return bound_violations == 0; }
  bool markov_holds() const;
  bool passed() const {
    return identity_holds() && locality_holds() && bound_holds() && markov_holds();
  }
};

// Each trial picks a scene, a head, a robot j and a perturbation uniform on
// the delta1 ball, adds it to e_j, and recomputes every score.
RobustnessReport perturbation_experiment(const critic::CriticParams& params,
                                         std::span<const EmbeddingScene> scenes,
                                         const PerturbationSettings& settings, Rng& rng);

void write_summary(std::ostream& out, const RobustnessReport& report);
void write_exceedance_csv(std::ostream& out, const RobustnessReport& report);

}  // namespace inneratt::analysis

#endif  // INNERATT_ANALYSIS_ANALYSIS_HPP_
