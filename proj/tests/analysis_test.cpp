#include <cmath>
#include <sstream>

#include "doctest.h"
#include "inneratt/analysis/analysis.hpp"
#include "inneratt/analysis/trace.hpp"
#include "inneratt/nn/errors.hpp"
#include "oracles.hpp"

using namespace inneratt;
using namespace inneratt::analysis;

namespace {

env::RescueEvent joint(std::size_t a, std::size_t b, env::TaskType type = env::TaskType::kTask1) {
  env::RescueEvent e;
  e.type = type;
  e.contributors = {std::min(a, b), std::max(a, b)};
  return e;
}

}  // namespace

TEST_CASE("chi-square against an even split") {
  CHECK(chi_square_uniform({50, 50}).statistic == 0.0);
  CHECK(chi_square_uniform({50, 50}).uniform);
  CHECK(chi_square_uniform({47, 53}).statistic == doctest::Approx(0.36).epsilon(1e-12));
  CHECK(chi_square_uniform({47, 53}).uniform);
  CHECK(chi_square_uniform({48, 52}).statistic == doctest::Approx(0.16).epsilon(1e-12));
  // (82 - 50)^2 / 50 twice.
  CHECK(chi_square_uniform({82, 18}).statistic == doctest::Approx(40.96).epsilon(1e-12));
  CHECK_FALSE(chi_square_uniform({82, 18}).uniform);
  CHECK(chi_square_uniform({164, 36}).statistic == doctest::Approx(81.92).epsilon(1e-12));
  for (std::size_t n = 1; n < 200; n += 7) {
    CHECK(chi_square_uniform({n, n}).statistic == 0.0);
    CHECK(chi_square_uniform({n, 3 * n + 1}).statistic ==
          chi_square_uniform({3 * n + 1, n}).statistic);
  }
  CHECK_THROWS_AS(chi_square_uniform({0, 0}), ContractError);
}

TEST_CASE("cooperation rates") {
  std::vector<env::RescueEvent> events;
  for (int k = 0; k < 47; ++k) events.push_back(joint(0, 1));
  for (int k = 0; k < 53; ++k) events.push_back(joint(0, 2));
  auto rates = cooperation_rates(events, 0);
  REQUIRE(rates.has_value());
  CHECK((*rates)[0] == 0.0);
  CHECK((*rates)[1] == doctest::Approx(0.47));
  CHECK((*rates)[2] == doctest::Approx(0.53));
  CHECK((*rates)[3] == 0.0);

  std::vector<env::RescueEvent> single = {joint(2, 3)};
  CHECK((*cooperation_rates(single, 3))[2] == 1.0);
  CHECK_FALSE(cooperation_rates(single, 0).has_value());
  CHECK_FALSE(cooperation_rates(single, 3, env::TaskType::kTask2).has_value());

  CooperationTable t = CooperationTable::from_events(events);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t.total[i][i] == 0);
    for (std::size_t j = 0; j < 4; ++j) CHECK(t.total[i][j] == t.total[j][i]);
  }
}

TEST_CASE("cooperation rates match a direct recount") {
  Rng rng(31);
  std::vector<env::RescueEvent> events;
  for (int k = 0; k < 500; ++k) {
    std::size_t a = rng.below(4), b = rng.below(3);
    if (b >= a) ++b;
    events.push_back(joint(a, b, rng.below(2) ? env::TaskType::kTask1 : env::TaskType::kTask2));
  }
  for (std::size_t i = 0; i < 4; ++i) {
    for (int typed = 0; typed < 3; ++typed) {
      std::optional<env::TaskType> type;
      if (typed < 2) type = static_cast<env::TaskType>(typed);
      std::array<double, 4> count{};
      double total = 0.0;
      for (const auto& e : events) {
        if (type && e.type != *type) continue;
        if (e.contributors[0] == i) count[e.contributors[1]] += 1, total += 1;
        if (e.contributors[1] == i) count[e.contributors[0]] += 1, total += 1;
      }
      auto rates = cooperation_rates(events, i, type);
      REQUIRE(rates.has_value());
      double sum = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK((*rates)[j] == doctest::Approx(count[j] / total).epsilon(1e-15));
        sum += (*rates)[j];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention entropy") {
  critic::AttentionRecord rec(2, 1, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == i) continue;
      rec.at(0, 0, i, j) = 1.0 / 3.0;
      rec.at(1, 0, i, j) = j == (i + 1) % 4 ? 1.0 : 0.0;
    }
  }
  auto h = attention_entropy(rec, 0, 2);
  CHECK(h[0] == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(h[1] == 0.0);
  CHECK(mean_head_entropy(rec)[0] == doctest::Approx(std::log(3.0) / 2.0));
  CHECK_THROWS_AS(attention_entropy(rec, 1, 0), ContractError);
}

TEST_CASE("spectral norm") {
  CHECK(spectral_norm(nn::NdArray::matrix(2, 2, {3, 0, 0, -4})) == doctest::Approx(4.0));
  CHECK(spectral_norm(nn::NdArray::matrix(1, 2, {3, 4})) == doctest::Approx(5.0));
  // Power iteration oracle on a random matrix.
  Rng rng(32);
  nn::NdArray m = oracle::random_array({6, 4}, rng);
  std::vector<double> v(4, 1.0);
  double sigma = 0.0;
  for (int it = 0; it < 500; ++it) {
    std::vector<double> u(6, 0.0), w(4, 0.0);
    for (std::size_t r = 0; r < 6; ++r) {
      for (std::size_t c = 0; c < 4; ++c) u[r] += m(r, c) * v[c];
    }
    for (std::size_t r = 0; r < 6; ++r) {
      for (std::size_t c = 0; c < 4; ++c) w[c] += m(r, c) * u[r];
    }
    double n = 0.0;
    for (double x : w) n += x * x;
    n = std::sqrt(n);
    for (std::size_t c = 0; c < 4; ++c) v[c] = w[c] / n;
    sigma = std::sqrt(n);
  }
  CHECK(spectral_norm(m) == doctest::Approx(sigma).epsilon(1e-9));
}

namespace {

critic::CriticShape small() {
  return critic::CriticShape{.robots = 4, .obs_dim = 5, .action_dim = 3, .embed_dim = 8, .heads = 2};
}

critic::JointInput input_for(const critic::CriticShape& s, std::size_t batch, Rng& rng) {
  critic::JointInput in;
  for (std::size_t i = 0; i < s.robots; ++i) {
    in.observations.push_back(oracle::random_array({batch, s.obs_dim}, rng));
    nn::NdArray a({batch, s.action_dim});
    for (std::size_t b = 0; b < batch; ++b) a(b, rng.below(s.action_dim)) = 1.0;
    in.actions.push_back(a);
  }
  return in;
}

}  // namespace

TEST_CASE("perturbation experiment: the key-side identity and bounds hold") {
  Rng rng(33);
  const auto s = small();
  auto params = critic::CriticParams::init(s, rng);
  for (auto& p : params.parameters()) {
    for (double& v : p.array->data()) v *= 3.0;
  }
  auto scenes = critic_embeddings(params, input_for(s, 16, rng));
  PerturbationSettings settings;
  settings.delta1 = 0.5;
  settings.trials = 1000;
  RobustnessReport r = perturbation_experiment(params, scenes, settings, rng);
  CHECK(r.samples.size() == 1000 * 3);
  CHECK(r.max_identity_error < 1e-10);
  CHECK(r.max_locality_error == 0.0);
  CHECK(r.bound_violations == 0);
  CHECK(r.markov_holds());
  CHECK(r.passed());
  CHECK(r.max_query_side_change > 0.0);
  double max_sample = 0.0;
  for (double x : r.samples) max_sample = std::max(max_sample, x);
  CHECK(max_sample <= r.bound);
  CHECK(max_sample > 0.0);

  std::ostringstream text, csv;
  write_summary(text, r);
  write_exceedance_csv(csv, r);
  CHECK(text.str().find("PASS") != std::string::npos);
  CHECK(csv.str().rfind("epsilon,frequency,markov_bound", 0) == 0);
}

TEST_CASE("perturbation experiment: zero perturbation or zero keys change nothing") {
  Rng rng(34);
  const auto s = small();
  auto params = critic::CriticParams::init(s, rng);
  auto scenes = critic_embeddings(params, input_for(s, 4, rng));
  PerturbationSettings settings;
  settings.trials = 50;
  settings.epsilons = {0.01, 1.0};

  settings.delta1 = 0.0;
  RobustnessReport still = perturbation_experiment(params, scenes, settings, rng);
  for (double x : still.samples) CHECK(x == 0.0);
  CHECK(still.passed());

  settings.delta1 = 1.0;
  for (auto& k : params.key) k.fill(0.0);
  RobustnessReport flat = perturbation_experiment(params, scenes, settings, rng);
  for (double x : flat.samples) CHECK(x == 0.0);
  CHECK(flat.passed());
  CHECK(flat.bound == 0.0);

  settings.trials = 0;
  CHECK_THROWS_AS(perturbation_experiment(params, scenes, settings, rng), ContractError);
}

TEST_CASE("attention trace rows") {
  Rng rng(35);
  critic::CriticShape shape;
  shape.embed_dim = 16;
  auto params = critic::CriticParams::init(shape, rng);
  ScriptedEpisode ep = scripted_handoff_episode(env::EnvConfig{}, 3);
  REQUIRE(ep.steps.size() == 25);
  REQUIRE(ep.events.size() >= 2);
  CHECK(ep.events[0].type == env::TaskType::kTask1);
  CHECK(ep.events[0].contributors == std::vector<std::size_t>{env::kFood1, env::kMedic});
  CHECK(ep.events[1].type == env::TaskType::kTask2);
  CHECK(ep.events[1].contributors == std::vector<std::size_t>{env::kFood1, env::kNavigator});
  CHECK(ep.stage.front() == 1);
  CHECK(ep.stage.back() == 2);

  AttentionTrace trace =
      attention_trace(params, critic::AttentionMode::kLearned, env::kFood1, ep.steps);
  REQUIRE(trace.rows.size() == 25);
  for (const TraceRow& row : trace.rows) {
    for (std::size_t h = 0; h < trace.heads; ++h) {
      double sum = 0.0;
      for (double w : row.weights[h]) sum += w;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(row.weights[h][env::kFood1] == 0.0);
    }
    for (std::size_t j = 1; j < 4; ++j) {
      double mean = 0.0;
      for (std::size_t h = 0; h < trace.heads; ++h) mean += row.weights[h][j];
      CHECK(row.total[j] == doctest::Approx(mean / trace.heads).epsilon(1e-15));
    }
    CHECK(row.argmax_total(env::kFood1) != env::kFood1);
  }
  std::ostringstream csv;
  write_trace_csv(csv, trace);
  const std::string header = csv.str().substr(0, csv.str().find('\n'));
  CHECK(header.rfind("step,h0_r1,h0_r2,h0_r3,h1_r1", 0) == 0);
  CHECK(header.find("total_r1,total_r2,total_r3") != std::string::npos);

  AttentionTrace flat =
      attention_trace(params, critic::AttentionMode::kUniform, env::kFood1, ep.steps);
  CHECK(flat.rows[0].total[2] == doctest::Approx(1.0 / 3.0));
}
