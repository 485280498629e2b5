#include "inneratt/analysis/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>

#include "inneratt/nn/errors.hpp"
#include "inneratt/nn/ops.hpp"

namespace inneratt::analysis {

CooperationTable CooperationTable::from_events(std::span<const env::RescueEvent> events) {
  CooperationTable t;
  for (const env::RescueEvent& e : events) {
    auto& typed = t.by_task.at(static_cast<std::size_t>(e.type));
    for (std::size_t a : e.contributors) {
      for (std::size_t b : e.contributors) {
        if (a == b) continue;
        ++t.total.at(a).at(b);
        ++typed.at(a).at(b);
      }
    }
  }
  return t;
}

const CooperationTable::Counts& CooperationTable::counts(
    std::optional<env::TaskType> type) const {
  return type ? by_task.at(static_cast<std::size_t>(*type)) : total;
}

std::optional<std::array<double, env::kRobotCount>> cooperation_rates(
    const CooperationTable& table, std::size_t i, std::optional<env::TaskType> type) {
  if (i >= env::kRobotCount) throw ContractError("robot index out of range");
  const auto& row = table.counts(type)[i];
  std::size_t sum = 0;
  for (std::size_t k = 0; k < env::kRobotCount; ++k) sum += row[k];
  if (sum == 0) return std::nullopt;
  std::array<double, env::kRobotCount> rates{};
  for (std::size_t j = 0; j < env::kRobotCount; ++j) {
    rates[j] = static_cast<double>(row[j]) / static_cast<double>(sum);
  }
  return rates;
}

std::optional<std::array<double, env::kRobotCount>> cooperation_rates(
    std::span<const env::RescueEvent> events, std::size_t i, std::optional<env::TaskType> type) {
  return cooperation_rates(CooperationTable::from_events(events), i, type);
}

ChiSquare chi_square_uniform(std::array<std::size_t, 2> counts) {
  const double total = static_cast<double>(counts[0] + counts[1]);
  if (total <= 0.0) throw ContractError("chi-square test on zero observations");
  const double expected = total / 2.0;
  ChiSquare out;
  for (std::size_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    out.statistic += d * d / expected;
  }
  out.uniform = out.statistic < kChiSquareCritical1;
  return out;
}

std::array<FoodSplit, env::kTaskSlots> food_splits(std::span<const env::RescueEvent> events) {
  const CooperationTable table = CooperationTable::from_events(events);
  std::array<FoodSplit, env::kTaskSlots> out;
  for (std::size_t k = 0; k < env::kTaskSlots; ++k) {
    FoodSplit& s = out[k];
    s.type = static_cast<env::TaskType>(k);
    s.partner = s.type == env::TaskType::kTask1 ? env::kMedic : env::kNavigator;
    const auto& row = table.by_task[k][s.partner];
    s.counts = {row[env::kFood1], row[env::kFood2]};
    if (s.counts[0] + s.counts[1] > 0) s.chi = chi_square_uniform(s.counts);
  }
  return out;
}

std::optional<double> food_split_statistic(const std::array<FoodSplit, env::kTaskSlots>& splits) {
  std::optional<double> total;
  for (const FoodSplit& s : splits) {
    if (s.chi) total = total.value_or(0.0) + s.chi->statistic;
  }
  return total;
}

double entropy(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

std::vector<double> attention_entropy(const critic::AttentionRecord& record, std::size_t head,
                                      std::size_t robot) {
  if (head >= record.heads || robot >= record.robots) {
    throw ContractError("attention_entropy: head or robot out of range");
  }
  std::vector<double> out(record.batch);
  std::vector<double> row;
  for (std::size_t b = 0; b < record.batch; ++b) {
    row.clear();
    for (std::size_t j = 0; j < record.robots; ++j) {
      if (j != robot) row.push_back(record.at(b, head, robot, j));
    }
    out[b] = entropy(row);
  }
  return out;
}

std::vector<double> mean_head_entropy(const critic::AttentionRecord& record) {
  std::vector<double> out(record.heads, 0.0);
  if (record.batch == 0 || record.robots == 0) return out;
  for (std::size_t h = 0; h < record.heads; ++h) {
    double sum = 0.0;
    for (std::size_t i = 0; i < record.robots; ++i) {
      for (double v : attention_entropy(record, h, i)) sum += v;
    }
    out[h] = sum / static_cast<double>(record.batch * record.robots);
  }
  return out;
}

double spectral_norm(const NdArray& m) {
  if (m.size() == 0) return 0.0;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(
      m.data().data(), static_cast<Eigen::Index>(m.rows()),
      static_cast<Eigen::Index>(m.cols()));
  Eigen::MatrixXd gram = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

std::vector<EmbeddingScene> critic_embeddings(const critic::CriticParams& params,
                                              const critic::JointInput& input) {
  nn::Tape tape;
  critic::CriticVars vars = critic::bind(tape, params, false);
  const std::size_t n = params.shape.robots;
  const std::size_t batch = input.batch();
  std::vector<EmbeddingScene> scenes(batch);
  for (auto& s : scenes) {
    s.query.resize(n);
    s.key.resize(n);
  }
  nn::Var no_action = tape.constant(NdArray({batch, params.shape.action_dim}));
  for (std::size_t i = 0; i < n; ++i) {
    nn::Var obs = tape.constant(input.observations.at(i));
    const NdArray& q = critic::embed(vars, i, obs, no_action).value();
    const NdArray& k = critic::embed(vars, i, obs, tape.constant(input.actions.at(i))).value();
    for (std::size_t b = 0; b < batch; ++b) {
      auto qr = q.data().subspan(b * q.cols(), q.cols());
      auto kr = k.data().subspan(b * k.cols(), k.cols());
      scenes[b].query[i].assign(qr.begin(), qr.end());
      scenes[b].key[i].assign(kr.begin(), kr.end());
    }
  }
  return scenes;
}

namespace {

// e W for a row vector e and a (len(e) x out) matrix W.
std::vector<double> project(std::span<const double> e, const NdArray& w) {
  if (e.size() != w.rows()) throw DimensionError("embedding length does not match projection");
  std::vector<double> out(w.cols(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r) {
    for (std::size_t c = 0; c < w.cols(); ++c) out[c] += e[r] * w(r, c);
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<double> sample_ball(std::size_t dim, double radius, Rng& rng) {
  std::vector<double> v(dim);
  double len = 0.0;
  while (len == 0.0) {
    for (double& x : v) x = rng.normal();
    len = norm(v);
  }
  const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
  for (double& x : v) x *= r / len;
  return v;
}

}  // namespace

double attention_score(const critic::CriticParams& params, std::size_t head,
                       std::span<const double> query_embedding,
                       std::span<const double> key_embedding) {
  return dot(project(key_embedding, params.key.at(head)),
             project(query_embedding, params.query.at(head)));
}

bool RobustnessReport::markov_holds() const {
  return std::all_of(exceedance.begin(), exceedance.end(),
                     [](const ExceedanceRow& r) { return r.holds; });
}

RobustnessReport perturbation_experiment(const critic::CriticParams& params,
                                         std::span<const EmbeddingScene> scenes,
                                         const PerturbationSettings& settings, Rng& rng) {
  if (settings.trials < 1) throw ContractError("perturbation experiment needs >= 1 trial");
  if (scenes.empty()) throw ContractError("perturbation experiment needs embeddings");
  if (settings.delta1 < 0.0) throw ContractError("delta1 must be non-negative");
  const std::size_t n = params.shape.robots;
  const std::size_t heads = params.shape.heads;
  const std::size_t dim = params.shape.embed_dim;
  for (const EmbeddingScene& s : scenes) {
    if (s.query.size() != n || s.key.size() != n) {
      throw DimensionError("embedding scene does not match the critic's robot count");
    }
  }

  RobustnessReport report;
  report.delta1 = settings.delta1;
  report.trials = settings.trials;
  for (const EmbeddingScene& s : scenes) {
    for (const auto& e : s.query) report.delta2 = std::max(report.delta2, norm(e));
  }
  std::vector<double> head_bound(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    report.query_norms.push_back(spectral_norm(params.query[h]));
    report.key_norms.push_back(spectral_norm(params.key[h]));
    head_bound[h] = report.query_norms[h] * report.key_norms[h] * report.delta1 * report.delta2;
    report.bound = std::max(report.bound, head_bound[h]);
  }

  for (std::size_t t = 0; t < settings.trials; ++t) {
    const EmbeddingScene& scene = scenes[rng.below(scenes.size())];
    const std::size_t h = rng.below(heads);
    const std::size_t j = rng.below(n);
    std::vector<double> de = sample_ball(dim, settings.delta1, rng);

    std::vector<double> key_j = scene.key[j];
    std::vector<double> query_j = scene.query[j];
    for (std::size_t k = 0; k < dim; ++k) {
      key_j[k] += de[k];
      query_j[k] += de[k];
    }
    const std::vector<double> key_shift = project(de, params.key[h]);

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        const bool row_j = i == j;
        const auto& q_before = scene.query[i];
        const auto& q_after = row_j ? query_j : scene.query[i];
        const auto& k_after = k == j ? key_j : scene.key[k];
        const double before = attention_score(params, h, q_before, scene.key[k]);
        const double after = attention_score(params, h, q_after, k_after);
        const double change = after - before;
        if (row_j) {
          report.max_query_side_change = std::max(report.max_query_side_change, std::abs(change));
        } else if (k == j) {
          const double predicted = dot(key_shift, project(scene.query[i], params.query[h]));
          report.max_identity_error =
              std::max(report.max_identity_error, std::abs(change - predicted));
          report.samples.push_back(std::abs(change));
          if (std::abs(change) > head_bound[h]) ++report.bound_violations;
        } else {
          report.max_locality_error = std::max(report.max_locality_error, std::abs(change));
        }
      }
    }
  }

  std::vector<double> eps = settings.epsilons;
  if (eps.empty() && report.bound > 0.0) {
    for (double m : {0.05, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 4.0}) eps.push_back(m * report.bound);
  }
  for (double e : eps) {
    if (e <= 0.0) throw ContractError("epsilon values must be positive");
    ExceedanceRow row;
    row.epsilon = e;
    std::size_t hits = 0;
    for (double s : report.samples) hits += s >= e ? 1 : 0;
    row.frequency =
        report.samples.empty() ? 0.0 : static_cast<double>(hits) / report.samples.size();
    row.markov_bound = report.bound / e;
    row.informative = row.markov_bound < 1.0;
    row.holds = !row.informative || row.frequency <= row.markov_bound;
    report.exceedance.push_back(row);
  }
  return report;
}

void write_summary(std::ostream& out, const RobustnessReport& r) {
  out << "trials " << r.trials << ", score samples " << r.samples.size() << "\n";
  out << "delta1 " << r.delta1 << ", delta2 " << r.delta2 << "\n";
  for (std::size_t h = 0; h < r.query_norms.size(); ++h) {
    out << "head " << h << ": ||W_q|| " << r.query_norms[h] << ", ||W_k|| " << r.key_norms[h]
        << "\n";
  }
  out << "bound " << r.bound << "\n";
  out << "max |recomputed - predicted| " << r.max_identity_error
      << (r.identity_holds() ? " ok" : " FAIL") << "\n";
  out << "max change of unrelated scores " << r.max_locality_error
      << (r.locality_holds() ? " ok" : " FAIL") << "\n";
  out << "bound violations " << r.bound_violations << (r.bound_holds() ? " ok" : " FAIL")
      << "\n";
  out << "max query-side change (not bounded) " << r.max_query_side_change << "\n";
  out << "epsilon  frequency  markov_bound\n";
  for (const ExceedanceRow& row : r.exceedance) {
    out << row.epsilon << "  " << row.frequency << "  " << row.markov_bound
        << (row.informative ? (row.holds ? "  ok" : "  FAIL") : "  (uninformative)") << "\n";
  }
  out << (r.passed() ? "PASS" : "FAIL") << "\n";
}

void write_exceedance_csv(std::ostream& out, const RobustnessReport& r) {
  out << "epsilon,frequency,markov_bound,informative,holds\n";
  for (const ExceedanceRow& row : r.exceedance) {
    out << row.epsilon << ',' << row.frequency << ',' << row.markov_bound << ','
        << (row.informative ? 1 : 0) << ',' << (row.holds ? 1 : 0) << "\n";
  }
}

}  // namespace inneratt::analysis
