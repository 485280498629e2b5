#include "inneratt/critic/critic.hpp"

#include <string>

#include "inneratt/nn/errors.hpp"

namespace inneratt::critic {

void CriticShape::validate() const {
  if (robots < 2) throw ContractError("critic needs at least 2 robots");
  if (heads == 0 || embed_dim == 0 || embed_dim % heads != 0) {
    throw ContractError("embed_dim " + std::to_string(embed_dim) +
                        " must be a positive multiple of heads " +
                        std::to_string(heads));
  }
  if (obs_dim == 0 || action_dim == 0) throw ContractError("empty observation or action");
}

CriticParams CriticParams::init(const CriticShape& shape, Rng& rng) {
  shape.validate();
  CriticParams p;
  p.shape = shape;
  const std::size_t in = shape.obs_dim + shape.action_dim;
  for (std::size_t i = 0; i < shape.robots; ++i) {
    p.embed.push_back(nn::Linear::init(in, shape.embed_dim, rng));
  }
  for (std::size_t h = 0; h < shape.heads; ++h) {
    p.query.push_back(nn::uniform_init({shape.embed_dim, shape.head_dim()}, shape.embed_dim, rng));
    p.key.push_back(nn::uniform_init({shape.embed_dim, shape.head_dim()}, shape.embed_dim, rng));
    p.value.push_back(nn::uniform_init({shape.embed_dim, shape.head_dim()}, shape.embed_dim, rng));
  }
  for (std::size_t i = 0; i < shape.robots; ++i) {
    p.hidden.push_back(nn::Linear::init(2 * shape.embed_dim, shape.embed_dim, rng));
    p.output.push_back(nn::Linear::init(shape.embed_dim, shape.action_dim, rng));
  }
  return p;
}

CriticParams CriticParams::zeros(const CriticShape& shape) {
  shape.validate();
  CriticParams p;
  p.shape = shape;
  const std::size_t in = shape.obs_dim + shape.action_dim;
  for (std::size_t i = 0; i < shape.robots; ++i) {
    p.embed.push_back(nn::Linear::zeros(in, shape.embed_dim));
    p.hidden.push_back(nn::Linear::zeros(2 * shape.embed_dim, shape.embed_dim));
    p.output.push_back(nn::Linear::zeros(shape.embed_dim, shape.action_dim));
  }
  for (std::size_t h = 0; h < shape.heads; ++h) {
    p.query.emplace_back(nn::Shape{shape.embed_dim, shape.head_dim()});
    p.key.emplace_back(nn::Shape{shape.embed_dim, shape.head_dim()});
    p.value.emplace_back(nn::Shape{shape.embed_dim, shape.head_dim()});
  }
  return p;
}

namespace {

template <class Self, class List>
List collect_parameters(Self& p) {
  List out;
  auto add = [&](std::string name, auto& array) { out.push_back({std::move(name), &array}); };
  for (std::size_t i = 0; i < p.embed.size(); ++i) {
    add("critic.embed." + std::to_string(i) + ".weight", p.embed[i].weight);
    add("critic.embed." + std::to_string(i) + ".bias", p.embed[i].bias);
  }
  for (std::size_t h = 0; h < p.query.size(); ++h) {
    add("critic.query." + std::to_string(h), p.query[h]);
    add("critic.key." + std::to_string(h), p.key[h]);
    add("critic.value." + std::to_string(h), p.value[h]);
  }
  for (std::size_t i = 0; i < p.hidden.size(); ++i) {
    add("critic.hidden." + std::to_string(i) + ".weight", p.hidden[i].weight);
    add("critic.hidden." + std::to_string(i) + ".bias", p.hidden[i].bias);
    add("critic.output." + std::to_string(i) + ".weight", p.output[i].weight);
    add("critic.output." + std::to_string(i) + ".bias", p.output[i].bias);
  }
  return out;
}

}  // namespace

nn::ParamList CriticParams::parameters() {
  return collect_parameters<CriticParams, nn::ParamList>(*this);
}

nn::ConstParamList CriticParams::parameters() const {
  return collect_parameters<const CriticParams, nn::ConstParamList>(*this);
}

std::vector<Var> CriticVars::leaves() const {
  std::vector<Var> out;
  for (std::size_t i = 0; i < embed_w.size(); ++i) {
    out.push_back(embed_w[i]);
    out.push_back(embed_b[i]);
  }
  for (std::size_t h = 0; h < query.size(); ++h) {
    out.push_back(query[h]);
    out.push_back(key[h]);
    out.push_back(value[h]);
  }
  for (std::size_t i = 0; i < hidden_w.size(); ++i) {
    out.push_back(hidden_w[i]);
    out.push_back(hidden_b[i]);
    out.push_back(output_w[i]);
    out.push_back(output_b[i]);
  }
  return out;
}

CriticVars bind(Tape& tape, const CriticParams& params, bool trainable) {
  auto put = [&](const NdArray& a) { return trainable ? tape.leaf(a) : tape.constant(a); };
  CriticVars v;
  for (std::size_t i = 0; i < params.embed.size(); ++i) {
    v.embed_w.push_back(put(params.embed[i].weight));
    v.embed_b.push_back(put(params.embed[i].bias));
  }
  for (std::size_t h = 0; h < params.query.size(); ++h) {
    v.query.push_back(put(params.query[h]));
    v.key.push_back(put(params.key[h]));
    v.value.push_back(put(params.value[h]));
  }
  for (std::size_t i = 0; i < params.hidden.size(); ++i) {
    v.hidden_w.push_back(put(params.hidden[i].weight));
    v.hidden_b.push_back(put(params.hidden[i].bias));
    v.output_w.push_back(put(params.output[i].weight));
    v.output_b.push_back(put(params.output[i].bias));
  }
  return v;
}

std::size_t JointInput::batch() const {
  return observations.empty() ? 0 : observations.front().rows();
}

AttentionRecord::AttentionRecord(std::size_t batch, std::size_t heads, std::size_t robots)
    : batch(batch), heads(heads), robots(robots),
      weights(batch * heads * robots * robots, 0.0) {}

double& AttentionRecord::at(std::size_t b, std::size_t head, std::size_t i, std::size_t j) {
  return weights[((b * heads + head) * robots + i) * robots + j];
}

double AttentionRecord::at(std::size_t b, std::size_t head, std::size_t i,
                           std::size_t j) const {
  return weights[((b * heads + head) * robots + i) * robots + j];
}

double AttentionRecord::head_mean(std::size_t b, std::size_t i, std::size_t j) const {
  double s = 0.0;
  for (std::size_t h = 0; h < heads; ++h) s += at(b, h, i, j);
  return s / static_cast<double>(heads);
}

Var embed(const CriticVars& vars, std::size_t robot, Var obs, Var action) {
  if (robot >= vars.embed_w.size()) {
    throw ContractError("embed: robot " + std::to_string(robot) + " out of range");
  }
  const std::size_t expected = vars.embed_w[robot].value().rows();
  const std::size_t got = obs.value().cols() + action.value().cols();
  if (got != expected) {
    throw DimensionError("embed: encoding length " + std::to_string(got) + " vs " +
                         std::to_string(expected));
  }
  return nn::relu(nn::linear(nn::concat_cols({obs, action}), vars.embed_w[robot],
                             vars.embed_b[robot]));
}

namespace {

void require_teammates(std::size_t robots, std::size_t i) {
  if (robots < 2) throw ContractError("attention needs at least 2 robots");
  if (i >= robots) {
    throw ContractError("robot index " + std::to_string(i) + " out of range for " +
                        std::to_string(robots) + " robots");
  }
}

Var scores_against(Var query, const std::vector<Var>& keys, std::size_t i) {
  std::vector<Var> cols;
  for (std::size_t j = 0; j < keys.size(); ++j) {
    if (j != i) cols.push_back(nn::row_dot(query, keys[j]));
  }
  return nn::concat_cols(cols);
}

Var weighted_values(const std::vector<Var>& values, Var weights, std::size_t i) {
  Var total;
  std::size_t slot = 0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (j == i) continue;
    Var term = nn::mul_col(values[j], nn::slice_cols(weights, slot++, 1));
    total = total.valid() ? nn::add(total, term) : term;
  }
  return total;
}

}  // namespace

Var attention_weights(const CriticVars& vars, const std::vector<Var>& keyed,
                      Var query_embedding, std::size_t i, std::size_t head) {
  require_teammates(keyed.size(), i);
  if (head >= vars.query.size()) throw ContractError("head index out of range");
  std::vector<Var> keys;
  for (std::size_t j = 0; j < keyed.size(); ++j) {
    keys.push_back(j == i ? Var() : nn::matmul(keyed[j], vars.key[head]));
  }
  Var q = nn::matmul(query_embedding, vars.query[head]);
  return nn::softmax_rows(scores_against(q, keys, i));
}

Var contribution(const CriticVars& vars, const std::vector<Var>& keyed, Var weights,
                 std::size_t i, std::size_t head) {
  require_teammates(keyed.size(), i);
  if (head >= vars.value.size()) throw ContractError("head index out of range");
  std::vector<Var> values;
  for (std::size_t j = 0; j < keyed.size(); ++j) {
    values.push_back(j == i ? Var() : nn::relu(nn::matmul(keyed[j], vars.value[head])));
  }
  return weighted_values(values, weights, i);
}

CriticForward forward(Tape& tape, const CriticVars& vars, const CriticShape& shape,
                      const JointInput& input, AttentionMode mode) {
  const std::size_t n = shape.robots;
  if (input.observations.size() != n || input.actions.size() != n) {
    throw DimensionError("critic input has " + std::to_string(input.observations.size()) +
                         " observations and " + std::to_string(input.actions.size()) +
                         " actions for " + std::to_string(n) + " robots");
  }
  require_teammates(n, 0);
  const std::size_t batch = input.batch();
  for (std::size_t i = 0; i < n; ++i) {
    if (input.observations[i].rows() != batch || input.actions[i].rows() != batch ||
        input.observations[i].cols() != shape.obs_dim ||
        input.actions[i].cols() != shape.action_dim) {
      throw DimensionError("critic input for robot " + std::to_string(i) + ": " +
                           nn::shape_string(input.observations[i].shape()) + " / " +
                           nn::shape_string(input.actions[i].shape()));
    }
  }

  Var no_action = tape.constant(NdArray({batch, shape.action_dim}));
  std::vector<Var> self_e(n), keyed_e(n);
  for (std::size_t i = 0; i < n; ++i) {
    Var obs = tape.constant(input.observations[i]);
    self_e[i] = embed(vars, i, obs, no_action);
    keyed_e[i] = embed(vars, i, obs, tape.constant(input.actions[i]));
  }

  CriticForward out;
  out.record = AttentionRecord(batch, shape.heads, n);
  std::vector<std::vector<Var>> head_parts(n);
  const double uniform = 1.0 / static_cast<double>(n - 1);
  if (mode == AttentionMode::kLearned) out.attention.resize(shape.heads);

  for (std::size_t h = 0; h < shape.heads; ++h) {
    std::vector<Var> keys(n), values(n);
    for (std::size_t j = 0; j < n; ++j) {
      values[j] = nn::relu(nn::matmul(keyed_e[j], vars.value[h]));
      if (mode == AttentionMode::kLearned) keys[j] = nn::matmul(keyed_e[j], vars.key[h]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (mode == AttentionMode::kLearned) {
        Var q = nn::matmul(self_e[i], vars.query[h]);
        Var alpha = nn::softmax_rows(scores_against(q, keys, i));
        out.attention[h].push_back(alpha);
        head_parts[i].push_back(weighted_values(values, alpha, i));
        const NdArray& a = alpha.value();
        for (std::size_t b = 0; b < batch; ++b) {
          std::size_t slot = 0;
          for (std::size_t j = 0; j < n; ++j) {
            if (j != i) out.record.at(b, h, i, j) = a(b, slot++);
          }
        }
      } else {
        // Same arithmetic as the learned path with every weight at 1/(N-1),
        // so the two critics agree bit for bit when scores tie.
        Var alpha = tape.constant(NdArray({batch, n - 1}, uniform));
        head_parts[i].push_back(weighted_values(values, alpha, i));
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < n; ++j) {
            if (j != i) out.record.at(b, h, i, j) = uniform;
          }
        }
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    Var x = nn::concat_cols(head_parts[i]);
    Var hidden = nn::relu(
        nn::linear(nn::concat_cols({self_e[i], x}), vars.hidden_w[i], vars.hidden_b[i]));
    out.q.push_back(nn::linear(hidden, vars.output_w[i], vars.output_b[i]));
  }
  return out;
}

std::vector<NdArray> evaluate(const CriticParams& params, const JointInput& input,
                              AttentionMode mode, AttentionRecord* record) {
  Tape tape;
  CriticVars vars = bind(tape, params, false);
  CriticForward fwd = forward(tape, vars, params.shape, input, mode);
  std::vector<NdArray> q;
  for (const Var& v : fwd.q) q.push_back(v.value());
  if (record != nullptr) *record = std::move(fwd.record);
  return q;
}

namespace {

QResult single_robot(const CriticParams& params, const JointInput& input, std::size_t i,
                     AttentionMode mode) {
  if (i >= params.shape.robots) {
    throw ContractError("robot index " + std::to_string(i) + " out of range for " +
                        std::to_string(params.shape.robots) + " robots");
  }
  QResult result;
  std::vector<NdArray> q = evaluate(params, input, mode, &result.attention);
  result.values = std::move(q[i]);
  return result;
}

}  // namespace

QResult q_values(const CriticParams& params, const JointInput& input, std::size_t i) {
  return single_robot(params, input, i, AttentionMode::kLearned);
}

QResult baseline_q_values(const CriticParams& params, const JointInput& input,
                          std::size_t i) {
  return single_robot(params, input, i, AttentionMode::kUniform);
}

}  // namespace inneratt::critic
