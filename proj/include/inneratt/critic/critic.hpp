#ifndef INNERATT_CRITIC_CRITIC_HPP_
#define INNERATT_CRITIC_CRITIC_HPP_

#include <cstddef>
#include <vector>

#include "inneratt/nn/ndarray.hpp"
#include "inneratt/nn/ops.hpp"
#include "inneratt/nn/params.hpp"
#include "inneratt/nn/random.hpp"

namespace inneratt::critic {

using nn::NdArray;
using nn::Tape;
using nn::Var;

struct CriticShape {
  std::size_t robots = 4;
  std::size_t obs_dim = 32;
  std::size_t action_dim = 5;
  std::size_t embed_dim = 128;
  std::size_t heads = 4;

  std::size_t head_dim() const { return embed_dim / heads; }
  // Throws ContractError when the dimensions are inconsistent.
  void validate() const;
  bool operator==(const CriticShape&) const = default;
};

// Learnable weights of the centralized critic.
//
// Each robot i owns an embedding layer g_i, a hidden layer over
// concat(e_i, x_i) and an output layer with one value per own action. The
// per-head query/key/value projections are shared by all robots.
struct CriticParams {
  CriticShape shape;
  std::vector<nn::Linear> embed;
  std::vector<NdArray> query;
  std::vector<NdArray> key;
  std::vector<NdArray> value;
  std::vector<nn::Linear> hidden;
  std::vector<nn::Linear> output;

  static CriticParams init(const CriticShape& shape, Rng& rng);
  static CriticParams zeros(const CriticShape& shape);

  nn::ParamList parameters();
  nn::ConstParamList parameters() const;
  bool operator==(const CriticParams&) const = default;
};

// How teammates are weighted: learned inner attention or the fixed
// 1/(N-1) baseline.
enum class AttentionMode { kLearned, kUniform };

// CriticParams bound onto a tape, either as leaves (trainable) or constants.
struct CriticVars {
  std::vector<Var> embed_w, embed_b;
  std::vector<Var> query, key, value;
  std::vector<Var> hidden_w, hidden_b;
  std::vector<Var> output_w, output_b;

  // Leaves in CriticParams::parameters() order.
  std::vector<Var> leaves() const;
};

CriticVars bind(Tape& tape, const CriticParams& params, bool trainable);

// Joint critic input: one B x obs_dim and one B x action_dim matrix per
// robot. Actions are one-hot rows; an all-zero row means "no action".
struct JointInput {
  std::vector<NdArray> observations;
  std::vector<NdArray> actions;

  std::size_t batch() const;
};

// Attention weights for a batch: alpha[b][head][i][j], with zero on i == j.
struct AttentionRecord {
  std::size_t batch = 0;
  std::size_t heads = 0;
  std::size_t robots = 0;
  std::vector<double> weights;

  AttentionRecord() = default;
  AttentionRecord(std::size_t batch, std::size_t heads, std::size_t robots);

  double& at(std::size_t b, std::size_t head, std::size_t i, std::size_t j);
  double at(std::size_t b, std::size_t head, std::size_t i, std::size_t j) const;
  // Mean over heads.
  double head_mean(std::size_t b, std::size_t i, std::size_t j) const;
};

// e = relu(W [obs, action] + b) for one robot.
Var embed(const CriticVars& vars, std::size_t robot, Var obs, Var action);

// Softmax over teammates j != i of (W_k e_j) . (W_q e_i); returns a
// B x (N-1) matrix with teammates in index order. `keyed` holds one
// embedding per robot (entry i is ignored).
Var attention_weights(const CriticVars& vars, const std::vector<Var>& keyed,
                      Var query_embedding, std::size_t i, std::size_t head);

// sum_{j != i} alpha_ij relu(W_v e_j) for one head; B x head_dim.
Var contribution(const CriticVars& vars, const std::vector<Var>& keyed,
                 Var weights, std::size_t i, std::size_t head);

struct CriticForward {
  // Per robot, B x action_dim values over the robot's own actions.
  std::vector<Var> q;
  // [head][robot] -> B x (N-1) teammate weights (empty in uniform mode).
  std::vector<std::vector<Var>> attention;
  AttentionRecord record;
};

// Full critic pass for every robot. Robot i's query side and Q head use the
// observation-only embedding g_i(o_i, 0); teammates enter through
// g_j(o_j, a_j), so column a of q[i] is Q_i(o, a) with a_i = a.
CriticForward forward(Tape& tape, const CriticVars& vars, const CriticShape& shape,
                      const JointInput& input, AttentionMode mode);

struct QResult {
  NdArray values;  // B x action_dim
  AttentionRecord attention;
};

QResult q_values(const CriticParams& params, const JointInput& input, std::size_t i);
QResult baseline_q_values(const CriticParams& params, const JointInput& input,
                          std::size_t i);

// Value-only evaluation for all robots.
std::vector<NdArray> evaluate(const CriticParams& params, const JointInput& input,
                              AttentionMode mode, AttentionRecord* record = nullptr);

}  // namespace inneratt::critic

#endif  // INNERATT_CRITIC_CRITIC_HPP_
