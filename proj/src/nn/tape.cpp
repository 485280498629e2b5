#include "inneratt/nn/tape.hpp"

#include <string>

#include "inneratt/nn/errors.hpp"

namespace inneratt::nn {

const NdArray& Var::value() const { return tape_->value(id_); }

Var Tape::leaf(NdArray value) {
  nodes_.push_back(Node{std::move(value), {}, true, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(NdArray value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(NdArray value, const std::vector<Var>& parents, BackwardFn fn) {
  bool needs = false;
  for (const Var& p : parents) {
    if (p.tape() != this) throw ContractError("operand recorded on another tape");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  Node node{std::move(value), {}, needs, false, {}};
  if (needs) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

NdArray* Tape::grad_slot(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return nullptr;
  if (node.grad.empty()) node.grad = NdArray(node.value.shape(), 0.0);
  return &node.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("loss recorded on another tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_string(loss.shape()));
  }
  for (Node& node : nodes_) node.grad = NdArray();
  if (NdArray* seed = grad_slot(loss.id())) (*seed)[0] = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.backward && !node.grad.empty()) node.backward(*this, id);
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].is_leaf) grad_slot(id);
  }
}

const NdArray& Tape::grad(Var v) const {
  const Node& node = nodes_[v.id()];
  if (!node.is_leaf && node.grad.empty()) {
    throw ContractError("gradient requested for node " + std::to_string(v.id()) +
                        " that did not receive one");
  }
  return node.grad;
}

}  // namespace inneratt::nn
