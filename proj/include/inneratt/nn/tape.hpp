#ifndef INNERATT_NN_TAPE_HPP_
#define INNERATT_NN_TAPE_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "inneratt/nn/ndarray.hpp"

namespace inneratt::nn {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const NdArray& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode gradient recorder. Nodes are appended in evaluation order, so
// replaying them backwards is a valid topological order. A tape is owned by
// one thread at a time; independent tapes can run concurrently.
class Tape {
 public:
  // Propagates the node's gradient into its parents' gradient slots.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A leaf receives a gradient from backward().
  Var leaf(NdArray value);
  // A constant never receives or propagates a gradient.
  Var constant(NdArray value);

  // Records an operation result. The backward closure is kept only when some
  // parent needs a gradient.
  Var record(NdArray value, const std::vector<Var>& parents, BackwardFn fn);

  std::size_t size() const { return nodes_.size(); }
  const NdArray& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Gradient slot for accumulation by backward closures; allocated lazily
  // as zeros. Returns nullptr for nodes that do not need a gradient.
  NdArray* grad_slot(std::size_t id);
  const NdArray& grad_of(std::size_t id) const { return nodes_[id].grad; }

  // Runs reverse accumulation from a scalar loss. Every leaf ends up with a
  // gradient of its own shape; leaves the loss does not depend on get zeros.
  void backward(Var loss);
  const NdArray& grad(Var v) const;

 private:
  struct Node {
    NdArray value;
    NdArray grad;
    bool requires_grad = false;
    bool is_leaf = false;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
};

}  // namespace inneratt::nn

#endif  // INNERATT_NN_TAPE_HPP_
