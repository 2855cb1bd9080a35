#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "mpe/tensor.hpp"

namespace mpe::ad {

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
  double item() const;  // value of a single-element tensor
};

// Records operations in execution order. A tape belongs to one thread at a time.
class Tape {
 public:
  // Propagates the gradient of the node `self` to its inputs.
  using Backward = std::function<void(Tape& tape, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a parameter tensor; the tensor must outlive the tape. Binding the
  // same tensor twice returns the same node.
  Var param(Tensor& tensor);
  Var record(Tensor value, Backward backward);

  const Tensor& value(std::size_t id) const;
  // Gradient buffer of a node, allocated on demand during backward.
  std::vector<double>& grad(std::size_t id);
  std::size_t size() const { return nodes_.size(); }

  // Requires a single-element loss. Node gradients are recomputed from scratch;
  // parameter gradients are added to whatever the parameter tensors already hold.
  void backward(Var loss);

  void clear();

 private:
  struct Node {
    Tensor value;
    Tensor* param = nullptr;
    std::vector<double> grad;
    Backward backward;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> param_nodes_;
};

}  // namespace mpe::ad
