#include "mpe/tape.hpp"

namespace mpe::ad {

const Tensor& Var::value() const {
  if (!tape) throw std::logic_error("unbound variable");
  return tape->value(id);
}

double Var::item() const {
  const auto& v = value();
  if (v.size() != 1) throw ShapeError("item() of tensor with shape " + shape_str(v.shape));
  return v.values[0];
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), nullptr, {}, {}});
  return {this, nodes_.size() - 1};
}

Var Tape::param(Tensor& tensor) {
  if (auto it = param_nodes_.find(&tensor); it != param_nodes_.end()) return {this, it->second};
  nodes_.push_back(Node{{}, &tensor, {}, {}});
  param_nodes_[&tensor] = nodes_.size() - 1;
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, Backward backward) {
  nodes_.push_back(Node{std::move(value), nullptr, {}, std::move(backward)});
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.param ? *n.param : n.value;
}

std::vector<double>& Tape::grad(std::size_t id) {
  Node& n = nodes_.at(id);
  const std::size_t size = n.param ? n.param->size() : n.value.size();
  if (n.grad.size() != size) n.grad.assign(size, 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::logic_error("loss was recorded on a different tape");
  if (value(loss.id).size() != 1)
    throw ShapeError("backward needs a scalar loss, got shape " + shape_str(value(loss.id).shape));
  for (auto& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
  grad(loss.id)[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param) {
      auto& g = n.param->ensure_grad();
      for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
}

}  // namespace mpe::ad
