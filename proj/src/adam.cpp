#include "mpe/adam.hpp"

#include <cmath>

namespace mpe::ad {

void Adam::step(const ParamList& params) {
  std::string missing;
  for (const auto& p : params)
    if (p.trainable && !p.tensor->has_grad()) missing += (missing.empty() ? "" : ", ") + p.name;
  if (!missing.empty()) throw std::logic_error("Adam step without gradients for: " + missing);

  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (const auto& p : params) {
    if (!p.trainable) continue;
    Tensor& t = *p.tensor;
    auto& mo = moments_[p.name];
    if (mo.m.size() != t.size()) {
      mo.m.assign(t.size(), 0.0);
      mo.v.assign(t.size(), 0.0);
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double g = t.grad[i];
      mo.m[i] = config_.beta1 * mo.m[i] + (1.0 - config_.beta1) * g;
      mo.v[i] = config_.beta2 * mo.v[i] + (1.0 - config_.beta2) * g * g;
      const double mhat = mo.m[i] / c1, vhat = mo.v[i] / c2;
      t.values[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

void clear_grads(const ParamList& params) {
  for (const auto& p : params) p.tensor->clear_grad();
}

}  // namespace mpe::ad
