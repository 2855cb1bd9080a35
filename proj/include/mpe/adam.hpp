#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpe/tensor.hpp"

namespace mpe::ad {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moments are keyed by parameter name.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Updates every trainable parameter from its gradient. Throws if any trainable
  // parameter has no gradient buffer. Gradients are left in place.
  void step(const ParamList& params);

  void set_learning_rate(double lr) { config_.lr = lr; }
  std::size_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamConfig config_;
  std::size_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

void clear_grads(const ParamList& params);

}  // namespace mpe::ad
