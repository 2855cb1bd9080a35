#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mpe/tape.hpp"

namespace mpe::ad {

struct GradCheckConfig {
  double eps = 1e-5;
  std::size_t coords_per_param = 16;  // all coordinates when the tensor is smaller
  // Relative errors divide by max(|analytic|, |numeric|, floor).
  double floor = 1e-6;
  std::uint64_t seed = 7;
};

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0, numeric = 0.0;  // at the worst coordinate
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;

  bool passed(double tolerance) const { return max_rel_error < tolerance; }
  std::string to_string() const;
};

// `loss` must build a deterministic scalar loss on the given fresh tape.
using LossFn = std::function<Var(Tape&)>;

GradCheckReport grad_check(const LossFn& loss, const ParamList& params, const GradCheckConfig& config = {});

double relative_error(double analytic, double numeric, double floor);

}  // namespace mpe::ad
