#include "mpe/grad_check.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mpe::ad {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const LossFn& loss, const ParamList& params, const GradCheckConfig& config) {
  for (const auto& p : params) p.tensor->clear_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  auto eval = [&] {
    Tape tape;
    return loss(tape).item();
  };

  Rng rng(config.seed);
  GradCheckReport report;
  for (const auto& p : params) {
    if (!p.trainable) continue;
    Tensor& t = *p.tensor;
    const std::vector<double> analytic = t.has_grad() ? t.grad : std::vector<double>(t.size(), 0.0);
    std::vector<std::size_t> coords;
    if (t.size() <= config.coords_per_param) {
      for (std::size_t i = 0; i < t.size(); ++i) coords.push_back(i);
    } else {
      for (std::size_t k = 0; k < config.coords_per_param; ++k) coords.push_back(rng.index(t.size()));
    }
    GradCheckEntry e{p.name};
    for (std::size_t i : coords) {
      const double saved = t.values[i];
      t.values[i] = saved + config.eps;
      const double up = eval();
      t.values[i] = saved - config.eps;
      const double down = eval();
      t.values[i] = saved;
      const double numeric = (up - down) / (2.0 * config.eps);
      const double err = relative_error(analytic[i], numeric, config.floor);
      ++e.checked;
      if (err >= e.max_rel_error) {
        e.max_rel_error = err;
        e.worst_index = i;
        e.analytic = analytic[i];
        e.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    report.entries.push_back(std::move(e));
  }
  for (const auto& p : params) p.tensor->clear_grad();
  return report;
}

std::string GradCheckReport::to_string() const {
  std::ostringstream out;
  char buf[256];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof buf, "%-24s checked %3zu  max rel err %.3e  (index %zu: analytic %.6e, numeric %.6e)\n",
                  e.name.c_str(), e.checked, e.max_rel_error, e.worst_index, e.analytic, e.numeric);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "overall max relative error %.3e\n", max_rel_error);
  out << buf;
  return out.str();
}

}  // namespace mpe::ad
