#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mpe/models.hpp"

namespace mpe::nn {

struct Tally {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct EvalReport {
  Tally overall;
  std::array<Tally, kNumLabels> by_class{};  // by gold label, i.e. per-class recall
  // confusion[gold][predicted]
  std::array<std::array<std::size_t, kNumLabels>, kNumLabels> confusion{};
  // Number of pair labels agreeing with gold, 0..4; only items with pair labels.
  std::array<Tally, 5> by_agreement{};
  std::size_t without_pair_labels = 0;
  // Tags may overlap, so these do not partition the data.
  std::map<std::string, Tally> by_tag;
  std::size_t without_tags = 0;
  std::vector<Label> predictions;  // dataset order

  std::string to_table() const;
  std::string to_json() const;
};

using Predictor = std::function<Label(const Example&)>;

// Throws ValidationError for an empty dataset or an unlabeled example. The predictor
// is called concurrently when `parallel` is set.
EvalReport evaluate(std::span<const Example> examples, const Predictor& predict, bool parallel = false);
// Dropout off, one tape per worker; parameters are only read.
EvalReport evaluate(Model& model, std::span<const Example> examples);

}  // namespace mpe::nn
