#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "mpe/items.hpp"
#include "mpe/text_core.hpp"

namespace mpe::data {

// Population mean and standard deviation.
struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

class RunningStats {
 public:
  void add(double x);
  MeanSd result() const;

 private:
  std::size_t n_ = 0;
  double sum_ = 0.0, sum_sq_ = 0.0;
};

struct StatsReport {
  std::size_t items = 0;
  std::size_t type_count = 0;
  std::size_t token_count = 0;
  MeanSd premise_set_length;  // tokens over all four premises
  MeanSd hypothesis_length;
  std::array<double, kNumLabels> label_distribution{};
  std::array<std::size_t, kNumLabels> label_counts{};

  MeanSd overlap_full, overlap_lemma;
  std::array<MeanSd, kNumLabels> overlap_full_by_label{}, overlap_lemma_by_label{};
  std::size_t overlap_undefined = 0;  // hypotheses with no content tokens

  // Fraction of the five judgments that agree with the gold label, averaged over
  // items that carry judgments.
  std::size_t judged_items = 0;
  std::optional<double> agreement;
  std::array<std::optional<double>, kNumLabels> agreement_by_label{};

  std::string to_table() const;
  std::string to_json() const;
};

// Throws ValidationError for an empty list or an item without a gold label.
StatsReport corpus_stats(std::span<const Item> items, const text::Normalizer& normalizer);

}  // namespace mpe::data
