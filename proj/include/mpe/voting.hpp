#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "mpe/items.hpp"

namespace mpe::voting {

using PairLabels = std::array<Label, data::kPremisesPerItem>;

// Label with at least three votes, or nullopt.
std::optional<Label> majority_vote(const PairLabels& pairs);
// E if E-count > C-count, C if the reverse, N otherwise.
Label ec_heuristic(const PairLabels& pairs);
// Number of pair labels equal to the gold label, 0..4.
int pair_agreement_category(const PairLabels& pairs, Label gold);

struct BaselineReport {
  std::size_t total_items = 0;
  std::size_t scored = 0;              // items with pair labels and a gold label
  std::size_t skipped_no_pairs = 0;
  std::size_t skipped_no_gold = 0;
  double majority_acc_strict = 0.0;    // no-majority scored incorrect
  double majority_acc_neutral_fallback = 0.0;
  double heuristic_acc = 0.0;
  std::size_t no_majority = 0;
  std::array<std::size_t, 5> category_counts{};
  std::array<double, 5> category_histogram{};  // fractions of scored items

  double coverage() const {
    return total_items ? static_cast<double>(scored) / static_cast<double>(total_items) : 0.0;
  }
  std::string to_table() const;
  std::string to_json() const;
};

// Items without pair labels or without gold are skipped and counted.
BaselineReport score_baselines(std::span<const data::Item> items);

}  // namespace mpe::voting
