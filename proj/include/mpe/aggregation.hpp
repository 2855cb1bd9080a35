#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpe/common.hpp"
#include "mpe/items.hpp"

namespace mpe::data {

enum class AggregationKind { ClearMajority, Split32, Split221 };
const char* aggregation_kind_name(AggregationKind k);

struct AggregationOutcome {
  AggregationKind kind = AggregationKind::ClearMajority;
  // Majority label; provisional for a 3-2 entailment/contradiction split, empty for 2-2-1.
  std::optional<Label> label;
  LabelCounts counts{};  // (E, N, C), sums to 5

  bool needs_adjudication() const { return kind != AggregationKind::ClearMajority; }
};

// Five judgments -> majority outcome. A 3-2 split between E and C is flagged for
// review along with 2-2-1 splits. Throws ValidationError unless exactly five.
AggregationOutcome aggregate_labels(std::span<const Label> judgments);

// Label with at least three of the five votes, if any.
std::optional<Label> strict_majority(std::span<const Label> judgments);

// Attaches judgments to items, then sets gold labels from clear majorities
// (provenance crowd) and provisional labels for 3-2 splits. Returns ids flagged for
// adjudication. Judgments for unknown ids raise ValidationError.
std::vector<std::string> apply_judgments(std::vector<Item>& items,
                                         const std::map<std::string, std::vector<Label>>& judgments);

// Supplies a reviewer's decision for a flagged item, or nothing to skip it.
using DecisionSource = std::function<std::optional<Label>(const Item&, const AggregationOutcome&)>;

DecisionSource decisions_from_map(const std::map<std::string, Label>& decisions);

struct AdjudicationSummary {
  std::size_t flagged = 0;
  std::size_t decided = 0;
  std::vector<std::string> unresolved;  // flagged items with no decision
};

// Applies decisions to the flagged items (every id must have five judgments that do
// not form a clear majority). Decided items get provenance "adjudicated"; undecided
// ones keep whatever label they had (none for 2-2-1) and are listed as unresolved.
// With a decision map, ids that are not flagged items raise ValidationError.
AdjudicationSummary adjudicate(std::vector<Item>& items, const std::vector<std::string>& flagged_ids,
                               const DecisionSource& decide);
AdjudicationSummary adjudicate(std::vector<Item>& items, const std::vector<std::string>& flagged_ids,
                               const std::map<std::string, Label>& decisions);

// How final labels relate to the crowd votes.
struct ProvenanceReport {
  std::size_t labeled = 0;
  std::size_t with_judgments = 0;
  std::size_t had_majority = 0;         // five votes with a label at >= 3
  std::size_t split_3_2 = 0;
  std::size_t split_2_2_1 = 0;
  std::size_t labeled_with_judgments = 0;
  std::size_t majority_consistent = 0;  // final label equals the strict majority vote
  std::size_t adjudicated = 0;

  double majority_fraction() const;             // had_majority / with_judgments
  double majority_consistent_fraction() const;  // majority_consistent / labeled-with-judgments
  double divergent_fraction() const { return 1.0 - majority_consistent_fraction(); }
};
ProvenanceReport provenance_report(std::span<const Item> items);

}  // namespace mpe::data
