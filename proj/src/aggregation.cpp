#include "mpe/aggregation.hpp"

#include <algorithm>
#include <set>

namespace mpe::data {

const char* aggregation_kind_name(AggregationKind k) {
  switch (k) {
    case AggregationKind::ClearMajority: return "clear-majority";
    case AggregationKind::Split32: return "split-3-2";
    case AggregationKind::Split221: return "split-2-2-1";
  }
  return "?";
}

AggregationOutcome aggregate_labels(std::span<const Label> judgments) {
  if (judgments.size() != kJudgmentsPerItem)
    throw ValidationError("expected 5 judgments, got " + std::to_string(judgments.size()));
  AggregationOutcome out;
  for (Label l : judgments) {
    if (label_index(l) >= kNumLabels) throw ValidationError("judgment outside {E,N,C}");
    ++out.counts[label_index(l)];
  }
  const auto& c = out.counts;
  auto top = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
  if (c[top] >= 3) {
    out.label = label_from_index(top);
    const int e = c[label_index(Label::Entailment)], n = c[label_index(Label::Neutral)],
              ct = c[label_index(Label::Contradiction)];
    if (n == 0 && ((e == 3 && ct == 2) || (e == 2 && ct == 3))) out.kind = AggregationKind::Split32;
    else out.kind = AggregationKind::ClearMajority;
  } else {
    // With five votes over three classes the only pattern without a count >= 3 is 2-2-1.
    out.kind = AggregationKind::Split221;
  }
  return out;
}

std::optional<Label> strict_majority(std::span<const Label> judgments) {
  LabelCounts c{};
  for (Label l : judgments) ++c[label_index(l)];
  for (std::size_t k = 0; k < kNumLabels; ++k)
    if (c[k] >= 3) return label_from_index(k);
  return std::nullopt;
}

std::vector<std::string> apply_judgments(std::vector<Item>& items,
                                         const std::map<std::string, std::vector<Label>>& judgments) {
  std::map<std::string, Item*> by_id;
  for (auto& item : items) by_id[item.id] = &item;
  for (const auto& [id, _] : judgments)
    if (!by_id.count(id)) throw ValidationError("judgments given for unknown item id " + id);

  std::vector<std::string> flagged;
  for (auto& item : items) {
    auto it = judgments.find(item.id);
    if (it != judgments.end()) item.judgments = it->second;
    if (item.judgments.empty()) continue;
    auto outcome = aggregate_labels(item.judgments);
    item.gold = outcome.label;
    item.provenance = outcome.label ? std::optional(LabelProvenance::Crowd) : std::nullopt;
    if (outcome.needs_adjudication()) flagged.push_back(item.id);
  }
  return flagged;
}

DecisionSource decisions_from_map(const std::map<std::string, Label>& decisions) {
  return [&decisions](const Item& item, const AggregationOutcome&) -> std::optional<Label> {
    auto it = decisions.find(item.id);
    if (it == decisions.end()) return std::nullopt;
    return it->second;
  };
}

AdjudicationSummary adjudicate(std::vector<Item>& items, const std::vector<std::string>& flagged_ids,
                               const DecisionSource& decide) {
  std::map<std::string, Item*> by_id;
  for (auto& item : items) by_id[item.id] = &item;
  AdjudicationSummary summary;
  for (const auto& id : flagged_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("flagged item id " + id + " is not in the item set");
    Item& item = *it->second;
    auto outcome = aggregate_labels(item.judgments);
    if (!outcome.needs_adjudication())
      throw ValidationError("item " + id + " has a clear majority and needs no adjudication");
    ++summary.flagged;
    if (auto label = decide(item, outcome)) {
      item.gold = *label;
      item.provenance = LabelProvenance::Adjudicated;
      ++summary.decided;
    } else {
      summary.unresolved.push_back(id);
    }
  }
  return summary;
}

AdjudicationSummary adjudicate(std::vector<Item>& items, const std::vector<std::string>& flagged_ids,
                               const std::map<std::string, Label>& decisions) {
  std::set<std::string> flagged(flagged_ids.begin(), flagged_ids.end());
  for (const auto& [id, _] : decisions)
    if (!flagged.count(id)) throw ValidationError("decision for unknown or unflagged item id " + id);
  return adjudicate(items, flagged_ids, decisions_from_map(decisions));
}

double ProvenanceReport::majority_fraction() const {
  return with_judgments ? static_cast<double>(had_majority) / static_cast<double>(with_judgments) : 0.0;
}

double ProvenanceReport::majority_consistent_fraction() const {
  const std::size_t denom = labeled_with_judgments;
  return denom ? static_cast<double>(majority_consistent) / static_cast<double>(denom) : 0.0;
}

ProvenanceReport provenance_report(std::span<const Item> items) {
  ProvenanceReport r;
  for (const auto& item : items) {
    if (item.gold) ++r.labeled;
    if (item.provenance == LabelProvenance::Adjudicated) ++r.adjudicated;
    if (item.judgments.size() != kJudgmentsPerItem) continue;
    ++r.with_judgments;
    auto outcome = aggregate_labels(item.judgments);
    if (outcome.label) ++r.had_majority;
    if (outcome.kind == AggregationKind::Split32) ++r.split_3_2;
    if (outcome.kind == AggregationKind::Split221) ++r.split_2_2_1;
    if (!item.gold) continue;
    ++r.labeled_with_judgments;
    if (outcome.label && *outcome.label == *item.gold) ++r.majority_consistent;
  }
  return r;
}

}  // namespace mpe::data
