#include "mpe/voting.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace mpe::voting {

namespace {

LabelCounts count(const PairLabels& pairs) {
  LabelCounts c{};
  for (Label l : pairs) ++c[label_index(l)];
  return c;
}

}  // namespace

std::optional<Label> majority_vote(const PairLabels& pairs) {
  auto c = count(pairs);
  for (std::size_t k = 0; k < kNumLabels; ++k)
    if (c[k] >= 3) return label_from_index(k);
  return std::nullopt;
}

Label ec_heuristic(const PairLabels& pairs) {
  auto c = count(pairs);
  const int e = c[label_index(Label::Entailment)], ct = c[label_index(Label::Contradiction)];
  if (e > ct) return Label::Entailment;
  if (ct > e) return Label::Contradiction;
  return Label::Neutral;
}

int pair_agreement_category(const PairLabels& pairs, Label gold) {
  return static_cast<int>(std::count(pairs.begin(), pairs.end(), gold));
}

BaselineReport score_baselines(std::span<const data::Item> items) {
  BaselineReport r;
  r.total_items = items.size();
  std::size_t strict = 0, fallback = 0, heuristic = 0;
  for (const auto& item : items) {
    if (!item.pair_labels) {
      ++r.skipped_no_pairs;
      continue;
    }
    if (!item.gold) {
      ++r.skipped_no_gold;
      continue;
    }
    ++r.scored;
    const auto& pairs = *item.pair_labels;
    const Label gold = *item.gold;
    auto vote = majority_vote(pairs);
    if (!vote) ++r.no_majority;
    if (vote == gold) ++strict;
    if (vote.value_or(Label::Neutral) == gold) ++fallback;
    if (ec_heuristic(pairs) == gold) ++heuristic;
    ++r.category_counts[static_cast<std::size_t>(pair_agreement_category(pairs, gold))];
  }
  if (r.scored) {
    const double n = static_cast<double>(r.scored);
    r.majority_acc_strict = static_cast<double>(strict) / n;
    r.majority_acc_neutral_fallback = static_cast<double>(fallback) / n;
    r.heuristic_acc = static_cast<double>(heuristic) / n;
    for (std::size_t k = 0; k < 5; ++k) r.category_histogram[k] = static_cast<double>(r.category_counts[k]) / n;
  }
  return r;
}

std::string BaselineReport::to_table() const {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "scored %zu of %zu items (%.1f%% coverage)\n", scored, total_items,
                100.0 * coverage());
  out << buf;
  if (skipped_no_pairs) out << "  skipped without pair labels: " << skipped_no_pairs << "\n";
  if (skipped_no_gold) out << "  skipped without gold label: " << skipped_no_gold << "\n";
  std::snprintf(buf, sizeof buf, "majority vote (strict)          %6.1f%%\n", 100.0 * majority_acc_strict);
  out << buf;
  std::snprintf(buf, sizeof buf, "majority vote (N fallback)      %6.1f%%   (%zu without majority)\n",
                100.0 * majority_acc_neutral_fallback, no_majority);
  out << buf;
  std::snprintf(buf, sizeof buf, "E/C count heuristic             %6.1f%%\n", 100.0 * heuristic_acc);
  out << buf;
  out << "pairs agreeing with gold   % of data\n";
  for (std::size_t k = 0; k < 5; ++k) {
    std::snprintf(buf, sizeof buf, "  %zu                        %6.1f%%  (%zu)\n", k, 100.0 * category_histogram[k],
                  category_counts[k]);
    out << buf;
  }
  return out.str();
}

std::string BaselineReport::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["total_items"] = total_items;
  j["scored"] = scored;
  j["skipped_no_pairs"] = skipped_no_pairs;
  j["skipped_no_gold"] = skipped_no_gold;
  j["coverage"] = coverage();
  j["majority_acc_strict"] = majority_acc_strict;
  j["majority_acc_neutral_fallback"] = majority_acc_neutral_fallback;
  j["heuristic_acc"] = heuristic_acc;
  j["no_majority"] = no_majority;
  j["category_counts"] = category_counts;
  j["category_histogram"] = category_histogram;
  return j.dump(2) + "\n";
}

}  // namespace mpe::voting
