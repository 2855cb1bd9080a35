#include "mpe/corpus_stats.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mpe::data {

void RunningStats::add(double x) {
  ++n_;
  sum_ += x;
  sum_sq_ += x * x;
}

MeanSd RunningStats::result() const {
  if (n_ == 0) return {};
  const double mean = sum_ / static_cast<double>(n_);
  const double var = std::max(0.0, sum_sq_ / static_cast<double>(n_) - mean * mean);
  return {mean, std::sqrt(var), n_};
}

StatsReport corpus_stats(std::span<const Item> items, const text::Normalizer& normalizer) {
  if (items.empty()) throw ValidationError("corpus statistics need at least one item");
  StatsReport r;
  r.items = items.size();
  std::set<std::string> types;
  RunningStats prem_len, hyp_len, ov_full, ov_lemma;
  std::array<RunningStats, kNumLabels> ov_full_l, ov_lemma_l;
  RunningStats agree;
  std::array<RunningStats, kNumLabels> agree_l;

  for (const auto& item : items) {
    if (!item.gold) throw ValidationError("item " + item.id + " has no gold label");
    const std::size_t g = label_index(*item.gold);
    ++r.label_counts[g];
    auto norm = normalize_item(item, normalizer);

    std::size_t plen = 0;
    for (const auto& p : norm.premises) {
      plen += p.tokens.size();
      types.insert(p.tokens.begin(), p.tokens.end());
    }
    types.insert(norm.hypothesis.tokens.begin(), norm.hypothesis.tokens.end());
    r.token_count += plen + norm.hypothesis.tokens.size();
    prem_len.add(static_cast<double>(plen));
    hyp_len.add(static_cast<double>(norm.hypothesis.tokens.size()));

    if (norm.hypothesis.content_tokens.empty()) {
      ++r.overlap_undefined;
    } else {
      double full = text::word_overlap(norm.hypothesis, norm.premises, text::OverlapMode::Full);
      double lemma = text::word_overlap(norm.hypothesis, norm.premises, text::OverlapMode::Lemma);
      ov_full.add(full);
      ov_lemma.add(lemma);
      ov_full_l[g].add(full);
      ov_lemma_l[g].add(lemma);
    }

    if (item.judgments.size() == kJudgmentsPerItem) {
      const auto matching = std::count(item.judgments.begin(), item.judgments.end(), *item.gold);
      const double a = static_cast<double>(matching) / static_cast<double>(kJudgmentsPerItem);
      agree.add(a);
      agree_l[g].add(a);
      ++r.judged_items;
    }
  }

  r.type_count = types.size();
  r.premise_set_length = prem_len.result();
  r.hypothesis_length = hyp_len.result();
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    r.label_distribution[k] = static_cast<double>(r.label_counts[k]) / static_cast<double>(r.items);
    r.overlap_full_by_label[k] = ov_full_l[k].result();
    r.overlap_lemma_by_label[k] = ov_lemma_l[k].result();
    if (agree_l[k].result().n) r.agreement_by_label[k] = agree_l[k].result().mean;
  }
  r.overlap_full = ov_full.result();
  r.overlap_lemma = ov_lemma.result();
  if (r.judged_items) r.agreement = agree.result().mean;
  return r;
}

namespace {

std::string fmt_ms(const MeanSd& m, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f +- %.*f", precision, m.mean, precision, m.sd);
  return buf;
}

nlohmann::json ms_json(const MeanSd& m) { return {{"mean", m.mean}, {"sd", m.sd}, {"n", m.n}}; }

}  // namespace

std::string StatsReport::to_table() const {
  std::ostringstream out;
  char buf[128];
  out << "items                   " << items << "\n";
  out << "lexical types           " << type_count << "\n";
  out << "lexical tokens          " << token_count << "\n";
  out << "premise set length      " << fmt_ms(premise_set_length, 1) << "\n";
  out << "hypothesis length       " << fmt_ms(hypothesis_length, 1) << "\n";
  out << "label distribution\n";
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    std::snprintf(buf, sizeof buf, "  %c  %6.1f%%  (%zu)\n", label_char(label_from_index(k)),
                  100.0 * label_distribution[k], label_counts[k]);
    out << buf;
  }
  out << "word overlap            full             lemma\n";
  out << "  all                   " << fmt_ms(overlap_full) << "    " << fmt_ms(overlap_lemma) << "\n";
  for (std::size_t k = 0; k < kNumLabels; ++k)
    out << "  " << label_char(label_from_index(k)) << "                     "
        << fmt_ms(overlap_full_by_label[k]) << "    " << fmt_ms(overlap_lemma_by_label[k]) << "\n";
  if (overlap_undefined) out << "  (" << overlap_undefined << " hypotheses without content tokens skipped)\n";
  if (agreement) {
    std::snprintf(buf, sizeof buf, "annotator agreement     %.2f", *agreement);
    out << buf;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      if (!agreement_by_label[k]) continue;
      std::snprintf(buf, sizeof buf, "  %c %.2f", label_char(label_from_index(k)), *agreement_by_label[k]);
      out << buf;
    }
    out << "  (" << judged_items << " judged items)\n";
  }
  return out.str();
}

std::string StatsReport::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["items"] = items;
  j["type_count"] = type_count;
  j["token_count"] = token_count;
  j["premise_set_length"] = ms_json(premise_set_length);
  j["hypothesis_length"] = ms_json(hypothesis_length);
  j["label_distribution"] = {{"E", label_distribution[0]}, {"N", label_distribution[1]}, {"C", label_distribution[2]}};
  j["overlap_full"] = ms_json(overlap_full);
  j["overlap_lemma"] = ms_json(overlap_lemma);
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    std::string l(1, label_char(label_from_index(k)));
    j["overlap_full_by_label"][l] = ms_json(overlap_full_by_label[k]);
    j["overlap_lemma_by_label"][l] = ms_json(overlap_lemma_by_label[k]);
    j["agreement_by_label"][l] = agreement_by_label[k] ? nlohmann::json(*agreement_by_label[k]) : nlohmann::json(nullptr);
  }
  j["overlap_undefined"] = overlap_undefined;
  j["judged_items"] = judged_items;
  j["agreement"] = agreement ? nlohmann::json(*agreement) : nlohmann::json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace mpe::data
