#include "mpe/evaluation.hpp"

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "mpe/voting.hpp"

namespace mpe::nn {

EvalReport evaluate(std::span<const Example> examples, const Predictor& predict, bool parallel) {
  if (examples.empty()) throw ValidationError("cannot evaluate on an empty dataset");
  for (const auto& ex : examples)
    if (!ex.label) throw ValidationError("example " + ex.id + " has no gold label");
  EvalReport r;
  r.predictions.assign(examples.size(), Label::Entailment);
  if (parallel) {
    parallel_for(examples.size(), [&](std::size_t i) { r.predictions[i] = predict(examples[i]); });
  } else {
    for (std::size_t i = 0; i < examples.size(); ++i) r.predictions[i] = predict(examples[i]);
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const Label gold = *ex.label, pred = r.predictions[i];
    const bool ok = gold == pred;
    auto count = [ok](Tally& t) {
      ++t.total;
      t.correct += ok;
    };
    count(r.overall);
    count(r.by_class[label_index(gold)]);
    ++r.confusion[label_index(gold)][label_index(pred)];
    if (ex.pair_labels) count(r.by_agreement[static_cast<std::size_t>(voting::pair_agreement_category(*ex.pair_labels, gold))]);
    else ++r.without_pair_labels;
    if (ex.tags.empty()) ++r.without_tags;
    for (const auto& tag : ex.tags) count(r.by_tag[tag]);
  }
  return r;
}

EvalReport evaluate(Model& model, std::span<const Example> examples) {
  return evaluate(examples, [&model](const Example& ex) { return model.predict(ex); }, true);
}

namespace {

nlohmann::json tally_json(const Tally& t) {
  return {{"total", t.total}, {"correct", t.correct}, {"accuracy", t.accuracy()}};
}

}  // namespace

std::string EvalReport::to_table() const {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "accuracy            %6.2f%%  (%zu / %zu)\n", 100.0 * overall.accuracy(),
                overall.correct, overall.total);
  out << buf;
  out << "per class\n";
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    std::snprintf(buf, sizeof buf, "  %c                 %6.2f%%  (%zu / %zu)\n", label_char(label_from_index(k)),
                  100.0 * by_class[k].accuracy(), by_class[k].correct, by_class[k].total);
    out << buf;
  }
  out << "confusion (rows gold, columns predicted)\n         E       N       C\n";
  for (std::size_t g = 0; g < kNumLabels; ++g) {
    std::snprintf(buf, sizeof buf, "  %c  %6zu  %6zu  %6zu\n", label_char(label_from_index(g)), confusion[g][0],
                  confusion[g][1], confusion[g][2]);
    out << buf;
  }
  const std::size_t with_pairs = overall.total - without_pair_labels;
  if (with_pairs) {
    out << "pair labels agreeing with gold   % of data   accuracy\n";
    for (std::size_t k = 0; k < 5; ++k) {
      const auto& t = by_agreement[k];
      std::snprintf(buf, sizeof buf, "  %zu                              %6.1f%%    %6.2f%%  (%zu)\n", k,
                    100.0 * static_cast<double>(t.total) / static_cast<double>(with_pairs), 100.0 * t.accuracy(),
                    t.total);
      out << buf;
    }
  }
  if (without_pair_labels) out << "  (" << without_pair_labels << " items without pair labels)\n";
  if (!by_tag.empty()) {
    out << "phenomenon                       accuracy\n";
    for (const auto& [tag, t] : by_tag) {
      std::snprintf(buf, sizeof buf, "  %-30s %6.2f%%  (%zu)\n", tag.c_str(), 100.0 * t.accuracy(), t.total);
      out << buf;
    }
    if (without_tags) out << "  (" << without_tags << " items without tags)\n";
  }
  return out.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["overall"] = tally_json(overall);
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    const std::string l(1, label_char(label_from_index(k)));
    j["by_class"][l] = tally_json(by_class[k]);
    j["confusion"][l] = {{"E", confusion[k][0]}, {"N", confusion[k][1]}, {"C", confusion[k][2]}};
  }
  j["by_agreement"] = nlohmann::json::array();
  for (const auto& t : by_agreement) j["by_agreement"].push_back(tally_json(t));
  j["without_pair_labels"] = without_pair_labels;
  j["by_tag"] = nlohmann::json::object();
  for (const auto& [tag, t] : by_tag) j["by_tag"][tag] = tally_json(t);
  j["without_tags"] = without_tags;
  std::string preds;
  for (Label l : predictions) preds += label_char(l);
  j["predictions"] = preds;
  return j.dump(2) + "\n";
}

}  // namespace mpe::nn
