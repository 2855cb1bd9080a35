#include "mpe/item_generation.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace mpe::data {

std::vector<graph::CaptionRef> Corpus::caption_refs() const {
  std::vector<graph::CaptionRef> refs;
  refs.reserve(captions.size());
  for (const auto& c : captions) refs.push_back({c.scene_group, c.split, c.sentence});
  return refs;
}

std::map<std::string, Split> read_splits(const std::filesystem::path& path) {
  std::map<std::string, Split> out;
  for (const auto& line : read_lines(path)) {
    auto f = split(line.text, '\t');
    if (f.size() != 2) throw ValidationError(path.string(), line.number, "expected \"scene_group<TAB>split\"");
    auto s = parse_split(f[1]);
    if (!s) throw ValidationError(path.string(), line.number, "invalid split \"" + f[1] + "\"");
    out[std::string(trim(f[0]))] = *s;
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& path, const text::Normalizer& normalizer,
                   const std::map<std::string, Split>& splits) {
  Corpus corpus;
  std::set<std::pair<std::string, int>> seen;
  for (const auto& line : read_lines(path)) {
    auto f = split(line.text, '\t');
    if (f.size() != 3)
      throw ValidationError(path.string(), line.number,
                            "expected \"scene_group_id<TAB>caption_index<TAB>caption_text\"");
    CaptionRecord rec;
    rec.scene_group = std::string(trim(f[0]));
    if (rec.scene_group.empty() || rec.scene_group.find(',') != std::string::npos)
      throw ValidationError(path.string(), line.number, "scene group id must be non-empty and contain no commas");
    std::size_t pos = 0;
    try {
      rec.caption_index = std::stoi(f[1], &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != trim(f[1]).size())
      throw ValidationError(path.string(), line.number, "caption index is not an integer");
    if (!seen.emplace(rec.scene_group, rec.caption_index).second)
      throw ValidationError(path.string(), line.number, "duplicate caption index for group " + rec.scene_group);
    try {
      rec.sentence = normalizer(f[2]);
    } catch (const ValidationError& e) {
      throw ValidationError(path.string(), line.number, e.what());
    }
    if (auto it = splits.find(rec.scene_group); it != splits.end()) rec.split = it->second;
    corpus.groups[rec.scene_group].push_back(corpus.captions.size());
    corpus.captions.push_back(std::move(rec));
  }
  if (corpus.captions.empty()) throw ValidationError(path.string(), 1, "corpus has no captions");
  for (auto& [_, idx] : corpus.groups)
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return corpus.captions[a].caption_index < corpus.captions[b].caption_index;
    });
  return corpus;
}

bool passes_frequency(const graph::PhraseNode& node, Split split, const FrequencyThresholds& t) {
  const int train = node.caption_count[static_cast<std::size_t>(Split::Train)];
  if (split == Split::Train) return train >= t.min_train_captions;
  const int own = node.caption_count[static_cast<std::size_t>(split)];
  return train + own >= t.min_union_captions && own >= t.min_split_captions;
}

bool GenerationResult::shortfall() const {
  return std::any_of(diagnostics.begin(), diagnostics.end(), [](const auto& d) { return d.shortfall(); });
}

std::string GenerationResult::report() const {
  std::ostringstream out;
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    const auto& d = diagnostics[s];
    if (d.requested == 0 && d.premise_groups == 0) continue;
    out << split_name(static_cast<Split>(s)) << ": produced " << d.produced << " of " << d.requested
        << " (related " << d.requested_related << " requested, pool " << d.related_pool
        << "; unrelated " << d.requested_unrelated << " requested, pool " << d.unrelated_pool << ")\n"
        << "  premise groups " << d.premise_groups << ", with fifth caption " << d.related_groups
        << ", without related candidate " << d.groups_without_related << "\n"
        << "  rejected: overlap " << d.rejected_overlap << ", frequency " << d.rejected_frequency
        << ", noun phrase " << d.rejected_noun_phrase << ", no content " << d.rejected_no_content << "\n";
    if (d.shortfall()) out << "  SHORTFALL: " << (d.requested - d.produced) << " items missing\n";
  }
  return out.str();
}

namespace {

struct Candidate {
  std::string group;
  graph::NodeId node;
  bool related;
  std::size_t source_caption;  // index into corpus.captions
};

struct GroupCandidates {
  std::vector<Candidate> related;
  std::vector<Candidate> unrelated;
  SplitDiagnostics counters;
};

std::string render_hypothesis(const std::string& surface) {
  auto words = split(surface, ' ');
  text::fix_articles(words);
  std::string s = join(words, " ");
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s + ".";
}

}  // namespace

GenerationResult generate_items(const Corpus& corpus, const graph::PhraseGraph& graph,
                                const text::Normalizer& normalizer, const GenerationConfig& config) {
  if (!(config.related_fraction >= 0.0 && config.related_fraction <= 1.0))
    throw ValidationError("related fraction must lie in [0, 1]");
  if (!(config.overlap_max >= 0.0 && config.overlap_max <= 1.0))
    throw ValidationError("overlap maximum must lie in [0, 1]");

  GenerationResult result;
  Rng master(config.seed);

  for (std::size_t s = 0; s < kNumSplits; ++s) {
    const auto split = static_cast<Split>(s);
    Rng split_rng = master.fork();
    auto& diag = result.diagnostics[s];
    diag.requested = config.n_items[s];

    // A scene's split is that of its first caption.
    std::vector<std::string> split_groups;
    for (const auto& [g, idx] : corpus.groups)
      if (corpus.captions[idx.front()].split == split) split_groups.push_back(g);

    std::vector<GroupCandidates> per_group(split_groups.size());
    const std::uint64_t split_seed = split_rng.next();

    auto accept = [&](graph::NodeId id, const std::array<text::Sentence, kPremisesPerItem>& premises,
                      SplitDiagnostics& c) {
      const auto& node = graph.node(id);
      if (config.sentence_nodes_only && !node.sentence) {
        ++c.rejected_noun_phrase;
        return false;
      }
      if (!passes_frequency(node, split, config.thresholds)) {
        ++c.rejected_frequency;
        return false;
      }
      auto hyp = normalizer(node.surface);
      if (hyp.content_tokens.empty()) {
        ++c.rejected_no_content;
        return false;
      }
      if (text::word_overlap(hyp, premises, text::OverlapMode::Full) > config.overlap_max) {
        ++c.rejected_overlap;
        return false;
      }
      return true;
    };

    parallel_for(split_groups.size(), [&](std::size_t gi) {
      const auto& group = split_groups[gi];
      const auto& idx = corpus.groups.at(group);
      auto& out = per_group[gi];
      if (idx.size() < kPremisesPerItem) return;
      ++out.counters.premise_groups;
      std::array<text::Sentence, kPremisesPerItem> premises;
      for (std::size_t i = 0; i < kPremisesPerItem; ++i) premises[i] = corpus.captions[idx[i]].sentence;
      std::set<graph::NodeId> taken;

      if (idx.size() > kPremisesPerItem) {
        ++out.counters.related_groups;
        const std::size_t src = idx[kPremisesPerItem];
        for (auto id : graph::simplify_hypothesis(corpus.captions[src].sentence, premises, graph))
          if (accept(id, premises, out.counters) && taken.insert(id).second)
            out.related.push_back({group, id, true, src});
        if (out.related.empty()) ++out.counters.groups_without_related;
      }

      if (split_groups.size() > 1 && config.unrelated_sources_per_group > 0) {
        Rng rng(split_seed ^ (0x9e3779b97f4a7c15ULL * (gi + 1)));
        for (std::size_t u = 0; u < config.unrelated_sources_per_group; ++u) {
          std::size_t other = rng.index(split_groups.size() - 1);
          if (other >= gi) ++other;
          const auto& oidx = corpus.groups.at(split_groups[other]);
          const std::size_t src = oidx[rng.index(oidx.size())];
          for (auto id : graph::simplify_hypothesis(corpus.captions[src].sentence, premises, graph))
            if (accept(id, premises, out.counters) && taken.insert(id).second)
              out.unrelated.push_back({group, id, false, src});
        }
      }
    });

    std::vector<Candidate> related, unrelated;
    for (auto& g : per_group) {
      related.insert(related.end(), g.related.begin(), g.related.end());
      unrelated.insert(unrelated.end(), g.unrelated.begin(), g.unrelated.end());
      const auto& c = g.counters;
      diag.premise_groups += c.premise_groups;
      diag.related_groups += c.related_groups;
      diag.groups_without_related += c.groups_without_related;
      diag.rejected_overlap += c.rejected_overlap;
      diag.rejected_frequency += c.rejected_frequency;
      diag.rejected_noun_phrase += c.rejected_noun_phrase;
      diag.rejected_no_content += c.rejected_no_content;
    }
    diag.related_pool = related.size();
    diag.unrelated_pool = unrelated.size();
    diag.requested_related = static_cast<std::size_t>(
        std::llround(static_cast<double>(diag.requested) * config.related_fraction));
    diag.requested_unrelated = diag.requested - diag.requested_related;

    std::vector<Candidate> chosen;
    auto sample = [&](std::vector<Candidate>& pool, std::size_t want) {
      split_rng.shuffle(pool);
      for (std::size_t i = 0; i < std::min(want, pool.size()); ++i) chosen.push_back(pool[i]);
    };
    sample(related, diag.requested_related);
    sample(unrelated, diag.requested_unrelated);
    split_rng.shuffle(chosen);
    diag.produced = chosen.size();

    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const auto& c = chosen[i];
      const auto& idx = corpus.groups.at(c.group);
      Item item;
      char id[32];
      std::snprintf(id, sizeof id, "%s-%05zu", split_name(split), i + 1);
      item.id = id;
      item.split = split;
      item.scene_group = c.group;
      for (std::size_t p = 0; p < kPremisesPerItem; ++p) item.premises[p] = corpus.captions[idx[p]].sentence.raw;
      item.hypothesis = render_hypothesis(graph.node(c.node).surface);
      const auto& src = corpus.captions[c.source_caption];
      item.generation = GenerationInfo{c.related, src.scene_group, src.sentence.raw, c.node};
      result.items.push_back(std::move(item));
    }
  }
  return result;
}

}  // namespace mpe::data
