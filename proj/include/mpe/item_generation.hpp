#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mpe/denotation_graph.hpp"
#include "mpe/items.hpp"
#include "mpe/text_core.hpp"

namespace mpe::data {

struct CaptionRecord {
  std::string scene_group;
  int caption_index = 0;
  Split split = Split::Train;
  text::Sentence sentence;
};

// Captions grouped by scene, each group sorted by caption index.
struct Corpus {
  std::vector<CaptionRecord> captions;  // file order
  std::map<std::string, std::vector<std::size_t>> groups;

  std::vector<graph::CaptionRef> caption_refs() const;
};

// Reads "scene_group_id<TAB>caption_index<TAB>caption_text". The optional splits map
// assigns scene groups to train/dev/test; unlisted groups are train.
Corpus load_corpus(const std::filesystem::path& path, const text::Normalizer& normalizer,
                   const std::map<std::string, Split>& splits = {});
// "scene_group_id<TAB>train|dev|test"
std::map<std::string, Split> read_splits(const std::filesystem::path& path);

struct FrequencyThresholds {
  int min_train_captions = 2;  // train hypotheses: captions in train
  int min_union_captions = 2;  // dev/test hypotheses: captions in train plus the split
  int min_split_captions = 1;  // dev/test hypotheses: captions in the split alone
};

struct GenerationConfig {
  double overlap_max = 0.5;
  std::array<std::size_t, kNumSplits> n_items{0, 0, 0};
  double related_fraction = 0.5;
  std::size_t unrelated_sources_per_group = 1;
  bool sentence_nodes_only = true;
  FrequencyThresholds thresholds;
  std::uint64_t seed = 42;
};

struct SplitDiagnostics {
  std::size_t requested = 0;
  std::size_t produced = 0;
  std::size_t requested_related = 0;
  std::size_t requested_unrelated = 0;
  std::size_t premise_groups = 0;            // groups with at least 4 captions
  std::size_t related_groups = 0;            // groups with a fifth caption
  std::size_t groups_without_related = 0;    // fifth caption fully excluded or filtered out
  std::size_t related_pool = 0;
  std::size_t unrelated_pool = 0;
  std::size_t rejected_overlap = 0;
  std::size_t rejected_frequency = 0;
  std::size_t rejected_noun_phrase = 0;
  std::size_t rejected_no_content = 0;

  bool shortfall() const { return produced < requested; }
};

struct GenerationResult {
  std::vector<Item> items;
  std::array<SplitDiagnostics, kNumSplits> diagnostics{};

  bool shortfall() const;
  std::string report() const;
};

// Pairs four premise captions of a scene with a simplified hypothesis taken either
// from the scene's fifth caption (related) or from a caption of another scene in the
// same split (unrelated). Candidates must satisfy the frequency thresholds and the
// overlap bound, then items are sampled without replacement under the seed. A pool
// too small for the request yields a partial list with the shortfall recorded.
GenerationResult generate_items(const Corpus& corpus, const graph::PhraseGraph& graph,
                                const text::Normalizer& normalizer, const GenerationConfig& config);

bool passes_frequency(const graph::PhraseNode& node, Split split, const FrequencyThresholds& t);

}  // namespace mpe::data
