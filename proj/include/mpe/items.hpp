#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mpe/common.hpp"
#include "mpe/text_core.hpp"

namespace mpe::data {

inline constexpr int kItemFormatVersion = 1;
inline constexpr std::size_t kPremisesPerItem = 4;
inline constexpr std::size_t kJudgmentsPerItem = 5;

// Who decided the gold label.
enum class LabelProvenance { Crowd, Adjudicated };
const char* provenance_name(LabelProvenance p);

// How a generated item's hypothesis was obtained.
struct GenerationInfo {
  bool related = true;             // simplified from the fifth caption of the premise image
  std::string source_group;        // scene group of the simplified caption
  std::string source_caption;      // raw text of the simplified caption
  std::uint32_t node = 0;          // phrase graph node of the hypothesis
};

struct Item {
  std::string id;
  Split split = Split::Train;
  std::string scene_group;
  std::array<std::string, kPremisesPerItem> premises;
  std::string hypothesis;
  std::optional<Label> gold;
  std::vector<Label> judgments;  // empty, or exactly five crowd judgments
  std::optional<std::array<Label, kPremisesPerItem>> pair_labels;
  std::set<std::string> phenomenon_tags;
  std::optional<LabelProvenance> provenance;
  std::optional<GenerationInfo> generation;

  // Throws ValidationError if the record breaks an Item invariant.
  void validate() const;
};

struct NormalizedItem {
  std::array<text::Sentence, kPremisesPerItem> premises;
  text::Sentence hypothesis;
};
NormalizedItem normalize_item(const Item& item, const text::Normalizer& normalizer);

// Line-delimited JSON, one item per line, each carrying "format_version".
std::string item_to_json_line(const Item& item);
Item item_from_json_line(std::string_view line, const std::string& source, std::size_t line_no);
std::string write_items(const std::vector<Item>& items);
std::vector<Item> read_items(const std::filesystem::path& path);

// "item_id<TAB>L,L,..." files: judgments (five labels), pair labels (four labels).
std::map<std::string, std::vector<Label>> read_label_lists(const std::filesystem::path& path,
                                                           std::size_t expected_count);
// "item_id<TAB>label" decisions file.
std::map<std::string, Label> read_decisions(const std::filesystem::path& path);

// Attaches pair labels to items by id. Returns the number of items that received them;
// ids in the file that match no item raise ValidationError.
std::size_t attach_pair_labels(std::vector<Item>& items,
                               const std::map<std::string, std::vector<Label>>& pairs);

// Importer for the tab-separated release layout with a header row naming at least
// premise1..premise4, hypothesis and gold_label (plus optional ID,
// entailment_judgments, neutral_judgments, contradiction_judgments). Premise cells of
// the form "<image>#<n>/<caption>" are stripped to the caption.
std::vector<Item> read_release_tsv(const std::filesystem::path& path, Split split);

}  // namespace mpe::data
