#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mpe/items.hpp"
#include "mpe/tensor.hpp"

namespace mpe::nn {

using TokenSeq = std::vector<std::size_t>;

// Token to id map. Id 0 is the unknown-word symbol and id 1 the premise separator.
class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;
  static constexpr std::size_t kSep = 1;
  static constexpr std::size_t kNumSpecial = 2;

  Vocabulary();

  std::size_t add(const std::string& token);
  std::size_t id(const std::string& token) const;  // kUnk when absent
  bool contains(const std::string& token) const { return ids_.count(token) > 0; }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenSeq encode(std::string_view sentence) const;

  // Rebuilds from the token list as stored in a checkpoint (specials included).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
};

// One model input: one premise (single-premise pairs) or four (MPE items).
struct Example {
  std::string id;
  std::vector<TokenSeq> premises;
  TokenSeq hypothesis;
  std::optional<Label> label;
  std::optional<std::array<Label, data::kPremisesPerItem>> pair_labels;
  std::set<std::string> tags;
};

// Adds every token of the premises and hypotheses (in first-seen order).
void extend_vocabulary(Vocabulary& vocab, std::span<const data::Item> items);

struct SinglePremisePair {
  std::string id;
  std::string premise;
  std::string hypothesis;
  std::optional<Label> label;
};
void extend_vocabulary(Vocabulary& vocab, std::span<const SinglePremisePair> pairs);

Example encode(const data::Item& item, const Vocabulary& vocab);
Example encode(const SinglePremisePair& pair, const Vocabulary& vocab);
std::vector<Example> encode_all(std::span<const data::Item> items, const Vocabulary& vocab);
std::vector<Example> encode_all(std::span<const SinglePremisePair> pairs, const Vocabulary& vocab);

// Line-delimited JSON with "sentence1", "sentence2" and "gold_label" (and optional
// "pairID"). Lines whose gold label is "-" carry no consensus and are skipped;
// `skipped` receives their count.
std::vector<SinglePremisePair> read_single_premise_jsonl(const std::filesystem::path& path,
                                                         std::size_t* skipped = nullptr);

// Reads "token v1 ... vd" lines into `table`, whose row r holds vocabulary id
// first_id + r. Tokens outside the vocabulary are ignored. Returns the rows filled.
std::size_t load_embedding_file(const std::filesystem::path& path, const Vocabulary& vocab, ad::Tensor& table,
                                std::size_t first_id);

}  // namespace mpe::nn
