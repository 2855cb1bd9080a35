#pragma once

// Phrase subsumption graph built from captions. Every caption is reduced by a small
// set of generalization rules (determiner and modifier dropping, prepositional phrase
// dropping, hypernym substitution, noun phrase extraction); the resulting phrases
// become nodes, and an edge parent -> child means the parent is a strictly more
// generic phrase derivable from the child.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mpe/common.hpp"
#include "mpe/text_core.hpp"

namespace mpe::graph {

class UnknownCaptionError : public ValidationError {
 public:
  explicit UnknownCaptionError(const std::string& phrase)
      : ValidationError("caption is not indexed in the phrase graph: \"" + phrase + "\"") {}
};

// Lemma sequence identifying a node.
using Phrase = std::vector<std::string>;
using NodeId = std::uint32_t;

std::string phrase_key(const Phrase& p);

enum class Rule {
  Lemmatize,
  DropDeterminer,
  DropAdjectivalModifier,
  DropPrepositionalPhrase,
  HypernymSubstitute,
  ExtractNounPhrase,
};

const char* rule_name(Rule r);

struct ReductionRuleSet {
  // Applied in this order when expanding a phrase. Lemmatize is implicit: every phrase
  // is a lemma sequence, so it only determines the closure's starting point.
  std::vector<Rule> rules = {Rule::Lemmatize,          Rule::DropDeterminer,
                             Rule::DropAdjectivalModifier, Rule::DropPrepositionalPhrase,
                             Rule::HypernymSubstitute, Rule::ExtractNounPhrase};

  std::set<std::string> determiners;
  std::set<std::string> prepositions;
  std::set<std::string> adjectives;
  std::set<std::string> numbers;
  std::set<std::string> nouns;  // includes every word of the hypernym lexicon
  std::set<std::string> function_words;
  std::map<std::string, std::string> hypernyms;

  // Reads chunk_lexicon.txt and hypernyms.txt from data_dir; stopwords become
  // function words. Throws ValidationError on a malformed or cyclic lexicon.
  static ReductionRuleSet load(const std::filesystem::path& data_dir,
                               const text::StopwordList& stopwords);

  void add_hypernym(const std::string& word, const std::string& hypernym);
  void check_acyclic() const;

  bool is_function(const std::string& lemma) const;
  bool is_number(const std::string& lemma) const;
  bool is_noun(const std::string& lemma) const { return nouns.count(lemma) != 0; }
  bool enabled(Rule r) const;
};

// A phrase together with the surface words it was derived from. Lemmas drive every
// rule; surface words are carried along so that the phrase can be rendered as text.
struct PhraseForm {
  Phrase lemmas;
  std::vector<std::string> surface;
  // True once noun phrase extraction was used somewhere in the derivation.
  bool noun_phrase = false;

  std::string surface_text() const { return join(surface, " "); }
};

// All single-rule applications to one phrase.
std::vector<PhraseForm> reduce_once(const PhraseForm& phrase, const ReductionRuleSet& rules);

struct ReducedPhrase {
  Phrase lemmas;
  std::string surface;
  // Reachable without noun phrase extraction, i.e. still a sentence-like phrase.
  bool sentence = false;
};

// Closure of the lemmatized caption under reduce_once, sorted by phrase key. Always
// contains the lemmatized caption itself.
std::vector<ReducedPhrase> apply_reductions(const text::Sentence& caption,
                                            const ReductionRuleSet& rules);

struct CaptionRef {
  std::string scene_group;
  Split split = Split::Train;
  text::Sentence sentence;
};

struct PhraseNode {
  NodeId id = 0;
  Phrase phrase;
  std::string surface;
  bool sentence = false;
  std::set<std::string> support;  // scene groups with a caption that reduces to this phrase
  std::array<int, kNumSplits> caption_count{};  // captions reducing to this phrase, per split
};

class PhraseGraph {
 public:
  static PhraseGraph build(std::span<const CaptionRef> captions, const ReductionRuleSet& rules);

  // Plain-text serialization; see docs/formats.md.
  std::string serialize() const;
  static PhraseGraph parse(std::string_view text, const std::string& source = "<graph>");

  std::size_t size() const { return nodes_.size(); }
  const std::vector<PhraseNode>& nodes() const { return nodes_; }
  const PhraseNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<NodeId>& parents(NodeId id) const { return parents_.at(id); }
  const std::vector<NodeId>& children(NodeId id) const { return children_.at(id); }
  std::vector<std::pair<NodeId, NodeId>> edges() const;  // (parent, child)

  std::optional<NodeId> find(const Phrase& phrase) const;
  std::optional<NodeId> find(const text::Sentence& s) const { return find(s.lemmas); }
  // Node of the i-th caption passed to build().
  NodeId caption_node(std::size_t caption) const { return caption_nodes_.at(caption); }
  std::size_t caption_count() const { return caption_nodes_.size(); }

  // Strict ancestors (more generic phrases), sorted by id. Never contains id itself.
  const std::vector<NodeId>& ancestors(NodeId id) const { return ancestors_.at(id); }
  bool is_ancestor(NodeId candidate, NodeId of) const;

 private:
  void finalize();

  std::vector<PhraseNode> nodes_;
  std::vector<std::vector<NodeId>> parents_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<std::vector<NodeId>> ancestors_;
  std::map<std::string, NodeId> index_;
  std::vector<NodeId> caption_nodes_;
};

// Generalizations of the source caption that are not also generalizations of any
// premise: ancestors(source) minus the union of ancestors(premise_i). Sorted by id.
std::vector<NodeId> simplify_hypothesis(const text::Sentence& source,
                                        std::span<const text::Sentence> premises,
                                        const PhraseGraph& graph);

}  // namespace mpe::graph
