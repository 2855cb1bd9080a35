#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpe/common.hpp"

namespace mpe::text {

class EmptySentenceError : public ValidationError {
 public:
  explicit EmptySentenceError(std::string_view raw)
      : ValidationError("sentence has no alphanumeric content: \"" + std::string(raw) + "\"") {}
};

class UndefinedOverlapError : public ValidationError {
 public:
  explicit UndefinedOverlapError(std::string_view raw)
      : ValidationError("hypothesis has no content tokens after stopword removal: \"" +
                        std::string(raw) + "\"") {}
};

class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(const std::vector<std::string>& words);

  // One word per line; '#' comments allowed.
  static StopwordList load(const std::filesystem::path& path);

  bool contains(std::string_view token) const { return words_.count(std::string(token)) != 0; }
  std::size_t size() const { return words_.size(); }
  const std::set<std::string>& words() const { return words_; }

 private:
  std::set<std::string> words_;
};

// Rule-based lemmatizer: an exception table consulted first, then suffix rules for
// plural -s/-es/-ies and verbal -ing/-ed (with consonant undoubling and silent-e
// restoration). Rules are re-applied until a fixpoint, so lemmatize(lemmatize(w))
// always equals lemmatize(w).
class LemmaRules {
 public:
  LemmaRules() = default;
  explicit LemmaRules(std::map<std::string, std::string> exceptions);

  // "word<TAB>lemma" per line.
  static LemmaRules load(const std::filesystem::path& path);

  std::string lemmatize(std::string_view token) const;
  const std::map<std::string, std::string>& exceptions() const { return exceptions_; }

 private:
  std::string apply_once(const std::string& token) const;

  std::map<std::string, std::string> exceptions_;
};

struct Sentence {
  std::string raw;
  std::vector<std::string> tokens;
  std::vector<std::string> lemmas;
  std::set<std::string> content_tokens;
  std::set<std::string> content_lemmas;
};

// Lowercases and splits on whitespace and punctuation. Bytes >= 0x80 are kept inside
// tokens so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view raw);

Sentence normalize(std::string_view raw, const StopwordList& stopwords, const LemmaRules& lemmas);

// Plural of an English noun: a few irregular forms, then -es after sibilants,
// consonant + y -> ies, otherwise -s.
std::string pluralize(std::string_view noun);

// Makes "a"/"an" agree with the following word (by its first letter).
void fix_articles(std::vector<std::string>& words);

enum class OverlapMode { Full, Lemma };

// Fraction of distinct hypothesis content types (tokens or lemmas) that occur in at
// least one premise.
double word_overlap(const Sentence& hypothesis, std::span<const Sentence> premises,
                    OverlapMode mode);

// Stopwords and lemma rules loaded together from a data directory.
class Normalizer {
 public:
  Normalizer(StopwordList stopwords, LemmaRules lemmas)
      : stopwords_(std::move(stopwords)), lemmas_(std::move(lemmas)) {}

  static Normalizer load(const std::filesystem::path& data_dir = default_data_dir());

  Sentence operator()(std::string_view raw) const { return normalize(raw, stopwords_, lemmas_); }
  const StopwordList& stopwords() const { return stopwords_; }
  const LemmaRules& lemma_rules() const { return lemmas_; }

 private:
  StopwordList stopwords_;
  LemmaRules lemmas_;
};

}  // namespace mpe::text
