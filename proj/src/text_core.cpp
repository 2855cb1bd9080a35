#include "mpe/text_core.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace mpe::text {

namespace {

constexpr int kMaxLemmaPasses = 16;

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_vowel(c) || c == 'y'; });
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

bool all_ascii_letters(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

// Short consonant-vowel-consonant stems such as "rid", "smil", "skat" lost a silent e.
bool short_cvc(std::string_view s) {
  const std::size_t n = s.size();
  if (n < 3 || n > 4) return false;
  const char last = s[n - 1], mid = s[n - 2], first = s[n - 3];
  if (is_vowel(last) || last == 'w' || last == 'x' || last == 'y') return false;
  return is_vowel(mid) && !is_vowel(first);
}

// Repairs a stem left after stripping -ing/-ed.
std::string fix_stem(std::string stem) {
  const std::size_t n = stem.size();
  if (n >= 2 && stem[n - 1] == stem[n - 2]) {
    static constexpr std::string_view undouble = "bdgmnprt";
    if (undouble.find(stem[n - 1]) != std::string_view::npos) {
      stem.pop_back();
      return stem;
    }
  }
  const char last = stem.back();
  if (last == 'c' || last == 'v' || last == 'u' || last == 'z') return stem + "e";
  if (n >= 3 && last == 'l') {
    static constexpr std::string_view liquid_onsets = "bcdfgkptz";
    if (liquid_onsets.find(stem[n - 2]) != std::string_view::npos) return stem + "e";
  }
  if (short_cvc(stem)) return stem + "e";
  return stem;
}

}  // namespace

StopwordList::StopwordList(const std::vector<std::string>& words) {
  for (const auto& w : words) {
    auto t = trim(w);
    if (!t.empty()) words_.insert(to_lower(t));
  }
  if (words_.empty()) throw ValidationError("stopword list is empty");
}

StopwordList StopwordList::load(const std::filesystem::path& path) {
  std::vector<std::string> words;
  for (const auto& line : read_lines(path)) words.emplace_back(trim(line.text));
  try {
    return StopwordList(words);
  } catch (const ValidationError&) {
    throw ValidationError(path.string() + ": stopword list is empty");
  }
}

LemmaRules::LemmaRules(std::map<std::string, std::string> exceptions)
    : exceptions_(std::move(exceptions)) {
  for (const auto& [word, lemma] : exceptions_) {
    std::string cur = lemma;
    int passes = 0;
    for (;; ++passes) {
      std::string next = apply_once(cur);
      if (next == cur) break;
      if (passes >= kMaxLemmaPasses)
        throw ValidationError("lemma exception table cycles through \"" + word + "\"");
      cur = std::move(next);
    }
  }
}

LemmaRules LemmaRules::load(const std::filesystem::path& path) {
  std::map<std::string, std::string> table;
  for (const auto& line : read_lines(path)) {
    auto fields = split(line.text, '\t');
    if (fields.size() != 2)
      throw ValidationError(path.string(), line.number, "expected \"word<TAB>lemma\"");
    auto word = to_lower(trim(fields[0]));
    auto lemma = to_lower(trim(fields[1]));
    if (word.empty() || lemma.empty())
      throw ValidationError(path.string(), line.number, "empty word or lemma");
    table[word] = lemma;
  }
  return LemmaRules(std::move(table));
}

std::string LemmaRules::apply_once(const std::string& w) const {
  if (auto it = exceptions_.find(w); it != exceptions_.end()) return it->second;
  if (!all_ascii_letters(w)) return w;
  const std::size_t n = w.size();

  // Nominal plural.
  if (ends_with(w, "sses")) return w.substr(0, n - 2);
  if (ends_with(w, "ies") && n >= 4) return n > 4 ? w.substr(0, n - 3) + "y" : w.substr(0, n - 1);
  if (n >= 5 && (ends_with(w, "ches") || ends_with(w, "shes") || ends_with(w, "xes") ||
                 ends_with(w, "zzes")))
    return w.substr(0, n - 2);
  if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;

  // Verbal inflection.
  if (ends_with(w, "ing")) {
    std::string stem = w.substr(0, n - 3);
    if (stem.size() >= 2 && has_vowel(stem)) return fix_stem(std::move(stem));
    return w;
  }
  if (ends_with(w, "ied") && n >= 4) return n > 4 ? w.substr(0, n - 3) + "y" : w.substr(0, n - 1);
  if (ends_with(w, "eed")) return w;
  if (ends_with(w, "ed")) {
    std::string stem = w.substr(0, n - 2);
    if (stem.size() >= 3 && has_vowel(stem)) return fix_stem(std::move(stem));
    return w;
  }

  if (ends_with(w, "s") && n >= 4) return w.substr(0, n - 1);
  return w;
}

std::string LemmaRules::lemmatize(std::string_view token) const {
  std::string cur(token);
  for (int i = 0; i < kMaxLemmaPasses; ++i) {
    std::string next = apply_once(cur);
    if (next == cur) return cur;
    cur = std::move(next);
  }
  return cur;
}

std::vector<std::string> tokenize(std::string_view raw) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : raw) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

Sentence normalize(std::string_view raw, const StopwordList& stopwords, const LemmaRules& lemmas) {
  Sentence s;
  s.raw = std::string(raw);
  s.tokens = tokenize(raw);
  if (s.tokens.empty()) throw EmptySentenceError(raw);
  s.lemmas.reserve(s.tokens.size());
  for (const auto& tok : s.tokens) s.lemmas.push_back(lemmas.lemmatize(tok));
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (stopwords.contains(s.tokens[i])) continue;
    s.content_tokens.insert(s.tokens[i]);
    s.content_lemmas.insert(s.lemmas[i]);
  }
  return s;
}

double word_overlap(const Sentence& hypothesis, std::span<const Sentence> premises,
                    OverlapMode mode) {
  auto view = [mode](const Sentence& s) -> const std::set<std::string>& {
    return mode == OverlapMode::Full ? s.content_tokens : s.content_lemmas;
  };
  const auto& hyp = view(hypothesis);
  if (hyp.empty()) throw UndefinedOverlapError(hypothesis.raw);
  std::size_t hits = 0;
  for (const auto& type : hyp) {
    for (const auto& p : premises) {
      if (view(p).count(type)) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(hyp.size());
}

Normalizer Normalizer::load(const std::filesystem::path& data_dir) {
  return Normalizer(StopwordList::load(data_dir / "stopwords.txt"),
                    LemmaRules::load(data_dir / "lemma_exceptions.txt"));
}

std::string pluralize(std::string_view noun) {
  static const std::map<std::string, std::string, std::less<>> irregular = {
      {"child", "children"}, {"person", "people"}, {"man", "men"},     {"woman", "women"},
      {"foot", "feet"},      {"tooth", "teeth"},   {"mouse", "mice"},  {"goose", "geese"},
      {"sheep", "sheep"},    {"fish", "fish"},     {"deer", "deer"},   {"clothing", "clothing"},
      {"equipment", "equipment"}, {"food", "food"}, {"water", "water"},
  };
  std::string w(noun);
  if (w.empty()) return w;
  if (auto it = irregular.find(w); it != irregular.end()) return it->second;
  auto ends = [&](std::string_view suf) {
    return w.size() >= suf.size() && w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends("man") && w != "human") return w.substr(0, w.size() - 3) + "men";
  if (ends("s") || ends("x") || ends("z") || ends("ch") || ends("sh")) return w + "es";
  if (ends("y") && w.size() >= 2 && std::string_view("aeiou").find(w[w.size() - 2]) == std::string_view::npos)
    return w.substr(0, w.size() - 1) + "ies";
  return w + "s";
}

void fix_articles(std::vector<std::string>& words) {
  auto vowel_sound = [](const std::string& w) {
    if (w.empty()) return false;
    const char c = w[0];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o') return true;
    if (c == 'u') return !(w.rfind("uni", 0) == 0 || w.rfind("use", 0) == 0 || w.rfind("usu", 0) == 0);
    return false;
  };
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    if (words[i] != "a" && words[i] != "an") continue;
    words[i] = vowel_sound(words[i + 1]) ? "an" : "a";
  }
}

}  // namespace mpe::text
