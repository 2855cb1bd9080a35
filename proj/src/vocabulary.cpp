#include "mpe/vocabulary.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mpe::nn {

Vocabulary::Vocabulary() {
  add("<unk>");
  add("<sep>");
}

std::size_t Vocabulary::add(const std::string& token) {
  auto [it, inserted] = ids_.emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

TokenSeq Vocabulary::encode(std::string_view sentence) const {
  TokenSeq out;
  for (const auto& t : text::tokenize(sentence)) out.push_back(id(t));
  return out;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < kNumSpecial || tokens[kUnk] != "<unk>" || tokens[kSep] != "<sep>")
    throw ValidationError("vocabulary must start with <unk> and <sep>");
  Vocabulary v;
  for (std::size_t i = kNumSpecial; i < tokens.size(); ++i)
    if (v.add(tokens[i]) != i) throw ValidationError("duplicate vocabulary token \"" + tokens[i] + "\"");
  return v;
}

void extend_vocabulary(Vocabulary& vocab, std::span<const data::Item> items) {
  for (const auto& item : items) {
    for (const auto& p : item.premises)
      for (const auto& t : text::tokenize(p)) vocab.add(t);
    for (const auto& t : text::tokenize(item.hypothesis)) vocab.add(t);
  }
}

void extend_vocabulary(Vocabulary& vocab, std::span<const SinglePremisePair> pairs) {
  for (const auto& pair : pairs) {
    for (const auto& t : text::tokenize(pair.premise)) vocab.add(t);
    for (const auto& t : text::tokenize(pair.hypothesis)) vocab.add(t);
  }
}

namespace {

TokenSeq encode_nonempty(const Vocabulary& vocab, const std::string& text, const std::string& id) {
  TokenSeq seq = vocab.encode(text);
  if (seq.empty()) throw ValidationError("item " + id + ": sentence has no tokens: \"" + text + "\"");
  return seq;
}

}  // namespace

Example encode(const data::Item& item, const Vocabulary& vocab) {
  Example ex;
  ex.id = item.id;
  for (const auto& p : item.premises) ex.premises.push_back(encode_nonempty(vocab, p, item.id));
  ex.hypothesis = encode_nonempty(vocab, item.hypothesis, item.id);
  ex.label = item.gold;
  ex.pair_labels = item.pair_labels;
  ex.tags = item.phenomenon_tags;
  return ex;
}

Example encode(const SinglePremisePair& pair, const Vocabulary& vocab) {
  Example ex;
  ex.id = pair.id;
  ex.premises.push_back(encode_nonempty(vocab, pair.premise, pair.id));
  ex.hypothesis = encode_nonempty(vocab, pair.hypothesis, pair.id);
  ex.label = pair.label;
  return ex;
}

std::vector<Example> encode_all(std::span<const data::Item> items, const Vocabulary& vocab) {
  std::vector<Example> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(encode(item, vocab));
  return out;
}

std::vector<Example> encode_all(std::span<const SinglePremisePair> pairs, const Vocabulary& vocab) {
  std::vector<Example> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(encode(p, vocab));
  return out;
}

std::vector<SinglePremisePair> read_single_premise_jsonl(const std::filesystem::path& path, std::size_t* skipped) {
  std::vector<SinglePremisePair> out;
  std::size_t skip = 0;
  for (const auto& line : read_lines(path, false)) {
    if (trim(line.text).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line.text);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string(), line.number, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("sentence1") || !j.contains("sentence2") || !j.contains("gold_label"))
      throw ValidationError(path.string(), line.number, "expected sentence1, sentence2 and gold_label");
    SinglePremisePair p;
    try {
      p.premise = j.at("sentence1").get<std::string>();
      p.hypothesis = j.at("sentence2").get<std::string>();
      const auto gold = j.at("gold_label").get<std::string>();
      if (gold == "-") {
        ++skip;
        continue;
      }
      p.label = parse_label(gold);
      if (!p.label) throw ValidationError(path.string(), line.number, "invalid gold_label \"" + gold + "\"");
      p.id = j.contains("pairID") ? j.at("pairID").get<std::string>() : path.filename().string() + ":" + std::to_string(line.number);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path.string(), line.number, e.what());
    }
    out.push_back(std::move(p));
  }
  if (skipped) *skipped = skip;
  return out;
}

std::size_t load_embedding_file(const std::filesystem::path& path, const Vocabulary& vocab, ad::Tensor& table,
                                std::size_t first_id) {
  const std::size_t dim = table.cols();
  std::size_t filled = 0;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embedding file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = split(std::string(trim(line)), ' ');
    if (fields.size() <= 2 && line_no == 1) continue;  // "count dim" header
    if (fields.empty() || fields[0].empty()) continue;
    if (fields.size() != dim + 1)
      throw ValidationError(path.string(), line_no,
                            "expected " + std::to_string(dim) + " values, got " + std::to_string(fields.size() - 1));
    if (!vocab.contains(fields[0])) continue;
    const std::size_t id = vocab.id(fields[0]);
    if (id < first_id || id - first_id >= table.rows()) continue;
    const std::size_t row = id - first_id;
    for (std::size_t k = 0; k < dim; ++k) {
      const auto& f = fields[k + 1];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw ValidationError(path.string(), line_no, "bad number \"" + f + "\"");
      table.at(row, k) = v;
    }
    ++filled;
  }
  return filled;
}

}  // namespace mpe::nn
