#include "mpe/denotation_graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

namespace mpe::graph {

std::string phrase_key(const Phrase& p) { return join(p, " "); }

const char* rule_name(Rule r) {
  switch (r) {
    case Rule::Lemmatize: return "lemmatize";
    case Rule::DropDeterminer: return "drop-determiner";
    case Rule::DropAdjectivalModifier: return "drop-adjectival-modifier";
    case Rule::DropPrepositionalPhrase: return "drop-prepositional-phrase";
    case Rule::HypernymSubstitute: return "hypernym-substitute";
    case Rule::ExtractNounPhrase: return "extract-noun-phrase";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Rule set

ReductionRuleSet ReductionRuleSet::load(const std::filesystem::path& data_dir,
                                        const text::StopwordList& stopwords) {
  ReductionRuleSet rs;
  rs.function_words = stopwords.words();
  const auto chunk_path = data_dir / "chunk_lexicon.txt";
  for (const auto& line : read_lines(chunk_path)) {
    auto f = split(line.text, '\t');
    if (f.size() != 2) throw ValidationError(chunk_path.string(), line.number, "expected \"class<TAB>lemma\"");
    const std::string cls(trim(f[0]));
    std::string word = to_lower(trim(f[1]));
    if (cls == "det") rs.determiners.insert(word);
    else if (cls == "prep") rs.prepositions.insert(word);
    else if (cls == "adj") rs.adjectives.insert(word);
    else if (cls == "num") rs.numbers.insert(word);
    else if (cls == "noun") rs.nouns.insert(word);
    else throw ValidationError(chunk_path.string(), line.number, "unknown class \"" + cls + "\"");
  }
  const auto hyp_path = data_dir / "hypernyms.txt";
  for (const auto& line : read_lines(hyp_path)) {
    auto f = split(line.text, '\t');
    if (f.size() != 2) throw ValidationError(hyp_path.string(), line.number, "expected \"noun<TAB>hypernym\"");
    std::string word = to_lower(trim(f[0])), hyper = to_lower(trim(f[1]));
    if (rs.hypernyms.count(word))
      throw ValidationError(hyp_path.string(), line.number, "duplicate entry for \"" + word + "\"");
    rs.add_hypernym(word, hyper);
  }
  rs.check_acyclic();
  return rs;
}

void ReductionRuleSet::add_hypernym(const std::string& word, const std::string& hypernym) {
  if (word.empty() || hypernym.empty() || word == hypernym)
    throw ValidationError("invalid hypernym pair \"" + word + "\" -> \"" + hypernym + "\"");
  hypernyms[word] = hypernym;
  nouns.insert(word);
  nouns.insert(hypernym);
}

void ReductionRuleSet::check_acyclic() const {
  for (const auto& [start, _] : hypernyms) {
    std::string cur = start;
    for (std::size_t steps = 0;; ++steps) {
      auto it = hypernyms.find(cur);
      if (it == hypernyms.end()) break;
      if (steps > hypernyms.size())
        throw ValidationError("hypernym lexicon contains a cycle through \"" + start + "\"");
      cur = it->second;
    }
  }
}

bool ReductionRuleSet::is_function(const std::string& lemma) const {
  return determiners.count(lemma) || prepositions.count(lemma) || function_words.count(lemma);
}

bool ReductionRuleSet::is_number(const std::string& lemma) const {
  if (numbers.count(lemma)) return true;
  return !lemma.empty() &&
         std::all_of(lemma.begin(), lemma.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool ReductionRuleSet::enabled(Rule r) const {
  return std::find(rules.begin(), rules.end(), r) != rules.end();
}

// ---------------------------------------------------------------------------
// Reductions

namespace {

PhraseForm erase_range(const PhraseForm& p, std::size_t begin, std::size_t end) {
  PhraseForm out;
  out.noun_phrase = p.noun_phrase;
  for (std::size_t i = 0; i < p.lemmas.size(); ++i) {
    if (i >= begin && i < end) continue;
    out.lemmas.push_back(p.lemmas[i]);
    out.surface.push_back(p.surface[i]);
  }
  return out;
}

// A word listed both as adjective and noun ("short") modifies only when a noun follows.
bool is_adjective_before_content(const PhraseForm& p, std::size_t i, const ReductionRuleSet& rs) {
  const auto& l = p.lemmas;
  if (!rs.adjectives.count(l[i]) || i + 1 >= l.size() || rs.is_function(l[i + 1])) return false;
  return !rs.is_noun(l[i]) || rs.is_noun(l[i + 1]);
}

void drop_determiners(const PhraseForm& p, const ReductionRuleSet& rs, std::vector<PhraseForm>& out) {
  PhraseForm r;
  r.noun_phrase = p.noun_phrase;
  for (std::size_t i = 0; i < p.lemmas.size(); ++i) {
    if (rs.determiners.count(p.lemmas[i])) continue;
    r.lemmas.push_back(p.lemmas[i]);
    r.surface.push_back(p.surface[i]);
  }
  if (!r.lemmas.empty() && r.lemmas.size() < p.lemmas.size()) out.push_back(std::move(r));
}

void drop_adjectives(const PhraseForm& p, const ReductionRuleSet& rs, std::vector<PhraseForm>& out) {
  for (std::size_t i = 0; i < p.lemmas.size(); ++i)
    if (is_adjective_before_content(p, i, rs)) out.push_back(erase_range(p, i, i + 1));
}

// A prepositional phrase spans the preposition, optional determiners and numbers,
// adjectives, and a head: a run of known nouns, or else one content word.
void drop_pps(const PhraseForm& p, const ReductionRuleSet& rs, std::vector<PhraseForm>& out) {
  const auto& l = p.lemmas;
  const std::size_t n = l.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!rs.prepositions.count(l[i])) continue;
    std::size_t j = i + 1;
    while (j < n && (rs.determiners.count(l[j]) || rs.is_number(l[j]))) ++j;
    while (j < n && is_adjective_before_content(p, j, rs)) ++j;
    std::size_t k = j;
    while (k < n && rs.is_noun(l[k])) ++k;
    if (k == j) {
      if (j < n && !rs.is_function(l[j])) k = j + 1;
      else continue;
    }
    if (k - i == n) continue;
    out.push_back(erase_range(p, i, k));
  }
}

void substitute_hypernyms(const PhraseForm& p, const ReductionRuleSet& rs, std::vector<PhraseForm>& out) {
  for (std::size_t i = 0; i < p.lemmas.size(); ++i) {
    auto it = rs.hypernyms.find(p.lemmas[i]);
    if (it == rs.hypernyms.end()) continue;
    PhraseForm r = p;
    r.lemmas[i] = it->second;
    // An inflected surface word is taken to be a plural noun.
    r.surface[i] = p.surface[i] != p.lemmas[i] ? text::pluralize(it->second) : it->second;
    out.push_back(std::move(r));
  }
}

// Maximal chunks of the shape (det|num)* adj* noun+.
void extract_nps(const PhraseForm& p, const ReductionRuleSet& rs, std::vector<PhraseForm>& out) {
  const auto& l = p.lemmas;
  const std::size_t n = l.size();
  std::size_t s = 0;
  while (s < n) {
    std::size_t j = s;
    while (j < n && (rs.determiners.count(l[j]) || rs.is_number(l[j]))) ++j;
    while (j < n && rs.adjectives.count(l[j]) && !rs.is_noun(l[j])) ++j;
    std::size_t k = j;
    while (k < n && rs.is_noun(l[k])) ++k;
    if (k > j) {
      if (k - s < n) {
        PhraseForm r;
        r.noun_phrase = true;
        r.lemmas.assign(l.begin() + static_cast<long>(s), l.begin() + static_cast<long>(k));
        r.surface.assign(p.surface.begin() + static_cast<long>(s),
                         p.surface.begin() + static_cast<long>(k));
        out.push_back(std::move(r));
      }
      s = k;
    } else {
      s = s + 1;
    }
  }
}

}  // namespace

std::vector<PhraseForm> reduce_once(const PhraseForm& phrase, const ReductionRuleSet& rules) {
  std::vector<PhraseForm> out;
  if (phrase.lemmas.size() != phrase.surface.size())
    throw std::invalid_argument("reduce_once: lemma and surface lengths differ");
  for (Rule r : rules.rules) {
    switch (r) {
      case Rule::Lemmatize: break;
      case Rule::DropDeterminer: drop_determiners(phrase, rules, out); break;
      case Rule::DropAdjectivalModifier: drop_adjectives(phrase, rules, out); break;
      case Rule::DropPrepositionalPhrase: drop_pps(phrase, rules, out); break;
      case Rule::HypernymSubstitute: substitute_hypernyms(phrase, rules, out); break;
      case Rule::ExtractNounPhrase: extract_nps(phrase, rules, out); break;
    }
  }
  // Every output must differ from its input; drop identity results.
  std::erase_if(out, [&](const PhraseForm& f) { return f.lemmas == phrase.lemmas; });
  return out;
}

std::vector<ReducedPhrase> apply_reductions(const text::Sentence& caption,
                                            const ReductionRuleSet& rules) {
  struct Entry {
    ReducedPhrase phrase;
    bool seen_as_np = false;
  };
  std::map<std::string, Entry> seen;
  std::deque<PhraseForm> queue;

  PhraseForm base{caption.lemmas, caption.tokens, false};
  queue.push_back(base);
  seen[phrase_key(base.lemmas)] = {{base.lemmas, base.surface_text(), true}, false};

  while (!queue.empty()) {
    PhraseForm cur = std::move(queue.front());
    queue.pop_front();
    for (auto& next : reduce_once(cur, rules)) {
      auto key = phrase_key(next.lemmas);
      auto it = seen.find(key);
      if (it == seen.end()) {
        Entry e{{next.lemmas, next.surface_text(), !next.noun_phrase}, next.noun_phrase};
        seen.emplace(key, std::move(e));
        queue.push_back(std::move(next));
        continue;
      }
      // Revisit only when this derivation upgrades the phrase to sentence-like, so
      // that everything below it is marked as well.
      if (!next.noun_phrase && !it->second.phrase.sentence) {
        it->second.phrase.sentence = true;
        queue.push_back(std::move(next));
      }
    }
  }

  std::vector<ReducedPhrase> out;
  out.reserve(seen.size());
  for (auto& [_, e] : seen) out.push_back(std::move(e.phrase));
  return out;
}

// ---------------------------------------------------------------------------
// Graph

PhraseGraph PhraseGraph::build(std::span<const CaptionRef> captions, const ReductionRuleSet& rules) {
  PhraseGraph g;
  auto intern = [&g](const ReducedPhrase& rp) -> NodeId {
    auto key = phrase_key(rp.lemmas);
    auto it = g.index_.find(key);
    if (it != g.index_.end()) {
      auto& node = g.nodes_[it->second];
      if (rp.surface < node.surface) node.surface = rp.surface;
      node.sentence = node.sentence || rp.sentence;
      return it->second;
    }
    auto id = static_cast<NodeId>(g.nodes_.size());
    g.nodes_.push_back({id, rp.lemmas, rp.surface, rp.sentence, {}, {}});
    g.index_.emplace(std::move(key), id);
    return id;
  };

  for (const auto& cap : captions) {
    if (cap.scene_group.empty()) throw ValidationError("caption with empty scene group id");
    auto closure = apply_reductions(cap.sentence, rules);
    for (const auto& rp : closure) {
      NodeId id = intern(rp);
      auto& node = g.nodes_[id];
      node.support.insert(cap.scene_group);
      ++node.caption_count[static_cast<std::size_t>(cap.split)];
    }
    g.caption_nodes_.push_back(g.index_.at(phrase_key(cap.sentence.lemmas)));
  }

  // One-step generalizations of every node. Closures are closed under reduce_once, so
  // every result is already a node.
  const std::size_t n = g.nodes_.size();
  std::vector<std::vector<NodeId>> step(n);
  for (NodeId id = 0; id < n; ++id) {
    const auto& node = g.nodes_[id];
    PhraseForm form{node.phrase, split(node.surface, ' '), !node.sentence};
    if (form.surface.size() != form.lemmas.size()) form.surface = form.lemmas;
    for (const auto& r : reduce_once(form, rules)) step[id].push_back(g.index_.at(phrase_key(r.lemmas)));
    std::sort(step[id].begin(), step[id].end());
    step[id].erase(std::unique(step[id].begin(), step[id].end()), step[id].end());
  }

  // Ancestors over the one-step relation, then the transitive reduction: a one-step
  // parent p of c is kept unless it is reachable through another one-step parent.
  std::vector<std::vector<NodeId>> anc(n);
  std::vector<std::uint8_t> state(n, 0);
  std::function<void(NodeId)> visit = [&](NodeId id) {
    if (state[id] == 2) return;
    if (state[id] == 1) throw std::logic_error("reduction rules produced a cycle");
    state[id] = 1;
    std::vector<NodeId> acc;
    for (NodeId p : step[id]) {
      visit(p);
      acc.push_back(p);
      acc.insert(acc.end(), anc[p].begin(), anc[p].end());
    }
    std::sort(acc.begin(), acc.end());
    acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
    anc[id] = std::move(acc);
    state[id] = 2;
  };
  for (NodeId id = 0; id < n; ++id) visit(id);

  g.parents_.assign(n, {});
  for (NodeId c = 0; c < n; ++c) {
    for (NodeId p : step[c]) {
      bool implied = false;
      for (NodeId q : step[c]) {
        if (q != p && std::binary_search(anc[q].begin(), anc[q].end(), p)) {
          implied = true;
          break;
        }
      }
      if (!implied) g.parents_[c].push_back(p);
    }
  }
  g.finalize();
  return g;
}

void PhraseGraph::finalize() {
  const std::size_t n = nodes_.size();
  children_.assign(n, {});
  for (NodeId c = 0; c < n; ++c)
    for (NodeId p : parents_[c]) children_[p].push_back(c);

  ancestors_.assign(n, {});
  std::vector<std::uint8_t> state(n, 0);
  std::function<void(NodeId)> visit = [&](NodeId id) {
    if (state[id] == 2) return;
    if (state[id] == 1) throw ValidationError("phrase graph contains a cycle at node " + std::to_string(id));
    state[id] = 1;
    std::vector<NodeId> acc;
    for (NodeId p : parents_[id]) {
      visit(p);
      acc.push_back(p);
      acc.insert(acc.end(), ancestors_[p].begin(), ancestors_[p].end());
    }
    std::sort(acc.begin(), acc.end());
    acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
    ancestors_[id] = std::move(acc);
    state[id] = 2;
  };
  for (NodeId id = 0; id < n; ++id) visit(id);
}

std::vector<std::pair<NodeId, NodeId>> PhraseGraph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (NodeId c = 0; c < parents_.size(); ++c)
    for (NodeId p : parents_[c]) out.emplace_back(p, c);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<NodeId> PhraseGraph::find(const Phrase& phrase) const {
  auto it = index_.find(phrase_key(phrase));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool PhraseGraph::is_ancestor(NodeId candidate, NodeId of) const {
  const auto& a = ancestors_.at(of);
  return std::binary_search(a.begin(), a.end(), candidate);
}

std::string PhraseGraph::serialize() const {
  std::ostringstream out;
  out << "mpe-graph\t1\n";
  for (const auto& node : nodes_) {
    out << "node\t" << node.id << '\t' << phrase_key(node.phrase) << '\t' << node.surface << '\t'
        << (node.sentence ? "S" : "NP") << '\t' << node.caption_count[0] << ','
        << node.caption_count[1] << ',' << node.caption_count[2] << '\t';
    bool first = true;
    for (const auto& s : node.support) {
      out << (first ? "" : ",") << s;
      first = false;
    }
    out << '\n';
  }
  for (const auto& [p, c] : edges()) out << "edge\t" << p << '\t' << c << '\n';
  for (std::size_t i = 0; i < caption_nodes_.size(); ++i)
    out << "caption\t" << i << '\t' << caption_nodes_[i] << '\n';
  return out.str();
}

PhraseGraph PhraseGraph::parse(std::string_view text, const std::string& source) {
  PhraseGraph g;
  std::size_t line_no = 0;
  bool header = false;
  auto to_id = [&](const std::string& s, std::size_t limit) -> NodeId {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != s.size() || s.empty() || v >= limit)
      throw ValidationError(source, line_no, "invalid node id \"" + s + "\"");
    return static_cast<NodeId>(v);
  };
  for (auto& raw : split(text, '\n')) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    auto f = split(raw, '\t');
    if (!header) {
      if (f.size() != 2 || f[0] != "mpe-graph") throw ValidationError(source, line_no, "missing mpe-graph header");
      if (f[1] != "1") throw ValidationError(source, line_no, "unsupported graph format version " + f[1]);
      header = true;
      continue;
    }
    if (f[0] == "node") {
      if (f.size() != 7) throw ValidationError(source, line_no, "node record needs 7 fields");
      if (to_id(f[1], g.nodes_.size() + 1) != g.nodes_.size())
        throw ValidationError(source, line_no, "node ids must be consecutive from 0");
      PhraseNode node;
      node.id = static_cast<NodeId>(g.nodes_.size());
      node.phrase = split(f[2], ' ');
      if (f[2].empty()) throw ValidationError(source, line_no, "empty phrase");
      node.surface = f[3];
      if (f[4] != "S" && f[4] != "NP") throw ValidationError(source, line_no, "node kind must be S or NP");
      node.sentence = f[4] == "S";
      auto counts = split(f[5], ',');
      if (counts.size() != kNumSplits) throw ValidationError(source, line_no, "expected three caption counts");
      for (std::size_t i = 0; i < kNumSplits; ++i) node.caption_count[i] = static_cast<int>(to_id(counts[i], 1u << 31));
      if (!f[6].empty())
        for (auto& s : split(f[6], ',')) node.support.insert(s);
      if (node.support.empty()) throw ValidationError(source, line_no, "node without support");
      if (!g.index_.emplace(phrase_key(node.phrase), node.id).second)
        throw ValidationError(source, line_no, "duplicate phrase \"" + f[2] + "\"");
      g.nodes_.push_back(std::move(node));
      g.parents_.emplace_back();
    } else if (f[0] == "edge") {
      if (f.size() != 3) throw ValidationError(source, line_no, "edge record needs 3 fields");
      NodeId p = to_id(f[1], g.nodes_.size()), c = to_id(f[2], g.nodes_.size());
      if (p == c) throw ValidationError(source, line_no, "self edge");
      g.parents_[c].push_back(p);
    } else if (f[0] == "caption") {
      if (f.size() != 3) throw ValidationError(source, line_no, "caption record needs 3 fields");
      if (to_id(f[1], g.caption_nodes_.size() + 1) != g.caption_nodes_.size())
        throw ValidationError(source, line_no, "caption ordinals must be consecutive from 0");
      g.caption_nodes_.push_back(to_id(f[2], g.nodes_.size()));
    } else {
      throw ValidationError(source, line_no, "unknown record type \"" + f[0] + "\"");
    }
  }
  if (!header) throw ValidationError(source, 1, "missing mpe-graph header");
  for (auto& ps : g.parents_) std::sort(ps.begin(), ps.end());
  g.finalize();
  return g;
}

std::vector<NodeId> simplify_hypothesis(const text::Sentence& source,
                                        std::span<const text::Sentence> premises,
                                        const PhraseGraph& graph) {
  auto src = graph.find(source);
  if (!src) throw UnknownCaptionError(phrase_key(source.lemmas));
  std::set<NodeId> excluded;
  for (const auto& p : premises) {
    auto pid = graph.find(p);
    if (!pid) throw UnknownCaptionError(phrase_key(p.lemmas));
    const auto& a = graph.ancestors(*pid);
    excluded.insert(a.begin(), a.end());
  }
  std::vector<NodeId> out;
  for (NodeId a : graph.ancestors(*src))
    if (!excluded.count(a)) out.push_back(a);
  return out;
}

}  // namespace mpe::graph
