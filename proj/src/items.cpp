#include "mpe/items.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace mpe::data {

using nlohmann::json;

const char* provenance_name(LabelProvenance p) {
  return p == LabelProvenance::Crowd ? "crowd" : "adjudicated";
}

void Item::validate() const {
  if (id.empty()) throw ValidationError("item with empty id");
  for (const auto& p : premises)
    if (text::tokenize(p).empty()) throw ValidationError("item " + id + ": empty premise");
  if (text::tokenize(hypothesis).empty()) throw ValidationError("item " + id + ": empty hypothesis");
  if (!judgments.empty() && judgments.size() != kJudgmentsPerItem)
    throw ValidationError("item " + id + ": expected 5 judgments, got " +
                          std::to_string(judgments.size()));
}

NormalizedItem normalize_item(const Item& item, const text::Normalizer& normalizer) {
  NormalizedItem out;
  for (std::size_t i = 0; i < kPremisesPerItem; ++i) out.premises[i] = normalizer(item.premises[i]);
  out.hypothesis = normalizer(item.hypothesis);
  return out;
}

namespace {

std::string label_string(Label l) { return std::string(1, label_char(l)); }

Label json_label(const json& j, const std::string& source, std::size_t line_no) {
  if (!j.is_string()) throw ValidationError(source, line_no, "label must be a string");
  auto l = parse_label(j.get<std::string>());
  if (!l) throw ValidationError(source, line_no, "invalid label \"" + j.get<std::string>() + "\"");
  return *l;
}

std::vector<Label> parse_label_list(const std::string& field, const std::string& source,
                                    std::size_t line_no) {
  std::vector<Label> out;
  for (const auto& part : split(field, ',')) {
    auto l = parse_label(part);
    if (!l) throw ValidationError(source, line_no, "invalid label \"" + std::string(trim(part)) + "\"");
    out.push_back(*l);
  }
  return out;
}

}  // namespace

std::string item_to_json_line(const Item& item) {
  json j;
  j["format_version"] = kItemFormatVersion;
  j["id"] = item.id;
  j["split"] = split_name(item.split);
  j["scene_group"] = item.scene_group;
  j["premises"] = item.premises;
  j["hypothesis"] = item.hypothesis;
  j["gold_label"] = item.gold ? json(label_string(*item.gold)) : json(nullptr);
  json judg = json::array();
  for (Label l : item.judgments) judg.push_back(label_string(l));
  j["judgments"] = judg;
  if (item.pair_labels) {
    json pl = json::array();
    for (Label l : *item.pair_labels) pl.push_back(label_string(l));
    j["pair_labels"] = pl;
  } else {
    j["pair_labels"] = nullptr;
  }
  j["phenomenon_tags"] = item.phenomenon_tags;
  j["label_provenance"] = item.provenance ? json(provenance_name(*item.provenance)) : json(nullptr);
  if (item.generation) {
    const auto& g = *item.generation;
    j["generation"] = {{"related", g.related},
                       {"source_group", g.source_group},
                       {"source_caption", g.source_caption},
                       {"node", g.node}};
  } else {
    j["generation"] = nullptr;
  }
  return j.dump();
}

Item item_from_json_line(std::string_view line, const std::string& source, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(source, line_no, std::string("malformed JSON: ") + e.what());
  }
  auto fail = [&](const std::string& msg) { return ValidationError(source, line_no, msg); };
  try {
    if (!j.is_object()) throw fail("item record must be a JSON object");
    if (!j.contains("format_version") || j["format_version"] != kItemFormatVersion)
      throw fail("unsupported or missing format_version (expected " +
                 std::to_string(kItemFormatVersion) + ")");
    Item item;
    item.id = j.at("id").get<std::string>();
    auto sp = parse_split(j.at("split").get<std::string>());
    if (!sp) throw fail("invalid split");
    item.split = *sp;
    item.scene_group = j.value("scene_group", std::string());
    const auto& prem = j.at("premises");
    if (!prem.is_array() || prem.size() != kPremisesPerItem)
      throw fail("expected exactly 4 premises");
    for (std::size_t i = 0; i < kPremisesPerItem; ++i) item.premises[i] = prem[i].get<std::string>();
    item.hypothesis = j.at("hypothesis").get<std::string>();
    if (j.contains("gold_label") && !j["gold_label"].is_null())
      item.gold = json_label(j["gold_label"], source, line_no);
    if (j.contains("judgments"))
      for (const auto& l : j["judgments"]) item.judgments.push_back(json_label(l, source, line_no));
    if (j.contains("pair_labels") && !j["pair_labels"].is_null()) {
      const auto& pl = j["pair_labels"];
      if (!pl.is_array() || pl.size() != kPremisesPerItem) throw fail("expected exactly 4 pair labels");
      std::array<Label, kPremisesPerItem> labels{};
      for (std::size_t i = 0; i < kPremisesPerItem; ++i) labels[i] = json_label(pl[i], source, line_no);
      item.pair_labels = labels;
    }
    if (j.contains("phenomenon_tags"))
      for (const auto& t : j["phenomenon_tags"]) item.phenomenon_tags.insert(t.get<std::string>());
    if (j.contains("label_provenance") && !j["label_provenance"].is_null()) {
      auto p = j["label_provenance"].get<std::string>();
      if (p == "crowd") item.provenance = LabelProvenance::Crowd;
      else if (p == "adjudicated") item.provenance = LabelProvenance::Adjudicated;
      else throw fail("invalid label_provenance \"" + p + "\"");
    }
    if (j.contains("generation") && !j["generation"].is_null()) {
      const auto& g = j["generation"];
      item.generation = GenerationInfo{g.at("related").get<bool>(), g.at("source_group").get<std::string>(),
                                       g.at("source_caption").get<std::string>(),
                                       g.at("node").get<std::uint32_t>()};
    }
    item.validate();
    return item;
  } catch (const json::exception& e) {
    throw fail(std::string("bad item record: ") + e.what());
  } catch (const ValidationError& e) {
    if (std::string(e.what()).rfind(source, 0) == 0) throw;
    throw fail(e.what());
  }
}

std::string write_items(const std::vector<Item>& items) {
  std::string out;
  for (const auto& item : items) {
    out += item_to_json_line(item);
    out += '\n';
  }
  return out;
}

std::vector<Item> read_items(const std::filesystem::path& path) {
  std::vector<Item> items;
  std::set<std::string> ids;
  for (const auto& line : read_lines(path, false)) {
    if (trim(line.text).empty()) continue;
    items.push_back(item_from_json_line(line.text, path.string(), line.number));
    if (!ids.insert(items.back().id).second)
      throw ValidationError(path.string(), line.number, "duplicate item id " + items.back().id);
  }
  return items;
}

std::map<std::string, std::vector<Label>> read_label_lists(const std::filesystem::path& path,
                                                           std::size_t expected_count) {
  std::map<std::string, std::vector<Label>> out;
  for (const auto& line : read_lines(path)) {
    auto f = split(line.text, '\t');
    if (f.size() != 2) throw ValidationError(path.string(), line.number, "expected \"item_id<TAB>labels\"");
    std::string id(trim(f[0]));
    auto labels = parse_label_list(f[1], path.string(), line.number);
    if (labels.size() != expected_count)
      throw ValidationError(path.string(), line.number,
                            "expected " + std::to_string(expected_count) + " labels, got " +
                                std::to_string(labels.size()));
    if (!out.emplace(id, std::move(labels)).second)
      throw ValidationError(path.string(), line.number, "duplicate item id " + id);
  }
  return out;
}

std::map<std::string, Label> read_decisions(const std::filesystem::path& path) {
  std::map<std::string, Label> out;
  for (const auto& line : read_lines(path)) {
    auto f = split(line.text, '\t');
    if (f.size() != 2) throw ValidationError(path.string(), line.number, "expected \"item_id<TAB>label\"");
    auto l = parse_label(f[1]);
    if (!l) throw ValidationError(path.string(), line.number, "invalid label \"" + f[1] + "\"");
    std::string id(trim(f[0]));
    if (!out.emplace(id, *l).second)
      throw ValidationError(path.string(), line.number, "duplicate decision for " + id);
  }
  return out;
}

std::size_t attach_pair_labels(std::vector<Item>& items,
                               const std::map<std::string, std::vector<Label>>& pairs) {
  std::map<std::string, Item*> by_id;
  for (auto& item : items) by_id[item.id] = &item;
  std::size_t attached = 0;
  for (const auto& [id, labels] : pairs) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("pair labels given for unknown item id " + id);
    if (labels.size() != kPremisesPerItem)
      throw ValidationError("item " + id + ": expected 4 pair labels");
    std::array<Label, kPremisesPerItem> arr{};
    std::copy(labels.begin(), labels.end(), arr.begin());
    it->second->pair_labels = arr;
    ++attached;
  }
  return attached;
}

std::vector<Item> read_release_tsv(const std::filesystem::path& path, Split split_tag) {
  auto lines = read_lines(path, false);
  if (lines.empty()) throw ValidationError(path.string(), 1, "empty file");
  auto header = split(lines[0].text, '\t');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[to_lower(trim(header[i]))] = i;
  auto need = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw ValidationError(path.string(), lines[0].number, "missing column " + name);
    return it->second;
  };
  std::array<std::size_t, kPremisesPerItem> pcol{need("premise1"), need("premise2"), need("premise3"),
                                                 need("premise4")};
  const std::size_t hcol = need("hypothesis"), gcol = need("gold_label");
  std::optional<std::size_t> idcol, ecol, ncol, ccol;
  if (col.count("id")) idcol = col["id"];
  if (col.count("entailment_judgments") && col.count("neutral_judgments") &&
      col.count("contradiction_judgments")) {
    ecol = col["entailment_judgments"];
    ncol = col["neutral_judgments"];
    ccol = col["contradiction_judgments"];
  }

  auto strip_image_prefix = [](const std::string& cell) {
    auto slash = cell.find('/');
    auto hash = cell.find('#');
    if (slash != std::string::npos && hash != std::string::npos && hash < slash) return cell.substr(slash + 1);
    return cell;
  };

  std::vector<Item> items;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto& line = lines[li];
    if (trim(line.text).empty()) continue;
    auto f = split(line.text, '\t');
    if (f.size() < header.size())
      throw ValidationError(path.string(), line.number, "expected " + std::to_string(header.size()) + " columns");
    Item item;
    item.id = idcol ? std::string(trim(f[*idcol])) : std::string(split_name(split_tag)) + "-" + std::to_string(li);
    item.split = split_tag;
    for (std::size_t i = 0; i < kPremisesPerItem; ++i) {
      std::string cell = strip_image_prefix(f[pcol[i]]);
      if (i == 0) {
        auto hash = f[pcol[i]].find('#');
        if (hash != std::string::npos) item.scene_group = f[pcol[i]].substr(0, hash);
      }
      item.premises[i] = cell;
    }
    item.hypothesis = f[hcol];
    auto gold = parse_label(f[gcol]);
    if (!gold) throw ValidationError(path.string(), line.number, "invalid gold label \"" + f[gcol] + "\"");
    item.gold = gold;
    if (ecol) {
      std::array<int, kNumLabels> counts{};
      const std::array<std::size_t, kNumLabels> cols{*ecol, *ncol, *ccol};
      for (std::size_t k = 0; k < kNumLabels; ++k) {
        try {
          counts[k] = std::stoi(f[cols[k]]);
        } catch (const std::exception&) {
          throw ValidationError(path.string(), line.number, "judgment count is not an integer");
        }
      }
      if (counts[0] + counts[1] + counts[2] == static_cast<int>(kJudgmentsPerItem))
        for (std::size_t k = 0; k < kNumLabels; ++k)
          for (int c = 0; c < counts[k]; ++c) item.judgments.push_back(label_from_index(k));
    }
    try {
      item.validate();
    } catch (const ValidationError& e) {
      throw ValidationError(path.string(), line.number, e.what());
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace mpe::data
