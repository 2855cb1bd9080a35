// mpe: command-line driver for the dataset pipeline, voting baselines and models.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mpe/aggregation.hpp"
#include "mpe/checkpoint.hpp"
#include "mpe/corpus_stats.hpp"
#include "mpe/evaluation.hpp"
#include "mpe/grad_check.hpp"
#include "mpe/item_generation.hpp"
#include "mpe/ops.hpp"
#include "mpe/trainer.hpp"
#include "mpe/voting.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mpe;

namespace {

constexpr const char* kVersion = "1.0.0";

// Collects what a run read and wrote so it can be replayed from the manifest.
class Run {
 public:
  Run(std::string command, std::vector<std::string> argv) : command_(std::move(command)), argv_(std::move(argv)) {}

  void input(const fs::path& p) {
    const std::string bytes = read_file(p);
    inputs_.push_back({{"path", p.string()}, {"fnv1a64", hex64(fnv1a64(bytes))}, {"bytes", bytes.size()}});
  }
  void lexicons(const fs::path& dir) {
    for (const char* f : {"stopwords.txt", "lemma_exceptions.txt", "chunk_lexicon.txt", "hypernyms.txt"})
      if (fs::exists(dir / f)) input(dir / f);
  }
  void config(const std::string& key, json value) { config_[key] = std::move(value); }

  void output(const fs::path& p, std::string_view contents) {
    write_file_atomic(p, contents);
    outputs_.push_back({{"path", p.string()}, {"fnv1a64", hex64(fnv1a64(contents))}, {"bytes", contents.size()}});
    if (manifest_path_.empty()) manifest_path_ = p.string() + ".manifest.json";
  }
  void output_file(const fs::path& p) {
    const std::string bytes = read_file(p);
    outputs_.push_back({{"path", p.string()}, {"fnv1a64", hex64(fnv1a64(bytes))}, {"bytes", bytes.size()}});
    if (manifest_path_.empty()) manifest_path_ = p.string() + ".manifest.json";
  }
  void manifest_path(const std::string& p) {
    if (!p.empty()) manifest_path_ = p;
  }

  void finish() const {
    if (manifest_path_.empty()) return;
    const std::string cfg = config_.dump();
    json m = {{"tool", "mpe"},
              {"version", kVersion},
              {"command", command_},
              {"argv", argv_},
              {"config", config_},
              {"config_hash", hex64(fnv1a64(cfg))},
              {"seed", config_.contains("seed") ? config_["seed"] : json(nullptr)},
              {"formats", {{"items", data::kItemFormatVersion}, {"checkpoint", ad::kCheckpointVersion}}},
              {"inputs", inputs_},
              {"outputs", outputs_}};
    write_file_atomic(manifest_path_, m.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  json config_ = json::object();
  json inputs_ = json::array();
  json outputs_ = json::array();
  std::string manifest_path_;
};

struct Common {
  std::string data_dir;
  std::string manifest;

  fs::path lexicon_dir() const { return data_dir.empty() ? default_data_dir() : fs::path(data_dir); }
};

void attach_pairs(std::vector<data::Item>& items, const std::string& path, Run& run) {
  if (path.empty()) return;
  run.input(path);
  std::size_t n = 0;
  try {
    n = data::attach_pair_labels(items, data::read_label_lists(path, data::kPremisesPerItem));
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    if (msg.starts_with(path)) throw;
    throw ValidationError(path + ": " + msg);
  }
  std::cerr << "pair labels attached to " << n << " of " << items.size() << " items\n";
}

// ---------------------------------------------------------------------------------

struct BuildGraphOpts {
  std::string captions, splits, out;
};

void build_graph(const BuildGraphOpts& o, const Common& c, Run& run) {
  const auto dir = c.lexicon_dir();
  run.input(o.captions);
  if (!o.splits.empty()) run.input(o.splits);
  run.lexicons(dir);
  auto normalizer = text::Normalizer::load(dir);
  auto rules = graph::ReductionRuleSet::load(dir, normalizer.stopwords());
  auto splits = o.splits.empty() ? std::map<std::string, Split>{} : data::read_splits(o.splits);
  auto corpus = data::load_corpus(o.captions, normalizer, splits);
  auto refs = corpus.caption_refs();
  auto g = graph::PhraseGraph::build(refs, rules);
  run.output(o.out, g.serialize());
  std::cerr << "graph: " << g.size() << " nodes, " << g.edges().size() << " edges from " << corpus.captions.size()
            << " captions\n";
}

struct BuildDatasetOpts {
  std::string captions, splits, graph, out, report;
  double overlap_max = 0.5;
  double related_fraction = 0.5;
  std::optional<std::size_t> n_train, n_dev, n_test;
  std::size_t unrelated_sources = 1;
  bool allow_noun_phrases = false;
  int min_train_captions = 2, min_union_captions = 2, min_split_captions = 1;
  std::uint64_t seed = 42;
};

void build_dataset(const BuildDatasetOpts& o, const Common& c, Run& run) {
  const auto dir = c.lexicon_dir();
  run.input(o.captions);
  if (!o.splits.empty()) run.input(o.splits);
  if (!o.graph.empty()) run.input(o.graph);
  run.lexicons(dir);
  auto normalizer = text::Normalizer::load(dir);
  auto splits = o.splits.empty() ? std::map<std::string, Split>{} : data::read_splits(o.splits);
  auto corpus = data::load_corpus(o.captions, normalizer, splits);
  graph::PhraseGraph g;
  if (!o.graph.empty()) {
    g = graph::PhraseGraph::parse(read_file(o.graph), o.graph);
  } else {
    auto rules = graph::ReductionRuleSet::load(dir, normalizer.stopwords());
    auto refs = corpus.caption_refs();
    g = graph::PhraseGraph::build(refs, rules);
  }

  data::GenerationConfig cfg;
  cfg.overlap_max = o.overlap_max;
  cfg.related_fraction = o.related_fraction;
  cfg.unrelated_sources_per_group = o.unrelated_sources;
  cfg.sentence_nodes_only = !o.allow_noun_phrases;
  cfg.thresholds = {o.min_train_captions, o.min_union_captions, o.min_split_captions};
  cfg.seed = o.seed;
  // Without an explicit count a split asks for one item per premise group.
  const std::array<std::optional<std::size_t>, kNumSplits> requested{o.n_train, o.n_dev, o.n_test};
  for (std::size_t s = 0; s < kNumSplits; ++s) {
    std::size_t groups = 0;
    for (const auto& [_, idx] : corpus.groups)
      groups += corpus.captions[idx.front()].split == static_cast<Split>(s) && idx.size() >= data::kPremisesPerItem;
    cfg.n_items[s] = requested[s].value_or(groups);
  }
  run.config("n_items", cfg.n_items);

  auto result = data::generate_items(corpus, g, normalizer, cfg);
  run.output(o.out, data::write_items(result.items));
  const auto report = result.report();
  std::cerr << report;
  if (!o.report.empty()) run.output(o.report, report);
  if (result.shortfall()) std::cerr << "warning: fewer items than requested, see the report above\n";
}

struct StatsOpts {
  std::string items, out;
};

void stats(const StatsOpts& o, const Common& c, Run& run) {
  const auto dir = c.lexicon_dir();
  run.input(o.items);
  run.lexicons(dir);
  auto items = data::read_items(o.items);
  auto normalizer = text::Normalizer::load(dir);
  auto r = data::corpus_stats(items, normalizer);
  std::cout << r.to_table();
  if (!o.out.empty()) run.output(o.out, r.to_json());
}

struct AdjudicateOpts {
  std::string items, judgments, decisions, out;
};

std::optional<Label> ask(const data::Item& item, const data::AggregationOutcome& outcome, bool& quit) {
  if (quit) return std::nullopt;
  std::cout << "\n[" << item.id << "] " << data::aggregation_kind_name(outcome.kind) << "  votes E=" << outcome.counts[0]
            << " N=" << outcome.counts[1] << " C=" << outcome.counts[2] << "\n";
  for (std::size_t i = 0; i < item.premises.size(); ++i) std::cout << "  P" << i + 1 << ": " << item.premises[i] << "\n";
  std::cout << "  H:  " << item.hypothesis << "\n";
  for (;;) {
    std::cout << "label [e/n/c], s to skip, q to stop: " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line)) {
      std::cout << "\n";
      quit = true;
      return std::nullopt;
    }
    auto answer = to_lower(trim(line));
    if (answer == "s" || answer == "skip") return std::nullopt;
    if (answer == "q" || answer == "quit") {
      quit = true;
      return std::nullopt;
    }
    if (auto l = parse_label(answer)) return l;
  }
}

void adjudicate(const AdjudicateOpts& o, const Common&, Run& run) {
  run.input(o.items);
  auto items = data::read_items(o.items);
  std::map<std::string, std::vector<Label>> judgments;
  if (!o.judgments.empty()) {
    run.input(o.judgments);
    judgments = data::read_label_lists(o.judgments, data::kJudgmentsPerItem);
  }
  std::map<std::string, Label> decisions;
  if (!o.decisions.empty()) {
    run.input(o.decisions);
    decisions = data::read_decisions(o.decisions);
  }
  const auto flagged = data::apply_judgments(items, judgments);
  std::cerr << flagged.size() << " items flagged for adjudication\n";

  data::AdjudicationSummary summary;
  if (!o.decisions.empty()) {
    summary = data::adjudicate(items, flagged, decisions);
  } else {
    bool quit = false;
    summary = data::adjudicate(items, flagged, [&](const data::Item& item, const data::AggregationOutcome& outcome) {
      return ask(item, outcome, quit);
    });
  }
  run.output(o.out, data::write_items(items));

  const auto p = data::provenance_report(items);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "flagged %zu, decided %zu, unresolved %zu\n"
                "items with judgments %zu, majority %.1f%%, 3-2 splits %zu, 2-2-1 splits %zu\n"
                "final labels matching the majority vote %.1f%%, adjudicated %zu\n",
                summary.flagged, summary.decided, summary.unresolved.size(), p.with_judgments,
                100.0 * p.majority_fraction(), p.split_3_2, p.split_2_2_1, 100.0 * p.majority_consistent_fraction(),
                p.adjudicated);
  std::cout << buf;
  for (const auto& id : summary.unresolved) std::cerr << "unresolved: " << id << "\n";
}

struct VoteOpts {
  std::string items, pairs, out;
};

void vote(const VoteOpts& o, const Common&, Run& run) {
  run.input(o.items);
  auto items = data::read_items(o.items);
  attach_pairs(items, o.pairs, run);
  auto r = voting::score_baselines(items);
  std::cout << r.to_table();
  if (!o.out.empty()) run.output(o.out, r.to_json());
}

struct ImportOpts {
  std::string release, split = "dev", out;
};

void import_release(const ImportOpts& o, const Common&, Run& run) {
  auto split_v = parse_split(o.split);
  if (!split_v) throw ValidationError("unknown split \"" + o.split + "\"");
  run.input(o.release);
  auto items = data::read_release_tsv(o.release, *split_v);
  run.output(o.out, data::write_items(items));
  std::cerr << "imported " << items.size() << " items\n";
}

// ---------------------------------------------------------------------------------

struct ModelOpts {
  std::string kind = "lstm";
  std::string preset;
  std::optional<std::size_t> state_dim, embed_dim;
  std::optional<double> keep_prob;
  std::string embeddings;
  bool freeze_embeddings = false;
  double init_scale = 0.1;
};

struct TrainOpts {
  ModelOpts model;
  std::string train, dev, pretrain, out, log;
  std::optional<std::size_t> epochs, batch_size;
  std::size_t pretrain_epochs = 10;
  std::optional<double> lr;
  std::uint64_t seed = 1;
  bool no_best_epoch = false;
};

struct Resolved {
  nn::ModelConfig model;
  nn::TrainConfig train;
};

Resolved resolve(const ModelOpts& m, std::optional<std::size_t> epochs, std::optional<std::size_t> batch,
                 std::optional<double> lr, std::uint64_t seed) {
  Resolved r;
  if (!m.preset.empty()) {
    const auto& p = nn::preset(m.preset);
    r.model.kind = p.kind;
    r.model.state_dim = p.state_dim;
    r.model.keep_prob = p.keep_prob;
    r.train.batch_size = p.batch_size;
    r.train.learning_rate = p.learning_rate;
  } else {
    auto k = nn::parse_model_kind(m.kind);
    if (!k) throw ValidationError("unknown model kind \"" + m.kind + "\" (lstm, attn, se)");
    r.model.kind = *k;
  }
  if (m.state_dim) r.model.state_dim = *m.state_dim;
  if (m.embed_dim) r.model.embed_dim = *m.embed_dim;
  if (m.keep_prob) r.model.keep_prob = *m.keep_prob;
  r.model.freeze_embeddings = m.freeze_embeddings;
  r.model.init_scale = m.init_scale;
  r.model.seed = seed;
  if (epochs) r.train.epochs = *epochs;
  if (batch) r.train.batch_size = *batch;
  if (lr) r.train.learning_rate = *lr;
  r.train.seed = seed;
  r.train.validate();
  return r;
}

json model_config_json(const nn::ModelConfig& m) {
  return {{"kind", nn::model_kind_name(m.kind)}, {"state_dim", m.state_dim},   {"embed_dim", m.embed_dim},
          {"keep_prob", m.keep_prob},           {"freeze", m.freeze_embeddings}, {"init_scale", m.init_scale},
          {"seed", m.seed},                      {"vocab_size", m.vocab_size}};
}

json train_config_json(const nn::TrainConfig& t) {
  return {{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"learning_rate", t.learning_rate},
          {"seed", t.seed},     {"keep_best_epoch", t.keep_best_epoch}};
}

void print_epoch(const nn::EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-9s epoch %3zu  batch loss %.4f  train loss %.4f  train acc %.4f", r.phase.c_str(),
                r.epoch, r.mean_batch_loss, r.train_loss, r.train_accuracy);
  std::cerr << buf;
  if (r.dev_accuracy) {
    std::snprintf(buf, sizeof buf, "  dev acc %.4f", *r.dev_accuracy);
    std::cerr << buf;
  }
  std::cerr << "\n";
}

void train(const TrainOpts& o, const Common&, Run& run) {
  auto cfg = resolve(o.model, o.epochs, o.batch_size, o.lr, o.seed);
  cfg.train.keep_best_epoch = !o.no_best_epoch;

  run.input(o.train);
  auto train_items = data::read_items(o.train);
  std::vector<data::Item> dev_items;
  if (!o.dev.empty()) {
    run.input(o.dev);
    dev_items = data::read_items(o.dev);
  }
  std::vector<nn::SinglePremisePair> pre_pairs;
  if (!o.pretrain.empty()) {
    run.input(o.pretrain);
    std::size_t skipped = 0;
    pre_pairs = nn::read_single_premise_jsonl(o.pretrain, &skipped);
    if (skipped) std::cerr << "pretraining file: skipped " << skipped << " pairs without a gold label\n";
  }
  if (!o.model.embeddings.empty()) run.input(o.model.embeddings);

  nn::Vocabulary vocab;
  nn::extend_vocabulary(vocab, std::span<const nn::SinglePremisePair>(pre_pairs));
  nn::extend_vocabulary(vocab, std::span<const data::Item>(train_items));
  cfg.model.vocab_size = vocab.size();

  auto train_set = nn::encode_all(train_items, vocab);
  auto dev_set = nn::encode_all(dev_items, vocab);
  auto pre_set = nn::encode_all(std::span<const nn::SinglePremisePair>(pre_pairs), vocab);

  nn::Model model(cfg.model);
  if (!o.model.embeddings.empty()) {
    auto rows = nn::load_embedding_file(o.model.embeddings, vocab, model.word_embeddings(), nn::Vocabulary::kNumSpecial);
    std::cerr << "pretrained vectors for " << rows << " of " << vocab.size() - nn::Vocabulary::kNumSpecial
              << " words\n";
  }

  run.config("model", model_config_json(cfg.model));
  run.config("train", train_config_json(cfg.train));
  run.config("seed", o.seed);

  std::string log;
  auto on_epoch = [&](const nn::EpochRecord& r) {
    print_epoch(r);
    log += r.to_json() + "\n";
  };
  nn::TrainResult result;
  if (!pre_set.empty()) {
    auto pre_cfg = cfg.train;
    pre_cfg.epochs = o.pretrain_epochs;
    run.config("pretrain_epochs", o.pretrain_epochs);
    result = nn::pretrain_finetune(model, pre_set, train_set, dev_set, pre_cfg, cfg.train, on_epoch);
  } else {
    result = nn::train(model, train_set, dev_set, cfg.train, "train", on_epoch);
  }
  if (result.best_epoch && cfg.train.keep_best_epoch)
    std::cerr << "kept parameters of " << result.log[*result.best_epoch].phase << " epoch "
              << result.log[*result.best_epoch].epoch << " (dev acc " << *result.best_dev_accuracy << ")\n";

  nn::save_model(o.out, model, vocab);
  run.output_file(o.out);
  if (!o.log.empty()) run.output(o.log, log);
}

struct GridOpts {
  std::string kind = "lstm", train, dev, out;
  std::vector<double> lrs{0.001}, keep_probs{0.8};
  std::vector<std::size_t> dims{100};
  std::size_t epochs = 10, batch_size = 32;
  std::uint64_t seed = 1;
};

void grid(const GridOpts& o, const Common&, Run& run) {
  auto kind = nn::parse_model_kind(o.kind);
  if (!kind) throw ValidationError("unknown model kind \"" + o.kind + "\"");
  run.input(o.train);
  run.input(o.dev);
  auto train_items = data::read_items(o.train);
  auto dev_items = data::read_items(o.dev);
  nn::Vocabulary vocab;
  nn::extend_vocabulary(vocab, std::span<const data::Item>(train_items));
  auto train_set = nn::encode_all(train_items, vocab);
  auto dev_set = nn::encode_all(dev_items, vocab);

  struct Point {
    double lr, keep;
    std::size_t dim;
    double dev = 0.0;
    std::size_t best_epoch = 0;
  };
  std::vector<Point> points;
  for (double lr : o.lrs)
    for (double kp : o.keep_probs)
      for (std::size_t d : o.dims) points.push_back({lr, kp, d});
  run.config("kind", o.kind);
  run.config("epochs", o.epochs);
  run.config("batch_size", o.batch_size);
  run.config("seed", o.seed);
  run.config("learning_rates", o.lrs);
  run.config("keep_probs", o.keep_probs);
  run.config("state_dims", o.dims);

  parallel_for(points.size(), [&](std::size_t i) {
    auto& p = points[i];
    nn::ModelConfig mc;
    mc.kind = *kind;
    mc.vocab_size = vocab.size();
    mc.state_dim = p.dim;
    mc.keep_prob = p.keep;
    mc.seed = o.seed;
    nn::TrainConfig tc;
    tc.epochs = o.epochs;
    tc.batch_size = o.batch_size;
    tc.learning_rate = p.lr;
    tc.seed = o.seed;
    nn::Model model(mc);
    auto r = nn::train(model, train_set, dev_set, tc);
    p.dev = r.best_dev_accuracy.value_or(0.0);
    p.best_epoch = r.best_epoch ? r.log[*r.best_epoch].epoch : 0;
  });

  std::string lines;
  std::size_t best = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.dev > points[best].dev) best = i;
    lines += json{{"learning_rate", p.lr}, {"keep_prob", p.keep}, {"state_dim", p.dim}, {"dev_accuracy", p.dev},
                  {"best_epoch", p.best_epoch}}.dump() + "\n";
    std::printf("lr %-8g keep %-5g dim %-5zu dev %.4f (epoch %zu)\n", p.lr, p.keep, p.dim, p.dev, p.best_epoch);
  }
  std::printf("best: lr %g keep %g dim %zu dev %.4f\n", points[best].lr, points[best].keep, points[best].dim,
              points[best].dev);
  if (!o.out.empty()) run.output(o.out, lines);
}

struct EvalOpts {
  std::string model, items, pairs, out, predictions;
};

void eval(const EvalOpts& o, const Common&, Run& run) {
  run.input(o.model);
  run.input(o.items);
  auto loaded = nn::load_model(o.model);
  auto items = data::read_items(o.items);
  attach_pairs(items, o.pairs, run);
  auto examples = nn::encode_all(items, loaded.vocab);
  auto r = nn::evaluate(*loaded.model, examples);
  std::cout << r.to_table();
  if (r.without_pair_labels == examples.size()) std::cerr << "note: no pair labels, agreement breakdown skipped\n";
  if (r.without_tags == examples.size()) std::cerr << "note: no phenomenon tags, tag breakdown skipped\n";
  if (!o.out.empty()) run.output(o.out, r.to_json());
  if (!o.predictions.empty()) {
    std::string lines;
    for (std::size_t i = 0; i < items.size(); ++i)
      lines += items[i].id + "\t" + std::string(1, label_char(r.predictions[i])) + "\n";
    run.output(o.predictions, lines);
  }
}

struct GradCheckOpts {
  std::string kind = "lstm";
  std::size_t dim = 8, vocab = 30, examples = 3;
  std::uint64_t seed = 7;
  double tolerance = 1e-4;
};

// Returns false when the check fails.
bool gradcheck(const GradCheckOpts& o, const Common&, Run& run) {
  auto kind = nn::parse_model_kind(o.kind);
  if (!kind) throw ValidationError("unknown model kind \"" + o.kind + "\"");
  if (o.vocab < nn::Vocabulary::kNumSpecial + 2) throw ValidationError("vocabulary must have at least 4 entries");
  run.config("kind", o.kind);
  run.config("dim", o.dim);
  run.config("vocab", o.vocab);
  run.config("examples", o.examples);
  run.config("seed", o.seed);
  run.config("tolerance", o.tolerance);

  nn::ModelConfig mc;
  mc.kind = *kind;
  mc.vocab_size = o.vocab;
  mc.embed_dim = o.dim;
  mc.state_dim = o.dim;
  mc.init_scale = 0.5;
  mc.seed = o.seed;
  nn::Model model(mc);

  Rng rng(o.seed);
  auto seq = [&] {
    nn::TokenSeq s(1 + rng.index(5));
    for (auto& t : s) t = nn::Vocabulary::kNumSpecial + rng.index(o.vocab - nn::Vocabulary::kNumSpecial);
    return s;
  };
  std::vector<nn::Example> examples(o.examples);
  for (auto& ex : examples) {
    for (std::size_t p = 0; p < data::kPremisesPerItem; ++p) ex.premises.push_back(seq());
    ex.hypothesis = seq();
    ex.label = label_from_index(rng.index(kNumLabels));
  }
  auto loss = [&](ad::Tape& tape) {
    std::vector<ad::Var> parts;
    for (const auto& ex : examples)
      parts.push_back(ad::cross_entropy(model.forward(tape, ex, nullptr).logits, label_index(*ex.label)));
    return ad::sum(parts);
  };
  ad::GradCheckConfig gc;
  gc.seed = o.seed;
  auto report = ad::grad_check(loss, model.params(), gc);
  std::cout << report.to_string();
  const bool ok = report.passed(o.tolerance);
  std::printf("%s: max relative error %.3e (tolerance %.0e)\n", ok ? "PASS" : "FAIL", report.max_rel_error,
              o.tolerance);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple-premise entailment toolkit: dataset construction, baselines and models"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Common common;
  app.add_option("--data-dir", common.data_dir, "Lexicon directory (default: $MPE_DATA_DIR or the built-in data)");
  app.add_option("--manifest", common.manifest, "Manifest path (default: beside the first output)");

  BuildGraphOpts bg;
  auto* c_graph = app.add_subcommand("build-graph", "Build the phrase graph of a caption corpus");
  c_graph->add_option("--captions", bg.captions, "Caption TSV")->required()->check(CLI::ExistingFile);
  c_graph->add_option("--splits", bg.splits, "Scene group split assignment")->check(CLI::ExistingFile);
  c_graph->add_option("--out", bg.out, "Graph output file")->required();

  BuildDatasetOpts bd;
  auto* c_data = app.add_subcommand("build-dataset", "Generate premise/hypothesis items from a caption corpus");
  c_data->add_option("--captions", bd.captions, "Caption TSV")->required()->check(CLI::ExistingFile);
  c_data->add_option("--splits", bd.splits, "Scene group split assignment")->check(CLI::ExistingFile);
  c_data->add_option("--graph", bd.graph, "Prebuilt graph (built from the captions when absent)")
      ->check(CLI::ExistingFile);
  c_data->add_option("--out", bd.out, "Items output (JSON lines)")->default_val("items.jsonl");
  c_data->add_option("--report", bd.report, "Write the generation report here");
  c_data->add_option("--overlap-max", bd.overlap_max, "Maximum word overlap with the premises")
      ->default_val(0.5)
      ->check(CLI::Range(0.0, 1.0));
  c_data->add_option("--related-fraction", bd.related_fraction)->default_val(0.5)->check(CLI::Range(0.0, 1.0));
  c_data->add_option("--n-train", bd.n_train, "Items for train (default: one per premise group)");
  c_data->add_option("--n-dev", bd.n_dev);
  c_data->add_option("--n-test", bd.n_test);
  c_data->add_option("--unrelated-sources", bd.unrelated_sources, "Unrelated captions sampled per group")
      ->default_val(1);
  c_data->add_flag("--allow-noun-phrases", bd.allow_noun_phrases, "Accept noun-phrase hypotheses");
  c_data->add_option("--min-train-captions", bd.min_train_captions)->default_val(2);
  c_data->add_option("--min-union-captions", bd.min_union_captions)->default_val(2);
  c_data->add_option("--min-split-captions", bd.min_split_captions)->default_val(1);
  c_data->add_option("--seed", bd.seed)->default_val(42);

  StatsOpts st;
  auto* c_stats = app.add_subcommand("stats", "Corpus statistics of an item file");
  c_stats->add_option("--items", st.items)->required()->check(CLI::ExistingFile);
  c_stats->add_option("--out", st.out, "JSON report");

  AdjudicateOpts ad_opts;
  auto* c_adj = app.add_subcommand("adjudicate", "Aggregate judgments and resolve split votes");
  c_adj->add_option("--items", ad_opts.items)->required()->check(CLI::ExistingFile);
  c_adj->add_option("--judgments", ad_opts.judgments, "item_id<TAB>five labels")->check(CLI::ExistingFile);
  c_adj->add_option("--decisions", ad_opts.decisions, "item_id<TAB>label; interactive review when absent")
      ->check(CLI::ExistingFile);
  c_adj->add_option("--out", ad_opts.out)->required();

  VoteOpts vo;
  auto* c_vote = app.add_subcommand("vote", "Pair-label voting baselines");
  c_vote->add_option("--items", vo.items)->required()->check(CLI::ExistingFile);
  c_vote->add_option("--pairs", vo.pairs, "item_id<TAB>four labels")->check(CLI::ExistingFile);
  c_vote->add_option("--out", vo.out, "JSON report");

  ImportOpts im;
  auto* c_import = app.add_subcommand("import", "Convert a released tab-separated file to items");
  c_import->add_option("--release", im.release)->required()->check(CLI::ExistingFile);
  c_import->add_option("--split", im.split)->default_val("dev");
  c_import->add_option("--out", im.out)->required();

  TrainOpts tr;
  auto* c_train = app.add_subcommand("train", "Train a model");
  auto add_model = [](CLI::App* c, ModelOpts& m) {
    c->add_option("--model", m.kind, "lstm, attn or se")->default_val("lstm");
    c->add_option("--preset", m.preset, "Named hyperparameters (lstm-mpe, attn-mpe, se-mpe, snli-pretrain)");
    c->add_option("--dim", m.state_dim, "LSTM state dimension");
    c->add_option("--embed-dim", m.embed_dim, "Word vector dimension");
    c->add_option("--keep-prob", m.keep_prob)->check(CLI::Range(0.0, 1.0));
    c->add_option("--embeddings", m.embeddings, "Pretrained vectors (token v1 ... vd)")->check(CLI::ExistingFile);
    c->add_flag("--freeze-embeddings", m.freeze_embeddings);
    c->add_option("--init-scale", m.init_scale)->default_val(0.1);
  };
  add_model(c_train, tr.model);
  c_train->add_option("--train", tr.train)->required()->check(CLI::ExistingFile);
  c_train->add_option("--dev", tr.dev)->check(CLI::ExistingFile);
  c_train->add_option("--pretrain", tr.pretrain, "Single-premise JSON lines for a first phase")
      ->check(CLI::ExistingFile);
  c_train->add_option("--pretrain-epochs", tr.pretrain_epochs)->default_val(10);
  c_train->add_option("--epochs", tr.epochs);
  c_train->add_option("--batch-size", tr.batch_size);
  c_train->add_option("--lr", tr.lr);
  c_train->add_option("--seed", tr.seed)->default_val(1);
  c_train->add_flag("--no-best-epoch", tr.no_best_epoch, "Keep the last epoch instead of the best dev epoch");
  c_train->add_option("--out", tr.out, "Checkpoint")->required();
  c_train->add_option("--log", tr.log, "Epoch log (JSON lines)");

  GridOpts gr;
  auto* c_grid = app.add_subcommand("grid", "Train over a grid of hyperparameters and compare dev accuracy");
  c_grid->add_option("--model", gr.kind)->default_val("lstm");
  c_grid->add_option("--train", gr.train)->required()->check(CLI::ExistingFile);
  c_grid->add_option("--dev", gr.dev)->required()->check(CLI::ExistingFile);
  c_grid->add_option("--lr", gr.lrs)->delimiter(',');
  c_grid->add_option("--keep-prob", gr.keep_probs)->delimiter(',');
  c_grid->add_option("--dim", gr.dims)->delimiter(',');
  c_grid->add_option("--epochs", gr.epochs)->default_val(10);
  c_grid->add_option("--batch-size", gr.batch_size)->default_val(32);
  c_grid->add_option("--seed", gr.seed)->default_val(1);
  c_grid->add_option("--out", gr.out, "Results (JSON lines)");

  EvalOpts ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on an item file");
  c_eval->add_option("--model", ev.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--items", ev.items)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--pairs", ev.pairs, "Pair labels for the agreement breakdown")->check(CLI::ExistingFile);
  c_eval->add_option("--out", ev.out, "JSON report");
  c_eval->add_option("--predictions", ev.predictions, "item_id<TAB>label per line");

  GradCheckOpts gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference check of a model's gradients");
  c_gc->add_option("--model", gc.kind)->default_val("lstm");
  c_gc->add_option("--dim", gc.dim)->default_val(8);
  c_gc->add_option("--vocab", gc.vocab)->default_val(30);
  c_gc->add_option("--examples", gc.examples)->default_val(3);
  c_gc->add_option("--seed", gc.seed)->default_val(7);
  c_gc->add_option("--tolerance", gc.tolerance)->default_val(1e-4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  Run run(sub->get_name(), std::vector<std::string>(argv, argv + argc));
  // Every option of the chosen subcommand goes into the manifest, defaults included.
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
    auto results = opt->results();
    const std::string key = opt->get_name(false, true).substr(2);
    if (results.empty()) {
      if (!opt->get_default_str().empty()) run.config(key, opt->get_default_str());
      continue;
    }
    run.config(key, results.size() == 1 ? json(results[0]) : json(results));
  }
  if (!common.data_dir.empty()) run.config("data_dir", common.data_dir);
  run.manifest_path(common.manifest);

  try {
    const std::string name = sub->get_name();
    int status = 0;
    if (name == "build-graph") build_graph(bg, common, run);
    else if (name == "build-dataset") build_dataset(bd, common, run);
    else if (name == "stats") stats(st, common, run);
    else if (name == "adjudicate") adjudicate(ad_opts, common, run);
    else if (name == "vote") vote(vo, common, run);
    else if (name == "import") import_release(im, common, run);
    else if (name == "train") train(tr, common, run);
    else if (name == "grid") grid(gr, common, run);
    else if (name == "eval") eval(ev, common, run);
    else if (name == "gradcheck") status = gradcheck(gc, common, run) ? 0 : 2;
    run.finish();
    return status;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
}
