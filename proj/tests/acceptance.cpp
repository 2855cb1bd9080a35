// Acceptance run: one PASS/FAIL/SKIP line per criterion, exit status 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <set>

#include "mpe/adam.hpp"
#include "mpe/corpus_stats.hpp"
#include "mpe/grad_check.hpp"
#include "mpe/item_generation.hpp"
#include "mpe/ops.hpp"
#include "mpe/trainer.hpp"
#include "synthetic.hpp"
#include "voting_examples.hpp"

namespace fs = std::filesystem;
using namespace mpe;
using nn::ModelKind;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

// Collects failures while a criterion runs.
struct Checker {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 8) failures.push_back(what);
  }
  Outcome outcome(const std::string& summary) const {
    if (failures.empty()) return {Status::Pass, summary};
    std::string d = summary;
    for (const auto& f : failures) d += "\n      - " + f;
    return {Status::Fail, d};
  }
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

constexpr ModelKind kKinds[] = {ModelKind::Lstm, ModelKind::Attention, ModelKind::SumOfExperts};

nn::TokenSeq random_seq(Rng& rng, std::size_t vocab, std::size_t max_len) {
  nn::TokenSeq s(1 + rng.index(max_len));
  for (auto& t : s) t = nn::Vocabulary::kNumSpecial + rng.index(vocab - nn::Vocabulary::kNumSpecial);
  return s;
}

nn::Example random_example(Rng& rng, std::size_t vocab, std::size_t max_len, std::size_t premises = 4) {
  nn::Example ex;
  ex.id = "r";
  for (std::size_t p = 0; p < premises; ++p) ex.premises.push_back(random_seq(rng, vocab, max_len));
  ex.hypothesis = random_seq(rng, vocab, max_len);
  ex.label = label_from_index(rng.index(kNumLabels));
  return ex;
}

// ---------------------------------------------------------------------------------

Outcome gradient_correctness() {
  Checker c;
  double worst = 0.0;
  std::size_t checks = 0;
  for (auto kind : kKinds) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed * 1000 + static_cast<std::uint64_t>(kind));
      const std::size_t vocab = 10 + rng.index(41);  // 10..50
      nn::ModelConfig mc;
      mc.kind = kind;
      mc.vocab_size = vocab;
      mc.embed_dim = 8;
      mc.state_dim = 8;
      mc.init_scale = 0.5;
      mc.seed = seed;
      nn::Model model(mc);
      const auto ex = random_example(rng, vocab, 10);
      auto loss = [&](ad::Tape& t) {
        return ad::cross_entropy(model.forward(t, ex, nullptr).logits, label_index(*ex.label));
      };
      ad::GradCheckConfig gc;
      gc.seed = seed;
      auto report = ad::grad_check(loss, model.params(), gc);
      worst = std::max(worst, report.max_rel_error);
      ++checks;
      c.expect(report.passed(1e-4), fmt("%s seed %llu: max relative error %.3e", nn::model_kind_name(kind),
                                        static_cast<unsigned long long>(seed), report.max_rel_error));
    }
  }
  return c.outcome(fmt("%zu random fixtures over 3 models, max relative error %.3e", checks, worst));
}

Outcome overfit_oracle() {
  Checker c;
  const auto data = testing::synthetic_mpe(32, 5);
  std::string summary;
  for (auto kind : kKinds) {
    const auto t0 = std::chrono::steady_clock::now();
    nn::Model model(testing::small_config(kind));
    nn::TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.01;
    cfg.keep_best_epoch = false;
    auto r = nn::train(model, data, {}, cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string name = nn::model_kind_name(kind);
    for (std::size_t e = 1; e < 5; ++e)
      c.expect(r.log[e].train_loss < r.log[e - 1].train_loss, name + ": loss did not decrease at epoch " + std::to_string(e + 1));
    auto hit = std::find_if(r.log.begin(), r.log.end(), [](const auto& e) { return e.train_accuracy == 1.0; });
    c.expect(hit != r.log.end(), name + ": never reached 100% training accuracy");
    c.expect(secs < 300.0, name + ": took longer than 5 minutes");
    summary += fmt("%s 100%% at epoch %zu (%.1fs)  ", name.c_str(), hit == r.log.end() ? 0 : hit->epoch, secs);
  }
  return c.outcome(summary);
}

Outcome se_invariants() {
  Checker c;
  double max_diff = 0.0;
  for (std::uint64_t f = 0; f < 100; ++f) {
    Rng rng(500 + f);
    auto mc = testing::small_config(ModelKind::SumOfExperts, f + 1);
    mc.init_scale = 0.5;
    nn::Model model(mc);
    const auto ex = random_example(rng, mc.vocab_size, 8);
    const auto base = model.logits(ex);
    std::vector<std::size_t> perm{0, 1, 2, 3};
    while (std::next_permutation(perm.begin(), perm.end())) {
      auto p = ex;
      for (std::size_t i = 0; i < 4; ++i) p.premises[i] = ex.premises[perm[i]];
      const auto l = model.logits(p);
      for (std::size_t k = 0; k < 3; ++k) max_diff = std::max(max_diff, std::abs(l[k] - base[k]));
    }
    auto same = ex;
    same.premises = {ex.premises[0], ex.premises[0], ex.premises[0], ex.premises[0]};
    auto one = ex;
    one.premises = {ex.premises[0]};
    const auto l4 = model.logits(same), l1 = model.logits(one);
    for (std::size_t k = 0; k < 3; ++k)
      c.expect(l4[k] == 4.0 * l1[k], fmt("fixture %llu: identical premises give %.17g, 4*l1 is %.17g",
                                         static_cast<unsigned long long>(f), l4[k], 4.0 * l1[k]));
  }
  c.expect(max_diff <= 1e-9, fmt("permutation changed logits by %.3e", max_diff));
  return c.outcome(fmt("100 fixtures x 24 permutations, max logit difference %.3e; 4*l1 identity exact", max_diff));
}

Outcome attention_invariants() {
  Checker c;
  double worst_sum = 0.0;
  std::size_t rows = 0;
  for (std::uint64_t f = 0; f < 50; ++f) {
    Rng rng(900 + f);
    auto mc = testing::small_config(ModelKind::Attention, f + 1);
    mc.init_scale = 0.5;
    nn::Model model(mc);
    const auto ex = random_example(rng, mc.vocab_size, 10);
    ad::Tape t;
    for (const auto& row : model.forward(t, ex, nullptr).attention) {
      double s = 0.0;
      for (double a : row) {
        c.expect(a >= 0.0, "negative attention weight");
        s += a;
      }
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      ++rows;
    }
    auto single = ex;
    single.premises = {{ex.premises[0][0]}};
    ad::Tape t2;
    for (const auto& row : model.forward(t2, single, nullptr).attention)
      c.expect(row.size() == 1 && row[0] == 1.0, "single-token premise weight is not exactly 1");

    for (auto& p : model.params())
      if (p.name == "attention.w") std::fill(p.tensor->values.begin(), p.tensor->values.end(), 0.0);
    ad::Tape t3;
    const double n = static_cast<double>(nn::concat_premises(ex.premises).size());
    for (const auto& row : model.forward(t3, ex, nullptr).attention)
      for (double a : row) c.expect(std::abs(a - 1.0 / n) <= 1e-15, fmt("uniform case weight %.17g vs %.17g", a, 1.0 / n));
  }
  c.expect(worst_sum <= 1e-12, fmt("row sum off by %.3e", worst_sum));
  return c.outcome(fmt("%zu rows over 50 fixtures, max |sum - 1| %.3e; single-token and uniform cases exact", rows,
                       worst_sum));
}

Outcome voting_examples() {
  Checker c;
  const auto rows = testing::voting_rows();
  std::string maj, heur;
  for (const auto& r : rows) {
    auto m = voting::majority_vote(r.pairs);
    auto h = voting::ec_heuristic(r.pairs);
    maj += m ? std::string(1, label_char(*m)) + " " : std::string("none ");
    heur += std::string(1, label_char(h)) + " ";
    c.expect(m == r.majority, "majority mismatch in category " + std::to_string(r.category));
    c.expect(h == r.heuristic, "heuristic mismatch in category " + std::to_string(r.category));
    c.expect(voting::pair_agreement_category(r.pairs, r.gold) == r.category, "agreement category mismatch");
  }
  c.expect(voting::ec_heuristic(rows[1].pairs) == rows[1].gold, "heuristic should be right on the second row");
  c.expect(voting::ec_heuristic(rows[3].pairs) != rows[3].gold, "heuristic should be wrong on the fourth row");
  return c.outcome("majority: " + maj + "| heuristic: " + heur);
}

Outcome voting_identities() {
  Checker c;
  Rng rng(31337);
  std::vector<data::Item> items;
  std::size_t oracle_strict = 0;
  std::array<std::size_t, 5> oracle_cats{};
  for (int i = 0; i < 1000; ++i) {
    data::Item it;
    it.id = "v" + std::to_string(i);
    std::array<Label, 4> p{};
    for (auto& l : p) l = label_from_index(rng.index(3));
    it.pair_labels = p;
    it.gold = label_from_index(rng.index(3));
    // Brute force: try every label as the winner and keep one with at least three votes.
    std::optional<Label> winner;
    for (Label cand : kAllLabels)
      if (std::count(p.begin(), p.end(), cand) >= 3) winner = cand;
    oracle_strict += winner == it.gold;
    ++oracle_cats[static_cast<std::size_t>(std::count(p.begin(), p.end(), *it.gold))];
    c.expect(voting::majority_vote(p) == winner, "majority vote differs from the oracle");
    items.push_back(it);
  }
  auto r = voting::score_baselines(items);
  const double cat34 = r.category_histogram[3] + r.category_histogram[4];
  c.expect(std::abs(r.majority_acc_strict - cat34) <= 1e-12, "strict accuracy differs from categories 3+4");
  c.expect(std::abs(r.majority_acc_strict - oracle_strict / 1000.0) <= 1e-12, "strict accuracy differs from the oracle");
  for (std::size_t k = 0; k < 5; ++k) c.expect(r.category_counts[k] == oracle_cats[k], "category count differs from the oracle");
  return c.outcome(fmt("1000 random items: strict %.4f = cat3 + cat4 %.4f", r.majority_acc_strict, cat34));
}

Outcome released_reproduction() {
  const char* env = std::getenv("MPE_RELEASED_DIR");
  if (!env || !*env) return {Status::Skip, "MPE_RELEASED_DIR not set"};
  const fs::path dir = env;
  const fs::path train_path = dir / "mpe_train.txt", dev_path = dir / "mpe_dev.txt", pairs_path = dir / "mpe_dev_pairs.tsv";
  for (const auto& p : {train_path, dev_path, pairs_path})
    if (!fs::exists(p)) return {Status::Skip, "missing " + p.string()};
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  auto train = data::read_release_tsv(train_path, Split::Train);
  auto dev = data::read_release_tsv(dev_path, Split::Dev);
  std::vector<data::Item> all = train;
  all.insert(all.end(), dev.begin(), dev.end());
  if (fs::exists(dir / "mpe_test.txt")) {
    auto test = data::read_release_tsv(dir / "mpe_test.txt", Split::Test);
    all.insert(all.end(), test.begin(), test.end());
  }
  data::attach_pair_labels(dev, data::read_label_lists(pairs_path, data::kPremisesPerItem));

  auto near = [&](double got, double want, double tol, const std::string& what) {
    c.expect(std::abs(got - want) <= tol, fmt("%s: %.4f, expected %.4f +- %.4f", what.c_str(), got, want, tol));
  };
  auto v = voting::score_baselines(dev);
  near(100 * v.heuristic_acc, 41.7, 0.5, "dev heuristic accuracy %");
  near(100 * v.majority_acc_strict, 34.6, 0.5, "dev strict majority %");
  const double hist[5] = {21.8, 26.9, 16.7, 24.8, 9.8};
  for (std::size_t k = 0; k < 5; ++k) near(100 * v.category_histogram[k], hist[k], 0.5, "category " + std::to_string(k) + " %");

  const auto normalizer = text::Normalizer::load();
  auto ts = data::corpus_stats(train, normalizer);
  const double dist[3] = {32.3, 26.3, 41.6};
  for (std::size_t k = 0; k < 3; ++k) near(100 * ts.label_distribution[k], dist[k], 0.2, "train label % " + std::string(1, label_char(label_from_index(k))));
  near(ts.overlap_lemma.mean, 0.33, 0.03, "train lemma overlap");

  auto as = data::corpus_stats(all, normalizer);
  c.expect(as.agreement.has_value(), "no judgment counts in the release files");
  if (as.agreement) {
    near(*as.agreement, 0.70, 0.02, "annotator agreement");
    const double per[3] = {0.82, 0.42, 0.78};
    for (std::size_t k = 0; k < 3; ++k)
      if (as.agreement_by_label[k]) near(*as.agreement_by_label[k], per[k], 0.03, "agreement " + std::string(1, label_char(label_from_index(k))));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 60.0, "took longer than a minute");
  return c.outcome(fmt("heuristic %.1f%%, strict %.1f%%, agreement %.2f, lemma overlap %.2f (%.1fs)", 100 * v.heuristic_acc,
                       100 * v.majority_acc_strict, as.agreement.value_or(0.0), ts.overlap_lemma.mean, secs));
}

// Breadth-first strict ancestors, computed from the parent lists alone.
std::set<graph::NodeId> strict_ancestors(const graph::PhraseGraph& g, graph::NodeId start) {
  std::set<graph::NodeId> seen;
  std::deque<graph::NodeId> queue{start};
  while (!queue.empty()) {
    auto n = queue.front();
    queue.pop_front();
    for (auto p : g.parents(n))
      if (seen.insert(p).second) queue.push_back(p);
  }
  seen.erase(start);
  return seen;
}

Outcome pipeline_invariants() {
  Checker c;
  const fs::path fixtures = MPE_FIXTURE_DIR;
  const auto normalizer = text::Normalizer::load();
  const auto rules = graph::ReductionRuleSet::load(default_data_dir(), normalizer.stopwords());
  const auto corpus = data::load_corpus(fixtures / "corpus12.tsv", normalizer, data::read_splits(fixtures / "splits12.tsv"));
  const auto refs = corpus.caption_refs();
  const auto g = graph::PhraseGraph::build(refs, rules);
  data::GenerationConfig cfg;
  cfg.n_items = {12, 4, 4};
  cfg.seed = 42;

  const auto first = data::generate_items(corpus, g, normalizer, cfg);
  double max_overlap = 0.0;
  for (const auto& item : first.items) {
    const auto norm = data::normalize_item(item, normalizer);
    std::set<std::string> premise_tokens;
    for (const auto& p : norm.premises) premise_tokens.insert(p.content_tokens.begin(), p.content_tokens.end());
    std::size_t shared = 0;
    for (const auto& t : norm.hypothesis.content_tokens) shared += premise_tokens.count(t);
    const double overlap = static_cast<double>(shared) / static_cast<double>(norm.hypothesis.content_tokens.size());
    max_overlap = std::max(max_overlap, overlap);
    c.expect(overlap <= 0.5, item.id + ": overlap above 0.5");

    const auto node = item.generation->node;
    c.expect(g.find(norm.hypothesis) == node, item.id + ": hypothesis does not map to its graph node");
    for (const auto& p : norm.premises) {
      auto pn = g.find(p);
      c.expect(pn.has_value(), item.id + ": premise missing from the graph");
      if (pn) c.expect(!strict_ancestors(g, *pn).count(node), item.id + ": hypothesis generalizes a premise");
    }
  }

  const fs::path dir = fs::temp_directory_path() / "mpe_acceptance";
  fs::create_directories(dir);
  write_file_atomic(dir / "run1.jsonl", data::write_items(first.items));
  write_file_atomic(dir / "run2.jsonl", data::write_items(data::generate_items(corpus, g, normalizer, cfg).items));
  const auto h1 = fnv1a64(read_file(dir / "run1.jsonl")), h2 = fnv1a64(read_file(dir / "run2.jsonl"));
  c.expect(h1 == h2, "two runs produced different files");
  c.expect(!first.items.empty(), "no items generated");
  return c.outcome(fmt("%zu items, max overlap %.2f, file hash %s twice", first.items.size(), max_overlap, hex64(h1).c_str()));
}

Outcome numerical_core() {
  Checker c;
  Rng rng(4242);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    ad::Tape t;
    ad::Tensor x(ad::Shape{1 + rng.index(20)});
    ad::init_uniform(x, trial % 2 ? 1e4 : 3.0, rng);
    double s = 0.0;
    for (double p : ad::softmax(t.constant(x)).value().values) {
      c.expect(p >= 0.0, "negative softmax output");
      s += p;
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  c.expect(worst <= 1e-12, fmt("softmax sum off by %.3e", worst));

  ad::Tape t;
  const double ce = ad::cross_entropy(t.constant(ad::Tensor::vector({-800.0, 900.0, 0.0})), 1).item();
  c.expect(ce == 0.0, fmt("cross-entropy at certainty is %.3e", ce));

  ad::Tensor w = ad::Tensor::vector({0.25, -1.5, 3.0});
  const auto before = w.values;
  w.ensure_grad();
  ad::Adam adam;
  for (int i = 0; i < 10; ++i) adam.step({{"w", &w}});
  c.expect(w.values == before, "zero gradient moved the parameters");
  c.expect(adam.steps() == 10, "step counter did not advance");

  const double value = 0.9;
  double total = 0.0;
  const int n = 100000;
  Rng drop(77);
  for (int i = 0; i < n; ++i) {
    ad::Tape dt;
    total += ad::dropout(dt.constant(ad::Tensor::vector({value})), 0.8, &drop).item();
  }
  const double mean = total / n;
  c.expect(std::abs(mean - value) <= 0.02 * value, fmt("dropout mean %.4f vs %.4f", mean, value));
  return c.outcome(fmt("softmax |sum-1| %.1e, CE(certain) %.1e, Adam fixpoint, dropout mean %.4f vs %.2f", worst, ce, mean,
                       value));
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double limit_seconds;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", gradient_correctness, 120},
      {2, "overfit oracle", overfit_oracle, 900},
      {3, "sum-of-experts invariants", se_invariants, 0},
      {4, "attention invariants", attention_invariants, 0},
      {5, "voting on the published rows", voting_examples, 0},
      {6, "voting identities", voting_identities, 0},
      {7, "released-data reproduction", released_reproduction, 60},
      {8, "pipeline invariants", pipeline_invariants, 0},
      {9, "numerical core", numerical_core, 60},
  };
  bool failed = false;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.limit_seconds > 0 && secs > cr.limit_seconds && o.status == Status::Pass)
      o = {Status::Fail, fmt("%s; exceeded %.0fs", o.detail.c_str(), cr.limit_seconds)};
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    failed |= o.status == Status::Fail;
    std::printf("AC%d %s  %-28s %s [%.1fs]\n", cr.id, tag, cr.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
