#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mpe/grad_check.hpp"
#include "mpe/models.hpp"
#include "mpe/ops.hpp"

using namespace mpe;
using namespace mpe::ad;
using namespace mpe::nn;

namespace {

constexpr std::size_t kVocab = 20;

ModelConfig tiny(ModelKind kind, double scale = 0.5) {
  ModelConfig c;
  c.kind = kind;
  c.vocab_size = kVocab;
  c.embed_dim = 8;
  c.state_dim = 8;
  c.init_scale = scale;
  c.seed = 13;
  return c;
}

Example four_premise_example() {
  Example ex;
  ex.id = "t";
  ex.premises = {{2, 3, 4}, {5, 6}, {7, 8, 9, 10}, {11}};
  ex.hypothesis = {12, 3, 13};
  ex.label = Label::Neutral;
  return ex;
}

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr ModelKind kAllKinds[] = {ModelKind::Lstm, ModelKind::Attention, ModelKind::SumOfExperts};

}  // namespace

TEST_SUITE("models") {

TEST_CASE("model kinds and presets") {
  CHECK(parse_model_kind("lstm") == ModelKind::Lstm);
  CHECK(parse_model_kind("attn") == ModelKind::Attention);
  CHECK(parse_model_kind("se") == ModelKind::SumOfExperts);
  CHECK_FALSE(parse_model_kind("cnn"));
  CHECK(preset("lstm-mpe").state_dim == 75);
  CHECK(preset("attn-mpe").keep_prob == 0.6);
  CHECK(preset("se-mpe").state_dim == 100);
  CHECK_THROWS(preset("nope"));
  ModelConfig bad = tiny(ModelKind::Lstm);
  bad.keep_prob = 0.0;
  CHECK_THROWS_AS(Model{bad}, ValidationError);
}

TEST_CASE("lstm cell") {
  SUBCASE("zero weights and inputs") {
    Tape t;
    auto s = lstm_cell(t.constant(Tensor(Shape{3})), {t.constant(Tensor(Shape{2})), t.constant(Tensor(Shape{2}))},
                       t.constant(Tensor(Shape{8, 5})), t.constant(Tensor(Shape{8})));
    for (double v : s.h.value().values) CHECK(v == 0.0);
    for (double v : s.c.value().values) CHECK(v == 0.0);
  }
  SUBCASE("forget gate open and input gate closed keeps the cell") {
    Tape t;
    Tensor b(Shape{8});
    for (std::size_t j = 0; j < 2; ++j) b[j] = -1000.0;     // input
    for (std::size_t j = 2; j < 4; ++j) b[j] = 1000.0;      // forget
    auto c_prev = t.constant(Tensor::vector({0.7, -1.3}));
    auto s = lstm_cell(t.constant(Tensor::vector({1, 2, 3})), {t.constant(Tensor::vector({0.2, 0.1})), c_prev},
                       t.constant(Tensor(Shape{8, 5}, 0.3)), t.constant(b));
    CHECK(s.c.value().values == c_prev.value().values);
  }
  SUBCASE("one step against a hand-written oracle") {
    Rng rng(21);
    Tensor W(Shape{8, 5}), b(Shape{8}), x(Shape{3}), h(Shape{2}), c(Shape{2});
    for (auto* p : {&W, &b, &x, &h, &c}) init_uniform(*p, 1.0, rng);
    Tape t;
    auto s = lstm_cell(t.constant(x), {t.constant(h), t.constant(c)}, t.constant(W), t.constant(b));
    const double in[5] = {x[0], x[1], x[2], h[0], h[1]};
    double z[8];
    for (int r = 0; r < 8; ++r) {
      z[r] = b[r];
      for (int j = 0; j < 5; ++j) z[r] += W.at(r, j) * in[j];
    }
    for (int u = 0; u < 2; ++u) {
      const double ig = sigmoid_ref(z[u]), fg = sigmoid_ref(z[2 + u]), og = sigmoid_ref(z[4 + u]), g = std::tanh(z[6 + u]);
      const double cn = fg * c[u] + ig * g;
      CHECK(std::abs(s.c.value()[u] - cn) <= 1e-12);
      CHECK(std::abs(s.h.value()[u] - og * std::tanh(cn)) <= 1e-12);
    }
  }
}

TEST_CASE("premise concatenation") {
  std::vector<TokenSeq> p = {TokenSeq(5, 2), TokenSeq(6, 3), TokenSeq(7, 4), TokenSeq(8, 5)};
  auto joined = concat_premises(p);
  CHECK(joined.size() == 29);
  CHECK(std::count(joined.begin(), joined.end(), Vocabulary::kSep) == 3);
  std::vector<TokenSeq> one = {{4, 5, 6}};
  CHECK(concat_premises(one) == one[0]);
  std::swap(p[0], p[1]);
  CHECK(concat_premises(p) != joined);
}

TEST_CASE("all-zero parameters give zero logits") {
  for (auto kind : kAllKinds) {
    Model m(tiny(kind));
    for (auto& p : m.params()) std::fill(p.tensor->values.begin(), p.tensor->values.end(), 0.0);
    auto z = m.logits(four_premise_example());
    CHECK(z == std::vector<double>{0, 0, 0});
    for (double p : softmax_values(z)) CHECK(p == doctest::Approx(1.0 / 3));
  }
}

TEST_CASE("full-loss gradient checks at dimension 8") {
  for (auto kind : kAllKinds) {
    CAPTURE(model_kind_name(kind));
    Model m(tiny(kind));
    const auto ex = four_premise_example();
    auto loss = [&](Tape& t) { return cross_entropy(m.forward(t, ex, nullptr).logits, label_index(*ex.label)); };
    GradCheckConfig cfg;
    cfg.coords_per_param = 24;
    auto report = grad_check(loss, m.params(), cfg);
    INFO(report.to_string());
    CHECK(report.passed(1e-4));
  }
}

TEST_CASE("attention distributions") {
  Model m(tiny(ModelKind::Attention));
  Tape t;
  auto r = m.forward(t, four_premise_example(), nullptr);
  CHECK(r.attention.size() == 3);
  for (const auto& row : r.attention) {
    CHECK(row.size() == 13);
    double s = 0;
    for (double a : row) {
      CHECK(a >= 0.0);
      s += a;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }

  Example single = four_premise_example();
  single.premises = {{7}};
  Tape t2;
  for (const auto& row : m.forward(t2, single, nullptr).attention) CHECK(row == std::vector<double>{1.0});

  for (auto& p : m.params())
    if (p.name == "attention.w") std::fill(p.tensor->values.begin(), p.tensor->values.end(), 0.0);
  Tape t3;
  for (const auto& row : m.forward(t3, four_premise_example(), nullptr).attention)
    for (double a : row) CHECK(a == doctest::Approx(1.0 / 13).epsilon(1e-14));
}

TEST_CASE("sum of experts is order free and composes the conditional core") {
  Model m(tiny(ModelKind::SumOfExperts));
  auto ex = four_premise_example();
  const auto base = m.logits(ex);
  const Label base_pred = m.predict(ex);
  std::vector<std::size_t> perm = {0, 1, 2, 3};
  int seen = 0;
  do {
    Example p = ex;
    for (std::size_t i = 0; i < 4; ++i) p.premises[i] = ex.premises[perm[i]];
    CHECK(m.logits(p) == base);
    CHECK(m.predict(p) == base_pred);
    ++seen;
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(seen == 24);

  Example same = ex;
  same.premises = {ex.premises[2], ex.premises[2], ex.premises[2], ex.premises[2]};
  Example one = ex;
  one.premises = {ex.premises[2]};
  const auto l1 = m.logits(one);
  const auto l4 = m.logits(same);
  for (std::size_t k = 0; k < 3; ++k) CHECK(l4[k] == 4.0 * l1[k]);

  Tape t;
  auto composed = m.classify(t, m.pair_representation(t, one.premises[0], one.hypothesis, nullptr), nullptr);
  CHECK(composed.value().values == l1);

  Tape t2;
  auto r = m.forward(t2, ex, nullptr);
  REQUIRE(r.premise_logits.size() == 4);
  Tape t3;
  auto second = m.classify(t3, m.pair_representation(t3, ex.premises[1], ex.hypothesis, nullptr), nullptr);
  CHECK(r.premise_logits[1].value().values == second.value().values);

  Example three = ex;
  three.premises.pop_back();
  CHECK_THROWS_AS(m.logits(three), ValidationError);
}

TEST_CASE("determinism, conditioning and input validation") {
  for (auto kind : kAllKinds) {
    Model a(tiny(kind)), b(tiny(kind));
    auto ex = four_premise_example();
    CHECK(a.logits(ex) == a.logits(ex));
    CHECK(a.logits(ex) == b.logits(ex));
    Example other = ex;
    other.premises[0] = {14, 15, 16};
    CHECK(a.logits(other) != a.logits(ex));
    Example bad = ex;
    bad.hypothesis = {kVocab + 3};
    CHECK_THROWS_AS(a.logits(bad), ValidationError);
    bad.hypothesis = {};
    CHECK_THROWS_AS(a.logits(bad), ValidationError);
  }
}

TEST_CASE("dropout only acts when an rng is given") {
  Model m(tiny(ModelKind::Lstm));
  auto ex = four_premise_example();
  Rng r1(4), r2(4);
  Tape t1, t2;
  auto a = m.forward(t1, ex, &r1).logits.value().values;
  auto b = m.forward(t2, ex, &r2).logits.value().values;
  CHECK(a == b);
  CHECK(a != m.logits(ex));
}

TEST_CASE("save and load") {
  Vocabulary vocab;
  for (std::size_t i = Vocabulary::kNumSpecial; i < kVocab; ++i) vocab.add("w" + std::to_string(i));
  for (auto kind : kAllKinds) {
    Model m(tiny(kind));
    auto path = std::filesystem::temp_directory_path() / "mpe_model_test.ckpt";
    save_model(path, m, vocab);
    auto loaded = load_model(path);
    CHECK(loaded.model->config().kind == kind);
    CHECK(loaded.vocab.tokens() == vocab.tokens());
    CHECK(loaded.model->logits(four_premise_example()) == m.logits(four_premise_example()));
  }
}

TEST_CASE("frozen word embeddings receive no gradient") {
  auto cfg = tiny(ModelKind::Lstm);
  cfg.freeze_embeddings = true;
  Model m(cfg);
  Tape t;
  auto ex = four_premise_example();
  t.backward(cross_entropy(m.forward(t, ex, nullptr).logits, 0));
  for (auto& p : m.params()) {
    if (p.name == "embedding.words") CHECK_FALSE(p.trainable);
    if (p.name == "embedding.words") CHECK_FALSE(p.tensor->has_grad());
    if (p.name == "embedding.special") CHECK(p.tensor->has_grad());
  }
}

}
