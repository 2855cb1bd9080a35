#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mpe/adam.hpp"
#include "mpe/checkpoint.hpp"
#include "mpe/grad_check.hpp"
#include "mpe/ops.hpp"

using namespace mpe;
using namespace mpe::ad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  init_uniform(t, scale, rng);
  return t;
}

}  // namespace

TEST_SUITE("tensor-autodiff") {

TEST_CASE("forward values") {
  Tape tape;
  auto p = softmax(tape.constant(Tensor::vector({0, 0, 0})));
  for (double v : p.value().values) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));

  CHECK(cross_entropy(tape.constant(Tensor::vector({0, 1000, 0})), 1).item() == 0.0);

  auto a = tape.constant(Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  auto b = tape.constant(Tensor::matrix(3, 2, {7, 8, 9, 10, 11, 12}));
  auto c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 2});
  // [1*7+2*9+3*11, 1*8+2*10+3*12; 4*7+5*9+6*11, 4*8+5*10+6*12]
  CHECK(c.value().values == std::vector<double>{58, 64, 139, 154});
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(add(a, b), ShapeError);

  auto mv = matmul(a, tape.constant(Tensor::vector({1, 0, -1})));
  CHECK(mv.shape() == Shape{2});
  CHECK(mv.value().values == std::vector<double>{-2, -2});
}

TEST_CASE("softmax is a stable distribution along the reduced axis") {
  Rng rng(3);
  Tape tape;
  for (double mag : {1.0, 50.0, 1e3, 1e6}) {
    auto x = tape.constant(random_tensor({4, 5}, rng, mag));
    for (std::size_t axis : {0u, 1u}) {
      auto p = softmax(x, axis).value();
      const std::size_t outer = axis == 0 ? 5 : 4, inner = axis == 0 ? 4 : 5;
      for (std::size_t o = 0; o < outer; ++o) {
        double s = 0;
        for (std::size_t i = 0; i < inner; ++i) {
          double v = axis == 0 ? p.at(i, o) : p.at(o, i);
          CHECK(v >= 0.0);
          s += v;
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
    }
  }
  std::vector<double> big{1000, 1001, 1002};
  CHECK(log_sum_exp(big) == doctest::Approx(1002 + std::log(1 + std::exp(-1.0) + std::exp(-2.0))));
}

TEST_CASE("basic gradients") {
  Tensor x = Tensor::vector({1, -2, 3});
  Tensor y = Tensor::vector({0.5, 4, -1});
  {
    Tape tape;
    tape.backward(sum(tape.param(x)));
    CHECK(x.grad == std::vector<double>{1, 1, 1});
  }
  x.clear_grad();
  {
    Tape tape;
    tape.backward(sum(mul(tape.param(x), tape.param(y))));
    CHECK(x.grad == y.values);
    CHECK(y.grad == x.values);
  }
  Tape tape;
  CHECK_THROWS(tape.backward(tape.param(x)));
}

TEST_CASE("parameter gradients accumulate until cleared") {
  Tensor w = Tensor::vector({2.0});
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    auto v = tape.param(w);
    tape.backward(sum(mul(v, v)));
  }
  CHECK(w.grad[0] == 8.0);
  w.zero_grad();
  CHECK(w.grad[0] == 0.0);
  Tape tape;
  auto v = tape.param(w);
  CHECK(tape.param(w).id == v.id);
  tape.backward(sum(add(v, v)));
  CHECK(w.grad[0] == 2.0);
}

TEST_CASE("softmax cross-entropy gradient is probabilities minus one-hot") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor logits = random_tensor({3}, rng, 5.0);
    const std::size_t cls = rng.index(3);
    Tape tape;
    tape.backward(cross_entropy(tape.param(logits), cls));
    auto p = softmax_values(logits.values);
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(logits.grad[k] - (p[k] - (k == cls ? 1.0 : 0.0))) <= 1e-12);
  }
}

TEST_CASE("dropout preserves expectation and is the identity without an rng") {
  Tape tape;
  auto x = tape.constant(Tensor::vector({1.5, -0.75}));
  CHECK(dropout(x, 0.8, nullptr).value().values == x.value().values);
  Rng rng(5);
  std::array<double, 2> total{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    Tape t;
    auto d = dropout(t.constant(Tensor::vector({1.5, -0.75})), 0.8, &rng).value();
    for (int k = 0; k < 2; ++k) {
      CHECK((d[k] == 0.0 || std::abs(d[k] - x.value()[k] / 0.8) < 1e-15));
      total[k] += d[k];
    }
  }
  CHECK(std::abs(total[0] / n - 1.5) <= 0.02 * 1.5);
  CHECK(std::abs(total[1] / n + 0.75) <= 0.02 * 0.75);
}

TEST_CASE("embedding gradients land in the table unless frozen") {
  Tensor table(Shape{3, 2}, 1.0);
  for (bool frozen : {false, true}) {
    table.clear_grad();
    Tape tape;
    auto e = embedding(tape, table, 1, frozen);
    tape.backward(sum(mul(e, tape.constant(Tensor::vector({2, 3})))));
    if (frozen) CHECK_FALSE(table.has_grad());
    else CHECK(table.grad == std::vector<double>{0, 0, 2, 3, 0, 0});
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor w = Tensor::vector({0.3, -0.2});
    w.ensure_grad();
    Adam opt;
    opt.step({{"w", &w}});
    CHECK(w.values == std::vector<double>{0.3, -0.2});
    CHECK(opt.steps() == 1);
  }
  SUBCASE("single step from fresh state") {
    Tensor w = Tensor::vector({1.0, 1.0});
    w.ensure_grad() = {0.5, -2.0};
    AdamConfig cfg;
    Adam opt(cfg);
    opt.step({{"w", &w}});
    for (int k = 0; k < 2; ++k) {
      const double g = w.grad[k];
      const double m = (1 - cfg.beta1) * g, v = (1 - cfg.beta2) * g * g;
      const double mhat = m / (1 - cfg.beta1), vhat = v / (1 - cfg.beta2);
      CHECK(w.values[k] == doctest::Approx(1.0 - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps)).epsilon(1e-14));
    }
  }
  SUBCASE("descends a quadratic") {
    Tensor w = Tensor::vector({1.0});
    Adam opt(AdamConfig{.lr = 0.01});
    for (int i = 0; i < 100; ++i) {
      w.zero_grad();
      w.ensure_grad()[0] = 2 * w[0];
      opt.step({{"w", &w}});
    }
    CHECK(std::abs(w[0]) < 0.5);
  }
  SUBCASE("missing gradients are an error; frozen tensors are skipped") {
    Tensor w = Tensor::vector({1.0}), f = Tensor::vector({1.0});
    Adam opt;
    CHECK_THROWS(opt.step({{"w", &w}}));
    w.ensure_grad()[0] = 1.0;
    opt.step({{"w", &w}, {"f", &f, false}});
    CHECK(f[0] == 1.0);
    CHECK(w[0] < 1.0);
  }
}

TEST_CASE("checkpoint round trip and corruption") {
  Rng rng(1);
  Tensor a = random_tensor({2, 3}, rng), b = random_tensor({4}, rng);
  auto path = std::filesystem::temp_directory_path() / "mpe_ckpt_test.bin";
  save_checkpoint(path, "{\"k\":1}", {{"a", &a}, {"b", &b}});
  auto ck = load_checkpoint(path);
  CHECK(ck.metadata == "{\"k\":1}");
  CHECK(ck.get("a").values == a.values);
  CHECK(ck.get("b").shape == Shape{4});
  CHECK_THROWS(ck.get("zz"));

  Tensor a2(Shape{2, 3}), b2(Shape{4});
  restore_params(ck, {{"a", &a2}, {"b", &b2}});
  CHECK(a2.values == a.values);
  Tensor wrong(Shape{3, 2});
  CHECK_THROWS(restore_params(ck, {{"a", &wrong}, {"b", &b2}}));
  CHECK_THROWS(restore_params(ck, {{"a", &a2}}));

  auto bytes = encode_checkpoint(ck);
  CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);
  CHECK_THROWS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS(decode_checkpoint(bad_magic));
  auto bad_version = bytes;
  bad_version[8] = 9;
  CHECK_THROWS(decode_checkpoint(bad_version));
  CHECK_THROWS(decode_checkpoint(bytes + "x"));
}

TEST_CASE("gradient check") {
  Rng rng(9);
  Tensor W = random_tensor({3, 4}, rng), b = random_tensor({3}, rng);
  const Tensor x = random_tensor({4}, rng);
  ParamList params{{"W", &W}, {"b", &b}};
  auto linear = [&](Tape& t) { return cross_entropy(add(matmul(t.param(W), t.constant(x)), t.param(b)), 2); };
  auto report = grad_check(linear, params);
  CHECK(report.max_rel_error < 1e-8);
  CHECK(report.entries.size() == 2);
  CHECK(report.entries[0].checked == 12);

  // Same forward value, gradient scaled by 1.5 in a hand-written closure.
  auto corrupted = [&](Tape& t) {
    auto y = add(matmul(t.param(W), t.constant(x)), t.param(b));
    auto wrong = t.record(y.value(), [y](Tape& tape, std::size_t self) {
      auto& gin = tape.grad(y.id);
      const auto& gout = tape.grad(self);
      for (std::size_t i = 0; i < gin.size(); ++i) gin[i] += 1.5 * gout[i];
    });
    return cross_entropy(wrong, 2);
  };
  auto bad = grad_check(corrupted, params);
  CHECK_FALSE(bad.passed(1e-4));
  CHECK(relative_error(1.0, 1.0, 1e-6) == 0.0);
  CHECK(relative_error(0.0, 1e-9, 1e-6) == doctest::Approx(1e-3));
}

TEST_CASE("forward passes are bitwise deterministic under a seed") {
  auto run = [] {
    Rng rng(77);
    Tensor W = random_tensor({3, 5}, rng);
    Tape tape;
    auto h = dropout(tanh(tape.constant(random_tensor({5}, rng))), 0.8, &rng);
    return cross_entropy(matmul(tape.param(W), h), 0).item();
  };
  CHECK(run() == run());
}

}
