#include <numeric>

#include "doctest.h"
#include "mpe/checkpoint.hpp"
#include "mpe/evaluation.hpp"
#include "mpe/trainer.hpp"
#include "synthetic.hpp"

using namespace mpe;
using namespace mpe::nn;

namespace {

std::vector<std::vector<double>> snapshot(Model& m) {
  std::vector<std::vector<double>> out;
  for (auto& p : m.params()) out.push_back(p.tensor->values);
  return out;
}

std::uint64_t checksum(Model& m) {
  ad::Checkpoint ck;
  for (auto& p : m.params()) ck.tensors.emplace_back(p.name, *p.tensor);
  return fnv1a64(ad::encode_checkpoint(ck));
}

TrainConfig overfit_config() {
  TrainConfig c;
  c.epochs = 200;
  c.batch_size = 8;
  c.learning_rate = 0.01;
  c.keep_best_epoch = false;
  return c;
}

double weighted_mean(const auto& tallies) {
  std::size_t total = 0, correct = 0;
  for (const Tally& t : tallies) {
    total += t.total;
    correct += t.correct;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

TEST_SUITE("train-eval") {

TEST_CASE("every model overfits the synthetic set") {
  const auto data = testing::synthetic_mpe(32, 5);
  for (auto kind : {ModelKind::Lstm, ModelKind::Attention, ModelKind::SumOfExperts}) {
    CAPTURE(model_kind_name(kind));
    Model m(testing::small_config(kind));
    auto r = train(m, data, {}, overfit_config());
    REQUIRE(r.log.size() == 200);
    for (std::size_t e = 1; e < 5; ++e) CHECK(r.log[e].train_loss < r.log[e - 1].train_loss);
    CHECK(std::any_of(r.log.begin(), r.log.end(), [](const EpochRecord& e) { return e.train_accuracy == 1.0; }));
  }
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  const auto data = testing::synthetic_mpe(12, 1);
  Model m(testing::small_config(ModelKind::Attention));
  const auto before = snapshot(m);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 5;
  cfg.learning_rate = 0.0;
  train(m, data, data, cfg);
  CHECK(snapshot(m) == before);
}

TEST_CASE("training is deterministic under a seed") {
  const auto data = testing::synthetic_mpe(16, 2);
  auto cfg_model = testing::small_config(ModelKind::Lstm);
  cfg_model.keep_prob = 0.7;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  auto run = [&] {
    Model m(cfg_model);
    std::vector<std::string> log;
    train(m, data, data, cfg, "train", [&](const EpochRecord& r) { log.push_back(r.to_json()); });
    return std::pair(log, snapshot(m));
  };
  CHECK(run() == run());
  auto other = cfg;
  other.seed = 99;
  Model m(cfg_model);
  auto r = train(m, data, data, other);
  Model m2(cfg_model);
  CHECK(r.log.front().mean_batch_loss != train(m2, data, data, cfg).log.front().mean_batch_loss);
}

TEST_CASE("best epoch restore keeps the parameters of the best dev epoch") {
  const auto data = testing::synthetic_mpe(12, 8);
  const auto dev = testing::synthetic_mpe(9, 9);
  Model m(testing::small_config(ModelKind::Lstm));
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.02;
  auto r = train(m, data, dev, cfg);
  REQUIRE(r.best_epoch);
  CHECK(r.log[*r.best_epoch].dev_accuracy == r.best_dev_accuracy);
  for (const auto& e : r.log) CHECK(*e.dev_accuracy <= *r.best_dev_accuracy);
  CHECK(loss_and_accuracy(m, dev).accuracy == *r.best_dev_accuracy);
}

TEST_CASE("degenerate pretraining equals one longer run") {
  const auto data = testing::synthetic_mpe(10, 4);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.01;
  cfg.keep_best_epoch = false;
  auto model_cfg = testing::small_config(ModelKind::SumOfExperts);
  model_cfg.keep_prob = 0.8;

  Model a(model_cfg);
  auto ra = pretrain_finetune(a, data, data, {}, cfg, cfg);
  Model b(model_cfg);
  auto twenty = cfg;
  twenty.epochs = 20;
  auto rb = train(b, data, {}, twenty);
  CHECK(snapshot(a) == snapshot(b));
  REQUIRE(ra.log.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(ra.log[i].mean_batch_loss == rb.log[i].mean_batch_loss);
  CHECK(ra.log[0].phase == "pretrain");
  CHECK(ra.log[10].phase == "finetune");
  CHECK(ra.log[10].epoch == 1);
}

TEST_CASE("single-premise pretraining transfers to four-premise items") {
  const auto pre = testing::synthetic_mpe(30, 6, 1);
  const auto fine = testing::synthetic_mpe(12, 7);
  const auto dev = testing::synthetic_mpe(30, 8);
  for (auto kind : {ModelKind::SumOfExperts, ModelKind::Lstm}) {
    Model m(testing::small_config(kind));
    TrainConfig pc;
    pc.epochs = 30;
    pc.batch_size = 6;
    pc.learning_rate = 0.01;
    TrainConfig fc = pc;
    fc.epochs = 1;
    std::optional<double> phase_two_start;
    pretrain_finetune(m, pre, fine, dev, pc, fc, [&](const EpochRecord& r) {
      if (r.phase == "finetune" && !phase_two_start) phase_two_start = r.dev_accuracy;
    });
    REQUIRE(phase_two_start);
    CHECK(*phase_two_start >= 1.0 / 3.0);
  }
  Model se(testing::small_config(ModelKind::SumOfExperts));
  CHECK_THROWS_AS(pretrain_finetune(se, testing::synthetic_mpe(3, 1, 2), fine, {}, TrainConfig{}, TrainConfig{}),
                  ValidationError);
}

TEST_CASE("unlabeled or empty inputs are rejected") {
  auto data = testing::synthetic_mpe(4, 1);
  data[2].label.reset();
  Model m(testing::small_config(ModelKind::Lstm));
  CHECK_THROWS_AS(train(m, data, {}, TrainConfig{}), ValidationError);
  CHECK_THROWS_AS(train(m, {}, {}, TrainConfig{}), ValidationError);
  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(m, testing::synthetic_mpe(4, 1), {}, bad), ValidationError);
  CHECK_THROWS_AS(evaluate(m, data), ValidationError);
  CHECK_THROWS_AS(evaluate(m, std::vector<Example>{}), ValidationError);
}

TEST_CASE("constant predictor report") {
  auto data = testing::synthetic_mpe(10, 3);  // labels E,N,C,E,N,C,E,N,C,E
  auto r = evaluate(data, [](const Example&) { return Label::Entailment; });
  CHECK(r.overall.accuracy() == doctest::Approx(0.4));
  CHECK(r.by_class[0].accuracy() == 1.0);
  CHECK(r.by_class[1].accuracy() == 0.0);
  CHECK(r.by_class[2].accuracy() == 0.0);
  CHECK(r.confusion[1][0] == 3);
  CHECK(r.without_pair_labels == 10);
  CHECK(r.without_tags == 10);
  CHECK(r.predictions == std::vector<Label>(10, Label::Entailment));
}

TEST_CASE("report identities hold for a trained model on tagged data") {
  auto data = testing::synthetic_mpe(40, 12);
  Rng rng(12);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i % 5 != 0) {
      std::array<Label, 4> pl{};
      for (auto& l : pl) l = label_from_index(rng.index(3));
      data[i].pair_labels = pl;
    }
    if (i % 2) data[i].tags.insert("odd");
    if (i % 3 == 0) data[i].tags.insert("third");
  }
  Model m(testing::small_config(ModelKind::Attention));
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  train(m, data, {}, cfg);

  const auto sum_before = checksum(m);
  auto r = evaluate(m, data);
  CHECK(checksum(m) == sum_before);

  CHECK(r.overall.total == 40);
  CHECK(weighted_mean(r.by_class) == doctest::Approx(r.overall.accuracy()).epsilon(1e-9));
  CHECK(r.without_pair_labels == 8);
  std::size_t with_pairs = 0;
  for (const auto& t : r.by_agreement) with_pairs += t.total;
  CHECK(with_pairs == 32);
  for (std::size_t g = 0; g < 3; ++g) {
    CHECK(std::accumulate(r.confusion[g].begin(), r.confusion[g].end(), std::size_t{0}) == r.by_class[g].total);
    CHECK(r.confusion[g][g] == r.by_class[g].correct);
  }
  CHECK(r.by_tag.at("odd").total == 20);
  CHECK(r.by_tag.at("third").total == 14);
  CHECK(r.without_tags == 13);

  // Agreement buckets plus the unbucketed remainder partition the data.
  Tally rest;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!data[i].pair_labels) {
      ++rest.total;
      rest.correct += r.predictions[i] == *data[i].label;
    }
  std::vector<Tally> parts(r.by_agreement.begin(), r.by_agreement.end());
  parts.push_back(rest);
  CHECK(weighted_mean(parts) == doctest::Approx(r.overall.accuracy()).epsilon(1e-9));

  for (std::size_t i = 0; i < data.size(); ++i) CHECK(r.predictions[i] == m.predict(data[i]));
  CHECK(r.to_json().find("\"confusion\"") != std::string::npos);
}

}
