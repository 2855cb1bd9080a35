#include "mpe/trainer.hpp"

#include <numeric>

#include "json.hpp"

namespace mpe::nn {

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (!(learning_rate >= 0.0)) throw ValidationError("learning rate must be non-negative");
}

std::string EpochRecord::to_json() const {
  nlohmann::json j = {{"phase", phase},           {"epoch", epoch},
                      {"mean_batch_loss", mean_batch_loss}, {"train_loss", train_loss},
                      {"train_accuracy", train_accuracy}};
  j["dev_accuracy"] = dev_accuracy ? nlohmann::json(*dev_accuracy) : nlohmann::json(nullptr);
  return j.dump();
}

LossAccuracy loss_and_accuracy(Model& model, std::span<const Example> examples) {
  if (examples.empty()) return {};
  std::vector<double> loss(examples.size());
  std::vector<char> correct(examples.size());
  parallel_for(examples.size(), [&](std::size_t i) {
    const auto& ex = examples[i];
    if (!ex.label) throw ValidationError("example " + ex.id + " has no gold label");
    ad::Tape tape;
    Var z = model.forward(tape, ex, nullptr).logits;
    loss[i] = ad::cross_entropy(z, label_index(*ex.label)).item();
    const auto& v = z.value().values;
    correct[i] = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin()) == label_index(*ex.label);
  });
  const double n = static_cast<double>(examples.size());
  return {std::accumulate(loss.begin(), loss.end(), 0.0) / n,
          static_cast<double>(std::count(correct.begin(), correct.end(), 1)) / n};
}

namespace {

TrainResult run_phase(Model& model, std::span<const Example> train_set, std::span<const Example> dev_set,
                      const TrainConfig& config, const std::string& phase, const EpochCallback& on_epoch,
                      ad::Adam& adam, Rng& rng) {
  config.validate();
  if (train_set.empty()) throw ValidationError("training set is empty");
  for (const auto& ex : train_set)
    if (!ex.label) throw ValidationError("training example " + ex.id + " has no gold label");
  for (const auto& ex : dev_set)
    if (!ex.label) throw ValidationError("dev example " + ex.id + " has no gold label");

  auto params = model.params();
  adam.set_learning_rate(config.learning_rate);
  std::vector<std::size_t> order(train_set.size());

  TrainResult result;
  std::vector<std::vector<double>> best_values;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng epoch_rng = rng.fork();
    std::iota(order.begin(), order.end(), 0);
    epoch_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      for (const auto& p : params) {
        p.tensor->ensure_grad();
        p.tensor->zero_grad();
      }
      double batch_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const Example& ex = train_set[order[b]];
        ad::Tape tape;
        Var loss = ad::scale(ad::cross_entropy(model.forward(tape, ex, &epoch_rng).logits, label_index(*ex.label)), weight);
        batch_loss += loss.item();
        tape.backward(loss);
      }
      adam.step(params);
      loss_sum += batch_loss;
      ++batches;
    }
    ad::clear_grads(params);

    EpochRecord rec;
    rec.phase = phase;
    rec.epoch = epoch;
    rec.mean_batch_loss = loss_sum / static_cast<double>(batches);
    auto tr = loss_and_accuracy(model, train_set);
    rec.train_loss = tr.loss;
    rec.train_accuracy = tr.accuracy;
    if (!dev_set.empty()) {
      rec.dev_accuracy = loss_and_accuracy(model, dev_set).accuracy;
      if (!result.best_dev_accuracy || *rec.dev_accuracy > *result.best_dev_accuracy) {
        result.best_dev_accuracy = rec.dev_accuracy;
        result.best_epoch = result.log.size();
        if (config.keep_best_epoch) {
          best_values.clear();
          for (const auto& p : params) best_values.push_back(p.tensor->values);
        }
      }
    }
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (config.keep_best_epoch && !best_values.empty())
    for (std::size_t i = 0; i < params.size(); ++i) params[i].tensor->values = best_values[i];
  return result;
}

}  // namespace

TrainResult train(Model& model, std::span<const Example> train_set, std::span<const Example> dev_set,
                  const TrainConfig& config, const std::string& phase, const EpochCallback& on_epoch) {
  ad::Adam adam;
  Rng rng(config.seed);
  return run_phase(model, train_set, dev_set, config, phase, on_epoch, adam, rng);
}

TrainResult pretrain_finetune(Model& model, std::span<const Example> pretrain_set,
                              std::span<const Example> finetune_set, std::span<const Example> dev_set,
                              const TrainConfig& pretrain_config, const TrainConfig& finetune_config,
                              const EpochCallback& on_epoch) {
  if (model.config().kind == ModelKind::SumOfExperts) {
    for (const auto& ex : pretrain_set)
      if (ex.premises.size() != 1 && ex.premises.size() != data::kPremisesPerItem)
        throw ValidationError("sum of experts cannot consume example " + ex.id);
  }
  ad::Adam adam;
  Rng rng(pretrain_config.seed);
  TrainResult first = run_phase(model, pretrain_set, {}, pretrain_config, "pretrain", on_epoch, adam, rng);
  TrainResult second = run_phase(model, finetune_set, dev_set, finetune_config, "finetune", on_epoch, adam, rng);
  TrainResult out;
  out.log = std::move(first.log);
  if (second.best_epoch) out.best_epoch = out.log.size() + *second.best_epoch;
  out.best_dev_accuracy = second.best_dev_accuracy;
  out.log.insert(out.log.end(), second.log.begin(), second.log.end());
  return out;
}

}  // namespace mpe::nn
