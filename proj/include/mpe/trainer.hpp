#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpe/adam.hpp"
#include "mpe/models.hpp"

namespace mpe::nn {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.001;
  std::uint64_t seed = 1;
  // Restore the parameters of the epoch with the best dev accuracy at the end.
  bool keep_best_epoch = true;

  void validate() const;
};

struct EpochRecord {
  std::string phase;
  std::size_t epoch = 0;            // 1-based within the phase
  double mean_batch_loss = 0.0;     // averaged over batches, dropout active
  double train_loss = 0.0;          // full pass after the epoch, dropout off
  double train_accuracy = 0.0;
  std::optional<double> dev_accuracy;

  std::string to_json() const;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::optional<std::size_t> best_epoch;  // index into log
  std::optional<double> best_dev_accuracy;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam on mean cross-entropy. Each batch accumulates per-example gradients
// scaled by 1/batch and takes one optimizer step. Throws ValidationError on an
// unlabeled example.
TrainResult train(Model& model, std::span<const Example> train_set, std::span<const Example> dev_set,
                  const TrainConfig& config, const std::string& phase = "train", const EpochCallback& on_epoch = {});

// Runs `pretrain` then `finetune` on the same parameters, optimizer state and random
// stream (seeded from the pretrain config; the finetune seed is unused). Logs are
// tagged "pretrain" and "finetune". The pretrain phase has no dev selection.
TrainResult pretrain_finetune(Model& model, std::span<const Example> pretrain_set,
                              std::span<const Example> finetune_set, std::span<const Example> dev_set,
                              const TrainConfig& pretrain_config, const TrainConfig& finetune_config,
                              const EpochCallback& on_epoch = {});

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};
// Mean loss and accuracy with dropout off, parallel over examples.
LossAccuracy loss_and_accuracy(Model& model, std::span<const Example> examples);

}  // namespace mpe::nn
