#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpe/ops.hpp"
#include "mpe/vocabulary.hpp"

namespace mpe::nn {

using ad::Tape;
using ad::Tensor;
using ad::Var;

enum class ModelKind { Lstm, Attention, SumOfExperts };
const char* model_kind_name(ModelKind k);
std::optional<ModelKind> parse_model_kind(std::string_view s);  // lstm | attn | se

struct ModelConfig {
  ModelKind kind = ModelKind::Lstm;
  std::size_t vocab_size = Vocabulary::kNumSpecial;
  std::size_t embed_dim = 50;
  std::size_t state_dim = 100;
  double keep_prob = 0.8;
  bool freeze_embeddings = false;  // applies to the word table, never to <unk>/<sep>
  double init_scale = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
};

// Named hyperparameter bundles.
struct Preset {
  std::string name;
  ModelKind kind;
  std::size_t state_dim;
  double keep_prob;
  std::size_t batch_size;
  double learning_rate;
};
const std::vector<Preset>& presets();
const Preset& preset(std::string_view name);

struct LstmWeights {
  Tensor W;  // (4k, d + k), gate blocks in order input, forget, output, candidate
  Tensor b;  // (4k)
};

struct LstmState {
  Var h, c;
};

// One step of a standard LSTM: h_t = o * tanh(c_t), c_t = f * c_prev + i * g.
LstmState lstm_cell(Var x, const LstmState& prev, Var W, Var b);

// Premises joined in the given order with Vocabulary::kSep between consecutive ones.
TokenSeq concat_premises(std::span<const TokenSeq> premises);

struct ForwardResult {
  Var logits;                         // (3), order E, N, C
  std::vector<Var> premise_logits;    // sum of experts: one per premise, input order
  std::vector<std::vector<double>> attention;  // attention: one row per hypothesis token
};

class Model {
 public:
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  // Every tensor, in a fixed order with stable names.
  ad::ParamList params();

  // Builds the graph for one example. A null rng disables dropout (evaluation).
  // Concurrent calls on distinct tapes are safe as long as no backward runs.
  ForwardResult forward(Tape& tape, const Example& ex, Rng* dropout_rng);

  std::vector<double> logits(const Example& ex);
  Label predict(const Example& ex);

  // Conditional encoder output for one premise: concat(final premise h, final hypothesis h).
  Var pair_representation(Tape& tape, const TokenSeq& premise, const TokenSeq& hypothesis, Rng* rng);
  // Hidden tanh layer plus linear output.
  Var classify(Tape& tape, Var pair, Rng* rng);

  // Word table rows for ids >= kNumSpecial; <unk>/<sep> live in a separate tensor.
  Tensor& word_embeddings() { return word_emb_; }

 private:
  Var embed(Tape& tape, std::size_t id, Rng* rng);
  std::vector<LstmState> run_lstm(Tape& tape, const TokenSeq& seq, LstmState init, Var W, Var b, Rng* rng);
  LstmState zero_state(Tape& tape) const;
  ForwardResult forward_lstm(Tape& tape, const Example& ex, Rng* rng);
  ForwardResult forward_attention(Tape& tape, const Example& ex, Rng* rng);
  ForwardResult forward_se(Tape& tape, const Example& ex, Rng* rng);

  ModelConfig config_;
  Tensor special_emb_, word_emb_;
  LstmWeights premise_lstm_, hypothesis_lstm_;
  // conditional LSTM and sum of experts
  Tensor hidden_W_, hidden_b_;
  // attention
  Tensor att_Wy_, att_Wh_, att_Wr_, att_w_, att_Wt_, att_Wp_, att_Wx_;
  Tensor out_W_, out_b_;
};

// Checkpoint metadata carries the model config and vocabulary.
void save_model(const std::filesystem::path& path, Model& model, const Vocabulary& vocab);
struct LoadedModel {
  std::unique_ptr<Model> model;
  Vocabulary vocab;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace mpe::nn
