#include "mpe/models.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"
#include "mpe/checkpoint.hpp"

namespace mpe::nn {

using namespace mpe::ad;

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Lstm: return "lstm";
    case ModelKind::Attention: return "attn";
    case ModelKind::SumOfExperts: return "se";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "lstm") return ModelKind::Lstm;
  if (s == "attn" || s == "attention") return ModelKind::Attention;
  if (s == "se") return ModelKind::SumOfExperts;
  return std::nullopt;
}

void ModelConfig::validate() const {
  if (vocab_size < Vocabulary::kNumSpecial) throw ValidationError("vocabulary must include <unk> and <sep>");
  if (embed_dim == 0 || state_dim == 0) throw ValidationError("embedding and state dimensions must be positive");
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw ValidationError("keep_prob must lie in (0, 1]");
  if (!(init_scale >= 0.0)) throw ValidationError("init scale must be non-negative");
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> p = {
      {"lstm-mpe", ModelKind::Lstm, 75, 0.8, 32, 0.001},
      {"se-mpe", ModelKind::SumOfExperts, 100, 0.8, 32, 0.001},
      {"attn-mpe", ModelKind::Attention, 100, 0.6, 32, 0.001},
      {"snli-pretrain", ModelKind::Lstm, 100, 0.8, 32, 0.001},
  };
  return p;
}

const Preset& preset(std::string_view name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw ValidationError("unknown preset \"" + std::string(name) + "\"");
}

LstmState lstm_cell(Var x, const LstmState& prev, Var W, Var b) {
  const std::size_t k = prev.h.size();
  if (W.shape() != Shape{4 * k, x.size() + k}) throw ShapeError("lstm_cell weights", W.shape(), Shape{4 * k, x.size() + k});
  if (prev.c.size() != k) throw ShapeError("lstm_cell state", prev.h.shape(), prev.c.shape());
  Var z = add(matmul(W, concat({x, prev.h})), b);
  Var i = sigmoid(slice(z, 0, k));
  Var f = sigmoid(slice(z, k, k));
  Var o = sigmoid(slice(z, 2 * k, k));
  Var g = ad::tanh(slice(z, 3 * k, k));
  Var c = add(mul(f, prev.c), mul(i, g));
  Var h = mul(o, ad::tanh(c));
  return {h, c};
}

TokenSeq concat_premises(std::span<const TokenSeq> premises) {
  TokenSeq out;
  for (std::size_t i = 0; i < premises.size(); ++i) {
    if (i) out.push_back(Vocabulary::kSep);
    out.insert(out.end(), premises[i].begin(), premises[i].end());
  }
  return out;
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.embed_dim, k = config_.state_dim;
  Rng rng(config_.seed);
  const double s = config_.init_scale;
  auto init = [&](Tensor& t, Shape shape) {
    t = Tensor(std::move(shape));
    init_uniform(t, s, rng);
  };
  init(special_emb_, {Vocabulary::kNumSpecial, d});
  init(word_emb_, {config_.vocab_size - Vocabulary::kNumSpecial, d});
  for (auto* lstm : {&premise_lstm_, &hypothesis_lstm_}) {
    init(lstm->W, {4 * k, d + k});
    lstm->b = Tensor(Shape{4 * k});
    for (std::size_t j = k; j < 2 * k; ++j) lstm->b[j] = 1.0;  // forget gate
  }
  if (config_.kind == ModelKind::Attention) {
    for (auto* t : {&att_Wy_, &att_Wh_, &att_Wr_, &att_Wt_, &att_Wp_, &att_Wx_}) init(*t, {k, k});
    init(att_w_, {k});
  } else {
    init(hidden_W_, {k, 2 * k});
    hidden_b_ = Tensor(Shape{k});
  }
  init(out_W_, {kNumLabels, k});
  out_b_ = Tensor(Shape{kNumLabels});
}

ParamList Model::params() {
  ParamList p = {
      {"embedding.special", &special_emb_, true},
      {"embedding.words", &word_emb_, !config_.freeze_embeddings},
      {"premise_lstm.W", &premise_lstm_.W, true},
      {"premise_lstm.b", &premise_lstm_.b, true},
      {"hypothesis_lstm.W", &hypothesis_lstm_.W, true},
      {"hypothesis_lstm.b", &hypothesis_lstm_.b, true},
  };
  if (config_.kind == ModelKind::Attention) {
    p.insert(p.end(), {{"attention.Wy", &att_Wy_, true},
                       {"attention.Wh", &att_Wh_, true},
                       {"attention.Wr", &att_Wr_, true},
                       {"attention.w", &att_w_, true},
                       {"attention.Wt", &att_Wt_, true},
                       {"attention.Wp", &att_Wp_, true},
                       {"attention.Wx", &att_Wx_, true}});
  } else {
    p.insert(p.end(), {{"hidden.W", &hidden_W_, true}, {"hidden.b", &hidden_b_, true}});
  }
  p.insert(p.end(), {{"output.W", &out_W_, true}, {"output.b", &out_b_, true}});
  return p;
}

Var Model::embed(Tape& tape, std::size_t id, Rng* rng) {
  if (id >= config_.vocab_size)
    throw ValidationError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(config_.vocab_size));
  Var v = id < Vocabulary::kNumSpecial
              ? embedding(tape, special_emb_, id)
              : embedding(tape, word_emb_, id - Vocabulary::kNumSpecial, config_.freeze_embeddings);
  return dropout(v, config_.keep_prob, rng);
}

LstmState Model::zero_state(Tape& tape) const {
  return {tape.constant(Tensor(Shape{config_.state_dim})), tape.constant(Tensor(Shape{config_.state_dim}))};
}

std::vector<LstmState> Model::run_lstm(Tape& tape, const TokenSeq& seq, LstmState init, Var W, Var b, Rng* rng) {
  if (seq.empty()) throw ValidationError("cannot encode an empty token sequence");
  std::vector<LstmState> states;
  states.reserve(seq.size());
  LstmState s = init;
  for (std::size_t id : seq) {
    s = lstm_cell(embed(tape, id, rng), s, W, b);
    states.push_back(s);
  }
  return states;
}

Var Model::pair_representation(Tape& tape, const TokenSeq& premise, const TokenSeq& hypothesis, Rng* rng) {
  auto p = run_lstm(tape, premise, zero_state(tape), tape.param(premise_lstm_.W), tape.param(premise_lstm_.b), rng);
  LstmState h0{zero_state(tape).h, p.back().c};
  auto h = run_lstm(tape, hypothesis, h0, tape.param(hypothesis_lstm_.W), tape.param(hypothesis_lstm_.b), rng);
  return concat({p.back().h, h.back().h});
}

Var Model::classify(Tape& tape, Var pair, Rng* rng) {
  if (config_.kind == ModelKind::Attention) throw std::logic_error("attention model has no pair classifier");
  pair = dropout(pair, config_.keep_prob, rng);
  Var hidden = ad::tanh(add(matmul(tape.param(hidden_W_), pair), tape.param(hidden_b_)));
  return add(matmul(tape.param(out_W_), hidden), tape.param(out_b_));
}

ForwardResult Model::forward(Tape& tape, const Example& ex, Rng* rng) {
  if (ex.premises.empty()) throw ValidationError("example " + ex.id + " has no premises");
  switch (config_.kind) {
    case ModelKind::Lstm: return forward_lstm(tape, ex, rng);
    case ModelKind::Attention: return forward_attention(tape, ex, rng);
    case ModelKind::SumOfExperts: return forward_se(tape, ex, rng);
  }
  throw std::logic_error("unknown model kind");
}

ForwardResult Model::forward_lstm(Tape& tape, const Example& ex, Rng* rng) {
  ForwardResult r;
  r.logits = classify(tape, pair_representation(tape, concat_premises(ex.premises), ex.hypothesis, rng), rng);
  return r;
}

ForwardResult Model::forward_attention(Tape& tape, const Example& ex, Rng* rng) {
  const TokenSeq premise = concat_premises(ex.premises);
  auto p = run_lstm(tape, premise, zero_state(tape), tape.param(premise_lstm_.W), tape.param(premise_lstm_.b), rng);
  LstmState h0{zero_state(tape).h, p.back().c};
  auto h = run_lstm(tape, ex.hypothesis, h0, tape.param(hypothesis_lstm_.W), tape.param(hypothesis_lstm_.b), rng);

  std::vector<Var> outputs;
  for (const auto& s : p) outputs.push_back(s.h);
  Var Y = stack_columns(outputs);
  Var WyY = matmul(tape.param(att_Wy_), Y);
  Var Wh = tape.param(att_Wh_), Wr = tape.param(att_Wr_), w = tape.param(att_w_), Wt = tape.param(att_Wt_);
  Var r = zero_state(tape).h;
  ForwardResult out;
  for (const auto& s : h) {
    Var M = ad::tanh(add_cols(WyY, add(matmul(Wh, s.h), matmul(Wr, r))));
    Var alpha = softmax(matmul(w, M));
    out.attention.push_back(alpha.value().values);
    r = add(matmul(Y, alpha), ad::tanh(matmul(Wt, r)));
  }
  Var hstar = ad::tanh(add(matmul(tape.param(att_Wp_), r), matmul(tape.param(att_Wx_), h.back().h)));
  hstar = dropout(hstar, config_.keep_prob, rng);
  out.logits = add(matmul(tape.param(out_W_), hstar), tape.param(out_b_));
  return out;
}

ForwardResult Model::forward_se(Tape& tape, const Example& ex, Rng* rng) {
  const std::size_t n = ex.premises.size();
  if (n != 1 && n != data::kPremisesPerItem)
    throw ValidationError("sum of experts needs 1 or 4 premises, example " + ex.id + " has " + std::to_string(n));
  // Experts run and are summed in a canonical premise order so that the result does
  // not depend on the order the premises are stored in.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ex.premises[a] < ex.premises[b]; });
  ForwardResult out;
  out.premise_logits.resize(n);
  for (std::size_t i : order)
    out.premise_logits[i] = classify(tape, pair_representation(tape, ex.premises[i], ex.hypothesis, rng), rng);
  if (n == 1) {
    out.logits = out.premise_logits[0];
  } else {
    const auto& l = out.premise_logits;
    out.logits = add(add(l[order[0]], l[order[1]]), add(l[order[2]], l[order[3]]));
  }
  return out;
}

std::vector<double> Model::logits(const Example& ex) {
  Tape tape;
  return forward(tape, ex, nullptr).logits.value().values;
}

Label Model::predict(const Example& ex) {
  auto z = logits(ex);
  return label_from_index(static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin()));
}

void save_model(const std::filesystem::path& path, Model& model, const Vocabulary& vocab) {
  const auto& c = model.config();
  if (c.vocab_size != vocab.size()) throw std::logic_error("model and vocabulary sizes differ");
  nlohmann::json meta = {{"model_kind", model_kind_name(c.kind)}, {"embed_dim", c.embed_dim},
                         {"state_dim", c.state_dim},              {"keep_prob", c.keep_prob},
                         {"freeze_embeddings", c.freeze_embeddings}, {"init_scale", c.init_scale},
                         {"seed", c.seed},                         {"vocab", vocab.tokens()}};
  save_checkpoint(path, meta.dump(), model.params());
}

LoadedModel load_model(const std::filesystem::path& path) {
  auto ckpt = load_checkpoint(path);
  ModelConfig c;
  Vocabulary vocab;
  try {
    auto meta = nlohmann::json::parse(ckpt.metadata);
    auto kind = parse_model_kind(meta.at("model_kind").get<std::string>());
    if (!kind) throw ValidationError("unknown model kind in checkpoint " + path.string());
    c.kind = *kind;
    c.embed_dim = meta.at("embed_dim").get<std::size_t>();
    c.state_dim = meta.at("state_dim").get<std::size_t>();
    c.keep_prob = meta.at("keep_prob").get<double>();
    c.freeze_embeddings = meta.at("freeze_embeddings").get<bool>();
    c.init_scale = meta.at("init_scale").get<double>();
    c.seed = meta.at("seed").get<std::uint64_t>();
    vocab = Vocabulary::from_tokens(meta.at("vocab").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": bad checkpoint metadata: " + e.what());
  }
  c.vocab_size = vocab.size();
  LoadedModel out{std::make_unique<Model>(c), std::move(vocab)};
  restore_params(ckpt, out.model->params());
  return out;
}

}  // namespace mpe::nn
