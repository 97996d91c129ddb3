// Copyright 2026 The dprw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dprw/corpus.hpp"
#include "dprw/dpmech.hpp"
#include "dprw/error.hpp"
#include "dprw/numcore.hpp"
#include "dprw/rng.hpp"

namespace dprw {

struct AutoencoderConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t max_len = 20;
  std::size_t epochs = 200;
  double learning_rate = 0.003;
  std::size_t batch_size = 32;
  double clip_c = 5.0;

  void validate() const {
    if (vocab_size <= Vocabulary::kNumSpecials) throw ConfigError("vocab_size must exceed the special tokens");
    if (embed_dim == 0 || hidden_dim == 0) throw ConfigError("embed_dim and hidden_dim must be positive");
    if (max_len == 0) throw ConfigError("max_len must be at least 1");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
    if (!(clip_c > 0) || !std::isfinite(clip_c)) throw ConfigError("clip constant must be positive");
  }

  friend bool operator==(const AutoencoderConfig&, const AutoencoderConfig&) = default;
};

struct TrainStepResult {
  double loss = 0.0;
  // Largest l1 norm among the clipped latents handed to the decoder.
  double max_latent_l1 = 0.0;
};

/// GRU sequence autoencoder. The encoder's final hidden state is the
/// latent; the decoder sees the text only through its initial hidden
/// state, which is that latent (clipped during training and by the
/// mechanism at rewrite time).
class Autoencoder {
 public:
  enum Slot : std::size_t {
    kEmbedding,
    kEncWz, kEncUz, kEncBz,
    kEncWr, kEncUr, kEncBr,
    kEncWn, kEncUn, kEncBn,
    kDecWz, kDecUz, kDecBz,
    kDecWr, kDecUr, kDecBr,
    kDecWn, kDecUn, kDecBn,
    kOutW, kOutB,
    kNumSlots,
  };

  static constexpr std::array<const char*, kNumSlots> kSlotNames = {
      "embedding",
      "encoder.w_z", "encoder.u_z", "encoder.b_z",
      "encoder.w_r", "encoder.u_r", "encoder.b_r",
      "encoder.w_n", "encoder.u_n", "encoder.b_n",
      "decoder.w_z", "decoder.u_z", "decoder.b_z",
      "decoder.w_r", "decoder.u_r", "decoder.b_r",
      "decoder.w_n", "decoder.u_n", "decoder.b_n",
      "output.w", "output.b",
  };

  static Shape slot_shape(const AutoencoderConfig& c, std::size_t slot) {
    const std::size_t E = c.embed_dim, H = c.hidden_dim, V = c.vocab_size;
    if (slot == kEmbedding) return {V, E};
    if (slot == kOutW) return {H, V};
    if (slot == kOutB) return {1, V};
    switch ((slot - kEncWz) % 3) {
      case 0: return {E, H};
      case 1: return {H, H};
      default: return {1, H};
    }
  }

  static Autoencoder initialize(const AutoencoderConfig& config, Rng& rng) {
    config.validate();
    Autoencoder m;
    m.config_ = config;
    const double k = 1.0 / std::sqrt(static_cast<double>(config.hidden_dim));
    for (std::size_t s = 0; s < kNumSlots; ++s) {
      Parameter p{kSlotNames[s], NDArray(slot_shape(config, s), 0.0), {}};
      const bool bias = s == kOutB || (s >= kEncWz && (s - kEncWz) % 3 == 2);
      if (s == kEmbedding) {
        for (double& v : p.value.storage()) v = rng.normal();
      } else if (!bias) {
        for (double& v : p.value.storage()) v = rng.uniform(-k, k);
      }
      p.zero_grad();
      m.params_.push_back(std::move(p));
    }
    return m;
  }

  // Adopts existing parameters after checking names and shapes.
  static Autoencoder from_parameters(const AutoencoderConfig& config, std::vector<Parameter> params) {
    config.validate();
    if (params.size() != kNumSlots)
      throw ShapeError("autoencoder expects " + std::to_string(kNumSlots) + " parameters, got " +
                       std::to_string(params.size()));
    for (std::size_t s = 0; s < kNumSlots; ++s) {
      if (params[s].name != kSlotNames[s])
        throw ShapeError("parameter " + std::to_string(s) + " is '" + params[s].name + "', expected '" +
                         kSlotNames[s] + "'");
      if (params[s].value.shape() != slot_shape(config, s))
        throw ShapeError("parameter '" + params[s].name + "' has shape " + shape_str(params[s].value.shape()) +
                         ", config implies " + shape_str(slot_shape(config, s)));
      params[s].zero_grad();
    }
    Autoencoder m;
    m.config_ = config;
    m.params_ = std::move(params);
    return m;
  }

  const AutoencoderConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }

  // Final encoder hidden state, unclipped.
  LatentVector encode_latent(const TokenIdSequence& seq) const {
    if (seq.ids.empty()) throw ConfigError("encode_latent: empty id sequence");
    Tape tape;
    const auto w = bind_inputs(tape);
    const Var h = encode_batch(tape, w, {&seq});
    const NDArray& v = tape.value(h);
    return LatentVector{std::vector<double>(v.storage().begin(), v.storage().end())};
  }

  /// Greedy decoding from `latent` as the decoder's initial state. PAD and
  /// SOS are never emitted; stops at EOS or after max_len tokens. The
  /// result is always wrapped in SOS ... EOS.
  TokenIdSequence decode_greedy(const LatentVector& latent, std::size_t max_len) const {
    if (latent.size() != config_.hidden_dim)
      throw ShapeError("decode_greedy: latent has " + std::to_string(latent.size()) + " values, hidden_dim is " +
                       std::to_string(config_.hidden_dim));
    Tape tape;
    const auto w = bind_inputs(tape);
    Var h = tape.constant(NDArray::row(latent.values));
    TokenIdSequence out;
    out.ids.push_back(Vocabulary::kSos);
    TokenId prev = Vocabulary::kSos;
    for (std::size_t step = 0; step < max_len; ++step) {
      const std::vector<TokenId> in{prev};
      const Var x = tape.row_select(w[kEmbedding], in);
      h = gru_step(tape, w, kDecWz, x, h);
      const NDArray& logits = tape.value(tape.add(tape.matmul(h, w[kOutW]), w[kOutB]));
      TokenId best = Vocabulary::kEos;
      for (std::size_t j = Vocabulary::kEos; j < logits.cols(); ++j)
        if (logits[j] > logits[best]) best = static_cast<TokenId>(j);
      if (best == Vocabulary::kEos) break;
      out.ids.push_back(best);
      prev = best;
    }
    out.ids.push_back(Vocabulary::kEos);
    return out;
  }

  /// Teacher-forced reconstruction step on a batch of SOS..EOS sequences:
  /// per-example l1 clipping of the latent at clip_c (no noise), mean token
  /// cross-entropy with PAD ignored, then one Adam update.
  TrainStepResult train_step(const std::vector<const TokenIdSequence*>& batch, AdamState& state) {
    TrainStepResult res;
    Tape tape;
    std::vector<Var> w;
    for (Parameter& p : params_) {
      p.zero_grad();
      w.push_back(tape.parameter(p));
    }
    const Var loss = reconstruction_loss(tape, w, batch, &res.max_latent_l1);
    res.loss = tape.value(loss).item();
    tape.backward(loss);
    adam_step(params_, config_.learning_rate, state);
    return res;
  }

  // Loss of a batch without updating anything.
  double evaluate_loss(const std::vector<const TokenIdSequence*>& batch) const {
    Tape tape;
    const auto w = bind_inputs(tape);
    return tape.value(reconstruction_loss(tape, w, batch, nullptr)).item();
  }

  // The training loss as a tape expression over caller-bound parameter
  // nodes w (same order as parameters()), e.g. for gradient checks.
  Var loss(Tape& tape, const std::vector<Var>& w, const std::vector<const TokenIdSequence*>& batch) const {
    if (w.size() != kNumSlots) throw ShapeError("loss: expected " + std::to_string(kNumSlots) + " parameter nodes");
    return reconstruction_loss(tape, w, batch, nullptr);
  }

  friend bool operator==(const Autoencoder& a, const Autoencoder& b) {
    return a.config_ == b.config_ && a.params_ == b.params_;
  }

 private:
  std::vector<Var> bind_inputs(Tape& tape) const {
    std::vector<Var> w;
    for (const Parameter& p : params_) w.push_back(tape.input(p.value));
    return w;
  }

  // One GRU step; `base` is the w_z slot of the encoder or decoder.
  static Var gru_step(Tape& t, const std::vector<Var>& w, std::size_t base, Var x, Var h) {
    const Var z = t.sigmoid(t.add(t.add(t.matmul(x, w[base + 0]), t.matmul(h, w[base + 1])), w[base + 2]));
    const Var r = t.sigmoid(t.add(t.add(t.matmul(x, w[base + 3]), t.matmul(h, w[base + 4])), w[base + 5]));
    const Var n = t.tanh(t.add(t.add(t.matmul(x, w[base + 6]), t.matmul(t.mul(r, h), w[base + 7])), w[base + 8]));
    return t.add(t.mul(t.one_minus(z), n), t.mul(z, h));
  }

  // Runs the encoder over each sequence; rows past a sequence's end keep
  // their last state, so row i is exactly the single-sequence latent.
  Var encode_batch(Tape& t, const std::vector<Var>& w, const std::vector<const TokenIdSequence*>& batch) const {
    const std::size_t B = batch.size(), H = config_.hidden_dim;
    std::size_t T = 0;
    for (const TokenIdSequence* s : batch) T = std::max(T, s->ids.size());
    Var h = t.constant(NDArray::matrix(B, H, 0.0));
    std::vector<TokenId> ids(B);
    for (std::size_t step = 0; step < T; ++step) {
      bool all_active = true;
      for (std::size_t b = 0; b < B; ++b) {
        const bool active = step < batch[b]->ids.size();
        ids[b] = active ? batch[b]->ids[step] : Vocabulary::kPad;
        all_active = all_active && active;
      }
      const Var x = t.row_select(w[kEmbedding], ids);
      const Var next = gru_step(t, w, kEncWz, x, h);
      if (all_active) {
        h = next;
        continue;
      }
      NDArray mask = NDArray::matrix(B, H, 0.0);
      for (std::size_t b = 0; b < B; ++b)
        if (step < batch[b]->ids.size())
          for (std::size_t j = 0; j < H; ++j) mask(b, j) = 1.0;
      const Var m = t.constant(std::move(mask));
      h = t.add(t.mul(m, next), t.mul(t.one_minus(m), h));
    }
    return h;
  }

  Var reconstruction_loss(Tape& t, const std::vector<Var>& w, const std::vector<const TokenIdSequence*>& batch,
                          double* max_latent_l1) const {
    if (batch.empty()) throw ConfigError("train_step: empty batch");
    for (const TokenIdSequence* s : batch)
      if (s->ids.size() < 2) throw ConfigError("train_step: sequences need SOS and EOS");
    const Var latent = t.l1_clip_rows(encode_batch(t, w, batch), config_.clip_c);
    if (max_latent_l1) {
      const NDArray& L = t.value(latent);
      for (std::size_t r = 0; r < L.rows(); ++r) *max_latent_l1 = std::max(*max_latent_l1, l1_norm(L.row_span(r)));
    }
    const std::size_t B = batch.size();
    std::size_t T = 0;
    for (const TokenIdSequence* s : batch) T = std::max(T, s->ids.size());
    Var h = latent;
    std::vector<Var> logits;
    std::vector<TokenId> targets;
    std::vector<TokenId> ids(B);
    for (std::size_t step = 0; step + 1 < T; ++step) {
      for (std::size_t b = 0; b < B; ++b) {
        const auto& seq = batch[b]->ids;
        ids[b] = step + 1 < seq.size() ? seq[step] : Vocabulary::kPad;
        targets.push_back(step + 1 < seq.size() ? seq[step + 1] : Vocabulary::kPad);
      }
      const Var x = t.row_select(w[kEmbedding], ids);
      h = gru_step(t, w, kDecWz, x, h);
      logits.push_back(t.add(t.matmul(h, w[kOutW]), w[kOutB]));
    }
    const Var all = logits.size() == 1 ? logits[0] : t.concat(logits, 0);
    return t.softmax_cross_entropy(all, targets, static_cast<long long>(Vocabulary::kPad));
  }

  AutoencoderConfig config_;
  std::vector<Parameter> params_;
};

struct TrainingMetadata {
  std::size_t epochs_completed = 0;
  std::optional<double> final_loss;
  std::vector<double> loss_history;
  std::uint64_t seed = 0;
  std::string dataset_name;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct AutoencoderCheckpoint {
  Autoencoder model;
  Vocabulary vocabulary;
  TrainingMetadata metadata;

  const AutoencoderConfig& config() const { return model.config(); }
  friend bool operator==(const AutoencoderCheckpoint&, const AutoencoderCheckpoint&) = default;
};

struct PretrainOptions {
  std::string dataset_name;
  // Called after every epoch with (epochs done, mean epoch loss).
  std::function<void(std::size_t, double)> on_epoch;
};

/// Reconstruction pre-training on the training split. Draws randomness
/// only for initialization and per-epoch shuffling; never adds noise.
inline AutoencoderCheckpoint pretrain(const LabeledDataset& dataset, AutoencoderConfig config, std::uint64_t seed,
                                      const PretrainOptions& options = {}) {
  if (dataset.train.empty()) throw ConfigError("pretrain: training split is empty");
  Vocabulary vocab = build_vocabulary(dataset.train);
  config.vocab_size = vocab.size();
  Rng init = Rng::stream(seed, Purpose::kInit);
  Autoencoder model = Autoencoder::initialize(config, init);

  std::vector<TokenIdSequence> data;
  data.reserve(dataset.train.size());
  for (const Document& d : dataset.train) data.push_back(encode(d, vocab, config.max_len));

  AdamState adam = AdamState::zeros_like(model.parameters());
  TrainingMetadata meta;
  meta.seed = seed;
  meta.dataset_name = options.dataset_name;
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = Rng::stream(seed, Purpose::kShuffle, {epoch});
    shuffle.shuffle(order);
    double total = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<const TokenIdSequence*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        batch.push_back(&data[order[i]]);
      total += model.train_step(batch, adam).loss;
      ++batches;
    }
    const double mean = total / static_cast<double>(batches);
    meta.loss_history.push_back(mean);
    meta.final_loss = mean;
    meta.epochs_completed = epoch + 1;
    if (options.on_epoch) options.on_epoch(epoch + 1, mean);
  }
  return AutoencoderCheckpoint{std::move(model), std::move(vocab), std::move(meta)};
}

// Encode, privatize, decode. Returns the rewritten token strings.
inline std::vector<std::string> rewrite_tokens(const Document& doc, const AutoencoderCheckpoint& ckpt,
                                               const PrivacyParams& privacy, Rng& rng) {
  const TokenIdSequence ids = encode(doc, ckpt.vocabulary, ckpt.config().max_len);
  const LatentVector noisy = privatize(ckpt.model.encode_latent(ids), privacy, rng);
  return decode_tokens(ckpt.model.decode_greedy(noisy, ckpt.config().max_len), ckpt.vocabulary);
}

// Reconstruction (no noise, latent clipped at the model's clip_c) as text.
inline std::string reconstruct(const Document& doc, const AutoencoderCheckpoint& ckpt) {
  Rng unused(0);
  const PrivacyParams p{Epsilon::infinite(), ckpt.config().clip_c};
  std::string text;
  for (const std::string& tok : rewrite_tokens(doc, ckpt, p, unused)) {
    if (!text.empty()) text.push_back(' ');
    text += tok;
  }
  return text;
}

}  // namespace dprw
