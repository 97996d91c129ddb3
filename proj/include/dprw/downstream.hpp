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

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "dprw/corpus.hpp"
#include "dprw/error.hpp"
#include "dprw/metrics.hpp"
#include "dprw/numcore.hpp"
#include "dprw/rng.hpp"

namespace dprw {

struct ClassifierConfig {
  std::size_t embed_dim = 64;
  double learning_rate = 0.01;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;

  void validate() const {
    if (embed_dim == 0 || batch_size == 0) throw ConfigError("classifier sizes must be positive");
    if (!(learning_rate > 0)) throw ConfigError("classifier learning rate must be positive");
  }
};

/// Mean of token embeddings followed by a linear softmax layer. Specials
/// (including UNK) are left out of the mean, so a document with no known
/// token is classified from the bias alone.
class ClassifierModel {
 public:
  ClassifierModel(Vocabulary vocab, std::vector<std::string> labels, const ClassifierConfig& config, Rng& rng)
      : vocab_(std::move(vocab)), labels_(std::move(labels)) {
    if (labels_.empty()) throw ConfigError("classifier needs at least one label");
    for (std::size_t i = 0; i < labels_.size(); ++i) label_index_[labels_[i]] = i;
    const std::size_t E = config.embed_dim, K = labels_.size();
    embedding_ = Parameter{"embedding", NDArray::matrix(vocab_.size(), E), {}};
    weight_ = Parameter{"output.w", NDArray::matrix(E, K), {}};
    bias_ = Parameter{"output.b", NDArray::matrix(1, K), {}};
    for (double& v : embedding_.value.storage()) v = 0.1 * rng.normal();
    const double k = 1.0 / std::sqrt(static_cast<double>(E));
    for (double& v : weight_.value.storage()) v = rng.uniform(-k, k);
    for (Parameter* p : {&embedding_, &weight_, &bias_}) p->zero_grad();
  }

  const Vocabulary& vocabulary() const { return vocab_; }
  const std::vector<std::string>& labels() const { return labels_; }

  std::vector<Parameter*> parameters() { return {&embedding_, &weight_, &bias_}; }

  // Ids of the known content tokens, sorted so pooling does not depend on
  // token order even in the last bit.
  std::vector<TokenId> pooled_ids(const Document& doc) const {
    std::vector<TokenId> ids;
    for (const std::string& tok : tokenize(doc.text)) {
      const TokenId id = vocab_.id(tok);
      if (id >= Vocabulary::kNumSpecials) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  // Logits for a batch, built on `tape` from the given weight nodes.
  Var logits(Tape& t, Var emb, Var w, Var b, const std::vector<const Document*>& docs) const {
    std::vector<TokenId> flat;
    std::vector<std::size_t> counts;
    for (const Document* d : docs) {
      const auto ids = pooled_ids(*d);
      counts.push_back(ids.size());
      flat.insert(flat.end(), ids.begin(), ids.end());
    }
    const std::size_t E = embedding_.value.cols();
    Var pooled;
    if (flat.empty()) {
      pooled = t.constant(NDArray::matrix(docs.size(), E, 0.0));
    } else {
      NDArray pool = NDArray::matrix(docs.size(), flat.size(), 0.0);
      std::size_t off = 0;
      for (std::size_t i = 0; i < docs.size(); ++i) {
        for (std::size_t j = 0; j < counts[i]; ++j) pool(i, off + j) = 1.0 / static_cast<double>(counts[i]);
        off += counts[i];
      }
      pooled = t.matmul(t.constant(std::move(pool)), t.row_select(emb, flat));
    }
    return t.add(t.matmul(pooled, w), b);
  }

  std::size_t predict_index(const Document& doc) const {
    Tape t;
    const std::vector<const Document*> one{&doc};
    const NDArray& z = t.value(logits(t, t.input(embedding_.value), t.input(weight_.value), t.input(bias_.value), one));
    std::size_t best = 0;
    for (std::size_t j = 1; j < z.cols(); ++j)
      if (z[j] > z[best]) best = j;
    return best;
  }

  std::string predict(const Document& doc) const { return labels_[predict_index(doc)]; }

  bool knows_label(const std::string& label) const { return label_index_.count(label) > 0; }
  std::size_t label_index(const std::string& label) const { return label_index_.at(label); }

  friend bool operator==(const ClassifierModel& a, const ClassifierModel& b) {
    return a.vocab_ == b.vocab_ && a.labels_ == b.labels_ && a.embedding_ == b.embedding_ &&
           a.weight_ == b.weight_ && a.bias_ == b.bias_;
  }

 private:
  Vocabulary vocab_;
  std::vector<std::string> labels_;
  std::map<std::string, std::size_t> label_index_;
  Parameter embedding_;
  Parameter weight_;
  Parameter bias_;
};

inline std::vector<std::string> predict_all(const ClassifierModel& model, const Split& docs) {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const Document& d : docs) out.push_back(model.predict(d));
  return out;
}

inline std::vector<std::string> gold_labels(const Split& docs) {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const Document& d : docs) out.push_back(d.label);
  return out;
}

inline std::set<std::string> labels_of(const Split& docs) {
  std::set<std::string> s;
  for (const Document& d : docs) s.insert(d.label);
  return s;
}

// Macro-F1 of the model on `docs`. Gold labels the model cannot output are
// scored as errors and named in `warnings`.
inline double evaluate_classifier(const ClassifierModel& model, const Split& docs,
                                  const std::set<std::string>& label_set,
                                  std::vector<std::string>* warnings = nullptr) {
  if (warnings) {
    for (const std::string& l : labels_of(docs))
      if (!model.knows_label(l))
        warnings->push_back("label '" + l + "' is absent from the training split; its documents count as errors");
  }
  return macro_f1(predict_all(model, docs), gold_labels(docs), label_set);
}

struct TrainClassifierResult {
  ClassifierModel model;
  std::size_t best_epoch = 0;
  double best_validation_f1 = 0.0;
  std::vector<std::string> warnings;
};

/// Adam on mean token cross-entropy; keeps the epoch with the best
/// validation macro-F1 (the earliest on ties). Without a validation split
/// the last epoch is kept.
inline TrainClassifierResult train_classifier(const Split& train, const Split& validation, const Vocabulary& vocab,
                                              const ClassifierConfig& config, std::uint64_t seed) {
  config.validate();
  if (train.empty()) throw ConfigError("train_classifier: training split is empty");
  const auto label_set = labels_of(train);
  Rng init = Rng::stream(seed, Purpose::kClassifierInit);
  ClassifierModel model(vocab, std::vector<std::string>(label_set.begin(), label_set.end()), config, init);
  TrainClassifierResult res{model, 0, 0.0, {}};
  if (config.epochs == 0) {
    res.warnings.push_back("classifier trained for 0 epochs; returning the initialized model");
    return res;
  }
  std::set<std::string> val_labels = labels_of(validation);
  val_labels.insert(label_set.begin(), label_set.end());

  std::vector<Parameter> params;
  for (Parameter* p : model.parameters()) params.push_back(*p);
  AdamState adam = AdamState::zeros_like(params);
  std::vector<std::size_t> targets(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) targets[i] = model.label_index(train[i].label);
  std::vector<std::size_t> order(train.size());
  bool have_best = false;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = Rng::stream(seed, Purpose::kClassifierShuffle, {epoch});
    shuffle.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<const Document*> docs;
      std::vector<std::size_t> tgt;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i) {
        docs.push_back(&train[order[i]]);
        tgt.push_back(targets[order[i]]);
      }
      Tape t;
      for (Parameter& p : params) p.zero_grad();
      const Var z = model.logits(t, t.parameter(params[0]), t.parameter(params[1]), t.parameter(params[2]), docs);
      t.backward(t.softmax_cross_entropy(z, tgt, -1));
      adam_step(params, config.learning_rate, adam);
    }
    auto ptrs = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) ptrs[i]->value = params[i].value;
    if (validation.empty()) {
      res.model = model;
      res.best_epoch = epoch + 1;
      continue;
    }
    const double f1 = evaluate_classifier(model, validation, val_labels);
    if (!have_best || f1 > res.best_validation_f1) {
      have_best = true;
      res.model = model;
      res.best_epoch = epoch + 1;
      res.best_validation_f1 = f1;
    }
  }
  return res;
}

inline TrainClassifierResult train_classifier(const Split& train, const Split& validation,
                                              const ClassifierConfig& config, std::uint64_t seed) {
  return train_classifier(train, validation, build_vocabulary(train), config, seed);
}

// Uniformly random label from label_set for every test document.
inline double random_baseline(const Split& test, const std::set<std::string>& label_set, Rng& rng) {
  if (test.empty() || label_set.empty()) throw ConfigError("random_baseline: empty input");
  const std::vector<std::string> labels(label_set.begin(), label_set.end());
  std::vector<std::string> pred;
  for (std::size_t i = 0; i < test.size(); ++i) pred.push_back(labels[rng.below(labels.size())]);
  return macro_f1(pred, gold_labels(test), label_set);
}

// Most frequent training label (lexicographically first on ties) for all.
inline std::string majority_label(const Split& train) {
  if (train.empty()) throw ConfigError("majority_baseline: empty training split");
  std::map<std::string, std::size_t> counts;
  for (const Document& d : train) ++counts[d.label];
  return std::max_element(counts.begin(), counts.end(),
                          [](const auto& a, const auto& b) { return a.second < b.second; })
      ->first;
}

inline double majority_baseline(const Split& train, const Split& test, const std::set<std::string>& label_set) {
  if (test.empty()) throw ConfigError("majority_baseline: empty test split");
  const std::vector<std::string> pred(test.size(), majority_label(train));
  return macro_f1(pred, gold_labels(test), label_set);
}

}  // namespace dprw
