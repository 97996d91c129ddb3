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
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dprw/corpus.hpp"
#include "dprw/error.hpp"

namespace dprw {

namespace detail {

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(const std::vector<std::string>& toks,
                                                                    std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace detail

/// Sentence-level BLEU-4 with brevity penalty.
///
/// Orders n >= 2 with no clipped match use (0 + 1) / (total + 1) instead of
/// zero; this covers hypotheses shorter than n. No unigram match gives 0.
inline double bleu(const std::vector<std::string>& hypothesis, const std::vector<std::string>& reference) {
  if (reference.empty()) throw ConfigError("bleu: empty reference");
  if (hypothesis.empty()) return 0.0;
  constexpr std::size_t kMaxOrder = 4;
  double log_sum = 0;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    const auto hyp = detail::ngram_counts(hypothesis, n);
    const auto ref = detail::ngram_counts(reference, n);
    std::size_t total = hypothesis.size() >= n ? hypothesis.size() - n + 1 : 0;
    std::size_t matches = 0;
    for (const auto& [gram, c] : hyp) {
      auto it = ref.find(gram);
      if (it != ref.end()) matches += std::min(c, it->second);
    }
    if (matches == 0 && n == 1) return 0.0;
    const double p = matches > 0 ? static_cast<double>(matches) / static_cast<double>(total)
                                 : 1.0 / static_cast<double>(total + 1);
    log_sum += std::log(p);
  }
  const double h = static_cast<double>(hypothesis.size());
  const double r = static_cast<double>(reference.size());
  const double bp = h > r ? 1.0 : std::exp(1.0 - r / h);
  return bp * std::exp(log_sum / static_cast<double>(kMaxOrder));
}

inline double bleu(const std::string& hypothesis, const std::string& reference) {
  return bleu(tokenize(hypothesis), tokenize(reference));
}

// Mean sentence BLEU of hypotheses[i] against references[i].
inline double mean_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  if (hypotheses.size() != references.size()) throw ShapeError("mean_bleu: misaligned inputs");
  if (hypotheses.empty()) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) s += bleu(hypotheses[i], references[i]);
  return s / static_cast<double>(hypotheses.size());
}

/// Unweighted mean of per-label F1 over label_set. Labels with no gold and
/// no predicted occurrence score 0.
inline double macro_f1(const std::vector<std::string>& predictions, const std::vector<std::string>& gold,
                       const std::set<std::string>& label_set) {
  if (predictions.size() != gold.size()) throw ShapeError("macro_f1: length mismatch");
  if (gold.empty()) throw ConfigError("macro_f1: no examples");
  if (label_set.empty()) throw ConfigError("macro_f1: empty label set");
  std::map<std::string, std::size_t> tp, fp, fn;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predictions[i] == gold[i]) {
      ++tp[gold[i]];
    } else {
      ++fp[predictions[i]];
      ++fn[gold[i]];
    }
  }
  double sum = 0;
  for (const std::string& label : label_set) {
    const double t = static_cast<double>(tp[label]);
    const double denom = 2 * t + static_cast<double>(fp[label] + fn[label]);
    sum += denom > 0 ? 2 * t / denom : 0.0;
  }
  return sum / static_cast<double>(label_set.size());
}

// Harmonic mean of multiset-clipped unigram precision and recall.
inline double unigram_f1(std::vector<std::string> a, std::vector<std::string> b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t overlap = 0;
  for (auto i = a.begin(), j = b.begin(); i != a.end() && j != b.end();) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++overlap;
      ++i;
      ++j;
    }
  }
  return 2.0 * static_cast<double>(overlap) / static_cast<double>(a.size() + b.size());
}

struct LeakEntry {
  double similarity_to_source = 0.0;
  double max_similarity_to_pretrain = 0.0;
  std::size_t nearest_pretrain_index = 0;
  bool leaked = false;
};

struct LeakReport {
  std::vector<LeakEntry> documents;
  double margin = 0.1;
  double leak_score = 0.0;
};

inline constexpr double kDefaultLeakMargin = 0.1;

/// Memorization audit. rewritten[i] must be the rewrite of source[i]. A
/// document is flagged when its best match in the pre-training corpus is
/// at least `margin` more similar than its own source.
inline LeakReport leak_audit(const Split& rewritten, const Split& source, const Split& pretrain_corpus,
                             double margin = kDefaultLeakMargin) {
  if (rewritten.size() != source.size())
    throw ShapeError("leak_audit: " + std::to_string(rewritten.size()) + " rewrites for " +
                     std::to_string(source.size()) + " sources");
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(pretrain_corpus.size());
  for (const Document& d : pretrain_corpus) corpus.push_back(tokenize(d.text));
  LeakReport rep;
  rep.margin = margin;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < rewritten.size(); ++i) {
    const auto rw = tokenize(rewritten[i].text);
    LeakEntry e;
    e.similarity_to_source = unigram_f1(rw, tokenize(source[i].text));
    for (std::size_t j = 0; j < corpus.size(); ++j) {
      const double s = unigram_f1(rw, corpus[j]);
      if (s > e.max_similarity_to_pretrain) {
        e.max_similarity_to_pretrain = s;
        e.nearest_pretrain_index = j;
      }
    }
    e.leaked = e.max_similarity_to_pretrain >= e.similarity_to_source + margin;
    flagged += e.leaked ? 1 : 0;
    rep.documents.push_back(e);
  }
  rep.leak_score = rewritten.empty() ? 0.0 : static_cast<double>(flagged) / static_cast<double>(rewritten.size());
  return rep;
}

}  // namespace dprw
