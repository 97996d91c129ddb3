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

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dprw/error.hpp"

namespace dprw {

struct Document {
  std::string text;
  std::string label;

  friend bool operator==(const Document&, const Document&) = default;
};

using Split = std::vector<Document>;

struct LabeledDataset {
  Split train;
  Split validation;
  Split test;
  // Union of labels over all splits, sorted.
  std::set<std::string> label_set;

  void recompute_label_set() {
    label_set.clear();
    for (const Split* s : {&train, &validation, &test})
      for (const Document& d : *s) label_set.insert(d.label);
  }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

using TokenId = std::uint32_t;

struct TokenIdSequence {
  std::vector<TokenId> ids;

  std::size_t size() const { return ids.size(); }
  friend bool operator==(const TokenIdSequence&, const TokenIdSequence&) = default;
};

namespace detail {

// Decodes one UTF-8 code point starting at s[i]; advances i. Invalid bytes
// are consumed one at a time and reported as U+FFFD.
inline char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= s.size()) return -1;
    const auto b = static_cast<unsigned char>(s[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

inline bool is_unicode_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' ||
                   s[e - 1] == '\n'))
    --e;
  return s.substr(b, e - b);
}

}  // namespace detail

// Lowercases ASCII letters and splits on Unicode whitespace. Non-ASCII
// characters are kept byte-for-byte.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = detail::next_code_point(text, i);
    if (detail::is_unicode_space(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    if (cp < 0x80) {
      char c = static_cast<char>(cp);
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      current.push_back(c);
    } else {
      current.append(text.substr(start, i - start));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

inline bool text_is_blank(std::string_view text) { return tokenize(text).empty(); }

/// Bidirectional token/id map with four reserved specials at ids 0..3.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kSos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr std::size_t kNumSpecials = 4;

  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kSosToken = "<sos>";
  static constexpr std::string_view kEosToken = "<eos>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary() {
    for (std::string_view s : {kPadToken, kSosToken, kEosToken, kUnkToken}) insert(std::string(s));
  }

  // Rebuilds from an id-ordered token list (e.g. a checkpoint). The first
  // four entries must be the specials.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens) {
    if (tokens.size() < kNumSpecials || tokens[kPad] != kPadToken || tokens[kSos] != kSosToken ||
        tokens[kEos] != kEosToken || tokens[kUnk] != kUnkToken)
      throw DataError("<vocabulary>", 0, "specials missing or out of order");
    Vocabulary v;
    for (std::size_t i = kNumSpecials; i < tokens.size(); ++i) {
      if (v.contains(tokens[i]))
        throw DataError("<vocabulary>", 0, "duplicate token '" + tokens[i] + "'");
      v.insert(tokens[i]);
    }
    return v;
  }

  // Returns the id of a token, inserting it if new.
  TokenId add(const std::string& token) {
    if (auto it = token_to_id_.find(token); it != token_to_id_.end()) return it->second;
    return insert(token);
  }

  TokenId id(std::string_view token) const {
    if (auto it = token_to_id_.find(std::string(token)); it != token_to_id_.end()) {
      // Structural specials never come from text.
      return it->second < kUnk ? kUnk : it->second;
    }
    return kUnk;
  }

  bool contains(const std::string& token) const { return token_to_id_.count(token) > 0; }

  const std::string& token(TokenId id) const {
    if (id >= id_to_token_.size())
      throw DataError("<vocabulary>", 0, "token id " + std::to_string(id) + " out of range");
    return id_to_token_[id];
  }

  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_to_token_ == b.id_to_token_;
  }

 private:
  TokenId insert(const std::string& token) {
    const auto id = static_cast<TokenId>(id_to_token_.size());
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    return id;
  }

  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Every distinct training token, ids in order of first occurrence.
inline Vocabulary build_vocabulary(const Split& train_docs) {
  if (train_docs.empty()) throw ConfigError("cannot build a vocabulary from an empty training split");
  Vocabulary vocab;
  for (const Document& d : train_docs)
    for (const std::string& tok : tokenize(d.text)) vocab.add(tok);
  return vocab;
}

inline TokenIdSequence encode(const Document& doc, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len == 0) throw ConfigError("max_len must be positive");
  const auto tokens = tokenize(doc.text);
  const std::size_t n = std::min(tokens.size(), max_len);
  TokenIdSequence seq;
  seq.ids.reserve(n + 2);
  seq.ids.push_back(Vocabulary::kSos);
  for (std::size_t i = 0; i < n; ++i) seq.ids.push_back(vocab.id(tokens[i]));
  seq.ids.push_back(Vocabulary::kEos);
  return seq;
}

inline std::vector<std::string> decode_tokens(const TokenIdSequence& seq, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (TokenId id : seq.ids) {
    const std::string& tok = vocab.token(id);
    if (id == Vocabulary::kSos || id == Vocabulary::kEos || id == Vocabulary::kPad) continue;
    out.push_back(tok);
  }
  return out;
}

inline std::string decode_ids(const TokenIdSequence& seq, const Vocabulary& vocab) {
  std::string text;
  for (const std::string& tok : decode_tokens(seq, vocab)) {
    if (!text.empty()) text.push_back(' ');
    text += tok;
  }
  return text;
}

enum class DatasetFormat { kTsv };

// Reads one `label<TAB>text` split file.
inline Split load_split(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path, 0, "cannot open file");
  Split docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(path, lineno, "missing TAB between label and text");
    Document d{line.substr(tab + 1), line.substr(0, tab)};
    if (detail::trim(d.label).empty()) throw DataError(path, lineno, "empty label");
    if (detail::trim(d.text).empty()) throw DataError(path, lineno, "empty text field");
    docs.push_back(std::move(d));
  }
  return docs;
}

struct DatasetPaths {
  std::string train;
  std::optional<std::string> validation;
  std::optional<std::string> test;
};

inline LabeledDataset load_dataset(const DatasetPaths& paths,
                                   DatasetFormat format = DatasetFormat::kTsv) {
  (void)format;  // TSV is the only format.
  LabeledDataset ds;
  ds.train = load_split(paths.train);
  if (paths.validation) ds.validation = load_split(*paths.validation);
  if (paths.test) ds.test = load_split(*paths.test);
  ds.recompute_label_set();
  return ds;
}

inline std::string sanitize_field(std::string s) {
  for (char& c : s)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return s;
}

// Writes docs in the same TSV format load_split reads.
inline void write_rewritten_dataset(const Split& docs, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  for (const Document& d : docs) out << sanitize_field(d.label) << '\t' << sanitize_field(d.text) << '\n';
  out.flush();
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace dprw
