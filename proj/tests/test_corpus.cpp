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

#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dprw/corpus.hpp"
#include "dprw/rng.hpp"
#include "test_util.hpp"

namespace dprw {
namespace {

using testing::docs;
using testing::TempDir;
using testing::write_file;
using Tokens = std::vector<std::string>;

TEST(TokenizeTest, Examples) {
  EXPECT_EQ(tokenize("Fly From Newark"), (Tokens{"fly", "from", "newark"}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("a  b"), (Tokens{"a", "b"}));
  EXPECT_EQ(tokenize("  \t lead\ntrail \r\n"), (Tokens{"lead", "trail"}));
  // U+00A0 no-break space and U+3000 ideographic space separate tokens.
  EXPECT_EQ(tokenize("x\xC2\xA0y\xE3\x80\x80z"), (Tokens{"x", "y", "z"}));
  // Non-ASCII letters are kept as-is.
  EXPECT_EQ(tokenize("Caf\xC3\xA9 Z\xC3\xBCrich"), (Tokens{"caf\xC3\xA9", "z\xC3\xBCrich"}));
  EXPECT_TRUE(text_is_blank(" \t "));
}

TEST(VocabularyTest, SpecialsAndFirstOccurrenceOrder) {
  const Vocabulary v = build_vocabulary(docs({{"l", "a b"}, {"l", "b c"}}));
  EXPECT_EQ(v.size(), 7u);
  EXPECT_EQ(v.token(0), "<pad>");
  EXPECT_EQ(v.token(1), "<sos>");
  EXPECT_EQ(v.token(2), "<eos>");
  EXPECT_EQ(v.token(3), "<unk>");
  EXPECT_EQ(v.id("a"), 4u);
  EXPECT_EQ(v.id("b"), 5u);
  EXPECT_EQ(v.id("c"), 6u);
  EXPECT_EQ(build_vocabulary(docs({{"l", "x"}})).size(), 5u);
  EXPECT_THROW(build_vocabulary({}), ConfigError);
}

TEST(VocabularyTest, BijectiveOnTextTokens) {
  const Vocabulary v = build_vocabulary(docs({{"l", "the quick brown fox"}, {"m", "jumps over the lazy dog"}}));
  for (TokenId i = Vocabulary::kUnk; i < v.size(); ++i) EXPECT_EQ(v.id(v.token(i)), i);
  // Text spelling a structural special is just an unknown word.
  EXPECT_EQ(v.id("<eos>"), Vocabulary::kUnk);
  EXPECT_EQ(v.id("<pad>"), Vocabulary::kUnk);
  EXPECT_THROW(v.token(static_cast<TokenId>(v.size())), DataError);
}

TEST(VocabularyTest, FromTokensRoundTripAndValidation) {
  const Vocabulary v = build_vocabulary(docs({{"l", "a b c"}}));
  EXPECT_EQ(Vocabulary::from_tokens(v.tokens()), v);
  EXPECT_THROW(Vocabulary::from_tokens({"a", "b"}), DataError);
  auto dup = v.tokens();
  dup.push_back("a");
  EXPECT_THROW(Vocabulary::from_tokens(dup), DataError);
}

TEST(EncodeTest, TruncatesAndWraps) {
  std::string long_text;
  for (int i = 0; i < 25; ++i) long_text += "w" + std::to_string(i) + " ";
  const Split train = docs({{"l", long_text.c_str()}});
  const Vocabulary v = build_vocabulary(train);
  const TokenIdSequence s = encode(train[0], v, 20);
  ASSERT_EQ(s.ids.size(), 22u);
  EXPECT_EQ(s.ids.front(), Vocabulary::kSos);
  EXPECT_EQ(s.ids.back(), Vocabulary::kEos);
  EXPECT_EQ(s.ids[20], v.id("w19"));
  EXPECT_THROW(encode(train[0], v, 0), ConfigError);
}

TEST(EncodeTest, UnknownTokensBecomeUnk) {
  const Vocabulary v = build_vocabulary(docs({{"l", "a b"}, {"l", "b c"}}));
  EXPECT_EQ(encode(Document{"a b", "l"}, v, 20).ids, (std::vector<TokenId>{1, 4, 5, 2}));
  EXPECT_EQ(encode(Document{"zz yy", "l"}, v, 20).ids, (std::vector<TokenId>{1, 3, 3, 2}));
  EXPECT_EQ(decode_ids(encode(Document{"zz a", "l"}, v, 20), v), "<unk> a");
}

TEST(DecodeTest, StripsStructuralTokens) {
  const Vocabulary v = build_vocabulary(docs({{"l", "a b"}}));
  EXPECT_EQ(decode_ids(TokenIdSequence{{1, 4, 5, 2}}, v), "a b");
  EXPECT_EQ(decode_ids(TokenIdSequence{{1, 2}}, v), "");
  EXPECT_EQ(decode_ids(TokenIdSequence{{1, 4, 0, 0, 2}}, v), "a");
  EXPECT_THROW(decode_ids(TokenIdSequence{{1, 99, 2}}, v), DataError);
}

TEST(CodecProperty, RoundTripOnInVocabularyText) {
  Rng rng = Rng::stream(1, Purpose::kTest);
  const Tokens words = {"Show", "me", "FLIGHTS", "to", "boston", "denver", "on", "monday"};
  Split train;
  for (const auto& w : words) train.push_back(Document{w, "l"});
  const Vocabulary v = build_vocabulary(train);
  for (int t = 0; t < 500; ++t) {
    const std::size_t max_len = 1 + rng.below(12);
    std::string text;
    Tokens lowered;
    for (std::size_t k = 0; k < 1 + rng.below(15); ++k) {
      const std::string& w = words[rng.below(words.size())];
      text += w + (rng.below(2) ? "  " : " ");
      lowered.push_back(tokenize(w)[0]);
    }
    const TokenIdSequence s = encode(Document{text, "l"}, v, max_len);
    EXPECT_LE(s.ids.size(), max_len + 2);
    for (TokenId id : s.ids) EXPECT_LT(id, v.size());
    if (lowered.size() > max_len) lowered.resize(max_len);
    EXPECT_EQ(decode_tokens(s, v), lowered);
  }
}

TEST(LoadTest, WellFormedSplits) {
  TempDir dir;
  write_file(dir.file("train.tsv"), "a\tshow me flights\nb\tbook a table\r\na\tfares to boston\n");
  write_file(dir.file("test.tsv"), "c\tplay jazz\n");
  const LabeledDataset ds = load_dataset({dir.file("train.tsv"), std::nullopt, dir.file("test.tsv")});
  ASSERT_EQ(ds.train.size(), 3u);
  EXPECT_TRUE(ds.validation.empty());
  EXPECT_EQ(ds.train[1].text, "book a table");
  EXPECT_EQ(ds.train[1].label, "b");
  EXPECT_EQ(ds.label_set, (std::set<std::string>{"a", "b", "c"}));
}

void expect_data_error(const std::string& content, std::size_t line, const std::string& what) {
  TempDir dir;
  write_file(dir.file("bad.tsv"), content);
  try {
    load_split(dir.file("bad.tsv"));
    ADD_FAILURE() << "no error for " << content;
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(":" + std::to_string(line) + ":"), std::string::npos) << msg;
    EXPECT_NE(msg.find(what), std::string::npos) << msg;
  }
}

TEST(LoadTest, MalformedLinesNameTheLine) {
  expect_data_error("intentonlynotab\n", 1, "TAB");
  expect_data_error("a\tfine\nb\t   \n", 2, "empty text");
  expect_data_error("a\tfine\nb\tfine\n\tno label\n", 3, "empty label");
  EXPECT_THROW(load_split("/nonexistent/dir/x.tsv"), DataError);
}

TEST(WriteTest, RoundTripAndSanitization) {
  TempDir dir;
  const Split original = docs({{"a", "show me flights"}, {"b", "tab\there and\nnewline"}});
  write_rewritten_dataset(original, dir.file("out.tsv"));
  const Split back = load_split(dir.file("out.tsv"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].text, original[0].text);
  EXPECT_EQ(back[1].text, "tab here and newline");
  EXPECT_EQ(back[1].label, "b");
  write_rewritten_dataset({}, dir.file("empty.tsv"));
  EXPECT_EQ(testing::read_file(dir.file("empty.tsv")), "");
  EXPECT_THROW(write_rewritten_dataset(original, dir.file("missing/dir/out.tsv")), Error);
}

TEST(WriteTest, LoadWriteLoadIsIdentity) {
  TempDir dir;
  write_file(dir.file("in.tsv"), "x\tOne Two\ny\tthree  four\n");
  const Split a = load_split(dir.file("in.tsv"));
  write_rewritten_dataset(a, dir.file("mid.tsv"));
  const Split b = load_split(dir.file("mid.tsv"));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].text, b[i].text);
    EXPECT_EQ(a[i].label, b[i].label);
  }
}

}  // namespace
}  // namespace dprw
