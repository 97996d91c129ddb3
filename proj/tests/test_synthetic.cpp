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

#include <set>
#include <string>

#include <gtest/gtest.h>

#include "dprw/synthetic.hpp"

namespace dprw {
namespace {

std::set<std::string> words_of(const LabeledDataset& ds) {
  std::set<std::string> w;
  for (const Split* s : {&ds.train, &ds.validation, &ds.test})
    for (const Document& d : *s)
      for (const std::string& t : tokenize(d.text)) w.insert(t);
  return w;
}

TEST(SyntheticTest, SizesBalanceAndDeterminism) {
  const LabeledDataset a = make_synthetic_corpus(SyntheticDomain::kTravel, {200, 40, 160}, 7);
  EXPECT_EQ(a.train.size(), 200u);
  EXPECT_EQ(a.validation.size(), 40u);
  EXPECT_EQ(a.test.size(), 160u);
  EXPECT_EQ(a.label_set.size(), 8u);
  std::map<std::string, int> counts;
  for (const Document& d : a.train) ++counts[d.label];
  for (const auto& [label, n] : counts) EXPECT_EQ(n, 25) << label;
  const LabeledDataset b = make_synthetic_corpus(SyntheticDomain::kTravel, {200, 40, 160}, 7);
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].text, b.train[i].text);
  const LabeledDataset c = make_synthetic_corpus(SyntheticDomain::kTravel, {200, 40, 160}, 8);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.train.size(); ++i) same += a.train[i].text == c.train[i].text;
  EXPECT_LT(same, 50u);
  EXPECT_THROW(make_synthetic_corpus(SyntheticDomain::kTravel, {0, 1, 1}, 1), ConfigError);
}

TEST(SyntheticTest, DomainsShareOnlyFunctionWords) {
  const auto travel = words_of(make_synthetic_corpus(SyntheticDomain::kTravel, {400, 40, 160}, 1));
  const auto assistant = words_of(make_synthetic_corpus(SyntheticDomain::kAssistant, {400, 40, 160}, 1));
  for (const std::string& w : travel)
    if (assistant.count(w)) {
      EXPECT_TRUE(shared_function_words().count(w)) << w;
    }
  EXPECT_GT(travel.size(), 40u);
  EXPECT_GT(assistant.size(), 40u);
}

TEST(SyntheticTest, DisjointLabelSets) {
  const auto a = make_synthetic_corpus(SyntheticDomain::kTravel, {16, 0, 0}, 1).label_set;
  const auto b = make_synthetic_corpus(SyntheticDomain::kAssistant, {16, 0, 0}, 1).label_set;
  for (const std::string& l : a) EXPECT_EQ(b.count(l), 0u);
}

TEST(SyntheticTest, DomainNames) {
  EXPECT_EQ(parse_domain("travel"), SyntheticDomain::kTravel);
  EXPECT_EQ(domain_name(SyntheticDomain::kAssistant), "assistant");
  EXPECT_THROW(parse_domain("weather"), ConfigError);
}

}  // namespace
}  // namespace dprw
