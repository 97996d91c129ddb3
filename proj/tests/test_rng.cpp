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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dprw/rng.hpp"

namespace dprw {
namespace {

TEST(RngTest, SameSeedSameSequence) {
  Rng a(42), b(42), c(43);
  std::vector<std::uint64_t> va, vb, vc;
  for (int i = 0; i < 100; ++i) {
    va.push_back(a.next_u64());
    vb.push_back(b.next_u64());
    vc.push_back(c.next_u64());
  }
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
}

TEST(RngTest, StreamsAreKeyedByPurposeAndPath) {
  std::set<std::uint64_t> firsts;
  for (Purpose p : {Purpose::kInit, Purpose::kShuffle, Purpose::kRewriteNoise, Purpose::kClassifierInit})
    for (std::uint64_t k = 0; k < 50; ++k) firsts.insert(Rng::stream(1, p, {k}).next_u64());
  EXPECT_EQ(firsts.size(), 200u);
  EXPECT_EQ(Rng::stream(3, Purpose::kRewriteNoise, {0, 7}).next_u64(),
            Rng::stream(3, Purpose::kRewriteNoise, {0, 7}).next_u64());
  EXPECT_NE(Rng::stream(3, Purpose::kRewriteNoise, {0, 7}).next_u64(),
            Rng::stream(3, Purpose::kRewriteNoise, {7, 0}).next_u64());
}

TEST(RngTest, DeriveDoesNotAdvanceParent) {
  Rng a(5);
  const auto key = a.key();
  (void)a.derive(9);
  EXPECT_EQ(a.key(), key);
  EXPECT_EQ(a.counter(), 0u);
}

TEST(RngTest, UniformRanges) {
  Rng r(7);
  double mean = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double c = r.uniform_centered_open();
    ASSERT_GT(c, -0.5);
    ASSERT_LT(c, 0.5);
    mean += u;
  }
  EXPECT_NEAR(mean / 100000, 0.5, 0.005);
}

TEST(RngTest, BelowIsUniform) {
  Rng r(8);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[r.below(7)];
  double chi2 = 0;
  for (int c : counts) chi2 += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
  EXPECT_LT(chi2, 22.46);  // 6 dof, alpha = 0.001
  EXPECT_EQ(r.below(1), 0u);
}

TEST(RngTest, NormalMoments) {
  Rng r(9);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(RngTest, ShuffleIsAPermutation) {
  Rng r(10);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  auto w = v;
  r.shuffle(w);
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

}  // namespace
}  // namespace dprw
