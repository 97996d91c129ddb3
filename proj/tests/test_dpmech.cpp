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
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "dprw/dpmech.hpp"
#include "dprw/rng.hpp"

namespace dprw {
namespace {

std::vector<double> random_vector(Rng& rng, std::size_t dim, double spread) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal() * spread;
  return v;
}

TEST(EpsilonTest, ParsesNumbersAndInf) {
  EXPECT_TRUE(Epsilon::parse("inf").is_infinite());
  EXPECT_TRUE(Epsilon::parse("INF").is_infinite());
  EXPECT_DOUBLE_EQ(Epsilon::parse("1000").value(), 1000.0);
  EXPECT_DOUBLE_EQ(Epsilon::parse("1e2").value(), 100.0);
  EXPECT_DOUBLE_EQ(Epsilon::parse("0.5").value(), 0.5);
  EXPECT_EQ(Epsilon::parse("10").to_string(), "10");
  EXPECT_EQ(Epsilon::parse("0.1").to_string(), "0.1");
  EXPECT_EQ(Epsilon::infinite().to_string(), "inf");
}

TEST(EpsilonTest, RejectsNonPositiveAndGarbage) {
  for (const char* bad : {"-3", "0", "-inf", "nan", "abc", "", "1x", "1e400"}) {
    try {
      Epsilon::parse(bad);
      ADD_FAILURE() << "accepted '" << bad << "'";
    } catch (const ConfigError& e) {
      EXPECT_STREQ(e.what(), "epsilon must be positive or 'inf'");
    }
  }
}

TEST(PrivacyParamsTest, Validation) {
  EXPECT_THROW((PrivacyParams{Epsilon::finite(1), 0.0}.validate()), ConfigError);
  EXPECT_THROW((PrivacyParams{Epsilon::finite(1), -1.0}.validate()), ConfigError);
  EXPECT_NO_THROW((PrivacyParams{Epsilon::infinite(), 5.0}.validate()));
}

TEST(ClipTest, Examples) {
  const std::vector<double> v = {3, -4, 1};  // l1 = 8
  const auto c = clip_l1(v, 4.0);
  EXPECT_DOUBLE_EQ(c[0], 1.5);
  EXPECT_DOUBLE_EQ(c[1], -2.0);
  EXPECT_DOUBLE_EQ(c[2], 0.5);
  EXPECT_EQ(clip_l1(v, 10.0), v);
  const std::vector<double> zero(4, 0.0);
  EXPECT_EQ(clip_l1(zero, 5.0), zero);
  EXPECT_THROW(clip_l1(v, 0.0), ConfigError);
  const std::vector<double> bad = {1.0, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(clip_l1(bad, 1.0), NumericError);
}

TEST(ClipTest, NormBoundIdempotenceAndDirection) {
  Rng rng = Rng::stream(1, Purpose::kTest);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t dim = 1 + rng.below(64);
    const double c = 0.1 + 10 * rng.uniform();
    const auto v = random_vector(rng, dim, std::exp(rng.uniform(-3, 3)));
    const auto once = clip_l1(v, c);
    EXPECT_LE(l1_norm(once), c + 1e-9);
    const auto twice = clip_l1(once, c);
    for (std::size_t i = 0; i < dim; ++i) EXPECT_NEAR(twice[i], once[i], 1e-12 * (1 + std::abs(once[i])));
    // Same direction for every positive multiple.
    const double alpha = std::exp(rng.uniform(-4, 4));
    std::vector<double> scaled(v);
    for (double& x : scaled) x *= alpha;
    const auto cs = clip_l1(scaled, c);
    const double na = l1_norm(once), nb = l1_norm(cs);
    for (std::size_t i = 0; i < dim; ++i) EXPECT_NEAR(once[i] / na, cs[i] / nb, 1e-12);
  }
}

TEST(CalibrationTest, ScaleIsTwiceClipOverEpsilon) {
  EXPECT_DOUBLE_EQ(calibrate_scale({Epsilon::finite(1), 5.0}).b, 10.0);
  EXPECT_DOUBLE_EQ(calibrate_scale({Epsilon::finite(1000), 5.0}).b, 0.01);
  EXPECT_DOUBLE_EQ(calibrate_scale({Epsilon::finite(10), 5.0}).b, 1.0);
  EXPECT_EQ(calibrate_scale({Epsilon::infinite(), 5.0}).b, 0.0);
  EXPECT_DOUBLE_EQ(calibrate_scale({Epsilon::finite(1), 5.0}, 1.0).b, 5.0);
}

double oracle_laplace_cdf(double x, double b) {
  if (x < 0) return 0.5 * std::exp(-std::abs(x) / b);
  return 1.0 - 0.5 * std::exp(-x / b);
}

TEST(LaplaceTest, KolmogorovSmirnovAgainstAnalyticCdf) {
  for (double b : {0.01, 1.0, 10.0}) {
    Rng rng = Rng::stream(2, Purpose::kTest, {static_cast<std::uint64_t>(b * 100)});
    auto xs = sample_laplace(NoiseScale{b}, 20000, rng);
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double f = oracle_laplace_cdf(xs[i], b);
      d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    // Critical value at alpha = 0.01.
    EXPECT_LT(d, 1.63 / std::sqrt(n)) << "b=" << b;
    EXPECT_NEAR(laplace_cdf(1.3 * b, b), oracle_laplace_cdf(1.3 * b, b), 1e-15);
  }
}

TEST(LaplaceTest, MomentsMedianAndMeanAbs) {
  const double b = 10.0;
  Rng rng = Rng::stream(3, Purpose::kTest);
  auto xs = sample_laplace(NoiseScale{b}, 200000, rng);
  double mean = 0, var = 0, mabs = 0;
  for (double x : xs) {
    mean += x;
    mabs += std::abs(x);
  }
  mean /= xs.size();
  mabs /= xs.size();
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= xs.size() - 1;
  std::nth_element(xs.begin(), xs.begin() + xs.size() / 2, xs.end());
  EXPECT_NEAR(mean, 0.0, 0.1);
  EXPECT_NEAR(var / (2 * b * b), 1.0, 0.02);
  EXPECT_NEAR(mabs / b, 1.0, 0.01);
  EXPECT_NEAR(xs[xs.size() / 2], 0.0, 0.1);
}

TEST(LaplaceTest, ZeroScaleDrawsNothing) {
  Rng rng = Rng::stream(4, Purpose::kTest);
  const auto before = rng.counter();
  const auto z = sample_laplace(NoiseScale{0.0}, 8, rng);
  EXPECT_EQ(rng.counter(), before);
  EXPECT_EQ(z, std::vector<double>(8, 0.0));
  EXPECT_THROW(sample_laplace(NoiseScale{-1.0}, 8, rng), ConfigError);
  EXPECT_THROW(sample_laplace(NoiseScale{1.0}, 0, rng), ConfigError);
}

TEST(PrivatizeTest, InfiniteEpsilonEqualsClipBitExactly) {
  Rng rng = Rng::stream(5, Purpose::kTest);
  for (int t = 0; t < 100; ++t) {
    const LatentVector v{random_vector(rng, 128, 1.0)};
    Rng noise = Rng::stream(t, Purpose::kRewriteNoise);
    const auto draws = laplace_draw_counter().load();
    const LatentVector p = privatize(v, {Epsilon::infinite(), 5.0}, noise);
    EXPECT_EQ(p.values, clip_l1(v.values, 5.0));
    EXPECT_EQ(noise.counter(), 0u);
    EXPECT_EQ(laplace_draw_counter().load(), draws);
  }
}

TEST(PrivatizeTest, MeanL1DistanceMatchesDimTimesScale) {
  Rng rng = Rng::stream(6, Purpose::kTest);
  const LatentVector v{random_vector(rng, 128, 1.0)};
  const PrivacyParams params{Epsilon::finite(1), 5.0};
  const auto clipped = clip_l1(v.values, 5.0);
  double total = 0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const LatentVector p = privatize(v, params, rng);
    for (std::size_t i = 0; i < 128; ++i) total += std::abs(p.values[i] - clipped[i]);
  }
  EXPECT_NEAR(total / draws / 1280.0, 1.0, 0.05);
}

TEST(PrivatizeTest, SameSeedSameOutput) {
  const LatentVector v{std::vector<double>(16, 0.25)};
  Rng a = Rng::stream(7, Purpose::kRewriteNoise, {0, 3}), b = Rng::stream(7, Purpose::kRewriteNoise, {0, 3});
  EXPECT_EQ(privatize(v, {Epsilon::finite(1), 5.0}, a).values, privatize(v, {Epsilon::finite(1), 5.0}, b).values);
}

TEST(DpBoundTest, AntipodalPairReachesEpsilonExactly) {
  const PrivacyParams params{Epsilon::finite(2), 5.0};
  std::vector<double> u(8, 0.0), v(8, 0.0);
  u[3] = 5.0;
  v[3] = -5.0;
  // With y on the far side of u every coordinate's distance gap is 2C.
  std::vector<double> y(u);
  y[3] = 7.0;
  const DpBoundCheck c = verify_dp_bound(u, v, y, params);
  EXPECT_NEAR(c.log_ratio, 2.0, 1e-12);
  EXPECT_TRUE(c.ok);
  EXPECT_NEAR(verify_dp_bound(v, u, y, params).log_ratio, -2.0, 1e-12);
  EXPECT_EQ(verify_dp_bound(u, u, y, params).log_ratio, 0.0);
}

TEST(DpBoundTest, RejectsUnclippedInputsAndHandlesInf) {
  const std::vector<double> big = {4.0, 4.0}, small = {1.0, 0.0}, y = {0.0, 0.0};
  EXPECT_THROW(verify_dp_bound(big, small, y, {Epsilon::finite(1), 5.0}), ConfigError);
  const DpBoundCheck inf = verify_dp_bound(small, small, y, {Epsilon::infinite(), 5.0});
  EXPECT_TRUE(inf.ok);
}

TEST(DpBoundTest, RandomTriplesRespectBound) {
  for (double eps : {1000.0, 100.0, 10.0, 1.0}) {
    const DpSuiteReport r = run_dp_bound_suite({Epsilon::finite(eps), 5.0}, 32, 20000, 8);
    EXPECT_TRUE(r.passed()) << "eps=" << eps << " max=" << r.max_abs_log_ratio;
    EXPECT_LE(r.max_abs_log_ratio, eps + 1e-9);
    EXPECT_TRUE(r.tight(0.99)) << "eps=" << eps << " antipodal=" << r.max_antipodal_log_ratio;
  }
}

TEST(DpBoundTest, HalvedScaleDoublesWorstCase) {
  for (double eps : {100.0, 1.0}) {
    const DpSuiteReport r = run_dp_bound_suite({Epsilon::finite(eps), 5.0}, 32, 20000, 8, 1.0);
    EXPECT_FALSE(r.passed());
    EXPECT_NEAR(r.max_abs_log_ratio / (2 * eps), 1.0, 0.05);
  }
}

TEST(DpBoundTest, SuiteArgumentErrors) {
  EXPECT_THROW(run_dp_bound_suite({Epsilon::infinite(), 5.0}, 8, 10, 1), ConfigError);
  EXPECT_THROW(run_dp_bound_suite({Epsilon::finite(1), 5.0}, 8, 0, 1), ConfigError);
  EXPECT_THROW(run_dp_bound_suite({Epsilon::finite(1), 5.0}, 0, 10, 1), ConfigError);
}

TEST(DpBoundTest, SuiteIsDeterministic) {
  const auto a = run_dp_bound_suite({Epsilon::finite(1), 5.0}, 16, 1000, 42);
  const auto b = run_dp_bound_suite({Epsilon::finite(1), 5.0}, 16, 1000, 42);
  EXPECT_EQ(a.max_abs_log_ratio, b.max_abs_log_ratio);
  EXPECT_EQ(a.max_antipodal_log_ratio, b.max_antipodal_log_ratio);
}

}  // namespace
}  // namespace dprw
