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

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace dprw {

// Stream purposes. Mixed into stream keys so that, e.g., shuffling and
// rewrite noise for the same experiment seed never share a sequence.
enum class Purpose : std::uint64_t {
  kInit = 1,
  kShuffle = 2,
  kRewriteNoise = 3,
  kClassifierInit = 4,
  kClassifierShuffle = 5,
  kBaseline = 6,
  kDpAudit = 7,
  kSynthetic = 8,
  kTest = 99,
};

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Counter-based deterministic generator.
///
/// The n-th output of a stream is a pure function of (key, n), so a stream
/// can be re-created anywhere from its key alone. Keys for independent
/// streams are derived by hashing a tuple such as (seed, purpose, index);
/// this makes per-document noise independent of iteration order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : key_(detail::splitmix64(seed)) {}

  static Rng stream(std::uint64_t seed, Purpose purpose,
                    std::initializer_list<std::uint64_t> path = {}) {
    Rng r(seed);
    r = r.derive(static_cast<std::uint64_t>(purpose));
    for (std::uint64_t p : path) r = r.derive(p);
    return r;
  }

  // Child stream; does not advance this one.
  Rng derive(std::uint64_t tag) const {
    Rng child;
    child.key_ = detail::splitmix64(key_ ^ detail::splitmix64(tag + 0x632be59bd9b4e019ULL));
    return child;
  }

  std::uint64_t next_u64() {
    return detail::splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in the open interval (-1/2, 1/2).
  double uniform_centered_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53 - 0.5;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection keeps it exactly unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller (one value per call; no cached state).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename Container>
  void shuffle(Container& c) {
    for (std::size_t i = c.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      using std::swap;
      swap(c[i - 1], c[j]);
    }
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace dprw
