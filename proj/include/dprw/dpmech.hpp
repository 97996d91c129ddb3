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

#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dprw/error.hpp"
#include "dprw/rng.hpp"

namespace dprw {

/// Privacy budget: a finite positive value or the non-private "infinite"
/// setting. Infinity is a distinct state, never a large double.
class Epsilon {
 public:
  static Epsilon infinite() { return Epsilon(); }

  static Epsilon finite(double value) {
    if (!(value > 0) || !std::isfinite(value)) throw ConfigError("epsilon must be positive or 'inf'");
    Epsilon e;
    e.infinite_ = false;
    e.value_ = value;
    return e;
  }

  // Accepts "inf" (any case, also "infinity") or a positive number.
  static Epsilon parse(const std::string& text) {
    std::string lower;
    for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "inf" || lower == "infinity" || lower == "+inf") return infinite();
    double v = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ConfigError("epsilon must be positive or 'inf'");
    return finite(v);
  }

  bool is_infinite() const { return infinite_; }

  double value() const {
    if (infinite_) throw StateError("value() of an infinite epsilon");
    return value_;
  }

  // "inf", or the shortest decimal that round-trips.
  std::string to_string() const {
    if (infinite_) return "inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value_);
    return std::string(buf, ptr);
  }

  friend bool operator==(const Epsilon& a, const Epsilon& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

 private:
  Epsilon() = default;
  bool infinite_ = true;
  double value_ = 0;
};

struct PrivacyParams {
  Epsilon epsilon = Epsilon::infinite();
  double clip_c = 5.0;

  void validate() const {
    if (!(clip_c > 0) || !std::isfinite(clip_c)) throw ConfigError("clip constant must be positive");
  }
};

// Laplace scale b. Zero encodes "no noise" (infinite epsilon).
struct NoiseScale {
  double b = 0.0;
};

struct LatentVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  friend bool operator==(const LatentVector&, const LatentVector&) = default;
};

inline constexpr double kBoundTolerance = 1e-9;

// Worst-case l1 distance between two vectors in the l1 ball of radius C is
// 2C, so the sensitivity of the clipped latent is 2 * clip_c.
inline constexpr double kL1SensitivityFactor = 2.0;

inline double l1_norm(std::span<const double> v) {
  double n = 0;
  for (double x : v) n += std::abs(x);
  return n;
}

/// v * min(1, c / ||v||_1).
inline std::vector<double> clip_l1(std::span<const double> v, double clip_c) {
  if (!(clip_c > 0)) throw ConfigError("clip constant must be positive");
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError("clip_l1: non-finite input");
  std::vector<double> out(v.begin(), v.end());
  const double n = l1_norm(v);
  if (n > clip_c) {
    const double s = clip_c / n;
    for (double& x : out) x *= s;
  }
  return out;
}

// b = sensitivity_factor * C / epsilon. The factor is 2 for the l1 ball;
// other values exist only so tests can reproduce a miscalibrated mechanism.
inline NoiseScale calibrate_scale(const PrivacyParams& params,
                                  double sensitivity_factor = kL1SensitivityFactor) {
  params.validate();
  if (params.epsilon.is_infinite()) return NoiseScale{0.0};
  return NoiseScale{sensitivity_factor * params.clip_c / params.epsilon.value()};
}

// Process-wide number of Laplace coordinates drawn. Lets callers audit that
// a code path (e.g. pre-training) never touches the mechanism's sampler.
inline std::atomic<std::uint64_t>& laplace_draw_counter() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}

/// i.i.d. Laplace(0, b) by inverse CDF: x = -b sgn(u) ln(1 - 2|u|) with u
/// uniform on (-1/2, 1/2). One uniform per coordinate.
inline std::vector<double> sample_laplace(NoiseScale scale, std::size_t dim, Rng& rng) {
  if (dim == 0) throw ConfigError("sample_laplace: dim must be positive");
  std::vector<double> out(dim, 0.0);
  if (scale.b == 0.0) return out;
  if (!(scale.b > 0) || !std::isfinite(scale.b)) throw ConfigError("Laplace scale must be positive");
  for (double& x : out) {
    const double u = rng.uniform_centered_open();
    const double sgn = u < 0 ? -1.0 : (u > 0 ? 1.0 : 0.0);
    x = -scale.b * sgn * std::log1p(-2.0 * std::abs(u));
  }
  laplace_draw_counter().fetch_add(dim, std::memory_order_relaxed);
  return out;
}

inline double laplace_cdf(double x, double b) {
  return x < 0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
}

// clip_l1, then add Laplace noise at the calibrated scale. With infinite
// epsilon this is exactly clip_l1 and draws nothing from rng.
inline LatentVector privatize(const LatentVector& latent, const PrivacyParams& params, Rng& rng) {
  LatentVector out{clip_l1(latent.values, params.clip_c)};
  const NoiseScale scale = calibrate_scale(params);
  if (scale.b == 0.0) return out;
  const auto noise = sample_laplace(scale, out.size(), rng);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += noise[i];
  for (double x : out.values)
    if (!std::isfinite(x)) throw NumericError("privatize produced a non-finite value");
  return out;
}

// Log density of y under center + Laplace(0, b)^dim.
inline double log_density(std::span<const double> y, std::span<const double> center, double b) {
  if (!(b > 0)) throw ConfigError("log_density: scale must be positive");
  if (y.size() != center.size()) throw ShapeError("log_density: dimension mismatch");
  double s = 0;
  const double norm = std::log(2.0 * b);
  for (std::size_t i = 0; i < y.size(); ++i) s += -norm - std::abs(y[i] - center[i]) / b;
  return s;
}

struct DpBoundCheck {
  double log_ratio = 0.0;
  bool ok = true;
};

/// Privacy-loss of output y between inputs u and v, against the bound
/// |ln p(y|u) - ln p(y|v)| <= epsilon. `scale` defaults to the calibrated
/// one; passing another scale audits a (mis)calibrated mechanism.
inline DpBoundCheck verify_dp_bound(std::span<const double> u, std::span<const double> v, std::span<const double> y,
                                    const PrivacyParams& params, std::optional<NoiseScale> scale = std::nullopt) {
  params.validate();
  if (l1_norm(u) > params.clip_c + kBoundTolerance || l1_norm(v) > params.clip_c + kBoundTolerance)
    throw ConfigError("verify_dp_bound: inputs must be clipped to the l1 ball");
  if (params.epsilon.is_infinite()) return DpBoundCheck{0.0, true};
  const double b = scale ? scale->b : calibrate_scale(params).b;
  DpBoundCheck out;
  out.log_ratio = log_density(y, u, b) - log_density(y, v, b);
  out.ok = std::abs(out.log_ratio) <= params.epsilon.value() + kBoundTolerance;
  return out;
}

struct DpSuiteReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_abs_log_ratio = 0.0;
  double max_antipodal_log_ratio = 0.0;
  double epsilon = 0.0;
  double scale = 0.0;

  bool passed() const { return trials > 0 && violations == 0; }
  // The calibration is not vacuously loose: antipodal pairs get near epsilon.
  bool tight(double fraction = 0.99) const { return max_antipodal_log_ratio >= fraction * epsilon; }
};

namespace detail {

// Random point of the l1 ball of radius c: random direction, radius drawn
// so that a quarter of the points sit exactly on the boundary.
inline std::vector<double> random_ball_point(std::size_t dim, double c, Rng& rng) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  const double n = l1_norm(v);
  const double radius = rng.below(4) == 0 ? c : c * rng.uniform();
  for (double& x : v) x *= radius / n;
  return clip_l1(v, c);
}

}  // namespace detail

/// Randomized audit of the bound over `trials` (u, v, y) triples. Every
/// fourth trial is an antipodal pair u = s*C*e_k, v = -u; the rest are
/// random points of the ball. y is an output of the mechanism run on u.
/// `sensitivity_factor` other than 2 simulates a miscalibrated mechanism.
inline DpSuiteReport run_dp_bound_suite(const PrivacyParams& params, std::size_t dim, std::size_t trials,
                                        std::uint64_t seed,
                                        double sensitivity_factor = kL1SensitivityFactor) {
  params.validate();
  if (params.epsilon.is_infinite()) throw ConfigError("nothing to verify for epsilon = inf");
  if (dim == 0) throw ConfigError("dim must be positive");
  if (trials == 0) throw ConfigError("trials must be positive");
  const NoiseScale scale = calibrate_scale(params, sensitivity_factor);
  DpSuiteReport rep;
  rep.trials = trials;
  rep.epsilon = params.epsilon.value();
  rep.scale = scale.b;
  Rng rng = Rng::stream(seed, Purpose::kDpAudit);
  std::vector<double> y(dim);
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<double> u, v;
    const bool antipodal = t % 4 == 0;
    if (antipodal) {
      u.assign(dim, 0.0);
      const std::size_t k = static_cast<std::size_t>(rng.below(dim));
      u[k] = rng.below(2) ? params.clip_c : -params.clip_c;
      v = u;
      v[k] = -u[k];
    } else {
      u = detail::random_ball_point(dim, params.clip_c, rng);
      v = detail::random_ball_point(dim, params.clip_c, rng);
    }
    const auto noise = sample_laplace(scale, dim, rng);
    for (std::size_t i = 0; i < dim; ++i) y[i] = u[i] + noise[i];
    const DpBoundCheck c = verify_dp_bound(u, v, y, params, scale);
    const double a = std::abs(c.log_ratio);
    rep.max_abs_log_ratio = std::max(rep.max_abs_log_ratio, a);
    if (antipodal) rep.max_antipodal_log_ratio = std::max(rep.max_antipodal_log_ratio, a);
    if (!c.ok) ++rep.violations;
  }
  return rep;
}

}  // namespace dprw
