// Copyright 2026 The gssd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GSSD_RNG_HPP_
#define GSSD_RNG_HPP_

#include <cstdint>

#include <Eigen/Core>

namespace gssd {

/// SplitMix64 finalizer: a 64-bit avalanche permutation.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

/// Counter-based random stream addressed by a (master seed, label path) key.
///
/// A stream is an immutable 64-bit key. `child(label)` derives the key of a
/// sub-stream; chaining children encodes a path of labels, so two streams
/// derived through different paths produce unrelated outputs. The value at
/// position `index` is a pure function of (key, index) — SplitMix64 with the
/// key as its seed — which makes every draw addressable: no sequential state,
/// no dependence on evaluation order or thread schedule.
///
/// Normal variates use the inverse-CDF method (Wichura's AS 241, PPND16),
/// one uniform per variate. The method is fixed; changing it would change
/// every seeded result in the project.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed)
      : key_(mix64(master_seed + kGolden)) {}

  /// Derives the sub-stream for `label`. Distinct labels give streams with
  /// unrelated output sequences.
  [[nodiscard]] RngStream child(std::uint64_t label) const {
    return RngStream(mix64(key_ ^ mix64(label + kGolden)), Raw{});
  }

  /// Raw 64 random bits at `index`.
  [[nodiscard]] std::uint64_t bits(std::uint64_t index) const {
    return mix64(key_ + (index + 1) * kGolden);
  }

  /// Uniform draw in the open interval (0, 1) at `index`.
  [[nodiscard]] double uniform(std::uint64_t index) const {
    // 53-bit mantissa, offset by half a step so 0 and 1 are unreachable.
    return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal draw at `index`.
  [[nodiscard]] double normal(std::uint64_t index) const;

  [[nodiscard]] std::uint64_t key() const { return key_; }

 private:
  struct Raw {};
  RngStream(std::uint64_t key, Raw) : key_(key) {}

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  std::uint64_t key_;
};

/// Quantile function of the standard normal for u in (0, 1).
/// Wichura's algorithm AS 241 (PPND16), accurate to ~1e-16 relative.
double inverse_normal_cdf(double u);

/// Draws `count` directions uniformly on the unit sphere S^{d-1}: each is a
/// vector of d iid standard normals, normalized. Direction l is derived from
/// `stream.child(l)`, so the first L directions of a longer run coincide with
/// a shorter run's — estimates at growing projection counts share prefixes.
///
/// Rejects d < 1 or count < 1. A zero-norm draw (probability-zero event) is
/// redrawn from the following block of the same sub-stream.
std::vector<Eigen::VectorXd> sample_sphere(const RngStream& stream,
                                           Eigen::Index d, Eigen::Index count);

/// n iid draws from N(0, sigma^2). sigma = 0 yields exact zeros, produced by
/// scaling the same unit draws a positive sigma would use, so results vary
/// continuously in sigma under a fixed stream. Rejects sigma < 0.
Eigen::VectorXd gaussian_noise(const RngStream& stream, Eigen::Index n,
                               double sigma);

}  // namespace gssd

#endif  // GSSD_RNG_HPP_
