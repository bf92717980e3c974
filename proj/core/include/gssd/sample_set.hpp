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

#ifndef GSSD_SAMPLE_SET_HPP_
#define GSSD_SAMPLE_SET_HPP_

#include <cstdint>
#include <filesystem>

#include <Eigen/Core>

#include "gssd/rng.hpp"

namespace gssd {

/// An empirical distribution: n points in R^d with implicit uniform weights.
///
/// `noise_key` identifies the noise stream this set receives inside the
/// smoothed estimator. Noise is keyed by this value — never by argument
/// position — so swapping estimator arguments swaps nothing about the noise,
/// and two sets sharing a key receive identical noise.
struct SampleSet {
  Eigen::MatrixXd points;  // n rows (samples) x d columns (features)
  std::uint64_t noise_key = 0;

  [[nodiscard]] Eigen::Index size() const { return points.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return points.cols(); }
};

/// Validates n >= 1, d >= 1 and that every entry is finite.
void validate_sample_set(const SampleSet& xs);

/// Draws n iid samples from the diagonal Gaussian N(mean, diag(scale^2)).
/// Deterministic given `stream`. Rejects non-positive scale entries and
/// mean/scale length mismatch.
SampleSet gen_gaussian(const RngStream& stream, Eigen::Index n,
                       const Eigen::VectorXd& mean,
                       const Eigen::VectorXd& scale,
                       std::uint64_t noise_key = 0);

/// Isotropic convenience overload: mean = mean_value * 1_d, scale = scale_value * 1_d.
SampleSet gen_gaussian_isotropic(const RngStream& stream, Eigen::Index n,
                                 Eigen::Index d, double mean_value,
                                 double scale_value,
                                 std::uint64_t noise_key = 0);

/// Loads a comma-separated numeric file as a SampleSet (UTF-8, decimal
/// floats, rows = samples). A non-numeric first row is treated as a header
/// and skipped. Ragged rows, non-numeric cells and empty files are reported
/// with their row/column position.
SampleSet load_csv(const std::filesystem::path& path,
                   std::uint64_t noise_key = 0);

}  // namespace gssd

#endif  // GSSD_SAMPLE_SET_HPP_
