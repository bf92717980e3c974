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

#ifndef GSSD_ESTIMATOR_HPP_
#define GSSD_ESTIMATOR_HPP_

#include <cstdint>

#include <Eigen/Core>

#include "gssd/divergences.hpp"
#include "gssd/rng.hpp"
#include "gssd/sample_set.hpp"

namespace gssd {

/// Labels of the sub-streams the estimator derives from the master seed:
/// direction l comes from (seed, kDirectionStreamLabel, l), the noise a
/// sample set receives at direction l from
/// (seed, kNoiseStreamLabel, l, noise_key). Published so callers can
/// reproduce the exact directions and noise of an estimate.
inline constexpr std::uint64_t kDirectionStreamLabel = 1;
inline constexpr std::uint64_t kNoiseStreamLabel = 2;

/// Parameters of one smoothed-sliced estimate. Together with the two sample
/// sets' noise keys this fully determines the result.
struct SmoothedSliceConfig {
  double sigma = 3.0;      // noise standard deviation, >= 0
  long projections = 50;   // L, number of random directions, >= 1
  std::uint64_t seed = 0;  // master seed for directions and noise
  DivergenceSpec spec;

  void validate() const;
};

/// Result of a Monte-Carlo smoothed-sliced estimate over L directions.
/// `value` is the exact mean of `per_projection` (each entry a D^p value);
/// `variance` is their unbiased sample variance (0 when L == 1), which
/// estimates the across-direction variance of D^p; `std_error` is
/// sqrt(variance / L).
struct EstimateReport {
  double value = 0.0;
  Eigen::VectorXd per_projection;
  double variance = 0.0;
  double std_error = 0.0;
};

/// Projects every sample onto the direction: values[i] = <points.row(i), u>.
Eigen::VectorXd project(const SampleSet& xs, const Eigen::VectorXd& direction);

/// Adds one N(0, sigma^2) draw per value, taken from `noise_stream`.
/// sigma = 0 is the identity (up to adding signed zero).
Eigen::VectorXd smooth(const Eigen::VectorXd& values,
                       const RngStream& noise_stream, double sigma);

/// Monte-Carlo estimate of the Gaussian-smoothed sliced divergence (the mean
/// over L uniform directions of D^p between noised projections).
///
/// Stream layout: directions come from seed path (seed, kDirections, l);
/// the noise a sample set receives at direction l comes from
/// (seed, kNoise, l, noise_key). Consequences, by construction:
///  - swapping the arguments changes nothing about the noise, so the
///    estimate is exactly symmetric for symmetric base divergences;
///  - two sets with equal points and equal noise keys receive identical
///    noised projections, so the estimate is exactly 0;
///  - results are bit-identical for any `jobs` value (per-direction values
///    land in an indexed buffer, reduced in index order);
///  - the first L directions of a longer run coincide with a shorter run's.
///
/// Base-divergence failures are annotated with the direction index.
EstimateReport estimate_gssd(const SampleSet& mu, const SampleSet& nu,
                             const SmoothedSliceConfig& cfg, int jobs = 1);

/// Unbiased sample variance of the per-direction D^p values (the
/// across-direction variance estimate). Requires at least two entries.
double estimate_variance_a2(const Eigen::VectorXd& per_projection);

/// Population value of the smoothed sliced squared 2-Wasserstein distance
/// between the isotropic Gaussians N(m1, s1^2 I) and N(m2, s2^2 I):
///   |m1 - m2|^2 / d  +  (sqrt(s1^2 + sigma^2) - sqrt(s2^2 + sigma^2))^2.
/// Uses the 1D Gaussian W2 closed form and E_u[<u, v>^2] = |v|^2 / d for u
/// uniform on the sphere. p is fixed at 2.
double analytic_gsswd_gaussian(const Eigen::VectorXd& m1, double s1,
                               const Eigen::VectorXd& m2, double s2,
                               double sigma);

/// E|Z|^p for Z ~ N(0, sigma^2):
///   sigma^p * 2^{p/2} * Gamma((p+1)/2) / sqrt(pi).
double gaussian_abs_moment(double p, double sigma);

/// Surface area of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
double sphere_surface_area(int d);

}  // namespace gssd

#endif  // GSSD_ESTIMATOR_HPP_
