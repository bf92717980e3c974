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

#ifndef GSSD_EXPERIMENTS_HPP_
#define GSSD_EXPERIMENTS_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gssd/estimator.hpp"

namespace gssd {

enum class SweepAxis {
  kSampleSize,
  kDimension,
  kDisplacement,
  kProjections,
  kNoiseLevel,
};

std::string to_string(SweepAxis axis);

/// How the two compared sample sets are produced for each sweep cell.
struct Scenario {
  enum class Kind {
    kSameGaussian,   // both sets iid from N(mean1 * 1_d, scale1^2 I)
    kGaussianPair,   // N(mean1 * 1_d, scale1^2 I) vs N(mean2 * 1_d, scale2^2 I)
    kCsvPair,        // two fixed datasets loaded from files
  };

  Kind kind = Kind::kSameGaussian;
  Eigen::Index dim = 10;
  double mean1 = 0.0;
  double mean2 = 0.0;
  double scale1 = 1.0;
  double scale2 = 1.0;
  std::filesystem::path csv1;
  std::filesystem::path csv2;

  [[nodiscard]] bool synthetic() const { return kind != Kind::kCsvPair; }
  [[nodiscard]] bool same_distribution() const;
  [[nodiscard]] std::string describe() const;
};

/// A sweep: one axis, its grid, replication, the divergences to evaluate and
/// the estimator template. `cfg.seed` is the master seed; `cfg.spec` is
/// ignored in favour of `specs`.
struct SweepPlan {
  SweepAxis axis = SweepAxis::kSampleSize;
  std::vector<double> grid;
  int replicates = 20;
  std::vector<DivergenceSpec> specs;
  SmoothedSliceConfig cfg;
  Scenario scenario;

  // Sample count for axes that do not sweep it.
  Eigen::Index sample_size = 500;
  // Inner sample-size grid for the Dimension and NoiseLevel axes.
  std::vector<double> inner_sample_grid;
  // Reference projection count for the Projections axis.
  long projection_reference = 10000;

  int jobs = 1;
  // When false (the default) the wall_time_ms column is written as 0 so that
  // repeated runs produce byte-identical files.
  bool record_timings = false;
};

struct SweepRow {
  std::string divergence;
  double p = 0.0;
  double sigma = 0.0;
  long projections = 0;
  Eigen::Index samples = 0;
  Eigen::Index dim = 0;
  std::string axis;
  double axis_value = 0.0;
  int replicate = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double wall_time_ms = 0.0;
  std::string error;  // nonempty marks a failed cell; estimate fields unset
};

struct SlopeFit {
  std::string group;
  double slope = 0.0;
  double r2 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SlopeFit> slopes;
  // Ordered key/value pairs for the metadata sidecar.
  std::vector<std::pair<std::string, std::string>> metadata;
};

/// Both sets drawn iid from the same distribution (population divergence 0),
/// estimates recorded against a strictly increasing sample-size grid; fits
/// the per-divergence log-log slope of the mean estimate, reported on the
/// distance scale (raw D^p-scale slope divided by p). Requires a synthetic
/// same-distribution scenario and grid values >= 2.
SweepResult run_sample_complexity(const SweepPlan& plan);

/// Sample-complexity protocol repeated per dimension in `grid`, with the
/// sample sizes in `inner_sample_grid`; emits per-dimension slopes and the
/// maximum pairwise slope gap per divergence.
SweepResult run_dimension_sweep(const SweepPlan& plan);

/// Gaussian displacement study: one mean fixed at mean1 * 1_d, the other at
/// s * 1_d for s in `grid`. Per replicate the moving set is drawn once and
/// translated, and directions are shared across the grid (common random
/// numbers), so the location of the minimum is not drowned by projection
/// noise. Emits the argmin per divergence.
SweepResult run_displacement(const SweepPlan& plan);

/// Monte-Carlo projection error: per replicate, one estimate with
/// `projection_reference` directions serves as reference; rows hold
/// |estimate(L) - estimate(L_ref)| for each L in `grid` (estimate(L) is the
/// L-direction prefix of the same run). Fits the log-log error slope.
/// Rejects a grid containing L_ref.
SweepResult run_projection_complexity(const SweepPlan& plan);

/// Sample-complexity curves at each noise level in `grid` (sigma values).
/// Directions, draws and noise streams are shared across sigma, so curves
/// differ only through the noise amplitude. For synthetic Gaussian scenarios
/// the analytic smoothed-sliced W2^2 value per sigma is added to the
/// metadata.
SweepResult run_noise_sweep(const SweepPlan& plan);

/// Ordinary least squares of log(y) on log(x). Requires >= 3 points, all
/// positive. Returns {slope, r^2}; constant y gives {0, 1}.
std::pair<double, double> fit_loglog_slope(std::span<const double> xs,
                                           std::span<const double> ys);

/// Serializes rows with the fixed header
/// divergence,p,sigma,L,n,d,axis,axis_value,replicate,estimate,stderr,wall_time_ms,error
std::string to_csv(const SweepResult& result);

/// Metadata sidecar path for a CSV output path (extension -> .meta.json).
std::filesystem::path metadata_path(const std::filesystem::path& csv_path);

/// Throws if `path` cannot be created and written.
void check_output_writable(const std::filesystem::path& path);

/// Writes the CSV and its metadata sidecar atomically (temp file + rename).
void write_sweep_outputs(const SweepResult& result,
                         const std::filesystem::path& csv_path);

}  // namespace gssd

#endif  // GSSD_EXPERIMENTS_HPP_
