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

#include "gssd/estimator.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "gssd/error.hpp"
#include "gssd/parallel.hpp"

namespace gssd {

void SmoothedSliceConfig::validate() const {
  if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be >= 0");
  if (projections < 1) throw InvalidArgument("projection count must be >= 1");
  spec.validate();
}

Eigen::VectorXd project(const SampleSet& xs, const Eigen::VectorXd& direction) {
  if (xs.dim() != direction.size()) {
    throw InvalidArgument(fmt::format(
        "project: sample dimension {} does not match direction dimension {}",
        xs.dim(), direction.size()));
  }
  return xs.points * direction;
}

Eigen::VectorXd smooth(const Eigen::VectorXd& values,
                       const RngStream& noise_stream, double sigma) {
  return values + gaussian_noise(noise_stream, values.size(), sigma);
}

EstimateReport estimate_gssd(const SampleSet& mu, const SampleSet& nu,
                             const SmoothedSliceConfig& cfg, int jobs) {
  validate_sample_set(mu);
  validate_sample_set(nu);
  if (mu.dim() != nu.dim()) {
    throw InvalidArgument(fmt::format(
        "estimate_gssd: sample sets have different dimensions ({} vs {})",
        mu.dim(), nu.dim()));
  }
  cfg.validate();

  const RngStream root(cfg.seed);
  const RngStream direction_root = root.child(kDirectionsLabel);
  const RngStream noise_root = root.child(kNoiseLabel);
  const std::vector<Eigen::VectorXd> directions =
      sample_sphere(direction_root, mu.dim(), cfg.projections);

  EstimateReport report;
  report.per_projection.resize(cfg.projections);
  parallel_for(cfg.projections, jobs, [&](std::int64_t l) {
    const RngStream noise_l = noise_root.child(static_cast<std::uint64_t>(l));
    const Eigen::VectorXd& u = directions[static_cast<std::size_t>(l)];
    const Eigen::VectorXd px =
        smooth(project(mu, u), noise_l.child(mu.noise_key), cfg.sigma);
    const Eigen::VectorXd py =
        smooth(project(nu, u), noise_l.child(nu.noise_key), cfg.sigma);
    try {
      report.per_projection[l] = divergence_pow(px, py, cfg.spec);
    } catch (const Error& e) {
      throw Error(fmt::format("direction {}: {}", l, e.what()));
    }
  });

  double sum = 0.0;
  for (Eigen::Index l = 0; l < report.per_projection.size(); ++l) {
    sum += report.per_projection[l];
  }
  report.value = sum / static_cast<double>(cfg.projections);
  if (cfg.projections >= 2) {
    report.variance = estimate_variance_a2(report.per_projection);
    report.std_error =
        std::sqrt(report.variance / static_cast<double>(cfg.projections));
  }
  return report;
}

double estimate_variance_a2(const Eigen::VectorXd& per_projection) {
  const Eigen::Index n = per_projection.size();
  if (n < 2) {
    throw InvalidArgument(
        "estimate_variance_a2: needs at least two projections");
  }
  const double mean = per_projection.mean();
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dev = per_projection[i] - mean;
    ss += dev * dev;
  }
  return std::max(0.0, ss / static_cast<double>(n - 1));
}

double analytic_gsswd_gaussian(const Eigen::VectorXd& m1, double s1,
                               const Eigen::VectorXd& m2, double s2,
                               double sigma) {
  if (m1.size() != m2.size() || m1.size() < 1) {
    throw InvalidArgument("analytic_gsswd_gaussian: mean length mismatch");
  }
  if (!(s1 > 0.0) || !(s2 > 0.0)) {
    throw InvalidArgument("analytic_gsswd_gaussian: scales must be positive");
  }
  if (!(sigma >= 0.0)) {
    throw InvalidArgument("analytic_gsswd_gaussian: sigma must be >= 0");
  }
  const double mean_term =
      (m1 - m2).squaredNorm() / static_cast<double>(m1.size());
  const double spread = std::sqrt(s1 * s1 + sigma * sigma) -
                        std::sqrt(s2 * s2 + sigma * sigma);
  return mean_term + spread * spread;
}

double gaussian_abs_moment(double p, double sigma) {
  if (!(p >= 1.0)) throw InvalidArgument("gaussian_abs_moment: p must be >= 1");
  if (!(sigma >= 0.0)) {
    throw InvalidArgument("gaussian_abs_moment: sigma must be >= 0");
  }
  return std::pow(sigma, p) * std::pow(2.0, p / 2.0) *
         std::tgamma((p + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
}

double sphere_surface_area(int d) {
  if (d < 1) throw InvalidArgument("sphere_surface_area: d must be >= 1");
  return 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
}

}  // namespace gssd
