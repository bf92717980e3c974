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

#ifndef GSSD_DIVERGENCES_HPP_
#define GSSD_DIVERGENCES_HPP_

#include <optional>
#include <string>

#include <Eigen/Core>

namespace gssd {

enum class DivergenceKind { kWasserstein, kSinkhorn, kMmd };

std::string to_string(DivergenceKind kind);
DivergenceKind divergence_kind_from_string(const std::string& name);

/// Which base divergence to evaluate between 1D projections, and with what
/// parameters. `p` is the power applied to the base value when estimating
/// (Wasserstein helpers already return W_p^p; Sinkhorn and MMD return the
/// divergence itself and are raised to p by the estimator).
struct DivergenceSpec {
  DivergenceKind kind = DivergenceKind::kWasserstein;
  double p = 2.0;
  double sinkhorn_lambda = 0.1;
  double sinkhorn_tol = 1e-9;
  long sinkhorn_max_iter = 10000;
  // Empty: bandwidth = mean of all pairwise distances over the pooled values,
  // recomputed per evaluation. Set: fixed bandwidth h > 0.
  std::optional<double> mmd_bandwidth;

  void validate() const;
};

/// W_p^p between the uniform empirical measures on x and y.
///
/// Equal sizes: sorted matching, (1/n) sum |x_(i) - y_(i)|^p. Unequal sizes:
/// the quantile-function integral, evaluated exactly on the merged breakpoint
/// grid of the two step CDFs (segment masses are compared as integer
/// fractions, so no FP drift in the coupling). Inputs need not be sorted.
double wasserstein_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                      double p);

/// Test oracle: minimum of (1/n) sum |x_i - y_{pi(i)}|^p over all
/// permutations pi. Requires equal sizes n = m <= 8.
double wasserstein_1d_bruteforce(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& y, double p);

/// Diagnostics from the most recent entropic solve inside
/// sinkhorn_divergence_1d (iterations of the final sub-problem etc.).
struct SinkhornInfo {
  long iterations = 0;
  double marginal_violation = 0.0;
};

/// Debiased Sinkhorn divergence
///   SKD_lambda(x, y) = W_lambda(x, y) - W_lambda(x, x)/2 - W_lambda(y, y)/2,
/// where W_lambda is the entropic transport objective (cost plus
/// lambda * KL(plan | product)) with cost |x_i - y_j|^p and uniform
/// marginals, solved by log-domain Sinkhorn iterations with stepwise
/// lambda-scaling. Iterations stop when the L-inf marginal violation falls
/// below spec.sinkhorn_tol; exceeding sinkhorn_max_iter raises an Error that
/// reports the violation reached. A tiny negative result (> -10*tol) from
/// finite convergence is clamped to 0; anything more negative is an Error.
double sinkhorn_divergence_1d(const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y,
                              const DivergenceSpec& spec,
                              SinkhornInfo* info = nullptr);

/// Biased (V-statistic) MMD estimate with the Gaussian kernel
/// k(a,b) = exp(-(a-b)^2 / (2 h^2)):
///   sqrt( mean k(x,x') + mean k(y,y') - 2 mean k(x,y) ), clamped at 0.
/// Bandwidth h follows spec.mmd_bandwidth; the mean-pairwise policy errors
/// with "degenerate bandwidth" when all pooled values coincide.
double mmd_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
              const DivergenceSpec& spec);

/// D^p per the smoothed-sliced construction: W_p^p for the Wasserstein base,
/// SKD^p / MMD^p for the others.
double divergence_pow(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                      const DivergenceSpec& spec);

}  // namespace gssd

#endif  // GSSD_DIVERGENCES_HPP_
