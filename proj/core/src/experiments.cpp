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

#include "gssd/experiments.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

#include "gssd/error.hpp"
#include "gssd/parallel.hpp"
#include "gssd/version.hpp"

namespace gssd {

namespace {

constexpr std::uint64_t kReplicateLabel = 11;
constexpr std::uint64_t kScenarioLabel = 12;
constexpr std::uint64_t kFirstSideLabel = 1;
constexpr std::uint64_t kSecondSideLabel = 2;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::uint64_t replicate_seed(std::uint64_t master, int replicate) {
  return RngStream(master)
      .child(kReplicateLabel)
      .child(static_cast<std::uint64_t>(replicate))
      .key();
}

RngStream scenario_stream(std::uint64_t master, int replicate) {
  return RngStream(master).child(kScenarioLabel).child(
      static_cast<std::uint64_t>(replicate));
}

void require_axis(const SweepPlan& plan, SweepAxis expected,
                  const char* driver) {
  if (plan.axis != expected) {
    throw InvalidArgument(fmt::format("{}: plan axis must be {}", driver,
                                      to_string(expected)));
  }
}

void validate_plan_common(const SweepPlan& plan) {
  if (plan.replicates < 1) {
    throw InvalidArgument("sweep: replicates must be >= 1");
  }
  if (plan.specs.empty()) {
    throw InvalidArgument("sweep: at least one divergence spec is required");
  }
  for (const auto& spec : plan.specs) spec.validate();
  SmoothedSliceConfig probe = plan.cfg;
  probe.spec = plan.specs.front();
  probe.validate();
  if (plan.grid.empty()) throw InvalidArgument("sweep: grid must be nonempty");
  for (std::size_t i = 0; i < plan.grid.size(); ++i) {
    if (!std::isfinite(plan.grid[i])) {
      throw InvalidArgument("sweep: grid values must be finite");
    }
    if (i > 0 && !(plan.grid[i] > plan.grid[i - 1])) {
      throw InvalidArgument("sweep: grid must be strictly increasing");
    }
  }
}

std::vector<Eigen::Index> integral_grid(const std::vector<double>& grid,
                                        Eigen::Index min_value,
                                        const char* what) {
  std::vector<Eigen::Index> out;
  out.reserve(grid.size());
  for (double v : grid) {
    const double r = std::round(v);
    if (!std::isfinite(v) || std::abs(v - r) > 0.0) {
      throw InvalidArgument(fmt::format("sweep: {} values must be integers",
                                        what));
    }
    if (static_cast<Eigen::Index>(r) < min_value) {
      throw InvalidArgument(fmt::format("sweep: {} values must be >= {}",
                                        what, min_value));
    }
    out.push_back(static_cast<Eigen::Index>(r));
  }
  return out;
}

std::pair<SampleSet, SampleSet> draw_pair(const Scenario& scenario,
                                          const RngStream& stream,
                                          Eigen::Index n, Eigen::Index d) {
  if (!scenario.synthetic()) {
    throw InvalidArgument("sweep: this axis requires a synthetic scenario");
  }
  SampleSet a = gen_gaussian_isotropic(stream.child(kFirstSideLabel), n, d,
                                       scenario.mean1, scenario.scale1,
                                       kFirstSideLabel);
  const double mean2 =
      scenario.kind == Scenario::Kind::kSameGaussian ? scenario.mean1
                                                     : scenario.mean2;
  const double scale2 =
      scenario.kind == Scenario::Kind::kSameGaussian ? scenario.scale1
                                                     : scenario.scale2;
  SampleSet b = gen_gaussian_isotropic(stream.child(kSecondSideLabel), n, d,
                                       mean2, scale2, kSecondSideLabel);
  return {std::move(a), std::move(b)};
}

SweepRow base_row(const DivergenceSpec& spec, const SmoothedSliceConfig& cfg,
                  Eigen::Index n, Eigen::Index d, SweepAxis axis,
                  double axis_value, int replicate) {
  SweepRow row;
  row.divergence = to_string(spec.kind);
  row.p = spec.p;
  row.sigma = cfg.sigma;
  row.projections = cfg.projections;
  row.samples = n;
  row.dim = d;
  row.axis = to_string(axis);
  row.axis_value = axis_value;
  row.replicate = replicate;
  row.estimate = kNan;
  row.std_error = kNan;
  return row;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

void estimate_into_row(SweepRow& row, const SampleSet& a, const SampleSet& b,
                       const SmoothedSliceConfig& cfg, bool record_timings) {
  const auto start = std::chrono::steady_clock::now();
  try {
    const EstimateReport report = estimate_gssd(a, b, cfg, 1);
    row.estimate = report.value;
    row.std_error = report.std_error;
  } catch (const Error& e) {
    row.error = e.what();
  }
  row.wall_time_ms = record_timings ? elapsed_ms(start) : 0.0;
}

// Mean estimate per grid value for one divergence, skipping errored rows.
// Every grid value must keep at least one valid replicate.
std::vector<double> mean_per_grid_value(const SweepResult& result,
                                        const std::string& divergence,
                                        const std::vector<double>& grid_values,
                                        const std::string& axis) {
  std::vector<double> sums(grid_values.size(), 0.0);
  std::vector<long> counts(grid_values.size(), 0);
  for (const auto& row : result.rows) {
    if (row.divergence != divergence || row.axis != axis) continue;
    if (!row.error.empty()) continue;
    const auto it = std::find(grid_values.begin(), grid_values.end(),
                              row.axis_value);
    if (it == grid_values.end()) continue;
    const std::size_t idx =
        static_cast<std::size_t>(it - grid_values.begin());
    sums[idx] += row.estimate;
    ++counts[idx];
  }
  std::vector<double> means(grid_values.size());
  for (std::size_t i = 0; i < grid_values.size(); ++i) {
    if (counts[i] == 0) {
      throw Error(fmt::format(
          "sweep: no successful replicate at grid value {}", grid_values[i]));
    }
    means[i] = sums[i] / static_cast<double>(counts[i]);
  }
  return means;
}

std::pair<double, double> fit_or_degenerate(const std::vector<double>& xs,
                                            const std::vector<double>& ys) {
  for (double y : ys) {
    if (!(y > 0.0)) throw Error("degenerate sweep");
  }
  return fit_loglog_slope(xs, ys);
}

std::string format_double(double v) { return fmt::format("{}", v); }

std::string join_divergences(const std::vector<DivergenceSpec>& specs) {
  std::string out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (i > 0) out += ",";
    out += to_string(specs[i].kind);
  }
  return out;
}

std::string format_grid(const std::vector<double>& grid) {
  std::string out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0) out += ",";
    out += format_double(grid[i]);
  }
  return out;
}

void push_common_metadata(SweepResult& result, const SweepPlan& plan) {
  result.metadata.emplace_back("software_version", GSSD_VERSION_STRING);
  result.metadata.emplace_back("seed", fmt::format("{}", plan.cfg.seed));
  result.metadata.emplace_back("axis", to_string(plan.axis));
  result.metadata.emplace_back("scenario", plan.scenario.describe());
  result.metadata.emplace_back("divergences", join_divergences(plan.specs));
  result.metadata.emplace_back("replicates",
                               fmt::format("{}", plan.replicates));
  result.metadata.emplace_back("sigma", format_double(plan.cfg.sigma));
  result.metadata.emplace_back("projections",
                               fmt::format("{}", plan.cfg.projections));
  result.metadata.emplace_back("grid", format_grid(plan.grid));
  result.metadata.emplace_back("aggregation", "mean over replicates");
}

}  // namespace

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kSampleSize: return "SampleSize";
    case SweepAxis::kDimension: return "Dimension";
    case SweepAxis::kDisplacement: return "Displacement";
    case SweepAxis::kProjections: return "Projections";
    case SweepAxis::kNoiseLevel: return "NoiseLevel";
  }
  return "?";
}

bool Scenario::same_distribution() const {
  if (kind == Kind::kSameGaussian) return true;
  if (kind == Kind::kGaussianPair) {
    return mean1 == mean2 && scale1 == scale2;
  }
  return false;
}

std::string Scenario::describe() const {
  switch (kind) {
    case Kind::kSameGaussian:
      return fmt::format("two iid sets from N({} 1_d, {}^2 I), d={}", mean1,
                         scale1, dim);
    case Kind::kGaussianPair:
      return fmt::format(
          "N({} 1_d, {}^2 I) vs N({} 1_d, {}^2 I), d={}", mean1, scale1,
          mean2, scale2, dim);
    case Kind::kCsvPair:
      return fmt::format("csv pair: '{}' vs '{}'", csv1.string(),
                         csv2.string());
  }
  return "?";
}

SweepResult run_sample_complexity(const SweepPlan& plan) {
  require_axis(plan, SweepAxis::kSampleSize, "run_sample_complexity");
  validate_plan_common(plan);
  if (!plan.scenario.synthetic() || !plan.scenario.same_distribution()) {
    throw InvalidArgument(
        "run_sample_complexity: scenario must draw both sets from the same "
        "synthetic distribution");
  }
  const std::vector<Eigen::Index> ns = integral_grid(plan.grid, 2, "sample size");
  if (ns.size() < 3) {
    throw InvalidArgument(
        "run_sample_complexity: slope fit needs at least 3 grid values");
  }
  const Eigen::Index d = plan.scenario.dim;
  const std::size_t nspecs = plan.specs.size();
  const std::int64_t cells =
      static_cast<std::int64_t>(ns.size()) * plan.replicates;

  SweepResult result;
  result.rows.resize(static_cast<std::size_t>(cells) * nspecs);
  parallel_for(cells, plan.jobs, [&](std::int64_t cell) {
    const std::size_t gi =
        static_cast<std::size_t>(cell / plan.replicates);
    const int r = static_cast<int>(cell % plan.replicates);
    const auto [a, b] =
        draw_pair(plan.scenario,
                  scenario_stream(plan.cfg.seed, r).child(
                      static_cast<std::uint64_t>(gi)),
                  ns[gi], d);
    SmoothedSliceConfig cfg = plan.cfg;
    cfg.seed = replicate_seed(plan.cfg.seed, r);
    for (std::size_t s = 0; s < nspecs; ++s) {
      cfg.spec = plan.specs[s];
      SweepRow row = base_row(cfg.spec, cfg, ns[gi], d, plan.axis,
                              static_cast<double>(ns[gi]), r);
      estimate_into_row(row, a, b, cfg, plan.record_timings);
      result.rows[static_cast<std::size_t>(cell) * nspecs + s] =
          std::move(row);
    }
  });

  push_common_metadata(result, plan);
  result.metadata.emplace_back(
      "error_definition",
      "estimate between iid same-distribution samples; population value 0");
  result.metadata.emplace_back("slope_scale",
                               "distance: raw log-log slope of the mean D^p "
                               "estimate divided by p");
  for (std::size_t s = 0; s < nspecs; ++s) {
    const std::string name = to_string(plan.specs[s].kind);
    const auto means = mean_per_grid_value(result, name, plan.grid,
                                           to_string(plan.axis));
    const auto [raw_slope, r2] = fit_or_degenerate(plan.grid, means);
    const double slope = raw_slope / plan.specs[s].p;
    result.slopes.push_back({name, slope, r2});
    if (s == 0) {
      result.metadata.emplace_back("slope", format_double(slope));
      result.metadata.emplace_back("slope_r2", format_double(r2));
    }
    result.metadata.emplace_back("slope_" + name, format_double(slope));
    result.metadata.emplace_back("slope_r2_" + name, format_double(r2));
  }
  return result;
}

SweepResult run_dimension_sweep(const SweepPlan& plan) {
  require_axis(plan, SweepAxis::kDimension, "run_dimension_sweep");
  validate_plan_common(plan);
  if (!plan.scenario.synthetic() || !plan.scenario.same_distribution()) {
    throw InvalidArgument(
        "run_dimension_sweep: scenario must draw both sets from the same "
        "synthetic distribution");
  }
  const std::vector<Eigen::Index> dims = integral_grid(plan.grid, 1, "dimension");
  const std::vector<Eigen::Index> ns =
      integral_grid(plan.inner_sample_grid, 2, "inner sample size");
  if (ns.size() < 3) {
    throw InvalidArgument(
        "run_dimension_sweep: slope fit needs at least 3 inner sample sizes");
  }
  const std::size_t nspecs = plan.specs.size();
  const std::int64_t cells = static_cast<std::int64_t>(dims.size()) *
                             static_cast<std::int64_t>(ns.size()) *
                             plan.replicates;

  SweepResult result;
  result.rows.resize(static_cast<std::size_t>(cells) * nspecs);
  parallel_for(cells, plan.jobs, [&](std::int64_t cell) {
    const std::size_t di = static_cast<std::size_t>(
        cell / (static_cast<std::int64_t>(ns.size()) * plan.replicates));
    const std::int64_t rem =
        cell % (static_cast<std::int64_t>(ns.size()) * plan.replicates);
    const std::size_t nj = static_cast<std::size_t>(rem / plan.replicates);
    const int r = static_cast<int>(rem % plan.replicates);
    const auto [a, b] = draw_pair(
        plan.scenario,
        scenario_stream(plan.cfg.seed, r)
            .child(static_cast<std::uint64_t>(di))
            .child(static_cast<std::uint64_t>(nj)),
        ns[nj], dims[di]);
    SmoothedSliceConfig cfg = plan.cfg;
    cfg.seed = replicate_seed(plan.cfg.seed, r);
    for (std::size_t s = 0; s < nspecs; ++s) {
      cfg.spec = plan.specs[s];
      SweepRow row = base_row(cfg.spec, cfg, ns[nj], dims[di], plan.axis,
                              static_cast<double>(dims[di]), r);
      estimate_into_row(row, a, b, cfg, plan.record_timings);
      result.rows[static_cast<std::size_t>(cell) * nspecs + s] =
          std::move(row);
    }
  });

  push_common_metadata(result, plan);
  result.metadata.emplace_back("inner_sample_grid",
                               format_grid(plan.inner_sample_grid));
  result.metadata.emplace_back("slope_scale",
                               "distance: raw log-log slope of the mean D^p "
                               "estimate divided by p");
  const std::vector<double> inner_values(plan.inner_sample_grid);
  double overall_gap = 0.0;
  for (std::size_t s = 0; s < nspecs; ++s) {
    const std::string name = to_string(plan.specs[s].kind);
    std::vector<double> per_dim_slopes;
    for (std::size_t di = 0; di < dims.size(); ++di) {
      // Means restricted to this dimension's rows.
      std::vector<double> sums(inner_values.size(), 0.0);
      std::vector<long> counts(inner_values.size(), 0);
      for (const auto& row : result.rows) {
        if (row.divergence != name || !row.error.empty()) continue;
        if (row.dim != dims[di]) continue;
        for (std::size_t nj = 0; nj < ns.size(); ++nj) {
          if (row.samples == ns[nj]) {
            sums[nj] += row.estimate;
            ++counts[nj];
            break;
          }
        }
      }
      std::vector<double> means(inner_values.size());
      for (std::size_t nj = 0; nj < inner_values.size(); ++nj) {
        if (counts[nj] == 0) {
          throw Error(fmt::format(
              "sweep: no successful replicate at d={}, n={}", dims[di],
              ns[nj]));
        }
        means[nj] = sums[nj] / static_cast<double>(counts[nj]);
      }
      const auto [raw_slope, r2] = fit_or_degenerate(inner_values, means);
      const double slope = raw_slope / plan.specs[s].p;
      per_dim_slopes.push_back(slope);
      const std::string group = fmt::format("{}/d={}", name, dims[di]);
      result.slopes.push_back({group, slope, r2});
      result.metadata.emplace_back("slope_" + group, format_double(slope));
      result.metadata.emplace_back("slope_r2_" + group, format_double(r2));
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < per_dim_slopes.size(); ++i) {
      for (std::size_t j = i + 1; j < per_dim_slopes.size(); ++j) {
        gap = std::max(gap, std::abs(per_dim_slopes[i] - per_dim_slopes[j]));
      }
    }
    overall_gap = std::max(overall_gap, gap);
    result.metadata.emplace_back("slope_gap_" + name, format_double(gap));
  }
  result.metadata.emplace_back("max_slope_gap", format_double(overall_gap));
  return result;
}

SweepResult run_displacement(const SweepPlan& plan) {
  require_axis(plan, SweepAxis::kDisplacement, "run_displacement");
  validate_plan_common(plan);
  if (!plan.scenario.synthetic()) {
    throw InvalidArgument("run_displacement: scenario must be synthetic");
  }
  const Eigen::Index n = plan.sample_size;
  const Eigen::Index d = plan.scenario.dim;
  if (n < 1) throw InvalidArgument("run_displacement: sample size must be >= 1");
  const std::size_t nspecs = plan.specs.size();

  // One fixed set and one moving base per replicate; the moving set is the
  // base translated by s * 1_d, so the whole grid shares draws (common
  // random numbers).
  std::vector<SampleSet> fixed(static_cast<std::size_t>(plan.replicates));
  std::vector<SampleSet> moving_base(static_cast<std::size_t>(plan.replicates));
  for (int r = 0; r < plan.replicates; ++r) {
    const RngStream stream = scenario_stream(plan.cfg.seed, r);
    fixed[static_cast<std::size_t>(r)] =
        gen_gaussian_isotropic(stream.child(kFirstSideLabel), n, d,
                               plan.scenario.mean1, plan.scenario.scale1,
                               kFirstSideLabel);
    moving_base[static_cast<std::size_t>(r)] =
        gen_gaussian_isotropic(stream.child(kSecondSideLabel), n, d, 0.0,
                               plan.scenario.scale2, kSecondSideLabel);
  }

  const std::int64_t cells =
      static_cast<std::int64_t>(plan.grid.size()) * plan.replicates;
  SweepResult result;
  result.rows.resize(static_cast<std::size_t>(cells) * nspecs);
  parallel_for(cells, plan.jobs, [&](std::int64_t cell) {
    const std::size_t gi = static_cast<std::size_t>(cell / plan.replicates);
    const int r = static_cast<int>(cell % plan.replicates);
    const double s_value = plan.grid[gi];
    SampleSet moving = moving_base[static_cast<std::size_t>(r)];
    moving.points.array() += s_value;
    SmoothedSliceConfig cfg = plan.cfg;
    cfg.seed = replicate_seed(plan.cfg.seed, r);
    for (std::size_t s = 0; s < nspecs; ++s) {
      cfg.spec = plan.specs[s];
      SweepRow row = base_row(cfg.spec, cfg, n, d, plan.axis, s_value, r);
      estimate_into_row(row, fixed[static_cast<std::size_t>(r)], moving, cfg,
                        plan.record_timings);
      result.rows[static_cast<std::size_t>(cell) * nspecs + s] =
          std::move(row);
    }
  });

  push_common_metadata(result, plan);
  result.metadata.emplace_back("fixed_mean", format_double(plan.scenario.mean1));
  for (std::size_t s = 0; s < nspecs; ++s) {
    const std::string name = to_string(plan.specs[s].kind);
    const auto means = mean_per_grid_value(result, name, plan.grid,
                                           to_string(plan.axis));
    const std::size_t arg = static_cast<std::size_t>(
        std::min_element(means.begin(), means.end()) - means.begin());
    result.metadata.emplace_back("argmin_" + name,
                                 format_double(plan.grid[arg]));
  }
  return result;
}

SweepResult run_projection_complexity(const SweepPlan& plan) {
  require_axis(plan, SweepAxis::kProjections, "run_projection_complexity");
  validate_plan_common(plan);
  const std::vector<Eigen::Index> ls =
      integral_grid(plan.grid, 1, "projection count");
  if (plan.projection_reference < 2) {
    throw InvalidArgument(
        "run_projection_complexity: reference projection count must be >= 2");
  }
  for (const Eigen::Index l : ls) {
    if (l == plan.projection_reference) {
      throw InvalidArgument(fmt::format(
          "run_projection_complexity: grid must not contain the reference "
          "projection count {}", plan.projection_reference));
    }
    if (l > plan.projection_reference) {
      throw InvalidArgument(
          "run_projection_complexity: grid values must stay below the "
          "reference projection count");
    }
  }
  if (ls.size() < 3) {
    throw InvalidArgument(
        "run_projection_complexity: slope fit needs at least 3 grid values");
  }

  // CSV scenarios are loaded once and reused; synthetic pairs are drawn per
  // replicate.
  SampleSet csv_a;
  SampleSet csv_b;
  if (!plan.scenario.synthetic()) {
    csv_a = load_csv(plan.scenario.csv1, kFirstSideLabel);
    csv_b = load_csv(plan.scenario.csv2, kSecondSideLabel);
    if (csv_a.dim() != csv_b.dim()) {
      throw InvalidArgument(fmt::format(
          "run_projection_complexity: csv dimensions differ ({} vs {})",
          csv_a.dim(), csv_b.dim()));
    }
  }

  const std::size_t nspecs = plan.specs.size();
  const std::size_t reps = static_cast<std::size_t>(plan.replicates);
  SweepResult result;
  result.rows.resize(ls.size() * reps * nspecs);
  parallel_for(plan.replicates, plan.jobs, [&](std::int64_t rep) {
    const int r = static_cast<int>(rep);
    SampleSet a;
    SampleSet b;
    if (plan.scenario.synthetic()) {
      std::tie(a, b) = draw_pair(plan.scenario,
                                 scenario_stream(plan.cfg.seed, r),
                                 plan.sample_size, plan.scenario.dim);
    } else {
      a = csv_a;
      b = csv_b;
    }
    SmoothedSliceConfig cfg = plan.cfg;
    cfg.seed = replicate_seed(plan.cfg.seed, r);
    for (std::size_t s = 0; s < nspecs; ++s) {
      cfg.spec = plan.specs[s];
      cfg.projections = plan.projection_reference;
      const auto start = std::chrono::steady_clock::now();
      EstimateReport reference;
      std::string error;
      try {
        reference = estimate_gssd(a, b, cfg, 1);
      } catch (const Error& e) {
        error = e.what();
      }
      const double wall =
          plan.record_timings ? elapsed_ms(start) : 0.0;
      // Prefix means over the same per-direction values reproduce the
      // estimates a standalone run at L directions would give.
      double running_sum = 0.0;
      Eigen::Index consumed = 0;
      for (std::size_t li = 0; li < ls.size(); ++li) {
        SmoothedSliceConfig row_cfg = cfg;
        row_cfg.projections = ls[li];
        SweepRow row = base_row(cfg.spec, row_cfg, a.size(), a.dim(),
                                plan.axis, static_cast<double>(ls[li]), r);
        row.wall_time_ms = wall;
        if (!error.empty()) {
          row.error = error;
        } else {
          const Eigen::Index l_count = ls[li];
          for (; consumed < l_count; ++consumed) {
            running_sum += reference.per_projection[consumed];
          }
          const double prefix_mean =
              running_sum / static_cast<double>(l_count);
          row.estimate = std::abs(prefix_mean - reference.value);
          if (l_count >= 2) {
            const double var = estimate_variance_a2(
                reference.per_projection.head(l_count));
            row.std_error = std::sqrt(var / static_cast<double>(l_count));
          } else {
            row.std_error = 0.0;
          }
        }
        result.rows[(li * reps + static_cast<std::size_t>(r)) * nspecs + s] =
            std::move(row);
      }
    }
  });

  push_common_metadata(result, plan);
  result.metadata.emplace_back(
      "projection_reference", fmt::format("{}", plan.projection_reference));
  result.metadata.emplace_back(
      "error_definition",
      "absolute difference between the L-projection estimate and the "
      "reference-projection estimate of the same replicate");
  for (std::size_t s = 0; s < nspecs; ++s) {
    const std::string name = to_string(plan.specs[s].kind);
    const auto means = mean_per_grid_value(result, name, plan.grid,
                                           to_string(plan.axis));
    const auto [slope, r2] = fit_or_degenerate(plan.grid, means);
    result.slopes.push_back({name, slope, r2});
    if (s == 0) {
      result.metadata.emplace_back("slope", format_double(slope));
      result.metadata.emplace_back("slope_r2", format_double(r2));
    }
    result.metadata.emplace_back("slope_" + name, format_double(slope));
    result.metadata.emplace_back("slope_r2_" + name, format_double(r2));
  }
  return result;
}

SweepResult run_noise_sweep(const SweepPlan& plan) {
  require_axis(plan, SweepAxis::kNoiseLevel, "run_noise_sweep");
  validate_plan_common(plan);
  if (!plan.scenario.synthetic()) {
    throw InvalidArgument("run_noise_sweep: scenario must be synthetic");
  }
  if (plan.grid.front() < 0.0) {
    throw InvalidArgument("run_noise_sweep: noise levels must be >= 0");
  }
  const std::vector<Eigen::Index> ns =
      integral_grid(plan.inner_sample_grid, 2, "inner sample size");
  const Eigen::Index d = plan.scenario.dim;
  const std::size_t nspecs = plan.specs.size();
  const std::int64_t cells = static_cast<std::int64_t>(plan.grid.size()) *
                             static_cast<std::int64_t>(ns.size()) *
                             plan.replicates;

  SweepResult result;
  result.rows.resize(static_cast<std::size_t>(cells) * nspecs);
  parallel_for(cells, plan.jobs, [&](std::int64_t cell) {
    const std::size_t si = static_cast<std::size_t>(
        cell / (static_cast<std::int64_t>(ns.size()) * plan.replicates));
    const std::int64_t rem =
        cell % (static_cast<std::int64_t>(ns.size()) * plan.replicates);
    const std::size_t nj = static_cast<std::size_t>(rem / plan.replicates);
    const int r = static_cast<int>(rem % plan.replicates);
    // The scenario stream omits sigma, so every noise level sees the same
    // draws; sigma only rescales the shared noise stream inside the
    // estimator.
    const auto [a, b] = draw_pair(
        plan.scenario,
        scenario_stream(plan.cfg.seed, r).child(
            static_cast<std::uint64_t>(nj)),
        ns[nj], d);
    SmoothedSliceConfig cfg = plan.cfg;
    cfg.seed = replicate_seed(plan.cfg.seed, r);
    cfg.sigma = plan.grid[si];
    for (std::size_t s = 0; s < nspecs; ++s) {
      cfg.spec = plan.specs[s];
      SweepRow row = base_row(cfg.spec, cfg, ns[nj], d, plan.axis,
                              plan.grid[si], r);
      estimate_into_row(row, a, b, cfg, plan.record_timings);
      result.rows[static_cast<std::size_t>(cell) * nspecs + s] =
          std::move(row);
    }
  });

  push_common_metadata(result, plan);
  result.metadata.emplace_back("inner_sample_grid",
                               format_grid(plan.inner_sample_grid));
  if (plan.scenario.synthetic()) {
    const Eigen::VectorXd m1 =
        Eigen::VectorXd::Constant(d, plan.scenario.mean1);
    const Eigen::VectorXd m2 = Eigen::VectorXd::Constant(
        d, plan.scenario.kind == Scenario::Kind::kSameGaussian
               ? plan.scenario.mean1
               : plan.scenario.mean2);
    const double s2 = plan.scenario.kind == Scenario::Kind::kSameGaussian
                          ? plan.scenario.scale1
                          : plan.scenario.scale2;
    for (double sigma : plan.grid) {
      const double oracle =
          analytic_gsswd_gaussian(m1, plan.scenario.scale1, m2, s2, sigma);
      result.metadata.emplace_back(
          fmt::format("analytic_gsswd2_sigma_{}", format_double(sigma)),
          format_double(oracle));
    }
  }
  return result;
}

std::pair<double, double> fit_loglog_slope(std::span<const double> xs,
                                           std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw InvalidArgument("fit_loglog_slope: size mismatch");
  }
  if (xs.size() < 3) {
    throw InvalidArgument("fit_loglog_slope: needs at least 3 points");
  }
  const std::size_t n = xs.size();
  std::vector<double> lx(n);
  std::vector<double> ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw InvalidArgument("fit_loglog_slope: entries must be positive");
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) {
    throw InvalidArgument("fit_loglog_slope: x values must be distinct");
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = intercept + slope * lx[i];
    ss_res += (ly[i] - fit) * (ly[i] - fit);
    ss_tot += (ly[i] - my) * (ly[i] - my);
  }
  const double r2 = ss_tot <= 1e-30 ? 1.0 : 1.0 - ss_res / ss_tot;
  return {slope, r2};
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += "\"";
  return out;
}

void atomic_write(const std::filesystem::path& target,
                  const std::string& content) {
  std::filesystem::path tmp = target;
  tmp += fmt::format(".tmp{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(fmt::format("cannot write '{}'", target.string()));
    }
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(fmt::format("failed while writing '{}'", target.string()));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(fmt::format("cannot move output into place at '{}'",
                            target.string()));
  }
}

}  // namespace

std::string to_csv(const SweepResult& result) {
  std::string out =
      "divergence,p,sigma,L,n,d,axis,axis_value,replicate,estimate,stderr,"
      "wall_time_ms,error\n";
  for (const auto& row : result.rows) {
    const bool ok = row.error.empty();
    out += fmt::format(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}\n", row.divergence,
        row.p, row.sigma, row.projections, row.samples, row.dim, row.axis,
        row.axis_value, row.replicate,
        ok ? fmt::format("{}", row.estimate) : std::string(),
        ok ? fmt::format("{}", row.std_error) : std::string(),
        row.wall_time_ms, csv_escape(row.error));
  }
  return out;
}

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension();
  p += ".meta.json";
  return p;
}

void check_output_writable(const std::filesystem::path& path) {
  std::filesystem::path probe = path;
  probe += fmt::format(".probe{}", ::getpid());
  std::ofstream out(probe, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(fmt::format("output path '{}' is not writable",
                            path.string()));
  }
  out.close();
  std::error_code ec;
  std::filesystem::remove(probe, ec);
}

void write_sweep_outputs(const SweepResult& result,
                         const std::filesystem::path& csv_path) {
  nlohmann::ordered_json meta;
  for (const auto& [key, value] : result.metadata) meta[key] = value;
  atomic_write(csv_path, to_csv(result));
  atomic_write(metadata_path(csv_path), meta.dump(2) + "\n");
}

}  // namespace gssd
