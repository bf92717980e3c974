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
//
// Command-line harness around the smoothed-sliced divergence estimator:
// single estimates, metric-axiom checks and the sweep drivers.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "gssd/error.hpp"
#include "gssd/experiments.hpp"
#include "gssd/parallel.hpp"
#include "gssd/version.hpp"

namespace {

using gssd::DivergenceKind;
using gssd::DivergenceSpec;
using gssd::Scenario;
using gssd::SmoothedSliceConfig;
using gssd::SweepAxis;
using gssd::SweepPlan;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct DivergenceOpts {
  std::string kind = "wasserstein";
  double p = 2.0;
  double lambda = 0.1;
  double sinkhorn_tol = 1e-9;
  long sinkhorn_max_iter = 10000;
  double bandwidth = 0.0;  // 0 = mean-pairwise policy

  std::vector<DivergenceSpec> specs(bool allow_all) const {
    std::vector<std::string> names;
    if (kind == "all") {
      if (!allow_all) {
        throw gssd::InvalidArgument(
            "--kind all is only available for sweep subcommands");
      }
      names = {"wasserstein", "sinkhorn", "mmd"};
    } else {
      names = {kind};
    }
    std::vector<DivergenceSpec> out;
    for (const auto& name : names) {
      DivergenceSpec spec;
      spec.kind = gssd::divergence_kind_from_string(name);
      spec.p = p;
      spec.sinkhorn_lambda = lambda;
      spec.sinkhorn_tol = sinkhorn_tol;
      spec.sinkhorn_max_iter = sinkhorn_max_iter;
      if (bandwidth > 0.0) spec.mmd_bandwidth = bandwidth;
      spec.validate();
      out.push_back(spec);
    }
    return out;
  }
};

struct EstimatorOpts {
  double sigma = 3.0;
  long projections = 50;
  std::uint64_t seed = 0;
  int jobs = 0;  // 0 = available parallelism

  int resolved_jobs() const {
    return jobs > 0 ? jobs : gssd::available_parallelism();
  }
};

struct DataOpts {
  std::string csv1;
  std::string csv2;
  std::string scenario = "same-gaussian";
  long dim = 10;
  long samples = 500;
  double mean1 = 0.0;
  double mean2 = 0.0;
  double scale1 = 1.0;
  double scale2 = 1.0;
  bool shared_noise_key = false;

  bool has_csv() const { return !csv1.empty() || !csv2.empty(); }

  Scenario to_scenario() const {
    Scenario s;
    if (has_csv()) {
      if (csv1.empty() || csv2.empty()) {
        throw gssd::InvalidArgument("--csv1 and --csv2 must be given together");
      }
      s.kind = Scenario::Kind::kCsvPair;
      s.csv1 = csv1;
      s.csv2 = csv2;
      return s;
    }
    if (scenario == "same-gaussian") {
      s.kind = Scenario::Kind::kSameGaussian;
    } else if (scenario == "gaussian-pair") {
      s.kind = Scenario::Kind::kGaussianPair;
    } else {
      throw gssd::InvalidArgument(fmt::format(
          "unknown scenario '{}' (expected same-gaussian or gaussian-pair)",
          scenario));
    }
    s.dim = dim;
    s.mean1 = mean1;
    s.mean2 = mean2;
    s.scale1 = scale1;
    s.scale2 = scale2;
    return s;
  }
};

void add_divergence_options(CLI::App* cmd, DivergenceOpts& opts,
                            bool allow_all) {
  const std::string kinds = allow_all
                                ? "wasserstein, sinkhorn, mmd or all"
                                : "wasserstein, sinkhorn or mmd";
  cmd->add_option("--kind", opts.kind, "Base divergence (" + kinds + ")")
      ->capture_default_str();
  cmd->add_option("--p", opts.p, "Order p applied as a power to the base")
      ->capture_default_str();
  cmd->add_option("--lambda", opts.lambda,
                  "Sinkhorn entropic regularization")
      ->capture_default_str();
  cmd->add_option("--sinkhorn-tol", opts.sinkhorn_tol,
                  "Sinkhorn marginal-violation tolerance")
      ->capture_default_str();
  cmd->add_option("--sinkhorn-max-iter", opts.sinkhorn_max_iter,
                  "Sinkhorn iteration budget")
      ->capture_default_str();
  cmd->add_option("--bandwidth", opts.bandwidth,
                  "Fixed MMD kernel bandwidth (0 = mean pairwise distance)")
      ->capture_default_str();
}

void add_estimator_options(CLI::App* cmd, EstimatorOpts& opts) {
  cmd->add_option("--sigma", opts.sigma, "Gaussian smoothing level")
      ->capture_default_str();
  cmd->add_option("-L,--projections", opts.projections,
                  "Number of random projections")
      ->capture_default_str();
  cmd->add_option("--seed", opts.seed, "Master seed")
      ->envname("GSSD_SEED")
      ->capture_default_str();
  cmd->add_option("--jobs", opts.jobs,
                  "Worker threads (0 = all hardware threads); results do "
                  "not depend on this")
      ->capture_default_str();
}

void add_data_options(CLI::App* cmd, DataOpts& opts, bool synthetic_only) {
  if (!synthetic_only) {
    cmd->add_option("--csv1", opts.csv1, "First dataset (CSV)");
    cmd->add_option("--csv2", opts.csv2, "Second dataset (CSV)");
  }
  cmd->add_option("--scenario", opts.scenario,
                  "Synthetic scenario (same-gaussian or gaussian-pair)")
      ->capture_default_str();
  cmd->add_option("--dim", opts.dim, "Synthetic dimension d")
      ->capture_default_str();
  cmd->add_option("-n,--samples", opts.samples, "Samples per synthetic set")
      ->capture_default_str();
  cmd->add_option("--mean1", opts.mean1, "First mean (times 1_d)")
      ->capture_default_str();
  cmd->add_option("--mean2", opts.mean2, "Second mean (times 1_d)")
      ->capture_default_str();
  cmd->add_option("--scale1", opts.scale1, "First isotropic scale")
      ->capture_default_str();
  cmd->add_option("--scale2", opts.scale2, "Second isotropic scale")
      ->capture_default_str();
  cmd->add_flag("--shared-noise-key", opts.shared_noise_key,
                "Give both sets the same noise key (they then receive "
                "identical noise)");
}

void forbid_mixed_inputs(const CLI::App* cmd, const DataOpts& opts) {
  if (!opts.has_csv()) return;
  for (const char* name :
       {"--scenario", "--dim", "--samples", "--mean1", "--mean2", "--scale1",
        "--scale2"}) {
    if (cmd->count(name) > 0) {
      throw gssd::InvalidArgument(fmt::format(
          "CSV inputs and synthetic-scenario flags are mutually exclusive "
          "({} given alongside --csv1/--csv2)", name));
    }
  }
}

std::pair<gssd::SampleSet, gssd::SampleSet> resolve_pair(
    const DataOpts& data, const EstimatorOpts& est) {
  const std::uint64_t key1 = 1;
  const std::uint64_t key2 = data.shared_noise_key ? key1 : 2;
  if (data.has_csv()) {
    if (data.csv1.empty() || data.csv2.empty()) {
      throw gssd::InvalidArgument("--csv1 and --csv2 must be given together");
    }
    return {gssd::load_csv(data.csv1, key1), gssd::load_csv(data.csv2, key2)};
  }
  const Scenario scenario = data.to_scenario();
  const gssd::RngStream root(est.seed);
  const gssd::RngStream gen = root.child(12).child(0);
  gssd::SampleSet a = gssd::gen_gaussian_isotropic(
      gen.child(1), data.samples, scenario.dim, scenario.mean1,
      scenario.scale1, key1);
  const double mean2 = scenario.kind == Scenario::Kind::kSameGaussian
                           ? scenario.mean1
                           : scenario.mean2;
  const double scale2 = scenario.kind == Scenario::Kind::kSameGaussian
                            ? scenario.scale1
                            : scenario.scale2;
  gssd::SampleSet b = gssd::gen_gaussian_isotropic(
      gen.child(2), data.samples, scenario.dim, mean2, scale2, key2);
  return {std::move(a), std::move(b)};
}

std::vector<double> default_sample_grid(bool paper_scale) {
  std::vector<double> grid;
  for (long n = 64; n <= (paper_scale ? 16384 : 4096); n *= 2) {
    grid.push_back(static_cast<double>(n));
  }
  if (paper_scale) grid.push_back(25000.0);
  return grid;
}

// ---------------------------------------------------------------------------
// estimate

int run_estimate(const CLI::App* cmd, const DivergenceOpts& div,
                 const EstimatorOpts& est, const DataOpts& data) {
  forbid_mixed_inputs(cmd, data);
  const auto [a, b] = resolve_pair(data, est);
  SmoothedSliceConfig cfg;
  cfg.sigma = est.sigma;
  cfg.projections = est.projections;
  cfg.seed = est.seed;
  cfg.spec = div.specs(false).front();
  const gssd::EstimateReport report =
      gssd::estimate_gssd(a, b, cfg, est.resolved_jobs());
  fmt::print("estimate={} stderr={} L={} sigma={}\n", report.value,
             report.std_error, cfg.projections, cfg.sigma);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// metric-check

struct AxiomResult {
  std::string name;
  bool pass = false;
  double slack = 0.0;
};

int run_metric_check(const CLI::App* cmd, const DivergenceOpts& div,
                     const EstimatorOpts& est, const DataOpts& data,
                     const std::string& csv3, bool inject_negate) {
  forbid_mixed_inputs(cmd, data);
  gssd::SampleSet a;
  gssd::SampleSet b;
  gssd::SampleSet c;
  if (data.has_csv()) {
    a = gssd::load_csv(data.csv1, 1);
    b = gssd::load_csv(data.csv2, 2);
    if (!csv3.empty()) {
      c = gssd::load_csv(csv3, 3);
    } else {
      // Synthetic midpoint: row-wise average of the first min(n1, n2) rows.
      const Eigen::Index m = std::min(a.size(), b.size());
      c.points = (a.points.topRows(m) + b.points.topRows(m)) / 2.0;
      c.noise_key = 3;
    }
  } else {
    const Scenario scenario = data.to_scenario();
    const gssd::RngStream gen = gssd::RngStream(est.seed).child(12).child(0);
    const double mean2 = scenario.kind == Scenario::Kind::kSameGaussian
                             ? scenario.mean1
                             : scenario.mean2;
    const double scale2 = scenario.kind == Scenario::Kind::kSameGaussian
                              ? scenario.scale1
                              : scenario.scale2;
    a = gssd::gen_gaussian_isotropic(gen.child(1), data.samples, scenario.dim,
                                     scenario.mean1, scenario.scale1, 1);
    b = gssd::gen_gaussian_isotropic(gen.child(2), data.samples, scenario.dim,
                                     mean2, scale2, 2);
    c = gssd::gen_gaussian_isotropic(gen.child(3), data.samples, scenario.dim,
                                     (scenario.mean1 + mean2) / 2.0,
                                     (scenario.scale1 + scale2) / 2.0, 3);
  }

  SmoothedSliceConfig cfg;
  cfg.sigma = est.sigma;
  cfg.projections = est.projections;
  cfg.seed = est.seed;
  cfg.spec = div.specs(false).front();
  const int jobs = est.resolved_jobs();
  const double sign = inject_negate ? -1.0 : 1.0;
  const auto value = [&](const gssd::SampleSet& x, const gssd::SampleSet& y) {
    return sign * gssd::estimate_gssd(x, y, cfg, jobs).value;
  };

  const double d_ab = value(a, b);
  const double d_ba = value(b, a);
  const double d_aa = value(a, a);
  const double d_ac = value(a, c);
  const double d_cb = value(c, b);

  const bool sinkhorn = cfg.spec.kind == DivergenceKind::kSinkhorn;
  const double identity_tol = sinkhorn ? 10.0 * cfg.spec.sinkhorn_tol : 0.0;
  const double symmetry_tol =
      sinkhorn ? 100.0 * cfg.spec.sinkhorn_tol * (1.0 + std::abs(d_ab)) : 0.0;
  const double inv_p = 1.0 / cfg.spec.p;
  const double triangle_slack = std::pow(d_ac, inv_p) + std::pow(d_cb, inv_p) +
                                1e-9 - std::pow(d_ab, inv_p);

  std::vector<AxiomResult> axioms;
  axioms.push_back({"non-negativity",
                    d_ab >= 0.0 && d_ba >= 0.0 && d_ac >= 0.0 && d_cb >= 0.0,
                    std::min(std::min(d_ab, d_ba), std::min(d_ac, d_cb))});
  axioms.push_back({"symmetry", std::abs(d_ab - d_ba) <= symmetry_tol,
                    std::abs(d_ab - d_ba)});
  axioms.push_back({"self-identity", std::abs(d_aa) <= identity_tol,
                    std::abs(d_aa)});
  axioms.push_back({"triangle", triangle_slack >= 0.0, triangle_slack});

  bool all_pass = true;
  for (const auto& axiom : axioms) {
    fmt::print("{} {} (slack={:.3e})\n", axiom.pass ? "PASS" : "FAIL",
               axiom.name, axiom.slack);
    all_pass = all_pass && axiom.pass;
  }
  if (!all_pass) {
    for (const auto& axiom : axioms) {
      if (!axiom.pass) {
        fmt::print(stderr, "metric-check: {} violated (slack={:.6e})\n",
                   axiom.name, axiom.slack);
        break;
      }
    }
    return kExitRuntime;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweeps

struct SweepOpts {
  std::vector<double> grid;
  std::vector<double> inner_grid;
  int replicates = 20;
  long reference_projections = 10000;
  std::string output = "sweep.csv";
  bool paper_scale = false;
  bool timings = false;
};

void add_sweep_options(CLI::App* cmd, SweepOpts& opts,
                       const std::string& grid_help, bool inner,
                       bool reference) {
  cmd->add_option("--grid", opts.grid, grid_help)->delimiter(',');
  if (inner) {
    cmd->add_option("--inner-grid", opts.inner_grid,
                    "Inner sample-size grid (comma separated)")
        ->delimiter(',');
  }
  if (reference) {
    cmd->add_option("--lref", opts.reference_projections,
                    "Reference projection count")
        ->capture_default_str();
  }
  cmd->add_option("--reps", opts.replicates, "Replicates per grid point")
      ->capture_default_str();
  cmd->add_option("-o,--output", opts.output, "Output CSV path")
      ->capture_default_str();
  cmd->add_flag("--paper-scale", opts.paper_scale,
                "Use the full-size protocol grids");
  cmd->add_flag("--timings", opts.timings,
                "Record measured wall time per cell in the CSV (makes "
                "repeated runs differ byte-wise)");
}

SweepPlan make_plan(SweepAxis axis, const DivergenceOpts& div,
                    const EstimatorOpts& est, const DataOpts& data,
                    const SweepOpts& sweep) {
  SweepPlan plan;
  plan.axis = axis;
  plan.grid = sweep.grid;
  plan.replicates = sweep.replicates;
  plan.specs = div.specs(true);
  plan.cfg.sigma = est.sigma;
  plan.cfg.projections = est.projections;
  plan.cfg.seed = est.seed;
  plan.cfg.spec = plan.specs.front();
  plan.scenario = data.to_scenario();
  plan.sample_size = data.samples;
  plan.inner_sample_grid = sweep.inner_grid;
  plan.projection_reference = sweep.reference_projections;
  plan.jobs = est.resolved_jobs();
  plan.record_timings = sweep.timings;
  return plan;
}

int finish_sweep(const gssd::SweepResult& result, const SweepOpts& sweep) {
  gssd::write_sweep_outputs(result, sweep.output);
  fmt::print("wrote {}\n", sweep.output);
  fmt::print("wrote {}\n", gssd::metadata_path(sweep.output).string());
  for (const auto& fit : result.slopes) {
    fmt::print("slope[{}]={:.4f} r2={:.4f}\n", fit.group, fit.slope, fit.r2);
  }
  for (const auto& [key, value] : result.metadata) {
    if (key.rfind("argmin_", 0) == 0 || key.rfind("slope_gap_", 0) == 0 ||
        key == "max_slope_gap") {
      fmt::print("{}={}\n", key, value);
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{fmt::format(
      "gssd {} - Gaussian-smoothed sliced divergence estimates and sweeps",
      GSSD_VERSION_STRING)};
  app.require_subcommand(1);

  // estimate -----------------------------------------------------------
  auto* estimate_cmd = app.add_subcommand(
      "estimate", "Estimate the smoothed sliced divergence of two datasets");
  estimate_cmd->set_config("--config", "",
                           "Read key=value defaults from a file");
  DivergenceOpts est_div;
  EstimatorOpts est_est;
  DataOpts est_data;
  add_divergence_options(estimate_cmd, est_div, false);
  add_estimator_options(estimate_cmd, est_est);
  add_data_options(estimate_cmd, est_data, false);

  // metric-check --------------------------------------------------------
  auto* metric_cmd = app.add_subcommand(
      "metric-check",
      "Check non-negativity, symmetry, self-identity and the triangle "
      "inequality on three datasets");
  metric_cmd->set_config("--config", "", "Read key=value defaults from a file");
  DivergenceOpts met_div;
  EstimatorOpts met_est;
  DataOpts met_data;
  met_data.samples = 30;
  met_data.dim = 5;
  met_data.mean2 = 1.0;
  met_data.scenario = "gaussian-pair";
  std::string met_csv3;
  bool met_negate = false;
  add_divergence_options(metric_cmd, met_div, false);
  add_estimator_options(metric_cmd, met_est);
  add_data_options(metric_cmd, met_data, false);
  metric_cmd->add_option("--csv3", met_csv3,
                         "Third dataset (default: synthetic midpoint)");
  metric_cmd
      ->add_flag("--inject-negate", met_negate,
                 "Testing hook: negate divergence values")
      ->group("");

  // sweep subcommands ----------------------------------------------------
  struct SweepCommand {
    CLI::App* cmd = nullptr;
    SweepAxis axis = SweepAxis::kSampleSize;
    DivergenceOpts div;
    EstimatorOpts est;
    DataOpts data;
    SweepOpts sweep;
  };
  std::vector<std::unique_ptr<SweepCommand>> sweeps;

  // Per-command defaults are applied before the options are bound so that
  // --help reports them accurately.
  auto add_sweep = [&](const std::string& name, const std::string& help,
                       SweepAxis axis, const std::string& grid_help,
                       bool inner, bool reference, bool csv_inputs,
                       const std::function<void(SweepCommand&)>& defaults) {
    sweeps.push_back(std::make_unique<SweepCommand>());
    SweepCommand& sc = *sweeps.back();
    sc.axis = axis;
    defaults(sc);
    sc.cmd = app.add_subcommand(name, help);
    sc.cmd->set_config("--config", "", "Read key=value defaults from a file");
    add_divergence_options(sc.cmd, sc.div, true);
    add_estimator_options(sc.cmd, sc.est);
    add_data_options(sc.cmd, sc.data, !csv_inputs);
    add_sweep_options(sc.cmd, sc.sweep, grid_help, inner, reference);
  };

  add_sweep(
      "sweep-samples",
      "Divergence between iid same-distribution samples across sample sizes",
      SweepAxis::kSampleSize, "Sample-size grid (comma separated)", false,
      false, false, [](SweepCommand&) {});

  add_sweep("sweep-dim", "Sample-complexity slopes across dimensions",
            SweepAxis::kDimension, "Dimension grid (comma separated)", true,
            false, false,
            [](SweepCommand& sc) { sc.sweep.grid = {5, 20, 50}; });

  add_sweep("sweep-displacement",
            "Divergence against a Gaussian displaced across a mean grid",
            SweepAxis::kDisplacement, "Displacement grid (comma separated)",
            false, false, false, [](SweepCommand& sc) {
              sc.data.mean1 = 2.0;
              sc.data.scenario = "gaussian-pair";
              sc.data.dim = 50;
              sc.data.samples = 2000;
              sc.sweep.grid = {0, 0.5, 1, 1.5, 2, 2.5, 3, 3.5, 4};
            });

  add_sweep("sweep-projections",
            "Monte-Carlo projection error against a large-L reference",
            SweepAxis::kProjections, "Projection-count grid (comma separated)",
            false, true, true, [](SweepCommand& sc) {
              sc.data.dim = 50;
              sc.data.samples = 500;
              sc.sweep.grid = {10, 50, 250, 1250};
            });

  add_sweep("sweep-noise", "Sample-complexity curves across noise levels",
            SweepAxis::kNoiseLevel, "Noise-level grid (comma separated)", true,
            false, false, [](SweepCommand& sc) {
              sc.data.dim = 50;
              sc.sweep.grid = {0, 1, 3, 5, 15};
            });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (estimate_cmd->parsed()) {
      return run_estimate(estimate_cmd, est_div, est_est, est_data);
    }
    if (metric_cmd->parsed()) {
      return run_metric_check(metric_cmd, met_div, met_est, met_data,
                              met_csv3, met_negate);
    }
    for (auto& scp : sweeps) {
      SweepCommand& sc = *scp;
      if (!sc.cmd->parsed()) continue;
      forbid_mixed_inputs(sc.cmd, sc.data);
      if (sc.sweep.grid.empty() || (sc.sweep.paper_scale &&
                                    sc.cmd->count("--grid") == 0)) {
        if (sc.axis == SweepAxis::kSampleSize) {
          sc.sweep.grid = default_sample_grid(sc.sweep.paper_scale);
        } else if (sc.sweep.grid.empty()) {
          throw gssd::InvalidArgument("--grid is required");
        }
      }
      if (sc.axis == SweepAxis::kSampleSize && sc.sweep.paper_scale &&
          sc.cmd->count("--dim") == 0) {
        sc.data.dim = 50;
      }
      if ((sc.axis == SweepAxis::kDimension ||
           sc.axis == SweepAxis::kNoiseLevel) &&
          sc.sweep.inner_grid.empty()) {
        sc.sweep.inner_grid = default_sample_grid(sc.sweep.paper_scale);
      }
      // Fail on unwritable outputs before any computation.
      gssd::check_output_writable(sc.sweep.output);
      gssd::check_output_writable(gssd::metadata_path(sc.sweep.output));
      const SweepPlan plan =
          make_plan(sc.axis, sc.div, sc.est, sc.data, sc.sweep);
      gssd::SweepResult result;
      switch (sc.axis) {
        case SweepAxis::kSampleSize:
          result = gssd::run_sample_complexity(plan);
          break;
        case SweepAxis::kDimension:
          result = gssd::run_dimension_sweep(plan);
          break;
        case SweepAxis::kDisplacement:
          result = gssd::run_displacement(plan);
          break;
        case SweepAxis::kProjections:
          result = gssd::run_projection_complexity(plan);
          break;
        case SweepAxis::kNoiseLevel:
          result = gssd::run_noise_sweep(plan);
          break;
      }
      return finish_sweep(result, sc.sweep);
    }
    fmt::print(stderr, "no subcommand given\n");
    return kExitUsage;
  } catch (const gssd::InvalidArgument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUsage;
  } catch (const gssd::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
}
