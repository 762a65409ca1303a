// Copyright 2026 the jrsopt authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef JRSOPT_PIPELINE_HPP
#define JRSOPT_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jrsopt/mipcore.hpp"
#include "jrsopt/scenariogen.hpp"
#include "jrsopt/surrogate.hpp"

namespace jrsopt::pipe {

/// Everything that stays fixed across drawn samples: the two networks,
/// pricing, the statistical models the varying parts are sampled from.
struct InstancePool {
  topo::TransportNetwork tn;
  grid::GridModel gm;
  scen::EvParams ev;
  double loss_fraction = 0.05;
  double p_move_kw = 2.0;
  scen::CostParams costs;
  scen::SolarModel solar;
  Eigen::VectorXd load_shape;  // 24-point daily curve
  scen::ScheduleTemplate schedule_template;
  scen::CongestionConfig congestion;
  int timesteps = 0;
};

/// Draws solar scenarios, bus loads, job stops, and congestion for one
/// sample and assembles the instance. Deterministic in (pool, args, seed).
scen::ProblemInstance draw_instance(const InstancePool& pool, int ev_count,
                                    int scenario_count, std::uint64_t seed);

/// Seed of the i-th sample in an EV-count block. Shared by the instance
/// writer and the labeller so their artifacts describe the same draws.
std::uint64_t sample_seed(std::uint64_t plan_seed, int ev_count, int index);

/// One EV-count block of the dataset plan.
struct FleetBlock {
  int ev_count = 0;
  int samples = 0;
};

struct DatasetConfig {
  std::vector<FleetBlock> blocks;
  int e_max = 0;
  std::uint64_t seed = 0;
  mip::SolverParams labelling{0.001, 7200.0, 1, 0};  // 0.1% gap, 2 h cap

  void validate() const;
};

/// One attempted labelling solve, kept or dropped.
struct LabelAttempt {
  int ev_count = 0;
  std::uint64_t seed = 0;
  mip::SolveStatus status = mip::SolveStatus::backend_error;
  double solve_seconds = 0.0;
  bool kept = false;
};

struct GenerateResult {
  surr::Dataset dataset;
  std::vector<LabelAttempt> log;  // one entry per attempted sample
  int dropped = 0;
};

/// Draws deterministic (single-scenario) instances per the plan, solves each
/// with the labelling parameters, and keeps every sample whose status
/// carries values — a timeout with an incumbent still labels; an infeasible
/// or empty-handed solve is dropped and logged.
GenerateResult generate_labelled_dataset(const InstancePool& pool,
                                         const DatasetConfig& cfg,
                                         mip::MilpBackend& backend);

struct RetryConfig {
  /// Upper bound on re-optimizations after the first assisted attempt;
  /// negative means "bump until the fix-to-one bar reaches 1.0".
  int max_retries = -1;
};

struct AssistStats {
  int solver_calls = 0;    // assisted attempts, fallback excluded
  int retries = 0;         // assisted attempts beyond the first
  int fixed_count = 0;     // binaries fixed in the last assisted attempt
  bool assisted_feasible = false;  // success before any fallback
  bool used_fallback = false;
  double wall_seconds = 0.0;     // the whole loop, encode through final solve
  double attempt_seconds = 0.0;  // solver-reported seconds over assisted tries
  double fallback_seconds = 0.0;
  surr::Thresholds final_thresholds;
};

/// The assisted solve: per scenario, encode features, predict, strip the
/// padded EV blocks, and offset into that scenario's binary block; filter
/// with the thresholds; fix and solve. While the solver reports no usable
/// point, raise the fix-to-one bar by 0.1 and retry; once it is saturated
/// (or the retry budget is spent), fall back to one unassisted solve.
std::pair<mip::Solution, AssistStats> infer_and_solve(
    const scen::ProblemInstance& inst, const surr::SurrogateModel& model,
    surr::Thresholds thresholds, mip::MilpBackend& backend,
    const mip::SolverParams& params, const RetryConfig& retry = {});

struct PredictionMetrics {
  double acc0 = 0.0;  // % of true-zero bits predicted zero at 0.5
  double acc1 = 0.0;  // % of true-one bits predicted one at 0.5
  double map = 0.0;   // macro mean average precision, %
};

/// Scores the model on a labelled set, padded positions excluded.
/// Throws when a class never occurs.
PredictionMetrics evaluate_predictions(const surr::SurrogateModel& model,
                                       const surr::Dataset& labelled);

struct BenchmarkRow {
  double base_seconds = 0.0;
  double assisted_seconds = 0.0;  // := base_seconds when the path failed
  double attempt_seconds = 0.0;   // raw time spent on assisted attempts
  double base_objective = 0.0;
  double assisted_objective = 0.0;  // meaningful when feasible
  bool feasible = false;            // assisted path succeeded pre-fallback
  int retries = 0;
  int fixed_count = 0;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  double r_mean = 0.0;  // mean % time reduction, failed rows count as 0
  double l_mean = 0.0;  // mean % objective drift over feasible rows
  double feas = 0.0;    // % of rows where the assisted path succeeded
  surr::Thresholds thresholds;
  PredictionMetrics metrics;  // filled by the caller when labels exist
};

/// Recomputes r_mean / l_mean / feas from the rows (the audit property).
void compute_aggregates(BenchmarkReport& report);

/// Solves every instance twice — plain and assisted — under identical
/// solver parameters and accounts the times per the failed-row rule.
BenchmarkReport benchmark(const std::vector<scen::ProblemInstance>& tests,
                          const surr::SurrogateModel& model,
                          surr::Thresholds thresholds,
                          mip::MilpBackend& backend,
                          const mip::SolverParams& params);

/// Σ count·mean_seconds over configurations, in hours.
double estimate_labelling_time(
    const std::vector<std::pair<int, double>>& count_and_mean_seconds);

void save_benchmark_csv(const BenchmarkReport& report, const std::string& path);
void save_benchmark_summary(const BenchmarkReport& report,
                            const std::string& path);

}  // namespace jrsopt::pipe

#endif  // JRSOPT_PIPELINE_HPP
