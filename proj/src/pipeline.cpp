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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <stdexcept>

#include "jrsopt/pipeline.hpp"
#include "jrsopt/rng.hpp"

namespace jrsopt::pipe {

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

/// Average precision of one class: rank by score, mean the precision at
/// each true hit. Deterministic tie-break by original position.
double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& truth) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] > scores[b];
  });
  long positives = std::count(truth.begin(), truth.end(), 1);
  if (positives == 0) throw std::invalid_argument("class absent from the set");
  double hits = 0.0, sum_precision = 0.0;
  for (size_t rank = 0; rank < order.size(); ++rank) {
    if (truth[order[rank]] != 1) continue;
    hits += 1.0;
    sum_precision += hits / static_cast<double>(rank + 1);
  }
  return sum_precision / static_cast<double>(positives);
}

}  // namespace

scen::ProblemInstance draw_instance(const InstancePool& pool, int ev_count,
                                    int scenario_count, std::uint64_t seed) {
  Rng root(seed);
  auto scenarios = scen::make_scenarios(pool.solar, pool.gm.pv_units,
                                        scenario_count, root.fork("solar").next());
  auto loads = scen::sample_load(pool.gm.dn, pool.load_shape, pool.timesteps,
                                 root.fork("load").next());
  auto schedule = scen::sample_schedules(pool.tn, pool.schedule_template,
                                         ev_count, pool.timesteps,
                                         root.fork("jobs").next());
  auto congestion = scen::build_congestion_profile(pool.congestion, pool.timesteps,
                                                   root.fork("congestion").next());
  auto fleet = scen::uniform_fleet(ev_count, pool.ev, pool.loss_fraction,
                                   pool.p_move_kw);
  return scen::assemble_instance(pool.tn, pool.gm, std::move(fleet), pool.costs,
                                 std::move(scenarios), std::move(loads),
                                 std::move(schedule), std::move(congestion),
                                 pool.timesteps);
}

std::uint64_t sample_seed(std::uint64_t plan_seed, int ev_count, int index) {
  return Rng(plan_seed)
      .fork("sample")
      .fork(std::to_string(ev_count) + ":" + std::to_string(index))
      .next();
}

void DatasetConfig::validate() const {
  if (blocks.empty()) throw std::invalid_argument("dataset plan is empty");
  if (e_max <= 0) throw std::invalid_argument("padding capacity must be positive");
  for (const auto& b : blocks) {
    if (b.ev_count <= 0 || b.samples <= 0)
      throw std::invalid_argument("blocks need positive EV count and samples");
    if (b.ev_count > e_max)
      throw std::invalid_argument("EV count exceeds the padding capacity");
  }
}

GenerateResult generate_labelled_dataset(const InstancePool& pool,
                                         const DatasetConfig& cfg,
                                         mip::MilpBackend& backend) {
  cfg.validate();
  GenerateResult out;

  bool header_set = false;
  for (const auto& block : cfg.blocks) {
    for (int i = 0; i < block.samples; ++i) {
      std::uint64_t seed_i = sample_seed(cfg.seed, block.ev_count, i);
      auto inst = draw_instance(pool, block.ev_count, 1, seed_i);
      auto built = mip::build_model(inst, 0);

      if (!header_set) {
        out.dataset.e_max = cfg.e_max;
        out.dataset.d_ev = built.index.ev_stride();
        out.dataset.timesteps = pool.timesteps;
        out.dataset.channels =
            1 + 2 * static_cast<int>(pool.gm.dn.buses.size()) + cfg.e_max;
        header_set = true;
      }

      auto sol = backend.solve(built.model, cfg.labelling);
      LabelAttempt attempt;
      attempt.ev_count = block.ev_count;
      attempt.seed = seed_i;
      attempt.status = sol.status;
      attempt.solve_seconds = sol.solve_seconds;
      attempt.kept = mip::has_values(sol.status);
      out.log.push_back(attempt);
      if (!attempt.kept) {
        ++out.dropped;
        continue;
      }

      surr::Sample sample;
      sample.features =
          surr::encode_features(inst.scenarios.pv_max_kw[0], inst.load_p_kw,
                                inst.load_q_kvar, inst.schedule,
                                block.ev_count, cfg.e_max)
              .values;
      sample.labels = surr::extract_labels(sol, built.index, cfg.e_max);
      sample.e = block.ev_count;
      sample.solve_seconds = sol.solve_seconds;
      out.dataset.samples.push_back(std::move(sample));
    }
  }
  out.dataset.validate();
  return out;
}

std::pair<mip::Solution, AssistStats> infer_and_solve(
    const scen::ProblemInstance& inst, const surr::SurrogateModel& model,
    surr::Thresholds thresholds, mip::MilpBackend& backend,
    const mip::SolverParams& params, const RetryConfig& retry) {
  int evs = inst.fleet.size();
  if (evs > model.e_max)
    throw std::invalid_argument("fleet larger than the model's padding capacity");

  double wall_start = now_seconds();
  auto built = mip::build_model(inst);
  if (built.index.ev_stride() != model.d_ev)
    throw std::invalid_argument(
        "per-EV binary stride differs between instance and model");

  // One prediction per scenario; keep the stripped per-scenario vectors so
  // each retry only re-filters.
  int scenario_count = inst.scenarios.scenario_count();
  std::vector<Eigen::VectorXd> stripped;
  stripped.reserve(static_cast<size_t>(scenario_count));
  for (int sc = 0; sc < scenario_count; ++sc) {
    auto fm = surr::encode_features(inst.scenarios.pv_max_kw[sc], inst.load_p_kw,
                                    inst.load_q_kvar, inst.schedule, evs,
                                    model.e_max);
    stripped.push_back(
        surr::strip_padding(surr::predict(model, fm), evs, model.d_ev));
  }

  AssistStats stats;
  stats.final_thresholds = thresholds;
  long block = static_cast<long>(evs) * model.d_ev;
  mip::Solution solution;

  while (true) {
    mip::PartialAssignment fixes;
    for (int sc = 0; sc < scenario_count; ++sc)
      for (const auto& [local, value] :
           surr::filter_predictions(stripped[static_cast<size_t>(sc)], thresholds))
        fixes[static_cast<int>(sc * block) + local] = value;

    mip::fix_binaries(built.model, fixes);
    solution = backend.solve(built.model, params);
    mip::unfix_binaries(built.model);

    ++stats.solver_calls;
    stats.attempt_seconds += solution.solve_seconds;
    stats.fixed_count = static_cast<int>(fixes.size());
    stats.final_thresholds = thresholds;

    if (mip::has_values(solution.status)) {
      stats.assisted_feasible = true;
      break;
    }
    bool budget_left = retry.max_retries < 0 || stats.retries < retry.max_retries;
    if (thresholds.p1 < 1.0 && budget_left) {
      thresholds = surr::bump_threshold(thresholds);
      ++stats.retries;
      continue;
    }
    // saturated (or out of budget): one unassisted solve
    stats.used_fallback = true;
    solution = backend.solve(built.model, params);
    stats.fallback_seconds = solution.solve_seconds;
    break;
  }

  stats.wall_seconds = now_seconds() - wall_start;
  return {std::move(solution), stats};
}

PredictionMetrics evaluate_predictions(const surr::SurrogateModel& model,
                                       const surr::Dataset& labelled) {
  labelled.validate();
  if (labelled.e_max != model.e_max || labelled.d_ev != model.d_ev)
    throw std::invalid_argument("labelled set layout differs from the model");

  long correct0 = 0, total0 = 0, correct1 = 0, total1 = 0;
  std::vector<double> scores;
  std::vector<int> truth;
  for (const auto& s : labelled.samples) {
    auto probs = surr::predict(model, {s.features, s.e, model.e_max});
    long masked = static_cast<long>(s.e) * model.d_ev;
    for (long j = 0; j < masked; ++j) {
      int predicted = probs[j] >= 0.5 ? 1 : 0;
      if (s.labels[j] == 1.0) {
        ++total1;
        if (predicted == 1) ++correct1;
      } else {
        ++total0;
        if (predicted == 0) ++correct0;
      }
      scores.push_back(probs[j]);
      truth.push_back(s.labels[j] == 1.0 ? 1 : 0);
    }
  }
  if (total0 == 0 || total1 == 0)
    throw std::invalid_argument("evaluation needs both classes present");

  std::vector<double> inverted(scores.size());
  std::vector<int> negated(truth.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    inverted[i] = 1.0 - scores[i];
    negated[i] = 1 - truth[i];
  }
  PredictionMetrics m;
  m.acc0 = 100.0 * static_cast<double>(correct0) / static_cast<double>(total0);
  m.acc1 = 100.0 * static_cast<double>(correct1) / static_cast<double>(total1);
  m.map = 100.0 * 0.5 *
          (average_precision(scores, truth) +
           average_precision(inverted, negated));
  return m;
}

void compute_aggregates(BenchmarkReport& report) {
  if (report.rows.empty()) {
    report.r_mean = report.l_mean = report.feas = 0.0;
    return;
  }
  double r_sum = 0.0, l_sum = 0.0;
  long feasible = 0;
  for (const auto& row : report.rows) {
    r_sum += row.base_seconds > 0.0
                 ? 100.0 * (row.base_seconds - row.assisted_seconds) /
                       row.base_seconds
                 : 0.0;
    if (row.feasible) {
      ++feasible;
      l_sum += 100.0 * (row.assisted_objective - row.base_objective) /
               row.base_objective;
    }
  }
  report.r_mean = r_sum / static_cast<double>(report.rows.size());
  report.l_mean = feasible > 0 ? l_sum / static_cast<double>(feasible) : 0.0;
  report.feas =
      100.0 * static_cast<double>(feasible) / static_cast<double>(report.rows.size());
}

BenchmarkReport benchmark(const std::vector<scen::ProblemInstance>& tests,
                          const surr::SurrogateModel& model,
                          surr::Thresholds thresholds,
                          mip::MilpBackend& backend,
                          const mip::SolverParams& params) {
  BenchmarkReport report;
  report.thresholds = thresholds;
  for (const auto& inst : tests) {
    auto built = mip::build_model(inst);
    auto base = backend.solve(built.model, params);
    if (!mip::has_values(base.status))
      throw std::runtime_error("baseline solve failed; benchmark needs a "
                               "solvable test instance");

    auto [assisted, stats] = infer_and_solve(inst, model, thresholds, backend,
                                             params, RetryConfig{});
    BenchmarkRow row;
    row.base_seconds = base.solve_seconds;
    row.base_objective = base.objective;
    row.attempt_seconds = stats.attempt_seconds;
    row.feasible = stats.assisted_feasible;
    row.retries = stats.retries;
    row.fixed_count = stats.fixed_count;
    if (stats.assisted_feasible) {
      row.assisted_seconds = stats.attempt_seconds;
      row.assisted_objective = assisted.objective;
    } else {
      row.assisted_seconds = row.base_seconds;  // failed rows reduce nothing
      row.assisted_objective = std::numeric_limits<double>::quiet_NaN();
    }
    report.rows.push_back(row);
  }
  compute_aggregates(report);
  return report;
}

double estimate_labelling_time(
    const std::vector<std::pair<int, double>>& count_and_mean_seconds) {
  double seconds = 0.0;
  for (const auto& [count, mean] : count_and_mean_seconds)
    seconds += static_cast<double>(count) * mean;
  return seconds / 3600.0;
}

void save_benchmark_csv(const BenchmarkReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "base_seconds,assisted_seconds,attempt_seconds,base_objective,"
         "assisted_objective,feasible,retries,fixed_count\n";
  out.precision(12);
  for (const auto& row : report.rows)
    out << row.base_seconds << ',' << row.assisted_seconds << ','
        << row.attempt_seconds << ',' << row.base_objective << ','
        << row.assisted_objective << ',' << (row.feasible ? 1 : 0) << ','
        << row.retries << ',' << row.fixed_count << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

void save_benchmark_summary(const BenchmarkReport& report,
                            const std::string& path) {
  nlohmann::json j;
  j["schema"] = "jrsopt-benchmark-1";
  j["rows"] = report.rows.size();
  j["time_reduction_pct"] = report.r_mean;
  j["objective_drift_pct"] = report.l_mean;
  j["assisted_feasible_pct"] = report.feas;
  j["thresholds"] = {{"p0", report.thresholds.p0}, {"p1", report.thresholds.p1}};
  j["accuracy_zero_pct"] = report.metrics.acc0;
  j["accuracy_one_pct"] = report.metrics.acc1;
  j["mean_average_precision_pct"] = report.metrics.map;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1, '\t') << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace jrsopt::pipe
