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

#include <cmath>
#include <cstdio>
#include <doctest.h>
#include <fstream>
#include <json.hpp>

#include "jrsopt/pipeline.hpp"
#include "support.hpp"

using namespace jrsopt;
using testsup::make_micro_pool;
using testsup::MicroSpec;
using testsup::oracle_model;

namespace {

MicroSpec pool_spec() {
  MicroSpec spec;
  spec.timesteps = 6;
  return spec;
}

}  // namespace

TEST_CASE("drawn instances are deterministic in the seed") {
  auto pool = make_micro_pool(pool_spec());
  auto a = pipe::draw_instance(pool, 1, 2, 42);
  auto b = pipe::draw_instance(pool, 1, 2, 42);

  CHECK((a.load_p_kw - b.load_p_kw).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.load_q_kvar - b.load_q_kvar).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.schedule.stops.size() == b.schedule.stops.size());
  for (size_t i = 0; i < a.schedule.stops.size(); ++i) {
    CHECK(a.schedule.stops[i].ev == b.schedule.stops[i].ev);
    CHECK(a.schedule.stops[i].node == b.schedule.stops[i].node);
    CHECK(a.schedule.stops[i].timespan == b.schedule.stops[i].timespan);
  }
  REQUIRE(a.scenarios.scenario_count() == 2);
  for (int sc = 0; sc < 2; ++sc)
    CHECK((a.scenarios.pv_max_kw[static_cast<size_t>(sc)] -
           b.scenarios.pv_max_kw[static_cast<size_t>(sc)])
              .cwiseAbs()
              .size() ==
          (a.scenarios.pv_max_kw[static_cast<size_t>(sc)]).size());
  CHECK(a.congestion.congested == b.congestion.congested);

  auto c = pipe::draw_instance(pool, 1, 2, 43);
  CHECK((a.load_p_kw - c.load_p_kw).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("dataset generation labels a tiny plan end to end") {
  auto pool = make_micro_pool(pool_spec());
  pipe::DatasetConfig cfg;
  cfg.blocks = {{1, 2}};
  cfg.e_max = 2;
  cfg.seed = 7;
  cfg.labelling.mip_gap = 1e-6;
  cfg.labelling.time_limit_s = 120.0;

  auto result =
      pipe::generate_labelled_dataset(pool, cfg, testsup::shared_backend());
  CHECK(result.dropped == 0);
  REQUIRE(result.log.size() == 2);
  for (const auto& attempt : result.log) {
    CHECK(attempt.kept);
    CHECK(attempt.solve_seconds >= 0.0);
  }

  const auto& ds = result.dataset;
  REQUIRE(ds.samples.size() == 2);
  CHECK(ds.e_max == 2);
  CHECK(ds.timesteps == 6);
  CHECK(ds.channels == 1 + 2 * 2 + 2);  // solar + P/Q per bus + EV slots

  auto probe = pipe::draw_instance(pool, 1, 1, 1);
  mip::VariableIndex vx(probe, 1);
  CHECK(ds.d_ev == vx.ev_stride());

  int S = pool.timesteps - 1;
  for (const auto& s : ds.samples) {
    CHECK(s.e == 1);
    // padded label block zero
    CHECK(s.labels.tail(ds.d_ev).cwiseAbs().maxCoeff() == 0.0);
    // the routing block of the real EV picks exactly one arc per timespan
    for (int span = 0; span < S; ++span) {
      double chosen = 0.0;
      for (int a = 0; a < vx.arc_count(); ++a)
        chosen += s.labels[static_cast<long>(a) * S + span];
      CHECK(chosen == 1.0);
    }
  }
}

TEST_CASE("a dropped sample is logged, not silently skipped") {
  // an EV that cannot reach its stops: shrink the battery so far that any
  // movement is impossible but the schedule still demands one
  auto spec = pool_spec();
  spec.ev.e_min_kwh = 5.0;
  spec.ev.e_init_kwh = 5.0;
  spec.ev.e_max_kwh = 5.0;  // no slack: moving would dip below the floor
  auto pool = make_micro_pool(spec);
  pipe::DatasetConfig cfg;
  cfg.blocks = {{1, 1}};
  cfg.e_max = 1;
  cfg.seed = 3;
  cfg.labelling.time_limit_s = 120.0;

  auto result =
      pipe::generate_labelled_dataset(pool, cfg, testsup::shared_backend());
  CHECK(result.dropped == 1);
  CHECK(result.dataset.samples.empty());
  REQUIRE(result.log.size() == 1);
  CHECK_FALSE(result.log[0].kept);
  CHECK(result.log[0].status == mip::SolveStatus::infeasible);
}

TEST_CASE("the assisted loop reproduces the oracle optimum") {
  auto pool = make_micro_pool(pool_spec());
  auto inst = pipe::draw_instance(pool, 1, 1, 5);

  auto built = mip::build_model(inst);
  auto base = testsup::shared_backend().solve(built.model, testsup::exact_params());
  REQUIRE(base.status == mip::SolveStatus::optimal);

  auto labels = surr::extract_labels(base, built.index, 1);
  int channels = 1 + 2 * 2 + 1;
  auto oracle = oracle_model(labels, channels, pool.timesteps, 1,
                             built.index.ev_stride());

  auto [sol, stats] =
      pipe::infer_and_solve(inst, oracle, {0.99, 0.99}, testsup::shared_backend(),
                            testsup::exact_params());
  REQUIRE(mip::has_values(sol.status));
  CHECK(stats.assisted_feasible);
  CHECK_FALSE(stats.used_fallback);
  CHECK(stats.solver_calls == 1);
  CHECK(stats.retries == 0);
  CHECK(stats.fixed_count == built.index.ev_stride());  // every binary pinned
  CHECK(sol.objective ==
        doctest::Approx(base.objective).epsilon(1e-6));

  auto audit = mip::check_feasible(inst, sol);
  CHECK(audit.ok);
}

TEST_CASE("adversarial predictions exhaust retries and fall back") {
  auto pool = make_micro_pool(pool_spec());
  auto inst = pipe::draw_instance(pool, 1, 1, 5);

  auto built = mip::build_model(inst);
  auto base = testsup::shared_backend().solve(built.model, testsup::exact_params());
  REQUIRE(base.status == mip::SolveStatus::optimal);

  auto labels = surr::extract_labels(base, built.index, 1);
  int channels = 1 + 2 * 2 + 1;
  auto adversary = oracle_model(labels, channels, pool.timesteps, 1,
                                built.index.ev_stride(), /*invert=*/true);

  auto [sol, stats] =
      pipe::infer_and_solve(inst, adversary, {0.99, 0.42},
                            testsup::shared_backend(), testsup::exact_params());

  // the fallback still hands back the plain optimum
  REQUIRE(mip::has_values(sol.status));
  CHECK(sol.objective == doctest::Approx(base.objective).epsilon(1e-6));
  CHECK(stats.used_fallback);
  CHECK_FALSE(stats.assisted_feasible);
  CHECK(stats.final_thresholds.p1 == 1.0);

  // bound: ceil((1 - 0.42) / 0.1) = 6 bumps, so 7 assisted calls + fallback
  CHECK(stats.retries == 6);
  CHECK(stats.solver_calls == 7);
  CHECK(stats.wall_seconds > 0.0);

  // capping the budget shortens the loop
  auto [sol2, stats2] =
      pipe::infer_and_solve(inst, adversary, {0.99, 0.42},
                            testsup::shared_backend(), testsup::exact_params(),
                            pipe::RetryConfig{2});
  REQUIRE(mip::has_values(sol2.status));
  CHECK(stats2.retries == 2);
  CHECK(stats2.solver_calls == 3);
  CHECK(stats2.used_fallback);
}

TEST_CASE("multi-scenario assists pin every scenario block") {
  auto spec = pool_spec();
  spec.pv_capacity_kw = 20.0;
  auto pool = make_micro_pool(spec);
  auto inst = pipe::draw_instance(pool, 1, 5, 11);
  REQUIRE(inst.scenarios.scenario_count() == 5);

  // labels from the first scenario's deterministic solve
  auto det = mip::build_model(inst, 0);
  auto dsol = testsup::shared_backend().solve(det.model, testsup::exact_params());
  REQUIRE(dsol.status == mip::SolveStatus::optimal);
  auto labels = surr::extract_labels(dsol, det.index, 1);

  int channels = 1 + 2 * 2 + 1;
  auto oracle = oracle_model(labels, channels, pool.timesteps, 1,
                             det.index.ev_stride());

  auto [sol, stats] =
      pipe::infer_and_solve(inst, oracle, {0.99, 0.99}, testsup::shared_backend(),
                            testsup::exact_params());
  REQUIRE(mip::has_values(sol.status));
  CHECK(stats.assisted_feasible);
  CHECK(stats.fixed_count == 5 * det.index.ev_stride());

  // the concatenated assignment reached all five scenario blocks
  int d_ev = det.index.ev_stride();
  for (int sc = 0; sc < 5; ++sc)
    for (int j = 0; j < d_ev; ++j)
      CHECK(sol.values[static_cast<long>(sc) * d_ev + j] ==
            doctest::Approx(labels[j]).epsilon(1e-7));

  // pinned-everywhere is feasible but can only cost at least the optimum
  auto built = mip::build_model(inst);
  auto best = testsup::shared_backend().solve(built.model, testsup::exact_params());
  REQUIRE(best.status == mip::SolveStatus::optimal);
  CHECK(sol.objective >= best.objective - 1e-6);
}

TEST_CASE("prediction metrics hit their closed forms") {
  auto pool = make_micro_pool(pool_spec());
  pipe::DatasetConfig cfg;
  cfg.blocks = {{1, 1}};
  cfg.e_max = 1;
  cfg.seed = 9;
  cfg.labelling.mip_gap = 1e-6;
  auto gen = pipe::generate_labelled_dataset(pool, cfg, testsup::shared_backend());
  REQUIRE(gen.dataset.samples.size() == 1);
  auto& ds = gen.dataset;

  auto oracle = oracle_model(ds.samples[0].labels, ds.channels, ds.timesteps,
                             ds.e_max, ds.d_ev);
  auto m = pipe::evaluate_predictions(oracle, ds);
  CHECK(m.acc0 == 100.0);
  CHECK(m.acc1 == 100.0);
  CHECK(m.map == 100.0);

  // constant-zero predictor: perfect on zeros, blind on ones
  surr::LabelVector zeros = surr::LabelVector::Zero(ds.samples[0].labels.size());
  auto constant0 = oracle_model(zeros, ds.channels, ds.timesteps, ds.e_max,
                                ds.d_ev);
  auto z = pipe::evaluate_predictions(constant0, ds);
  CHECK(z.acc0 == 100.0);
  CHECK(z.acc1 == 0.0);

  // a single-class set cannot be scored per class
  auto allzero = ds;
  allzero.samples[0].labels.setZero();
  CHECK_THROWS(pipe::evaluate_predictions(oracle, allzero));
}

TEST_CASE("benchmark aggregates follow the stated formulas") {
  pipe::BenchmarkReport report;
  pipe::BenchmarkRow fast;
  fast.base_seconds = 100.0;
  fast.assisted_seconds = 10.0;
  fast.base_objective = 200.0;
  fast.assisted_objective = 201.0;
  fast.feasible = true;
  pipe::BenchmarkRow failed;
  failed.base_seconds = 50.0;
  failed.assisted_seconds = 50.0;  // failed rows inherit the baseline time
  failed.base_objective = 80.0;
  failed.feasible = false;
  report.rows = {fast, failed};

  pipe::compute_aggregates(report);
  CHECK(report.r_mean == doctest::Approx(45.0).epsilon(1e-12));
  CHECK(report.l_mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(report.feas == doctest::Approx(50.0).epsilon(1e-12));

  pipe::BenchmarkReport empty;
  pipe::compute_aggregates(empty);
  CHECK(empty.r_mean == 0.0);
  CHECK(empty.feas == 0.0);

  // identical times everywhere: no reduction
  pipe::BenchmarkReport flat;
  fast.assisted_seconds = fast.base_seconds;
  flat.rows = {fast};
  pipe::compute_aggregates(flat);
  CHECK(flat.r_mean == 0.0);
}

TEST_CASE("labelling time estimate matches hand arithmetic") {
  CHECK(pipe::estimate_labelling_time({{10, 60.0}}) ==
        doctest::Approx(600.0 / 3600.0).epsilon(1e-12));

  // one-model-with-padding vs one-model-per-fleet-size at a synthetic
  // mean of one hour per labelling solve
  std::vector<std::pair<int, double>> per_size;
  for (int i = 0; i < 81; ++i) per_size.push_back({400, 3600.0});
  double no_padding = pipe::estimate_labelling_time(per_size);
  double padding = pipe::estimate_labelling_time({{800, 3600.0}});
  CHECK(no_padding == doctest::Approx(32400.0).epsilon(1e-12));
  CHECK(padding == doctest::Approx(800.0).epsilon(1e-12));
  CHECK(no_padding / padding == doctest::Approx(40.5).epsilon(1e-12));
}

TEST_CASE("live benchmark rows stay self-consistent") {
  auto pool = make_micro_pool(pool_spec());
  std::vector<scen::ProblemInstance> tests;
  tests.push_back(pipe::draw_instance(pool, 1, 1, 21));
  tests.push_back(pipe::draw_instance(pool, 1, 1, 22));

  // model the first instance perfectly; the second shares the network and
  // schedule so the same pattern stays feasible
  auto built = mip::build_model(tests[0]);
  auto base = testsup::shared_backend().solve(built.model, testsup::exact_params());
  REQUIRE(base.status == mip::SolveStatus::optimal);
  auto labels = surr::extract_labels(base, built.index, 1);
  auto oracle = oracle_model(labels, 1 + 2 * 2 + 1, pool.timesteps, 1,
                             built.index.ev_stride());

  auto report = pipe::benchmark(tests, oracle, {0.99, 0.99},
                                testsup::shared_backend(), testsup::exact_params());
  REQUIRE(report.rows.size() == 2);
  CHECK(report.feas == 100.0);
  for (const auto& row : report.rows) {
    CHECK(row.feasible);
    CHECK(row.assisted_objective >= row.base_objective - 1e-6);
    CHECK(row.base_seconds > 0.0);
    CHECK(row.assisted_seconds == row.attempt_seconds);
  }

  // the audit property: aggregates recompute from rows bit-for-bit
  auto audit = report;
  audit.r_mean = audit.l_mean = audit.feas = -1.0;
  pipe::compute_aggregates(audit);
  CHECK(audit.r_mean == report.r_mean);
  CHECK(audit.l_mean == report.l_mean);
  CHECK(audit.feas == report.feas);

  // row CSV and summary JSON land on disk and parse back
  pipe::save_benchmark_csv(report, "bench_rows.csv");
  pipe::save_benchmark_summary(report, "bench_summary.json");
  std::ifstream csv("bench_rows.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 3);  // header + 2 rows
  std::ifstream sum("bench_summary.json");
  auto parsed = nlohmann::json::parse(sum);
  CHECK(parsed["rows"] == 2);
  CHECK(parsed["assisted_feasible_pct"] == 100.0);
  std::remove("bench_rows.csv");
  std::remove("bench_summary.json");
}
