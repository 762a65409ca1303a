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
//
// Release gate: nine end-to-end checks, one verdict line each, nonzero exit
// if any fails. Each check states its own tolerance and measured evidence.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "jrsopt/grid.hpp"
#include "jrsopt/mipcore.hpp"
#include "jrsopt/pipeline.hpp"
#include "jrsopt/rng.hpp"
#include "jrsopt/scenariogen.hpp"
#include "jrsopt/surrogate.hpp"
#include "jrsopt/topology.hpp"
#include "support.hpp"

using namespace jrsopt;
using testsup::MicroSpec;

namespace {

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

void verdict(int criterion, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::printf("criterion %d: %s - %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

template <typename F>
void guarded(int criterion, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    verdict(criterion, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream ss;
  ss.precision(prec);
  ss << v;
  return ss.str();
}

/// Solutions produced by criteria 1-2, re-audited by criterion 3.
struct SolvedCase {
  scen::ProblemInstance inst;
  mip::Solution sol;
};
std::vector<SolvedCase> g_solved;

/// Mean labelling seconds per fleet size recorded by criterion 6 and
/// re-priced by criterion 7.
std::vector<std::pair<int, double>> g_desk_means;  // (ev_count, mean seconds)

MicroSpec random_micro_spec(Rng& rng, bool for_enumeration) {
  MicroSpec spec;
  spec.nodes = for_enumeration ? (rng.uniform() < 0.5 ? 2 : 3)
                               : (rng.uniform() < 0.5 ? 2 : 3);
  spec.timesteps = for_enumeration ? rng.uniform_int(4, 6) : rng.uniform_int(4, 8);
  spec.evs = for_enumeration ? 1 : rng.uniform_int(1, 2);
  spec.scenario_count = for_enumeration ? 1 : rng.uniform_int(1, 2);
  spec.stations = spec.nodes == 3 && rng.uniform() < 0.5 ? 2 : 1;
  spec.pv_capacity_kw = rng.uniform() < 0.5 ? 0.0 : rng.uniform(10.0, 40.0);
  spec.congestion_mid = rng.uniform() < 0.3;
  spec.seed = rng.next();
  return spec;
}

// --- criterion 1: independent constraint audit on random micro instances ---
void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  auto& backend = testsup::shared_backend();
  auto params = testsup::exact_params();

  Rng rng(101);
  const int total = 50;
  int with_values = 0, audited_ok = 0;
  double worst = 0.0;
  for (int i = 0; i < total; ++i) {
    auto inst = testsup::make_micro(random_micro_spec(rng, false));
    auto built = mip::build_model(inst);
    auto sol = backend.solve(built.model, params);
    if (!mip::has_values(sol.status)) continue;
    ++with_values;
    auto report = mip::check_feasible(inst, sol, 1e-6);
    worst = std::max(worst, report.max_violation);
    if (report.ok) ++audited_ok;
    g_solved.push_back({std::move(inst), std::move(sol)});
  }
  const double elapsed = seconds_since(t0);
  const bool pass =
      with_values >= 45 && audited_ok == with_values && elapsed <= 300.0;
  verdict(1, pass,
          std::to_string(audited_ok) + "/" + std::to_string(with_values) +
              " solutions with values passed the independent constraint audit "
              "at relative tol 1e-6 over " +
              std::to_string(total) + " random micro instances (worst relative "
              "violation " + fmt(worst) + "), " + fmt(elapsed, 4) +
              " s (cap 300 s)");
}

// --- criterion 2: exhaustive enumeration equals the MIP optimum ------------
void criterion_2() {
  auto t0 = std::chrono::steady_clock::now();
  auto& backend = testsup::shared_backend();
  auto params = testsup::exact_params();

  Rng rng(202);
  const int total = 20;
  int matched = 0, solved = 0;
  double worst_rel = 0.0;
  long long pattern_count = 0;
  for (int i = 0; i < total; ++i) {
    auto inst = testsup::make_micro(random_micro_spec(rng, true));
    auto built = mip::build_model(inst);
    auto sol = backend.solve(built.model, params);
    auto enumd = testsup::enumerate_exact(inst, backend);
    pattern_count += enumd.patterns;
    if (!mip::has_values(sol.status) || !enumd.found) continue;
    ++solved;
    double rel = std::abs(sol.objective - enumd.objective) /
                 std::max(1.0, std::abs(enumd.objective));
    worst_rel = std::max(worst_rel, rel);
    if (rel <= 1e-6) ++matched;
    g_solved.push_back({std::move(inst), std::move(sol)});
  }
  const double elapsed = seconds_since(t0);
  const bool pass = solved == total && matched == solved && elapsed <= 600.0;
  verdict(2, pass,
          std::to_string(matched) + "/" + std::to_string(solved) +
              " MIP optima equal the exhaustive enumeration optimum within "
              "1e-6 relative (worst gap " + fmt(worst_rel) + ", " +
              std::to_string(pattern_count) + " priced patterns), " +
              fmt(elapsed, 4) + " s (cap 600 s)");
}

// --- criterion 3: battery telescoping on every stored solution -------------
void criterion_3() {
  double worst = 0.0;
  for (const auto& c : g_solved)
    worst = std::max(worst, testsup::telescope_gap(c.inst, c.sol));
  const bool pass = !g_solved.empty() && worst <= 1e-9;
  verdict(3, pass,
          "net battery change equals the accumulated charge/discharge/travel "
          "terms on all " + std::to_string(g_solved.size()) +
              " stored solutions (worst scaled gap " + fmt(worst) +
              ", bound 1e-9)");
}

// --- criterion 4: calibration identities and threshold filtering -----------
void criterion_4() {
  // Three labelled positions, one EV, d_ev = 3.
  std::vector<Eigen::VectorXd> probs(1);
  probs[0] = Eigen::Vector3d(0.8, 0.6, 0.1);
  std::vector<surr::LabelVector> labels(1);
  labels[0] = Eigen::Vector3d(1.0, 1.0, 0.0);
  auto th = surr::calibrate_from_predictions(probs, labels, {1}, 3);
  bool three_point = std::abs(th.p1 - 0.7) <= 1e-12 && std::abs(th.p0 - 0.9) <= 1e-12;

  probs[0] = Eigen::Vector3d(1.0, 1.0, 0.0);
  auto perfect = surr::calibrate_from_predictions(probs, labels, {1}, 3);
  bool perfect_ok = perfect.p1 == 1.0 && perfect.p0 == 1.0;

  Eigen::VectorXd two(2);
  two << 0.8, 0.3;
  auto fixed = surr::filter_predictions(two, {0.9958, 0.7164});
  bool filter_ok = fixed.size() == 1 && fixed.count(0) == 1 && fixed.at(0) == 1;

  verdict(4, three_point && perfect_ok && filter_ok,
          std::string("three-point calibration gave (p1, p0) = (") +
              fmt(th.p1, 10) + ", " + fmt(th.p0, 10) +
              ") vs (0.7, 0.9) within 1e-12; a perfect predictor gave exactly "
              "(1, 1); reference bars (0.9958, 0.7164) fixed 0.8 to one and "
              "left 0.3 free");
}

// --- criterion 5: filter monotonicity and retry termination ----------------
void criterion_5() {
  Rng rng(505);
  bool monotone = true;
  for (int trial = 0; trial < 60 && monotone; ++trial) {
    const int n = rng.uniform_int(5, 40);
    Eigen::VectorXd probs(n);
    for (int i = 0; i < n; ++i) probs[i] = rng.uniform();
    surr::Thresholds th{rng.uniform(), rng.uniform()};
    auto before = surr::filter_predictions(probs, th);
    auto after = surr::filter_predictions(probs, surr::bump_threshold(th));
    // The fixed-to-one set must shrink (or stay) under a 0.1 bump of p1.
    for (const auto& [idx, val] : after)
      if (val == 1 && (!before.count(idx) || before.at(idx) != 1)) {
        monotone = false;
        break;
      }
  }

  // An adversary saturated against the labels drives the retry loop to its
  // bound. Two terminal behaviours exist and both must stay inside the bound:
  // with a loose schedule the surviving fixed-to-zero bits only forbid the
  // old optimum, so the last bumped attempt succeeds; with the EV pinned to
  // one node all day, those same fixes contradict the schedule at every bump
  // and the loop must recover through the unassisted fallback.
  surr::Thresholds start{0.9, 0.42};
  const int bound = static_cast<int>(std::ceil((1.0 - start.p1) / 0.1)) + 1;

  auto adversarial_run = [&](const MicroSpec& spec) {
    auto inst = testsup::make_micro(spec);
    auto built = mip::build_model(inst, 0);
    auto baseline =
        testsup::shared_backend().solve(built.model, testsup::exact_params());
    auto labels = surr::extract_labels(baseline, built.index, 1);
    auto adversary = testsup::oracle_model(
        labels, 1 + 2 * 2 + 1, spec.timesteps, 1, built.index.ev_stride(), true);
    return pipe::infer_and_solve(inst, adversary, start,
                                 testsup::shared_backend(),
                                 testsup::exact_params());
  };

  MicroSpec loose;
  loose.timesteps = 4;
  auto [free_sol, free_stats] = adversarial_run(loose);
  const bool free_ok = free_stats.solver_calls <= bound &&
                       free_stats.assisted_feasible &&
                       !free_stats.used_fallback &&
                       mip::has_values(free_sol.status);

  MicroSpec pinned = loose;
  pinned.stops = {{0, 1, 0}, {0, 1, 1}, {0, 1, 2}};
  auto [pin_sol, pin_stats] = adversarial_run(pinned);
  const bool pinned_ok = pin_stats.solver_calls <= bound &&
                         pin_stats.used_fallback &&
                         !pin_stats.assisted_feasible &&
                         mip::has_values(pin_sol.status);

  verdict(5, monotone && free_ok && pinned_ok,
          std::string("fixed-to-one sets shrank or held under 0.1 bumps in 60 "
                      "random trials; adversarial loops stopped after ") +
              std::to_string(free_stats.solver_calls) + " and " +
              std::to_string(pin_stats.solver_calls) +
              " assisted attempts (bound " + std::to_string(bound) +
              "), the loose schedule recovering on the last bump and the "
              "pinned schedule via fallback");
}

// --- criterion 6: desk-scale end-to-end benchmark ---------------------------
void criterion_6() {
  auto t0 = std::chrono::steady_clock::now();
  auto& backend = testsup::shared_backend();

  pipe::InstancePool pool;
  pool.tn = topo::load_transport_network(std::string(JRSOPT_DATA_DIR) + "/desk4.tn");
  pool.gm = grid::load_grid(std::string(JRSOPT_DATA_DIR) + "/ieee33.grid");
  pool.gm.stations.bus_of_station = {{2, 6}, {4, 30}};
  pool.timesteps = 12;
  const double panel = 400.0;
  pool.solar = scen::fit_solar_model(
      scen::synth_solar_history(64, pool.timesteps, panel, Rng(20260819).fork("sun").next()),
      panel);
  pool.load_shape = scen::default_load_shape();

  pipe::DatasetConfig data_cfg;
  data_cfg.blocks = {{4, 50}, {8, 50}, {12, 50}};
  data_cfg.e_max = 12;
  data_cfg.seed = 20260819;
  data_cfg.labelling = {1e-3, 600.0, 1, 0};
  auto gen = pipe::generate_labelled_dataset(pool, data_cfg, backend);

  for (const auto& block : data_cfg.blocks) {
    double total = 0.0;
    int kept = 0;
    for (const auto& a : gen.log)
      if (a.ev_count == block.ev_count && a.kept) {
        total += a.solve_seconds;
        ++kept;
      }
    g_desk_means.emplace_back(block.ev_count, kept ? total / kept : 0.0);
  }
  const double label_seconds = seconds_since(t0);

  surr::TrainConfig train_cfg;  // defaults: {32,32,16} x {5,5,3}, 60 epochs
  train_cfg.seed = 20260819;
  auto trained = surr::train(gen.dataset, train_cfg);
  const double train_seconds = seconds_since(t0) - label_seconds;

  surr::Dataset validation;
  validation.e_max = gen.dataset.e_max;
  validation.d_ev = gen.dataset.d_ev;
  validation.timesteps = gen.dataset.timesteps;
  validation.channels = gen.dataset.channels;
  for (int idx : trained.validation_indices)
    validation.samples.push_back(gen.dataset.samples[static_cast<size_t>(idx)]);
  auto thresholds = surr::calibrate_thresholds(trained.model, validation);
  trained.model.thresholds = thresholds;

  // One frozen model now faces fleet sizes it never saw in training.
  std::vector<scen::ProblemInstance> tests;
  for (int count : {6, 10})
    for (int i = 0; i < 15; ++i)
      tests.push_back(pipe::draw_instance(
          pool, count, 2,
          Rng(20260819).fork("bench").fork(std::to_string(count) + ":" +
                                           std::to_string(i)).next()));

  mip::SolverParams test_params{1e-3, 600.0, 1, 0};
  auto report = pipe::benchmark(tests, trained.model, thresholds, backend,
                                test_params);
  report.metrics = pipe::evaluate_predictions(trained.model, validation);

  std::vector<double> reductions;
  for (const auto& row : report.rows)
    reductions.push_back(row.base_seconds > 0.0
                             ? 100.0 * (row.base_seconds - row.assisted_seconds) /
                                   row.base_seconds
                             : 0.0);
  std::sort(reductions.begin(), reductions.end());
  const double median_reduction =
      reductions.empty()
          ? 0.0
          : (reductions.size() % 2 == 1
                 ? reductions[reductions.size() / 2]
                 : 0.5 * (reductions[reductions.size() / 2 - 1] +
                          reductions[reductions.size() / 2]));

  const bool pass = gen.dataset.samples.size() == 150 &&
                    report.rows.size() == 30 && report.feas >= 90.0 &&
                    std::abs(report.l_mean) <= 1.0 && median_reduction > 0.0;
  verdict(6, pass,
          "trained once on " + std::to_string(gen.dataset.samples.size()) +
              " labelled instances (fleets 4/8/12, " +
              std::to_string(gen.dropped) + " dropped), tested on " +
              std::to_string(report.rows.size()) +
              " two-scenario instances at unseen fleets 6/10 with zero "
              "retraining: assisted feasibility " + fmt(report.feas, 4) +
              "% (need >= 90), objective drift " + fmt(report.l_mean, 3) +
              "% (need |drift| <= 1), median time reduction " +
              fmt(median_reduction, 4) + "% (need > 0); bars (p0 " +
              fmt(thresholds.p0, 4) + ", p1 " + fmt(thresholds.p1, 4) +
              "), held-out acc0 " + fmt(report.metrics.acc0, 4) + "% acc1 " +
              fmt(report.metrics.acc1, 4) + "% mAP " +
              fmt(report.metrics.map, 4) + "%; labelling " +
              fmt(label_seconds, 4) + " s, training " + fmt(train_seconds, 4) +
              " s, total " + fmt(seconds_since(t0), 4) + " s");
}

// --- criterion 7: labelling-budget arithmetic -------------------------------
void criterion_7() {
  // Synthetic one-hour means: 81 per-size configurations of 400 samples
  // against one padded configuration of 800.
  std::vector<std::pair<int, double>> per_size(81, {400, 3600.0});
  const double no_padding = pipe::estimate_labelling_time(per_size);
  const double padded = pipe::estimate_labelling_time({{800, 3600.0}});
  const bool exact = (no_padding / padded) == 40.5;

  bool desk_ok = false;
  double desk_padded = 0.0, desk_separate = 0.0;
  if (g_desk_means.size() == 3) {
    std::vector<std::pair<int, double>> one_model, per_count;
    for (const auto& [count, mean] : g_desk_means) {
      one_model.emplace_back(50, mean);    // shared model: 50 labels per size
      per_count.emplace_back(150, mean);   // separate models: full set each
    }
    desk_padded = pipe::estimate_labelling_time(one_model);
    desk_separate = pipe::estimate_labelling_time(per_count);
    desk_ok = desk_padded > 0.0 && desk_padded < desk_separate;
  }

  verdict(7, exact && desk_ok,
          "synthetic one-hour means price 81 x 400 vs 1 x 800 at exactly " +
              fmt(no_padding / padded, 10) +
              " (need 40.5); with the recorded desk means one padded dataset "
              "costs " + fmt(desk_padded, 6) + " h vs " + fmt(desk_separate, 6) +
              " h for per-size datasets (strictly smaller)");
}

// --- criterion 8: analytic gradients vs central differences ----------------
void criterion_8() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(808);
  const int channels = 6, timesteps = 5, e_max = 2, d_ev = 4;
  surr::TrainConfig cfg;
  cfg.conv_channels = {4, 3};
  cfg.kernels = {3, 3};
  auto model = surr::init_model(channels, timesteps, e_max, d_ev, cfg, 11);
  // The trainer always feeds the net min-max-normalized features; audit the
  // gradient at the same scale so double-precision differences stay readable.
  model.norm.lo = Eigen::VectorXd::Zero(channels);
  model.norm.hi = Eigen::VectorXd::Constant(channels, 50.0);

  std::vector<surr::Sample> storage(5);
  std::vector<const surr::Sample*> batch;
  for (auto& s : storage) {
    s.features = Eigen::MatrixXd::NullaryExpr(
        channels, timesteps, [&]() { return rng.uniform(0.0, 50.0); });
    s.e = rng.uniform_int(1, e_max);
    s.labels = Eigen::VectorXd::Zero(e_max * d_ev);
    for (int j = 0; j < s.e * d_ev; ++j)
      s.labels[j] = rng.uniform() < 0.4 ? 1.0 : 0.0;
    batch.push_back(&s);
  }

  Eigen::VectorXd grad;
  surr::loss_and_gradient(model, batch, 0.8, 1.7, &grad);

  double worst_rel = 0.0;
  const double h = 1e-6;
  for (Eigen::Index p = 0; p < model.params.size(); ++p) {
    auto probe = model;
    probe.params[p] += h;
    const double up = surr::loss_and_gradient(probe, batch, 0.8, 1.7, nullptr);
    probe.params[p] -= 2.0 * h;
    const double down = surr::loss_and_gradient(probe, batch, 0.8, 1.7, nullptr);
    const double fd = (up - down) / (2.0 * h);
    const double rel =
        std::abs(fd - grad[p]) / std::max(1e-8, std::abs(fd) + std::abs(grad[p]));
    worst_rel = std::max(worst_rel, rel);
  }
  const double elapsed = seconds_since(t0);
  verdict(8, worst_rel < 1e-4 && elapsed <= 60.0,
          "two conv layers, five random samples, all " +
              std::to_string(model.params.size()) +
              " parameters checked by central differences: worst relative "
              "error " + fmt(worst_rel) + " (bound 1e-4), " + fmt(elapsed, 3) +
              " s (cap 60 s)");
}

// --- criterion 9: duplicated scenarios match the deterministic solve --------
void criterion_9() {
  auto t0 = std::chrono::steady_clock::now();
  auto& backend = testsup::shared_backend();
  auto params = testsup::exact_params();

  MicroSpec spec;
  spec.nodes = 3;
  spec.timesteps = 5;
  spec.pv_capacity_kw = 25.0;
  auto det = testsup::make_micro(spec);

  // Same physical day, three scenario copies with uneven weights summing to 1.
  auto stoch = det;
  auto profile = det.scenarios.pv_max_kw.at(0);
  stoch.scenarios.probability = Eigen::Vector3d(0.5, 0.3, 0.2);
  stoch.scenarios.pv_max_kw = {profile, profile, profile};

  auto det_sol = backend.solve(mip::build_model(det).model, params);
  auto stoch_sol = backend.solve(mip::build_model(stoch).model, params);
  const double rel = std::abs(det_sol.objective - stoch_sol.objective) /
                     std::max(1.0, std::abs(det_sol.objective));

  const double elapsed = seconds_since(t0);
  verdict(9,
          mip::has_values(det_sol.status) && mip::has_values(stoch_sol.status) &&
              rel <= 1e-6 && elapsed <= 60.0,
          "three identical weighted scenario copies priced the day at " +
              fmt(stoch_sol.objective, 10) + " vs deterministic " +
              fmt(det_sol.objective, 10) + " (relative gap " + fmt(rel) +
              ", bound 1e-6), " + fmt(elapsed, 3) + " s (cap 60 s)");
}

}  // namespace

int main(int argc, char** argv) {
  // With arguments, run only the named criteria (dependents of 3 and 7 are
  // satisfied only when 1-2 and 6 ran in the same invocation).
  std::vector<std::pair<int, void (*)()>> all = {
      {1, criterion_1}, {2, criterion_2}, {3, criterion_3},
      {4, criterion_4}, {5, criterion_5}, {6, criterion_6},
      {7, criterion_7}, {8, criterion_8}, {9, criterion_9}};
  int ran = 0;
  for (const auto& [number, fn] : all) {
    bool wanted = argc <= 1;
    for (int a = 1; a < argc && !wanted; ++a)
      wanted = std::atoi(argv[a]) == number;
    if (!wanted) continue;
    guarded(number, fn);
    ++ran;
  }
  std::printf("acceptance: %d/%d passed\n", ran - g_failures, ran);
  return g_failures == 0 ? 0 : 1;
}
