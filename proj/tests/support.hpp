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
// Shared fixtures: tiny hand-checkable instances, one solver helper process
// for the whole test binary, and an exhaustive enumeration oracle that prices
// every binary assignment through continuous relaxations.

#ifndef JRSOPT_TESTS_SUPPORT_HPP
#define JRSOPT_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "jrsopt/mipcore.hpp"
#include "jrsopt/pipeline.hpp"
#include "jrsopt/scenariogen.hpp"
#include "jrsopt/surrogate.hpp"

namespace jrsopt::testsup {

/// Knobs for a 2- or 3-node instance small enough to reason about by hand.
struct MicroSpec {
  int nodes = 2;      // 2 or 3 physical nodes on a cycle, ids 1..nodes
  int timesteps = 4;  // |T|; timespans = |T| - 1
  int evs = 1;
  int scenario_count = 1;
  int stations = 1;             // station nodes 2 (and 3)
  double load_p_kw = 100.0;     // per non-slack bus, flat over the day
  double load_q_kvar = 50.0;
  double pv_capacity_kw = 0.0;  // > 0 adds one PV unit at the last bus
  scen::EvParams ev{};
  scen::CostParams costs{};
  std::vector<scen::JobStop> stops;  // empty: every EV starts and ends at 1
  bool congestion_mid = false;       // mark the middle timespan congested
  std::uint64_t seed = 1;
};

inline topo::TransportNetwork micro_transport(const MicroSpec& spec) {
  if (spec.nodes != 2 && spec.nodes != 3)
    throw std::invalid_argument("micro instances have 2 or 3 nodes");
  topo::TransportNetwork tn;
  for (int n = 1; n <= spec.nodes; ++n) tn.nodes.push_back(n);
  auto both = [&](int a, int b) {
    tn.arcs.push_back({a, b, 1});
    tn.arcs.push_back({b, a, 1});
  };
  both(1, 2);
  if (spec.nodes == 3) {
    both(2, 3);
    both(3, 1);
  }
  tn.stations = {2};
  if (spec.stations > 1 && spec.nodes == 3) tn.stations.push_back(3);
  tn.od_pairs = {{1, spec.nodes}};
  tn.shift_pool_a = {2};
  tn.shift_pool_b = {spec.nodes};
  return tn;
}

inline grid::GridModel micro_grid(const MicroSpec& spec,
                                  const topo::TransportNetwork& tn) {
  grid::GridModel gm;
  auto& dn = gm.dn;
  for (int b = 1; b <= spec.nodes; ++b) dn.buses.push_back(b);
  dn.slack_bus = 1;
  dn.v_base_kv = 12.66;
  dn.s_base_mva = 10.0;
  dn.v_ref = 1.0;
  dn.lines.push_back({1, 2, 0.4, 0.25, 10000.0, 10000.0});
  if (spec.nodes == 3) dn.lines.push_back({2, 3, 0.3, 0.2, 10000.0, 10000.0});
  dn.nominal_p_kw.assign(dn.buses.size(), spec.load_p_kw);
  dn.nominal_q_kvar.assign(dn.buses.size(), spec.load_q_kvar);
  dn.nominal_p_kw[0] = 0.0;
  dn.nominal_q_kvar[0] = 0.0;
  gm.generators.push_back({1, -10000.0, 10000.0, -10000.0, 10000.0, 0.12, "slack"});
  if (spec.pv_capacity_kw > 0.0)
    gm.pv_units.push_back({spec.nodes, spec.pv_capacity_kw});
  for (int st : tn.stations) gm.stations.bus_of_station[st] = st;
  return gm;
}

inline scen::ProblemInstance make_micro(const MicroSpec& spec) {
  auto tn = micro_transport(spec);
  auto gm = micro_grid(spec, tn);

  auto fleet = scen::uniform_fleet(spec.evs, spec.ev);

  scen::ScenarioSet scenarios;
  int nsc = spec.scenario_count;
  scenarios.probability =
      Eigen::VectorXd::Constant(nsc, 1.0 / static_cast<double>(nsc));
  if (gm.pv_units.empty()) {
    scenarios.pv_max_kw.assign(static_cast<size_t>(nsc),
                               Eigen::MatrixXd::Zero(0, spec.timesteps));
  } else {
    auto history = scen::synth_solar_history(6, spec.timesteps,
                                             spec.pv_capacity_kw, spec.seed);
    auto model = scen::fit_solar_model(history, spec.pv_capacity_kw);
    scenarios = scen::make_scenarios(model, gm.pv_units, nsc, spec.seed + 1);
  }

  scen::LoadProfiles loads;
  loads.p_kw = Eigen::MatrixXd::Zero(spec.nodes, spec.timesteps);
  loads.q_kvar = Eigen::MatrixXd::Zero(spec.nodes, spec.timesteps);
  for (int b = 1; b < spec.nodes; ++b) {
    loads.p_kw.row(b).setConstant(spec.load_p_kw);
    loads.q_kvar.row(b).setConstant(spec.load_q_kvar);
  }

  scen::JobSchedule schedule;
  if (spec.stops.empty()) {
    for (int k = 0; k < spec.evs; ++k) {
      schedule.stops.push_back({k, 1, 0});
      if (spec.timesteps > 2)
        schedule.stops.push_back({k, 1, spec.timesteps - 2});
    }
  } else {
    schedule.stops = spec.stops;
  }

  scen::CongestionProfile congestion;
  congestion.congested.assign(static_cast<size_t>(spec.timesteps - 1), 0);
  if (spec.congestion_mid)
    congestion.congested[congestion.congested.size() / 2] = 1;

  return scen::assemble_instance(tn, gm, fleet, spec.costs, scenarios,
                                 std::move(loads), std::move(schedule),
                                 std::move(congestion), spec.timesteps);
}

/// Sampling pool over the same micro network: solar model from synthetic
/// history, default load shape, a day template sized so the tiny horizon
/// admits exactly one slot per shift window. Needs timesteps >= 6.
inline pipe::InstancePool make_micro_pool(const MicroSpec& spec) {
  if (spec.timesteps < 6)
    throw std::invalid_argument("pools need timesteps >= 6 for the day template");
  pipe::InstancePool pool;
  pool.tn = micro_transport(spec);
  pool.gm = micro_grid(spec, pool.tn);
  pool.ev = spec.ev;
  pool.costs = spec.costs;
  double panel = std::max(spec.pv_capacity_kw, 1.0);
  pool.solar = scen::fit_solar_model(
      scen::synth_solar_history(6, spec.timesteps, panel, spec.seed), panel);
  pool.load_shape = scen::default_load_shape();
  pool.schedule_template.window_a_begin_h = 8;
  pool.schedule_template.window_a_end_h = 12;
  pool.schedule_template.window_b_begin_h = 12;
  pool.schedule_template.window_b_end_h = 16;
  pool.congestion.windows_h.clear();  // clear roads unless a test adds peaks
  pool.timesteps = spec.timesteps;
  return pool;
}

/// Network whose output is pinned to the given bits: all weights zero, the
/// dense bias saturated to +-30, so predictions are ~1/~0 regardless of the
/// input. `invert` flips every bit (an adversary).
inline surr::SurrogateModel oracle_model(const surr::LabelVector& bits,
                                         int channels, int timesteps, int e_max,
                                         int d_ev, bool invert = false) {
  surr::TrainConfig cfg;
  cfg.conv_channels = {2};
  cfg.kernels = {3};
  auto model = surr::init_model(channels, timesteps, e_max, d_ev, cfg, 1);
  model.params.setZero();
  long out = model.output_len();
  for (long j = 0; j < out; ++j) {
    bool one = bits[j] == 1.0;
    if (invert) one = !one;
    model.params[model.params.size() - out + j] = one ? 30.0 : -30.0;
  }
  return model;
}

/// One helper process shared by every test in the binary.
inline mip::SubprocessHighsBackend& shared_backend() {
  static mip::SubprocessHighsBackend backend;
  return backend;
}

inline mip::SolverParams exact_params() {
  mip::SolverParams params;
  params.mip_gap = 1e-9;
  params.time_limit_s = 600.0;
  return params;
}

struct EnumResult {
  bool found = false;
  double objective = 0.0;
  int routes = 0;
  int patterns = 0;
};

/// Prices every feasible binary assignment of a 1-EV, 1-scenario instance:
/// every arc sequence compatible with availability, continuity, and stops,
/// times every charge/discharge flag combination the gate admits, each as a
/// bound-fixed continuous relaxation. The minimum is the exact optimum.
inline EnumResult enumerate_exact(const scen::ProblemInstance& inst,
                                  mip::SubprocessHighsBackend& backend,
                                  int max_patterns = 250000) {
  auto built = mip::build_model(inst);
  const auto& vx = built.index;
  if (vx.scenario_count() != 1 || vx.ev_count() != 1)
    throw std::invalid_argument("enumeration expects 1 scenario and 1 EV");
  const auto& tsn = inst.tsn;
  const int S = vx.timespans();

  std::vector<int> must_src(static_cast<size_t>(S), -1);
  for (const auto& stop : inst.schedule.stops)
    if (stop.ev == 0)
      must_src[static_cast<size_t>(stop.timespan)] =
          tsn.augmented_index(stop.node);

  std::vector<std::vector<int>> routes;
  std::vector<int> cur;
  std::function<void(int, int)> dfs = [&](int pos, int s) {
    if (s == S) {
      routes.push_back(cur);
      return;
    }
    const auto& avail =
        topo::available_arcs(tsn, inst.congestion.is_congested(s));
    for (int a : avail) {
      const auto& arc = tsn.arcs[static_cast<size_t>(a)];
      if (pos >= 0 && arc.source != pos) continue;
      if (must_src[static_cast<size_t>(s)] >= 0 &&
          arc.source != must_src[static_cast<size_t>(s)])
        continue;
      cur.push_back(a);
      dfs(arc.target, s + 1);
      cur.pop_back();
    }
  };
  dfs(-1, 0);

  std::vector<int> station_arc(static_cast<size_t>(vx.station_count()));
  for (int ci = 0; ci < vx.station_count(); ++ci) {
    int node = inst.tn.stations[static_cast<size_t>(ci)];
    station_arc[static_cast<size_t>(ci)] =
        tsn.stationary_arc[static_cast<size_t>(inst.tn.node_order(node))];
  }

  std::vector<mip::PartialAssignment> patterns;
  for (const auto& route : routes) {
    mip::PartialAssignment base;
    for (int a = 0; a < vx.arc_count(); ++a)
      for (int s = 0; s < S; ++s) base[vx.routing(0, 0, a, s)] = 0;
    for (int s = 0; s < S; ++s)
      base[vx.routing(0, 0, route[static_cast<size_t>(s)], s)] = 1;
    for (int ci = 0; ci < vx.station_count(); ++ci)
      for (int t = 1; t < vx.timesteps(); ++t) {
        base[vx.charge_flag(0, 0, ci, t)] = 0;
        base[vx.discharge_flag(0, 0, ci, t)] = 0;
      }

    // Timesteps at which the route parks on some station's self-arc.
    std::vector<std::pair<int, int>> parked;  // (t, station)
    for (int s = 0; s < S; ++s)
      for (int ci = 0; ci < vx.station_count(); ++ci)
        if (route[static_cast<size_t>(s)] == station_arc[static_cast<size_t>(ci)])
          parked.emplace_back(s + 1, ci);

    long combos = 1;
    for (size_t i = 0; i < parked.size(); ++i) combos *= 3;
    for (long combo = 0; combo < combos; ++combo) {
      mip::PartialAssignment pat = base;
      long rest = combo;
      for (const auto& [t, ci] : parked) {
        int choice = static_cast<int>(rest % 3);
        rest /= 3;
        if (choice == 1) pat[vx.charge_flag(0, 0, ci, t)] = 1;
        if (choice == 2) pat[vx.discharge_flag(0, 0, ci, t)] = 1;
      }
      patterns.push_back(std::move(pat));
      if (static_cast<int>(patterns.size()) > max_patterns)
        throw std::runtime_error("enumeration blew the pattern budget");
    }
  }

  EnumResult result;
  result.routes = static_cast<int>(routes.size());
  result.patterns = static_cast<int>(patterns.size());
  double best = 0.0;
  const size_t chunk = 256;
  for (size_t at = 0; at < patterns.size(); at += chunk) {
    std::vector<mip::PartialAssignment> batch(
        patterns.begin() + static_cast<long>(at),
        patterns.begin() +
            static_cast<long>(std::min(at + chunk, patterns.size())));
    auto lp = backend.solve_lp_batch(built.model, batch);
    for (const auto& r : lp) {
      if (!r.feasible) continue;
      if (!result.found || r.objective < best) best = r.objective;
      result.found = true;
    }
  }
  result.objective = best;
  return result;
}

/// Largest relative gap, over (scenario, EV), between the day's net battery
/// change and the accumulated per-step charge/discharge/travel terms. Zero
/// up to arithmetic noise whenever the step balances hold.
inline double telescope_gap(const scen::ProblemInstance& inst,
                            const mip::Solution& sol) {
  int sc_count = sol.scenario < 0 ? inst.scenarios.scenario_count() : 1;
  mip::VariableIndex vx(inst, sc_count);
  const double hours = 24.0 / vx.timesteps();
  const double eta = inst.fleet.loss_fraction;
  double worst = 0.0;
  for (int sc = 0; sc < sc_count; ++sc)
    for (int k = 0; k < vx.ev_count(); ++k) {
      double rhs = 0.0;
      for (int t = 1; t < vx.timesteps(); ++t) {
        double pc = 0.0, pd = 0.0;
        for (int ci = 0; ci < vx.station_count(); ++ci) {
          pc += sol.values[vx.pc(sc, k, ci, t)];
          pd += sol.values[vx.pd(sc, k, ci, t)];
        }
        rhs += hours * ((1.0 - eta) * pc -
                        (1.0 + eta) * (pd + sol.values[vx.pm(sc, k, t)]));
      }
      double lhs = sol.values[vx.energy(sc, k, vx.timesteps() - 1)] -
                   sol.values[vx.energy(sc, k, 0)];
      double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
      worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
  return worst;
}

}  // namespace jrsopt::testsup

#endif  // JRSOPT_TESTS_SUPPORT_HPP
