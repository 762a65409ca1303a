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

#include "jrsopt/scenariogen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "jrsopt/rng.hpp"

namespace jrsopt::scen {

SolarModel fit_solar_model(const Eigen::MatrixXd& history_kw, double panel_max_kw) {
  if (history_kw.rows() < 2)
    throw std::invalid_argument("solar history needs at least 2 days");
  if (history_kw.size() == 0 || history_kw.cols() < 1)
    throw std::invalid_argument("solar history is empty");
  if ((history_kw.array() < 0.0).any())
    throw std::invalid_argument("solar history has negative entries");
  if (panel_max_kw <= 0.0) throw std::invalid_argument("panel max must be > 0");

  SolarModel m;
  m.panel_max_kw = panel_max_kw;
  m.mean_kw = history_kw.colwise().mean();
  Eigen::MatrixXd centered = history_kw.rowwise() - m.mean_kw.transpose();
  m.spread_kw = (centered.array().square().colwise().sum() /
                 static_cast<double>(history_kw.rows() - 1))
                    .sqrt()
                    .transpose();
  return m;
}

Eigen::MatrixXd sample_solar(const SolarModel& model, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("need at least one sample");
  Rng rng(seed);
  Eigen::MatrixXd out(n, model.mean_kw.size());
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < model.mean_kw.size(); ++t)
      out(i, t) = std::clamp(rng.normal(model.mean_kw[t], model.spread_kw[t]), 0.0,
                             model.panel_max_kw);
  return out;
}

Eigen::MatrixXd synth_solar_history(int days, int timesteps, double panel_max_kw,
                                    std::uint64_t seed) {
  if (days < 2 || timesteps < 2)
    throw std::invalid_argument("need days >= 2 and timesteps >= 2");
  Rng rng(seed);
  Eigen::MatrixXd hist(days, timesteps);
  for (int d = 0; d < days; ++d) {
    double day_factor = std::clamp(rng.normal(0.85, 0.2), 0.1, 1.0);
    for (int t = 0; t < timesteps; ++t) {
      double hour = 24.0 * t / timesteps;
      double bell = std::exp(-std::pow((hour - 12.5) / 3.6, 2.0));
      double step_noise = std::clamp(rng.normal(1.0, 0.08), 0.6, 1.4);
      double kw = panel_max_kw * bell * day_factor * step_noise;
      hist(d, t) = (kw < 1e-3 * panel_max_kw) ? 0.0 : kw;
    }
  }
  return hist;
}

Eigen::MatrixXd load_solar_history_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open solar history " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": ragged rows");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd out(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return out;
}

void ScenarioSet::validate() const {
  if (probability.size() == 0) throw std::invalid_argument("no scenarios");
  if ((probability.array() <= 0.0).any())
    throw std::invalid_argument("scenario probabilities must be > 0");
  if (std::abs(probability.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("scenario probabilities must sum to 1");
  if (pv_max_kw.size() != static_cast<size_t>(probability.size()))
    throw std::invalid_argument("scenario count mismatch");
  for (const auto& m : pv_max_kw)
    if ((m.array() < 0.0).any())
      throw std::invalid_argument("negative solar availability");
}

ScenarioSet make_scenarios(const SolarModel& model,
                           const std::vector<grid::PvUnit>& pv_units, int count,
                           std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("need at least one scenario");
  Eigen::MatrixXd profiles = sample_solar(model, count, seed);
  ScenarioSet set;
  set.probability = Eigen::VectorXd::Constant(count, 1.0 / count);
  for (int sc = 0; sc < count; ++sc) {
    Eigen::MatrixXd avail(pv_units.size(), profiles.cols());
    for (size_t p = 0; p < pv_units.size(); ++p)
      avail.row(static_cast<Eigen::Index>(p)) =
          profiles.row(sc) * (pv_units[p].capacity_kw / model.panel_max_kw);
    set.pv_max_kw.push_back(std::move(avail));
  }
  set.validate();
  return set;
}

void EvFleet::validate() const {
  if (loss_fraction < 0.0 || loss_fraction >= 1.0)
    throw std::invalid_argument("loss fraction must be in [0, 1)");
  if (p_move_kw < 0.0) throw std::invalid_argument("travel draw must be >= 0");
  for (const auto& ev : evs) {
    if (!(ev.e_min_kwh <= ev.e_init_kwh && ev.e_init_kwh <= ev.e_max_kwh))
      throw std::invalid_argument("EV initial energy outside [min, max]");
    if (ev.p_max_kw <= 0.0) throw std::invalid_argument("EV power cap must be > 0");
  }
}

EvFleet uniform_fleet(int ev_count, const EvParams& params, double loss_fraction,
                      double p_move_kw) {
  EvFleet fleet;
  fleet.evs.assign(static_cast<size_t>(ev_count), params);
  fleet.loss_fraction = loss_fraction;
  fleet.p_move_kw = p_move_kw;
  fleet.validate();
  return fleet;
}

void CostParams::validate() const {
  if (travel_per_arc < 0 || charge_per_kwh < 0 || discharge_per_kwh < 0)
    throw std::invalid_argument("cost coefficients must be >= 0");
}

void JobSchedule::validate(const topo::TransportNetwork& tn, int ev_count,
                           int timespans) const {
  std::set<std::pair<int, int>> seen;
  for (const auto& stop : stops) {
    if (stop.ev < 0 || stop.ev >= ev_count)
      throw std::invalid_argument("stop references EV " + std::to_string(stop.ev));
    if (tn.node_order(stop.node) < 0)
      throw std::invalid_argument("stop references unknown node " +
                                  std::to_string(stop.node));
    if (stop.timespan < 0 || stop.timespan >= timespans)
      throw std::invalid_argument("stop timespan out of range");
    if (!seen.insert({stop.ev, stop.timespan}).second)
      throw std::invalid_argument("two stops for EV " + std::to_string(stop.ev) +
                                  " at timespan " + std::to_string(stop.timespan));
  }
}

std::vector<JobStop> JobSchedule::stops_for(int ev) const {
  std::vector<JobStop> out;
  for (const auto& s : stops)
    if (s.ev == ev) out.push_back(s);
  std::sort(out.begin(), out.end(),
            [](const JobStop& a, const JobStop& b) { return a.timespan < b.timespan; });
  return out;
}

namespace {

std::vector<int> window_timespans(int begin_h, int end_h, int timesteps,
                                  int max_timespan) {
  std::vector<int> out;
  int timespans = timesteps - 1;
  for (int s = 1; s <= std::min(timespans - 1, max_timespan); ++s) {
    double hour = 24.0 * s / timesteps;
    if (hour >= begin_h && hour < end_h) out.push_back(s);
  }
  return out;
}

}  // namespace

JobSchedule sample_schedules(const topo::TransportNetwork& tn,
                             const ScheduleTemplate& tmpl, int ev_count,
                             int timesteps, std::uint64_t seed) {
  tn.validate();
  if (tn.od_pairs.empty() || tn.shift_pool_a.empty() || tn.shift_pool_b.empty())
    throw std::invalid_argument("network lacks od pairs or shift pools");
  int timespans = timesteps - 1;
  if (timespans < 3) throw std::invalid_argument("horizon too short for a day template");

  // Shifts may not collide with the start or end-of-day pins and must leave
  // one timespan to reach the destination.
  int last_shift = timespans - 2;
  auto win_a = window_timespans(tmpl.window_a_begin_h, tmpl.window_a_end_h,
                                timesteps, last_shift);
  auto win_b = window_timespans(tmpl.window_b_begin_h, tmpl.window_b_end_h,
                                timesteps, last_shift);
  if (win_a.empty() || win_b.empty())
    throw std::invalid_argument("shift window shorter than one timespan");

  // Pool A serves the first shift for days starting at the primary origin;
  // days starting elsewhere swap the pools.
  int primary_origin = tn.od_pairs.front().first;

  // Worst-case pairwise distances once, every trip one detour longer.
  auto dist = [&](int a, int b) { return topo::pessimistic_distance(tn, a, b); };

  Rng root(seed);
  JobSchedule schedule;
  for (int k = 0; k < ev_count; ++k) {
    Rng rng = root.fork("ev" + std::to_string(k));
    bool placed = false;
    for (int attempt = 0; attempt < tmpl.max_resample && !placed; ++attempt) {
      auto [start, dest] =
          tn.od_pairs[static_cast<size_t>(rng.uniform_int(
              0, static_cast<int>(tn.od_pairs.size()) - 1))];
      const auto& first_pool =
          (start == primary_origin) ? tn.shift_pool_a : tn.shift_pool_b;
      const auto& second_pool =
          (start == primary_origin) ? tn.shift_pool_b : tn.shift_pool_a;
      int n1 = first_pool[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int>(first_pool.size()) - 1))];
      int n2 = second_pool[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int>(second_pool.size()) - 1))];
      int s1 = win_a[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int>(win_a.size()) - 1))];
      int s2 = win_b[static_cast<size_t>(
          rng.uniform_int(0, static_cast<int>(win_b.size()) - 1))];
      if (s2 <= s1) continue;
      int d1 = dist(start, n1), d2 = dist(n1, n2), d3 = dist(n2, dest);
      if (d1 < 0 || d2 < 0 || d3 < 0) continue;
      if (d1 > s1 || d2 > s2 - s1 || d3 > (timespans - 1) - s2) continue;
      schedule.stops.push_back({k, start, 0});
      schedule.stops.push_back({k, n1, s1});
      schedule.stops.push_back({k, n2, s2});
      schedule.stops.push_back({k, dest, timespans - 1});
      placed = true;
    }
    if (!placed)
      throw std::runtime_error("no reachable day template for EV " +
                               std::to_string(k) + "; check windows and network");
  }
  schedule.validate(tn, ev_count, timespans);
  return schedule;
}

CongestionProfile build_congestion_profile(const CongestionConfig& cfg,
                                           int timesteps, std::uint64_t seed) {
  if (timesteps < 2) throw std::invalid_argument("need at least 2 timesteps");
  CongestionProfile prof;
  prof.congested.assign(static_cast<size_t>(timesteps - 1), 0);
  if (cfg.random_prob >= 0.0) {
    Rng rng(seed);
    for (auto& c : prof.congested) c = rng.uniform() < cfg.random_prob ? 1 : 0;
    return prof;
  }
  for (int s = 0; s < timesteps - 1; ++s) {
    double hour = 24.0 * s / timesteps;
    for (const auto& [b, e] : cfg.windows_h)
      if (hour >= b && hour < e) prof.congested[static_cast<size_t>(s)] = 1;
  }
  return prof;
}

Eigen::VectorXd default_load_shape() {
  Eigen::VectorXd s(24);
  s << 0.58, 0.55, 0.53, 0.52, 0.53, 0.56, 0.62, 0.70, 0.78, 0.83, 0.86, 0.88,
      0.87, 0.86, 0.85, 0.86, 0.89, 0.94, 0.98, 1.00, 0.97, 0.90, 0.78, 0.66;
  return s;
}

Eigen::VectorXd load_shape_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open load shape " + path);
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  if (vals.size() != 24) throw std::runtime_error(path + ": expected 24 values");
  Eigen::VectorXd out(24);
  for (size_t i = 0; i < 24; ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
  return out;
}

Eigen::VectorXd resample_shape(const Eigen::VectorXd& shape24, int timesteps) {
  if (shape24.size() != 24) throw std::invalid_argument("shape must have 24 points");
  Eigen::VectorXd out(timesteps);
  for (int t = 0; t < timesteps; ++t) {
    double hour = 24.0 * t / timesteps;
    int i0 = static_cast<int>(hour);
    int i1 = std::min(i0 + 1, 23);
    double frac = hour - i0;
    out[t] = shape24[i0] * (1.0 - frac) + shape24[i1] * frac;
  }
  return out;
}

LoadProfiles sample_load(const grid::DistributionNetwork& dn,
                         const Eigen::VectorXd& shape24, int timesteps,
                         std::uint64_t seed) {
  Eigen::VectorXd shape = resample_shape(shape24, timesteps);
  Rng rng(seed);
  LoadProfiles lp;
  lp.p_kw.resize(static_cast<Eigen::Index>(dn.buses.size()), timesteps);
  lp.q_kvar.resize(static_cast<Eigen::Index>(dn.buses.size()), timesteps);
  for (size_t b = 0; b < dn.buses.size(); ++b) {
    // One coefficient per bus and day keeps the power factor untouched.
    double coeff = rng.uniform(0.9, 1.1);
    for (int t = 0; t < timesteps; ++t) {
      lp.p_kw(static_cast<Eigen::Index>(b), t) = dn.nominal_p_kw[b] * shape[t] * coeff;
      lp.q_kvar(static_cast<Eigen::Index>(b), t) =
          dn.nominal_q_kvar[b] * shape[t] * coeff;
    }
  }
  return lp;
}

ProblemInstance assemble_instance(const topo::TransportNetwork& tn,
                                  const grid::GridModel& gm, EvFleet fleet,
                                  CostParams costs, ScenarioSet scenarios,
                                  LoadProfiles loads, JobSchedule schedule,
                                  CongestionProfile congestion, int timesteps) {
  ProblemInstance inst;
  inst.tn = tn;
  inst.tsn = topo::build_tsn(tn, timesteps);
  inst.dn = gm.dn;
  inst.dn.build_index();
  inst.generators = gm.generators;
  inst.pv_units = gm.pv_units;
  inst.stations = gm.stations;
  inst.fleet = std::move(fleet);
  inst.costs = costs;
  inst.scenarios = std::move(scenarios);
  inst.load_p_kw = std::move(loads.p_kw);
  inst.load_q_kvar = std::move(loads.q_kvar);
  inst.schedule = std::move(schedule);
  inst.congestion = std::move(congestion);
  inst.timesteps = timesteps;

  inst.fleet.validate();
  inst.costs.validate();
  inst.scenarios.validate();
  auto radial = validate_radial(inst.dn);
  if (!radial.ok)
    throw std::invalid_argument("distribution network not radial: " +
                                radial.problems.front());
  if (!inst.stations.covers(tn.stations))
    throw std::invalid_argument("station node without a bus mapping");
  for (const auto& [node, bus] : inst.stations.bus_of_station)
    if (inst.dn.bus_order(bus) < 0)
      throw std::invalid_argument("station mapped to unknown bus " +
                                  std::to_string(bus));

  auto buses = static_cast<Eigen::Index>(inst.dn.buses.size());
  if (inst.load_p_kw.rows() != buses || inst.load_q_kvar.rows() != buses)
    throw std::invalid_argument("load profile bus count mismatch");
  if (inst.load_p_kw.cols() != timesteps || inst.load_q_kvar.cols() != timesteps)
    throw std::invalid_argument("load profile horizon mismatch");
  for (const auto& m : inst.scenarios.pv_max_kw) {
    if (m.rows() != static_cast<Eigen::Index>(inst.pv_units.size()))
      throw std::invalid_argument("scenario PV unit count mismatch");
    if (m.cols() != timesteps)
      throw std::invalid_argument("scenario horizon mismatch");
  }
  if (static_cast<int>(inst.congestion.congested.size()) != timesteps - 1)
    throw std::invalid_argument("congestion profile length mismatch");
  inst.schedule.validate(tn, inst.fleet.size(), timesteps - 1);
  return inst;
}

}  // namespace jrsopt::scen
