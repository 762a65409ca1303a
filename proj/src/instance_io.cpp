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

#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "jrsopt/scenariogen.hpp"

namespace jrsopt::scen {

namespace {

using nlohmann::json;

constexpr const char* kSchema = "jrsopt-instance-1";

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& rows) {
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<size_t>(m.cols()))
      throw std::runtime_error("ragged matrix in instance file");
    for (size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

}  // namespace

void save_instance(const ProblemInstance& inst, const std::string& path) {
  json j;
  j["schema"] = kSchema;
  j["timesteps"] = inst.timesteps;

  json tn;
  tn["nodes"] = inst.tn.nodes;
  tn["arcs"] = json::array();
  for (const auto& a : inst.tn.arcs)
    tn["arcs"].push_back({a.source, a.target, a.duration});
  tn["stations"] = inst.tn.stations;
  tn["od_pairs"] = json::array();
  for (const auto& [o, d] : inst.tn.od_pairs) tn["od_pairs"].push_back({o, d});
  tn["pool_a"] = inst.tn.shift_pool_a;
  tn["pool_b"] = inst.tn.shift_pool_b;
  j["transport"] = std::move(tn);

  json dn;
  dn["buses"] = inst.dn.buses;
  dn["slack_bus"] = inst.dn.slack_bus;
  dn["v_base_kv"] = inst.dn.v_base_kv;
  dn["s_base_mva"] = inst.dn.s_base_mva;
  dn["v_ref"] = inst.dn.v_ref;
  dn["lines"] = json::array();
  for (const auto& l : inst.dn.lines)
    dn["lines"].push_back(
        {l.up_bus, l.down_bus, l.r_ohm, l.x_ohm, l.p_max_kw, l.q_max_kvar});
  dn["nominal_p_kw"] = inst.dn.nominal_p_kw;
  dn["nominal_q_kvar"] = inst.dn.nominal_q_kvar;
  j["grid"] = std::move(dn);

  j["generators"] = json::array();
  for (const auto& g : inst.generators)
    j["generators"].push_back({{"bus", g.bus},
                               {"p_min_kw", g.p_min_kw},
                               {"p_max_kw", g.p_max_kw},
                               {"q_min_kvar", g.q_min_kvar},
                               {"q_max_kvar", g.q_max_kvar},
                               {"cost_per_kwh", g.cost_per_kwh},
                               {"name", g.name}});
  j["pv_units"] = json::array();
  for (const auto& p : inst.pv_units)
    j["pv_units"].push_back({{"bus", p.bus}, {"capacity_kw", p.capacity_kw}});
  j["station_bus"] = json::array();
  for (const auto& [node, bus] : inst.stations.bus_of_station)
    j["station_bus"].push_back({node, bus});

  json fleet;
  fleet["loss_fraction"] = inst.fleet.loss_fraction;
  fleet["p_move_kw"] = inst.fleet.p_move_kw;
  fleet["evs"] = json::array();
  for (const auto& ev : inst.fleet.evs)
    fleet["evs"].push_back({{"e_min_kwh", ev.e_min_kwh},
                            {"e_max_kwh", ev.e_max_kwh},
                            {"e_init_kwh", ev.e_init_kwh},
                            {"p_max_kw", ev.p_max_kw}});
  j["fleet"] = std::move(fleet);

  j["costs"] = {{"travel_per_arc", inst.costs.travel_per_arc},
                {"charge_per_kwh", inst.costs.charge_per_kwh},
                {"discharge_per_kwh", inst.costs.discharge_per_kwh}};

  json sc;
  sc["probability"] = std::vector<double>(
      inst.scenarios.probability.data(),
      inst.scenarios.probability.data() + inst.scenarios.probability.size());
  sc["pv_max_kw"] = json::array();
  for (const auto& m : inst.scenarios.pv_max_kw) sc["pv_max_kw"].push_back(to_json(m));
  j["scenarios"] = std::move(sc);

  j["load_p_kw"] = to_json(inst.load_p_kw);
  j["load_q_kvar"] = to_json(inst.load_q_kvar);

  j["schedule"] = json::array();
  for (const auto& s : inst.schedule.stops)
    j["schedule"].push_back({s.ev, s.node, s.timespan});
  j["congestion"] = inst.congestion.congested;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file " + path);
  out << j.dump(1) << "\n";
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file " + path);
  json j;
  in >> j;
  if (j.value("schema", "") != kSchema)
    throw std::runtime_error(path + ": unsupported schema '" +
                             j.value("schema", "<missing>") + "'");

  topo::TransportNetwork tn;
  tn.nodes = j["transport"]["nodes"].get<std::vector<int>>();
  for (const auto& a : j["transport"]["arcs"])
    tn.arcs.push_back({a[0].get<int>(), a[1].get<int>(), a[2].get<int>()});
  tn.stations = j["transport"]["stations"].get<std::vector<int>>();
  for (const auto& od : j["transport"]["od_pairs"])
    tn.od_pairs.emplace_back(od[0].get<int>(), od[1].get<int>());
  tn.shift_pool_a = j["transport"]["pool_a"].get<std::vector<int>>();
  tn.shift_pool_b = j["transport"]["pool_b"].get<std::vector<int>>();

  grid::GridModel gm;
  gm.dn.buses = j["grid"]["buses"].get<std::vector<int>>();
  gm.dn.slack_bus = j["grid"]["slack_bus"];
  gm.dn.v_base_kv = j["grid"]["v_base_kv"];
  gm.dn.s_base_mva = j["grid"]["s_base_mva"];
  gm.dn.v_ref = j["grid"]["v_ref"];
  for (const auto& l : j["grid"]["lines"])
    gm.dn.lines.push_back({l[0].get<int>(), l[1].get<int>(), l[2].get<double>(),
                           l[3].get<double>(), l[4].get<double>(),
                           l[5].get<double>()});
  gm.dn.nominal_p_kw = j["grid"]["nominal_p_kw"].get<std::vector<double>>();
  gm.dn.nominal_q_kvar = j["grid"]["nominal_q_kvar"].get<std::vector<double>>();
  gm.dn.build_index();

  for (const auto& g : j["generators"])
    gm.generators.push_back({g["bus"], g["p_min_kw"], g["p_max_kw"], g["q_min_kvar"],
                             g["q_max_kvar"], g["cost_per_kwh"],
                             g.value("name", "")});
  for (const auto& p : j["pv_units"])
    gm.pv_units.push_back({p["bus"], p["capacity_kw"]});
  for (const auto& sb : j["station_bus"])
    gm.stations.bus_of_station[sb[0].get<int>()] = sb[1].get<int>();

  EvFleet fleet;
  fleet.loss_fraction = j["fleet"]["loss_fraction"];
  fleet.p_move_kw = j["fleet"]["p_move_kw"];
  for (const auto& ev : j["fleet"]["evs"])
    fleet.evs.push_back(
        {ev["e_min_kwh"], ev["e_max_kwh"], ev["e_init_kwh"], ev["p_max_kw"]});

  CostParams costs;
  costs.travel_per_arc = j["costs"]["travel_per_arc"];
  costs.charge_per_kwh = j["costs"]["charge_per_kwh"];
  costs.discharge_per_kwh = j["costs"]["discharge_per_kwh"];

  ScenarioSet scenarios;
  auto probs = j["scenarios"]["probability"].get<std::vector<double>>();
  scenarios.probability =
      Eigen::Map<Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));
  const int timesteps = j["timesteps"].get<int>();
  for (const auto& m : j["scenarios"]["pv_max_kw"]) {
    auto parsed = matrix_from(m);
    // A PV-less instance serializes 0 x |T| profiles as empty arrays, which
    // lose their column count; restore the horizon so shapes validate.
    if (parsed.rows() == 0) parsed.resize(0, timesteps);
    scenarios.pv_max_kw.push_back(std::move(parsed));
  }

  LoadProfiles loads;
  loads.p_kw = matrix_from(j["load_p_kw"]);
  loads.q_kvar = matrix_from(j["load_q_kvar"]);

  JobSchedule schedule;
  for (const auto& s : j["schedule"])
    schedule.stops.push_back({s[0].get<int>(), s[1].get<int>(), s[2].get<int>()});
  CongestionProfile congestion;
  congestion.congested = j["congestion"].get<std::vector<int>>();

  return assemble_instance(tn, gm, std::move(fleet), costs, std::move(scenarios),
                           std::move(loads), std::move(schedule),
                           std::move(congestion), j["timesteps"]);
}

}  // namespace jrsopt::scen
