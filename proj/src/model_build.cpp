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
#include <stdexcept>

#include "jrsopt/mipcore.hpp"

namespace jrsopt::mip {

namespace {

// Instance scenario behind a model scenario index: a single-scenario build
// holds exactly that scenario at weight 1.
int instance_scenario(const MipModel& model, int sc) {
  return model.scenario < 0 ? sc : model.scenario;
}

}  // namespace

void add_routing_constraints(MipModel& model, const VariableIndex& vx,
                             const scen::ProblemInstance& inst) {
  const auto& tsn = inst.tsn;
  for (int sc = 0; sc < vx.scenario_count(); ++sc) {
    for (int k = 0; k < vx.ev_count(); ++k) {
      // One arc per timespan, drawn from the arcs the traffic state allows;
      // everything else is pinned to zero through its upper bound.
      for (int s = 0; s < vx.timespans(); ++s) {
        const auto& avail =
            topo::available_arcs(tsn, inst.congestion.is_congested(s));
        LinearConstraint row;
        row.sense = '=';
        row.rhs = 1.0;
        row.name = "route_one(" + std::to_string(sc) + "," + std::to_string(k) +
                   "," + std::to_string(s) + ")";
        for (int a : avail) {
          row.idx.push_back(vx.routing(sc, k, a, s));
          row.coef.push_back(1.0);
        }
        model.constraints.push_back(std::move(row));

        std::vector<char> in_avail(static_cast<size_t>(vx.arc_count()), 0);
        for (int a : avail) in_avail[static_cast<size_t>(a)] = 1;
        for (int a = 0; a < vx.arc_count(); ++a)
          if (!in_avail[static_cast<size_t>(a)])
            model.upper[static_cast<size_t>(vx.routing(sc, k, a, s))] = 0.0;
      }

      // Each EV resumes from the node it reached: departures at s+1 equal
      // arrivals at s, at every augmented node.
      for (size_t n = 0; n < tsn.nodes.size(); ++n) {
        for (int s = 0; s + 1 < vx.timespans(); ++s) {
          LinearConstraint row;
          row.sense = '=';
          row.rhs = 0.0;
          row.name = "flow(" + std::to_string(sc) + "," + std::to_string(k) + "," +
                     std::to_string(n) + "," + std::to_string(s) + ")";
          for (int a : tsn.out_arcs[n]) {
            row.idx.push_back(vx.routing(sc, k, a, s + 1));
            row.coef.push_back(1.0);
          }
          for (int a : tsn.in_arcs[n]) {
            row.idx.push_back(vx.routing(sc, k, a, s));
            row.coef.push_back(-1.0);
          }
          model.constraints.push_back(std::move(row));
        }
      }
    }

    // Job stops: the EV must depart from the scheduled node on the
    // scheduled timespan.
    for (const auto& stop : inst.schedule.stops) {
      int aug = tsn.augmented_index(stop.node);
      if (aug < 0)
        throw std::invalid_argument("schedule stop at unknown node " +
                                    std::to_string(stop.node));
      const auto& out = tsn.arcs_from(aug);
      if (out.empty())
        throw std::invalid_argument("schedule node " + std::to_string(stop.node) +
                                    " has no outgoing arcs");
      LinearConstraint row;
      row.sense = '=';
      row.rhs = 1.0;
      row.name = "stop(" + std::to_string(sc) + "," + std::to_string(stop.ev) + "," +
                 std::to_string(stop.node) + "," + std::to_string(stop.timespan) +
                 ")";
      for (int a : out) {
        row.idx.push_back(vx.routing(sc, stop.ev, a, stop.timespan));
        row.coef.push_back(1.0);
      }
      model.constraints.push_back(std::move(row));
    }
  }
}

void add_ev_energy_constraints(MipModel& model, const VariableIndex& vx,
                               const scen::ProblemInstance& inst) {
  const auto& tsn = inst.tsn;
  const double hours = 24.0 / vx.timesteps();
  const double eta = inst.fleet.loss_fraction;

  for (int sc = 0; sc < vx.scenario_count(); ++sc) {
    for (int k = 0; k < vx.ev_count(); ++k) {
      const auto& ev = inst.fleet.evs[static_cast<size_t>(k)];

      // Charging or discharging at t requires having parked on the
      // station's stationary arc over the preceding timespan.
      for (int ci = 0; ci < vx.station_count(); ++ci) {
        int node = inst.tn.stations[static_cast<size_t>(ci)];
        int ii = tsn.stationary_arc[static_cast<size_t>(inst.tn.node_order(node))];
        for (int s = 0; s < vx.timespans(); ++s) {
          LinearConstraint row;
          row.sense = '<';
          row.rhs = 0.0;
          row.name = "gate(" + std::to_string(sc) + "," + std::to_string(k) + "," +
                     std::to_string(ci) + "," + std::to_string(s + 1) + ")";
          row.idx = {vx.charge_flag(sc, k, ci, s + 1),
                     vx.discharge_flag(sc, k, ci, s + 1),
                     vx.routing(sc, k, ii, s)};
          row.coef = {1.0, 1.0, -1.0};
          model.constraints.push_back(std::move(row));
        }
      }

      // Travel draw equals the configured rate whenever a moving arc was
      // taken over the preceding timespan.
      for (int s = 0; s < vx.timespans(); ++s) {
        LinearConstraint row;
        row.sense = '=';
        row.rhs = 0.0;
        row.name = "travel(" + std::to_string(sc) + "," + std::to_string(k) + "," +
                   std::to_string(s + 1) + ")";
        row.idx.push_back(vx.pm(sc, k, s + 1));
        row.coef.push_back(1.0);
        for (int a : tsn.nsa_arcs) {
          row.idx.push_back(vx.routing(sc, k, a, s));
          row.coef.push_back(-inst.fleet.p_move_kw);
        }
        model.constraints.push_back(std::move(row));
      }

      // Rate caps bind power to the matching on/off flag.
      for (int ci = 0; ci < vx.station_count(); ++ci) {
        for (int t = 1; t < vx.timesteps(); ++t) {
          LinearConstraint cap;
          cap.sense = '<';
          cap.rhs = 0.0;
          cap.name = "rate_c(" + std::to_string(sc) + "," + std::to_string(k) + "," +
                     std::to_string(ci) + "," + std::to_string(t) + ")";
          cap.idx = {vx.pc(sc, k, ci, t), vx.charge_flag(sc, k, ci, t)};
          cap.coef = {1.0, -ev.p_max_kw};
          model.constraints.push_back(std::move(cap));

          LinearConstraint dap;
          dap.sense = '<';
          dap.rhs = 0.0;
          dap.name = "rate_d(" + std::to_string(sc) + "," + std::to_string(k) + "," +
                     std::to_string(ci) + "," + std::to_string(t) + ")";
          dap.idx = {vx.pd(sc, k, ci, t), vx.discharge_flag(sc, k, ci, t)};
          dap.coef = {1.0, -ev.p_max_kw};
          model.constraints.push_back(std::move(dap));
        }
      }

      // Battery bookkeeping: losses shrink what arrives and grow what
      // leaves; travel draw leaves the battery too.
      for (int t = 1; t < vx.timesteps(); ++t) {
        LinearConstraint row;
        row.sense = '=';
        row.rhs = 0.0;
        row.name = "energy(" + std::to_string(sc) + "," + std::to_string(k) + "," +
                   std::to_string(t) + ")";
        row.idx = {vx.energy(sc, k, t), vx.energy(sc, k, t - 1)};
        row.coef = {1.0, -1.0};
        for (int ci = 0; ci < vx.station_count(); ++ci) {
          row.idx.push_back(vx.pc(sc, k, ci, t));
          row.coef.push_back(-hours * (1.0 - eta));
          row.idx.push_back(vx.pd(sc, k, ci, t));
          row.coef.push_back(hours * (1.0 + eta));
        }
        row.idx.push_back(vx.pm(sc, k, t));
        row.coef.push_back(hours * (1.0 + eta));
        model.constraints.push_back(std::move(row));
      }
    }
  }
}

void add_generation_constraints(MipModel& model, const VariableIndex& vx,
                                const scen::ProblemInstance& inst) {
  // Pure box constraints, expressed through the variable bounds.
  for (int sc = 0; sc < vx.scenario_count(); ++sc) {
    int isc = instance_scenario(model, sc);
    for (size_t u = 0; u < inst.generators.size(); ++u) {
      const auto& g = inst.generators[u];
      for (int t = 0; t < vx.timesteps(); ++t) {
        model.lower[static_cast<size_t>(vx.pg(sc, static_cast<int>(u), t))] =
            g.p_min_kw;
        model.upper[static_cast<size_t>(vx.pg(sc, static_cast<int>(u), t))] =
            g.p_max_kw;
        model.lower[static_cast<size_t>(vx.qg(sc, static_cast<int>(u), t))] =
            g.q_min_kvar;
        model.upper[static_cast<size_t>(vx.qg(sc, static_cast<int>(u), t))] =
            g.q_max_kvar;
      }
    }
    for (size_t p = 0; p < inst.pv_units.size(); ++p) {
      const auto& avail = inst.scenarios.pv_max_kw[static_cast<size_t>(isc)];
      for (int t = 0; t < vx.timesteps(); ++t) {
        model.lower[static_cast<size_t>(vx.pv(sc, static_cast<int>(p), t))] = 0.0;
        model.upper[static_cast<size_t>(vx.pv(sc, static_cast<int>(p), t))] =
            avail(static_cast<Eigen::Index>(p), t);
      }
    }
  }
}

void add_network_constraints(MipModel& model, const VariableIndex& vx,
                             const scen::ProblemInstance& inst) {
  const auto& dn = inst.dn;
  auto radial = grid::validate_radial(dn);
  if (!radial.ok)
    throw std::invalid_argument("network constraints need a radial feeder: " +
                                radial.problems.front());

  // Stations grouped by their bus order.
  std::vector<std::vector<int>> stations_at_bus(dn.buses.size());
  for (int ci = 0; ci < vx.station_count(); ++ci) {
    int node = inst.tn.stations[static_cast<size_t>(ci)];
    int bus = inst.stations.bus_of_station.at(node);
    stations_at_bus[static_cast<size_t>(dn.bus_order(bus))].push_back(ci);
  }

  for (int sc = 0; sc < vx.scenario_count(); ++sc) {
    // Line flow boxes and the voltage envelope live in the bounds.
    for (size_t l = 0; l < dn.lines.size(); ++l) {
      for (int t = 0; t < vx.timesteps(); ++t) {
        model.lower[static_cast<size_t>(vx.pf(sc, static_cast<int>(l), t))] =
            -dn.lines[l].p_max_kw;
        model.upper[static_cast<size_t>(vx.pf(sc, static_cast<int>(l), t))] =
            dn.lines[l].p_max_kw;
        model.lower[static_cast<size_t>(vx.qf(sc, static_cast<int>(l), t))] =
            -dn.lines[l].q_max_kvar;
        model.upper[static_cast<size_t>(vx.qf(sc, static_cast<int>(l), t))] =
            dn.lines[l].q_max_kvar;
      }
    }
    int slack = dn.bus_order(dn.slack_bus);
    for (int b = 0; b < static_cast<int>(dn.buses.size()); ++b) {
      for (int t = 0; t < vx.timesteps(); ++t) {
        if (b == slack) {
          model.lower[static_cast<size_t>(vx.voltage(sc, b, t))] = dn.v_ref;
          model.upper[static_cast<size_t>(vx.voltage(sc, b, t))] = dn.v_ref;
        } else {
          model.lower[static_cast<size_t>(vx.voltage(sc, b, t))] = 0.95 * dn.v_ref;
          model.upper[static_cast<size_t>(vx.voltage(sc, b, t))] = 1.05 * dn.v_ref;
        }
      }
    }

    // Per-bus balances.
    for (int b = 0; b < static_cast<int>(dn.buses.size()); ++b) {
      for (int t = 0; t < vx.timesteps(); ++t) {
        LinearConstraint p_row;
        p_row.sense = '=';
        p_row.rhs = inst.load_p_kw(b, t);
        p_row.name = "p_bal(" + std::to_string(sc) + "," + std::to_string(b) + "," +
                     std::to_string(t) + ")";
        LinearConstraint q_row;
        q_row.sense = '=';
        q_row.rhs = inst.load_q_kvar(b, t);
        q_row.name = "q_bal(" + std::to_string(sc) + "," + std::to_string(b) + "," +
                     std::to_string(t) + ")";

        for (size_t u = 0; u < inst.generators.size(); ++u) {
          if (dn.bus_order(inst.generators[u].bus) != b) continue;
          p_row.idx.push_back(vx.pg(sc, static_cast<int>(u), t));
          p_row.coef.push_back(1.0);
          q_row.idx.push_back(vx.qg(sc, static_cast<int>(u), t));
          q_row.coef.push_back(1.0);
        }
        for (size_t p = 0; p < inst.pv_units.size(); ++p) {
          if (dn.bus_order(inst.pv_units[p].bus) != b) continue;
          p_row.idx.push_back(vx.pv(sc, static_cast<int>(p), t));
          p_row.coef.push_back(1.0);
        }
        int up = dn.up_line[static_cast<size_t>(b)];
        if (up >= 0) {
          p_row.idx.push_back(vx.pf(sc, up, t));
          p_row.coef.push_back(1.0);
          q_row.idx.push_back(vx.qf(sc, up, t));
          q_row.coef.push_back(1.0);
        }
        for (int l : dn.down_lines[static_cast<size_t>(b)]) {
          p_row.idx.push_back(vx.pf(sc, l, t));
          p_row.coef.push_back(-1.0);
          q_row.idx.push_back(vx.qf(sc, l, t));
          q_row.coef.push_back(-1.0);
        }
        if (t >= 1) {
          for (int ci : stations_at_bus[static_cast<size_t>(b)]) {
            for (int k = 0; k < vx.ev_count(); ++k) {
              p_row.idx.push_back(vx.pc(sc, k, ci, t));
              p_row.coef.push_back(-1.0);
              p_row.idx.push_back(vx.pd(sc, k, ci, t));
              p_row.coef.push_back(1.0);
            }
          }
        }
        model.constraints.push_back(std::move(p_row));
        model.constraints.push_back(std::move(q_row));
      }
    }

    // Voltage drop along every line, all quantities in per-unit.
    for (size_t l = 0; l < dn.lines.size(); ++l) {
      int up = dn.bus_order(dn.lines[l].up_bus);
      int down = dn.bus_order(dn.lines[l].down_bus);
      double pc = dn.r_pu(static_cast<int>(l)) / (dn.s_base_kw() * dn.v_ref);
      double qc = dn.x_pu(static_cast<int>(l)) / (dn.s_base_kw() * dn.v_ref);
      for (int t = 0; t < vx.timesteps(); ++t) {
        LinearConstraint row;
        row.sense = '=';
        row.rhs = 0.0;
        row.name = "vdrop(" + std::to_string(sc) + "," + std::to_string(l) + "," +
                   std::to_string(t) + ")";
        row.idx = {vx.voltage(sc, up, t), vx.voltage(sc, down, t),
                   vx.pf(sc, static_cast<int>(l), t),
                   vx.qf(sc, static_cast<int>(l), t)};
        row.coef = {1.0, -1.0, -pc, -qc};
        model.constraints.push_back(std::move(row));
      }
    }
  }
}

BuildResult build_model(const scen::ProblemInstance& inst, int scenario) {
  if (scenario >= inst.scenarios.scenario_count())
    throw std::invalid_argument("scenario index out of range");
  int sc_count = scenario < 0 ? inst.scenarios.scenario_count() : 1;
  VariableIndex vx(inst, sc_count);

  MipModel model;
  model.scenario = scenario;
  model.var_count = vx.total();
  model.lower.assign(static_cast<size_t>(vx.total()), 0.0);
  model.upper.assign(static_cast<size_t>(vx.total()), 0.0);
  model.objective.assign(static_cast<size_t>(vx.total()), 0.0);
  model.is_integer.assign(static_cast<size_t>(vx.total()), 0);

  // Binaries in [0, 1]; availability and fixings tighten from here.
  for (int i = 0; i < vx.binary_count(); ++i) {
    model.upper[static_cast<size_t>(i)] = 1.0;
    model.is_integer[static_cast<size_t>(i)] = 1;
  }

  for (int sc = 0; sc < sc_count; ++sc) {
    for (int k = 0; k < vx.ev_count(); ++k) {
      const auto& ev = inst.fleet.evs[static_cast<size_t>(k)];
      for (int ci = 0; ci < vx.station_count(); ++ci) {
        for (int t = 1; t < vx.timesteps(); ++t) {
          model.upper[static_cast<size_t>(vx.pc(sc, k, ci, t))] = ev.p_max_kw;
          model.upper[static_cast<size_t>(vx.pd(sc, k, ci, t))] = ev.p_max_kw;
        }
      }
      for (int t = 1; t < vx.timesteps(); ++t)
        model.upper[static_cast<size_t>(vx.pm(sc, k, t))] =
            inst.fleet.p_move_kw * static_cast<double>(inst.tsn.nsa_arcs.size());
      for (int t = 0; t < vx.timesteps(); ++t) {
        model.lower[static_cast<size_t>(vx.energy(sc, k, t))] = ev.e_min_kwh;
        model.upper[static_cast<size_t>(vx.energy(sc, k, t))] = ev.e_max_kwh;
      }
      // The day starts from the configured battery content.
      model.lower[static_cast<size_t>(vx.energy(sc, k, 0))] = ev.e_init_kwh;
      model.upper[static_cast<size_t>(vx.energy(sc, k, 0))] = ev.e_init_kwh;
    }
  }

  add_routing_constraints(model, vx, inst);
  add_ev_energy_constraints(model, vx, inst);
  add_generation_constraints(model, vx, inst);
  add_network_constraints(model, vx, inst);

  // Scenario-weighted cost of generation, travel, and net charging.
  for (int sc = 0; sc < sc_count; ++sc) {
    double w = scenario < 0 ? inst.scenarios.probability[sc] : 1.0;
    for (size_t u = 0; u < inst.generators.size(); ++u)
      for (int t = 0; t < vx.timesteps(); ++t)
        model.objective[static_cast<size_t>(vx.pg(sc, static_cast<int>(u), t))] +=
            w * inst.generators[u].cost_per_kwh;
    for (int k = 0; k < vx.ev_count(); ++k) {
      for (int a : inst.tsn.nsa_arcs)
        for (int s = 0; s < vx.timespans(); ++s)
          model.objective[static_cast<size_t>(vx.routing(sc, k, a, s))] +=
              w * inst.costs.travel_per_arc;
      for (int ci = 0; ci < vx.station_count(); ++ci) {
        for (int t = 1; t < vx.timesteps(); ++t) {
          model.objective[static_cast<size_t>(vx.pc(sc, k, ci, t))] +=
              w * inst.costs.charge_per_kwh;
          model.objective[static_cast<size_t>(vx.pd(sc, k, ci, t))] -=
              w * inst.costs.discharge_per_kwh;
        }
      }
    }
  }

  return {std::move(model), std::move(vx)};
}

void fix_binaries(MipModel& model, const PartialAssignment& assignment) {
  for (const auto& [idx, val] : assignment) {
    if (idx < 0 || idx >= model.var_count)
      throw std::invalid_argument("fixing index out of range");
    if (!model.is_integer[static_cast<size_t>(idx)])
      throw std::invalid_argument("fixing a non-binary variable " +
                                  std::to_string(idx));
    if (val != 0 && val != 1)
      throw std::invalid_argument("fixings must be 0 or 1");
    model.fixings.push_back({idx, model.lower[static_cast<size_t>(idx)],
                             model.upper[static_cast<size_t>(idx)]});
    model.lower[static_cast<size_t>(idx)] =
        std::max(model.lower[static_cast<size_t>(idx)], static_cast<double>(val));
    model.upper[static_cast<size_t>(idx)] =
        std::min(model.upper[static_cast<size_t>(idx)], static_cast<double>(val));
  }
}

void unfix_binaries(MipModel& model) {
  for (auto it = model.fixings.rbegin(); it != model.fixings.rend(); ++it) {
    model.lower[static_cast<size_t>(it->idx)] = it->lower;
    model.upper[static_cast<size_t>(it->idx)] = it->upper;
  }
  model.fixings.clear();
}

}  // namespace jrsopt::mip
