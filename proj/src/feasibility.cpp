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
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "jrsopt/mipcore.hpp"

namespace jrsopt::mip {

namespace {

// Tracks the worst relative violation per constraint family.
class Auditor {
 public:
  void family(const std::string& name) { worst_.try_emplace(name); }

  // Equation lhs = rhs.
  void equal(const std::string& family, double lhs, double rhs,
             const std::string& name) {
    record(family, std::abs(lhs - rhs), lhs, rhs, name);
  }

  // Inequality lhs <= rhs.
  void at_most(const std::string& family, double lhs, double rhs,
               const std::string& name) {
    record(family, std::max(0.0, lhs - rhs), lhs, rhs, name);
  }

  FeasibilityReport report(double tol) const {
    FeasibilityReport rep;
    rep.tol = tol;
    rep.max_violation = 0.0;
    for (const auto& [fam, w] : worst_) {
      rep.family_violation[fam] = w.rel;
      rep.max_violation = std::max(rep.max_violation, w.rel);
      if (w.rel > tol)
        rep.notes.push_back(fam + ": " + w.name + " off by " +
                            std::to_string(w.rel));
    }
    rep.ok = rep.max_violation <= tol;
    return rep;
  }

 private:
  struct Worst {
    double rel = 0.0;
    std::string name;
  };

  void record(const std::string& family, double viol, double lhs, double rhs,
              const std::string& name) {
    double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    double rel = viol / scale;
    auto& w = worst_[family];
    if (rel > w.rel) {
      w.rel = rel;
      w.name = name;
    }
  }

  std::map<std::string, Worst> worst_;
};

std::string tag(std::initializer_list<int> ids) {
  std::string out = "(";
  bool first = true;
  for (int v : ids) {
    if (!first) out += ",";
    out += std::to_string(v);
    first = false;
  }
  return out + ")";
}

}  // namespace

FeasibilityReport check_feasible(const scen::ProblemInstance& inst,
                                 const Solution& solution, double tol) {
  if (!has_values(solution.status))
    throw std::invalid_argument("solution carries no values to check");
  int sc_count =
      solution.scenario < 0 ? inst.scenarios.scenario_count() : 1;
  VariableIndex vx(inst, sc_count);
  if (solution.values.size() != vx.total())
    throw std::invalid_argument("solution vector does not match the instance");

  const auto& tsn = inst.tsn;
  const auto& dn = inst.dn;
  const double hours = 24.0 / vx.timesteps();
  const double eta = inst.fleet.loss_fraction;
  auto val = [&](int idx) { return solution.values[idx]; };

  Auditor audit;
  for (const char* fam :
       {"binary_integrality", "routing_choice", "flow", "schedule",
        "charge_gate", "travel_power", "rate", "energy_balance",
        "energy_bounds", "gen_bounds", "pv_bounds", "line_bounds", "p_balance",
        "q_balance", "voltage_drop", "v_bounds"})
    audit.family(fam);

  for (int sc = 0; sc < sc_count; ++sc) {
    int isc = solution.scenario < 0 ? sc : solution.scenario;

    // Binary variables land on 0 or 1.
    for (int k = 0; k < vx.ev_count(); ++k) {
      for (int a = 0; a < vx.arc_count(); ++a)
        for (int s = 0; s < vx.timespans(); ++s) {
          double v = val(vx.routing(sc, k, a, s));
          audit.equal("binary_integrality", v, std::round(v),
                      "I" + tag({sc, k, a, s}));
        }
      for (int ci = 0; ci < vx.station_count(); ++ci)
        for (int t = 1; t < vx.timesteps(); ++t) {
          double c = val(vx.charge_flag(sc, k, ci, t));
          double d = val(vx.discharge_flag(sc, k, ci, t));
          audit.equal("binary_integrality", c, std::round(c),
                      "Ic" + tag({sc, k, ci, t}));
          audit.equal("binary_integrality", d, std::round(d),
                      "Id" + tag({sc, k, ci, t}));
        }
    }

    for (int k = 0; k < vx.ev_count(); ++k) {
      const auto& ev = inst.fleet.evs[static_cast<size_t>(k)];

      // One available arc per timespan, nothing on forbidden arcs.
      for (int s = 0; s < vx.timespans(); ++s) {
        const auto& avail =
            topo::available_arcs(tsn, inst.congestion.is_congested(s));
        std::vector<char> ok(static_cast<size_t>(vx.arc_count()), 0);
        double total = 0.0;
        for (int a : avail) {
          ok[static_cast<size_t>(a)] = 1;
          total += val(vx.routing(sc, k, a, s));
        }
        audit.equal("routing_choice", total, 1.0, "route_one" + tag({sc, k, s}));
        for (int a = 0; a < vx.arc_count(); ++a)
          if (!ok[static_cast<size_t>(a)])
            audit.equal("routing_choice", val(vx.routing(sc, k, a, s)), 0.0,
                        "route_forbidden" + tag({sc, k, a, s}));
      }

      // Arrivals feed departures at every augmented node.
      for (size_t n = 0; n < tsn.nodes.size(); ++n)
        for (int s = 0; s + 1 < vx.timespans(); ++s) {
          double out = 0.0, in = 0.0;
          for (int a : tsn.out_arcs[n]) out += val(vx.routing(sc, k, a, s + 1));
          for (int a : tsn.in_arcs[n]) in += val(vx.routing(sc, k, a, s));
          audit.equal("flow", out, in,
                      "flow" + tag({sc, k, static_cast<int>(n), s}));
        }

      // Charging needs the station's stationary arc in the prior timespan.
      for (int ci = 0; ci < vx.station_count(); ++ci) {
        int node = inst.tn.stations[static_cast<size_t>(ci)];
        int ii =
            tsn.stationary_arc[static_cast<size_t>(inst.tn.node_order(node))];
        for (int s = 0; s < vx.timespans(); ++s) {
          double flags = val(vx.charge_flag(sc, k, ci, s + 1)) +
                         val(vx.discharge_flag(sc, k, ci, s + 1));
          audit.at_most("charge_gate", flags, val(vx.routing(sc, k, ii, s)),
                        "gate" + tag({sc, k, ci, s + 1}));
        }
      }

      // Travel power matches the moving arcs taken.
      for (int s = 0; s < vx.timespans(); ++s) {
        double moved = 0.0;
        for (int a : tsn.nsa_arcs) moved += val(vx.routing(sc, k, a, s));
        audit.equal("travel_power", val(vx.pm(sc, k, s + 1)),
                    inst.fleet.p_move_kw * moved, "travel" + tag({sc, k, s + 1}));
      }

      // Power rates sit inside their flags.
      for (int ci = 0; ci < vx.station_count(); ++ci)
        for (int t = 1; t < vx.timesteps(); ++t) {
          audit.at_most("rate", 0.0, val(vx.pc(sc, k, ci, t)),
                        "pc_nonneg" + tag({sc, k, ci, t}));
          audit.at_most("rate", val(vx.pc(sc, k, ci, t)),
                        ev.p_max_kw * val(vx.charge_flag(sc, k, ci, t)),
                        "rate_c" + tag({sc, k, ci, t}));
          audit.at_most("rate", 0.0, val(vx.pd(sc, k, ci, t)),
                        "pd_nonneg" + tag({sc, k, ci, t}));
          audit.at_most("rate", val(vx.pd(sc, k, ci, t)),
                        ev.p_max_kw * val(vx.discharge_flag(sc, k, ci, t)),
                        "rate_d" + tag({sc, k, ci, t}));
        }

      // Battery bookkeeping and limits.
      for (int t = 1; t < vx.timesteps(); ++t) {
        double pc_sum = 0.0, pd_sum = 0.0;
        for (int ci = 0; ci < vx.station_count(); ++ci) {
          pc_sum += val(vx.pc(sc, k, ci, t));
          pd_sum += val(vx.pd(sc, k, ci, t));
        }
        double expect = val(vx.energy(sc, k, t - 1)) +
                        hours * ((1.0 - eta) * pc_sum -
                                 (1.0 + eta) * (pd_sum + val(vx.pm(sc, k, t))));
        audit.equal("energy_balance", val(vx.energy(sc, k, t)), expect,
                    "energy" + tag({sc, k, t}));
      }
      audit.equal("energy_bounds", val(vx.energy(sc, k, 0)), ev.e_init_kwh,
                  "energy_init" + tag({sc, k}));
      for (int t = 0; t < vx.timesteps(); ++t) {
        audit.at_most("energy_bounds", ev.e_min_kwh, val(vx.energy(sc, k, t)),
                      "energy_min" + tag({sc, k, t}));
        audit.at_most("energy_bounds", val(vx.energy(sc, k, t)), ev.e_max_kwh,
                      "energy_max" + tag({sc, k, t}));
      }
    }

    // Job stops.
    for (const auto& stop : inst.schedule.stops) {
      int aug = tsn.augmented_index(stop.node);
      double out = 0.0;
      for (int a : tsn.arcs_from(aug))
        out += val(vx.routing(sc, stop.ev, a, stop.timespan));
      audit.equal("schedule", out, 1.0,
                  "stop" + tag({sc, stop.ev, stop.node, stop.timespan}));
    }

    // Generator and solar envelopes.
    for (size_t u = 0; u < inst.generators.size(); ++u) {
      const auto& g = inst.generators[u];
      for (int t = 0; t < vx.timesteps(); ++t) {
        int iu = static_cast<int>(u);
        audit.at_most("gen_bounds", g.p_min_kw, val(vx.pg(sc, iu, t)),
                      "pg_min" + tag({sc, iu, t}));
        audit.at_most("gen_bounds", val(vx.pg(sc, iu, t)), g.p_max_kw,
                      "pg_max" + tag({sc, iu, t}));
        audit.at_most("gen_bounds", g.q_min_kvar, val(vx.qg(sc, iu, t)),
                      "qg_min" + tag({sc, iu, t}));
        audit.at_most("gen_bounds", val(vx.qg(sc, iu, t)), g.q_max_kvar,
                      "qg_max" + tag({sc, iu, t}));
      }
    }
    for (size_t p = 0; p < inst.pv_units.size(); ++p) {
      const auto& cap = inst.scenarios.pv_max_kw[static_cast<size_t>(isc)];
      for (int t = 0; t < vx.timesteps(); ++t) {
        int ip = static_cast<int>(p);
        audit.at_most("pv_bounds", 0.0, val(vx.pv(sc, ip, t)),
                      "pv_min" + tag({sc, ip, t}));
        audit.at_most("pv_bounds", val(vx.pv(sc, ip, t)),
                      cap(static_cast<Eigen::Index>(p), t),
                      "pv_max" + tag({sc, ip, t}));
      }
    }

    // Branch flow envelopes.
    for (size_t l = 0; l < dn.lines.size(); ++l)
      for (int t = 0; t < vx.timesteps(); ++t) {
        int il = static_cast<int>(l);
        audit.at_most("line_bounds", std::abs(val(vx.pf(sc, il, t))),
                      dn.lines[l].p_max_kw, "pf" + tag({sc, il, t}));
        audit.at_most("line_bounds", std::abs(val(vx.qf(sc, il, t))),
                      dn.lines[l].q_max_kvar, "qf" + tag({sc, il, t}));
      }

    // Bus power balances.
    for (int b = 0; b < static_cast<int>(dn.buses.size()); ++b) {
      for (int t = 0; t < vx.timesteps(); ++t) {
        double p_in = 0.0, q_in = 0.0;
        for (size_t u = 0; u < inst.generators.size(); ++u) {
          if (dn.bus_order(inst.generators[u].bus) != b) continue;
          p_in += val(vx.pg(sc, static_cast<int>(u), t));
          q_in += val(vx.qg(sc, static_cast<int>(u), t));
        }
        for (size_t p = 0; p < inst.pv_units.size(); ++p)
          if (dn.bus_order(inst.pv_units[p].bus) == b)
            p_in += val(vx.pv(sc, static_cast<int>(p), t));
        int up = dn.up_line[static_cast<size_t>(b)];
        if (up >= 0) {
          p_in += val(vx.pf(sc, up, t));
          q_in += val(vx.qf(sc, up, t));
        }
        double p_out = inst.load_p_kw(b, t);
        double q_out = inst.load_q_kvar(b, t);
        for (int l : dn.down_lines[static_cast<size_t>(b)]) {
          p_out += val(vx.pf(sc, l, t));
          q_out += val(vx.qf(sc, l, t));
        }
        if (t >= 1) {
          for (int ci = 0; ci < vx.station_count(); ++ci) {
            int node = inst.tn.stations[static_cast<size_t>(ci)];
            if (dn.bus_order(inst.stations.bus_of_station.at(node)) != b)
              continue;
            for (int k = 0; k < vx.ev_count(); ++k)
              p_out += val(vx.pc(sc, k, ci, t)) - val(vx.pd(sc, k, ci, t));
          }
        }
        audit.equal("p_balance", p_in, p_out, "p_bal" + tag({sc, b, t}));
        audit.equal("q_balance", q_in, q_out, "q_bal" + tag({sc, b, t}));
      }
    }

    // Voltage drop along lines and the voltage envelope.
    for (size_t l = 0; l < dn.lines.size(); ++l) {
      int up = dn.bus_order(dn.lines[l].up_bus);
      int down = dn.bus_order(dn.lines[l].down_bus);
      int il = static_cast<int>(l);
      for (int t = 0; t < vx.timesteps(); ++t) {
        double drop = (dn.r_pu(il) * val(vx.pf(sc, il, t)) +
                       dn.x_pu(il) * val(vx.qf(sc, il, t))) /
                      (dn.s_base_kw() * dn.v_ref);
        audit.equal("voltage_drop", val(vx.voltage(sc, up, t)) - drop,
                    val(vx.voltage(sc, down, t)), "vdrop" + tag({sc, il, t}));
      }
    }
    int slack = dn.bus_order(dn.slack_bus);
    for (int b = 0; b < static_cast<int>(dn.buses.size()); ++b)
      for (int t = 0; t < vx.timesteps(); ++t) {
        double v = val(vx.voltage(sc, b, t));
        if (b == slack) {
          audit.equal("v_bounds", v, dn.v_ref, "v_slack" + tag({sc, b, t}));
        } else {
          audit.at_most("v_bounds", 0.95 * dn.v_ref, v, "v_min" + tag({sc, b, t}));
          audit.at_most("v_bounds", v, 1.05 * dn.v_ref, "v_max" + tag({sc, b, t}));
        }
      }
  }

  return audit.report(tol);
}

double objective_value(const scen::ProblemInstance& inst,
                       const Solution& solution) {
  if (!has_values(solution.status))
    throw std::invalid_argument("solution carries no values");
  int sc_count =
      solution.scenario < 0 ? inst.scenarios.scenario_count() : 1;
  VariableIndex vx(inst, sc_count);
  if (solution.values.size() != vx.total())
    throw std::invalid_argument("solution vector does not match the instance");
  auto val = [&](int idx) { return solution.values[idx]; };

  double total = 0.0;
  for (int sc = 0; sc < sc_count; ++sc) {
    double w = solution.scenario < 0 ? inst.scenarios.probability[sc] : 1.0;
    double part = 0.0;
    for (size_t u = 0; u < inst.generators.size(); ++u)
      for (int t = 0; t < vx.timesteps(); ++t)
        part += inst.generators[u].cost_per_kwh *
                val(vx.pg(sc, static_cast<int>(u), t));
    for (int k = 0; k < vx.ev_count(); ++k) {
      for (int a : inst.tsn.nsa_arcs)
        for (int s = 0; s < vx.timespans(); ++s)
          part += inst.costs.travel_per_arc * val(vx.routing(sc, k, a, s));
      for (int ci = 0; ci < vx.station_count(); ++ci)
        for (int t = 1; t < vx.timesteps(); ++t)
          part += inst.costs.charge_per_kwh * val(vx.pc(sc, k, ci, t)) -
                  inst.costs.discharge_per_kwh * val(vx.pd(sc, k, ci, t));
    }
    total += w * part;
  }
  return total;
}

namespace {

SolveStatus status_from_string(const std::string& s) {
  for (SolveStatus st :
       {SolveStatus::optimal, SolveStatus::gap_feasible,
        SolveStatus::time_limit_feasible, SolveStatus::infeasible,
        SolveStatus::timeout_no_solution, SolveStatus::backend_error})
    if (s == to_string(st)) return st;
  throw std::invalid_argument("unknown solve status '" + s + "'");
}

}  // namespace

void save_solution(const Solution& solution, const VariableIndex& vx,
                   const std::string& path) {
  nlohmann::json j;
  j["schema"] = "jrsopt-solution-1";
  j["status"] = to_string(solution.status);
  j["objective"] = solution.objective;
  j["mip_gap"] = solution.mip_gap;
  j["solve_seconds"] = solution.solve_seconds;
  j["scenario"] = solution.scenario;
  j["message"] = solution.message;
  j["x"] = std::vector<double>(solution.values.data(),
                               solution.values.data() + solution.values.size());
  // Names make the file auditable without the producing process.
  nlohmann::json named = nlohmann::json::object();
  for (int i = 0; i < static_cast<int>(solution.values.size()); ++i)
    named[vx.describe(i).name] = solution.values[i];
  j["named"] = std::move(named);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << "\n";
}

Solution load_solution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("schema", "") != "jrsopt-solution-1")
    throw std::runtime_error("not a solution file: " + path);
  Solution sol;
  sol.status = status_from_string(j.at("status").get<std::string>());
  sol.objective = j.value("objective", 0.0);
  sol.mip_gap = j.value("mip_gap", 0.0);
  sol.solve_seconds = j.value("solve_seconds", 0.0);
  sol.scenario = j.value("scenario", -1);
  sol.message = j.value("message", "");
  auto x = j.at("x").get<std::vector<double>>();
  sol.values = Eigen::Map<const Eigen::VectorXd>(
      x.data(), static_cast<Eigen::Index>(x.size()));
  return sol;
}

}  // namespace jrsopt::mip
