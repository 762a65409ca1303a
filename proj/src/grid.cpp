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

#include "jrsopt/grid.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace jrsopt::grid {

bool StationPlacement::covers(const std::vector<int>& station_nodes) const {
  return std::all_of(station_nodes.begin(), station_nodes.end(),
                     [&](int n) { return bus_of_station.count(n) > 0; });
}

int DistributionNetwork::bus_order(int bus_id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i] == bus_id) return static_cast<int>(i);
  return -1;
}

void DistributionNetwork::build_index() {
  down_lines.assign(buses.size(), {});
  up_line.assign(buses.size(), -1);
  for (size_t l = 0; l < lines.size(); ++l) {
    int up = bus_order(lines[l].up_bus);
    int down = bus_order(lines[l].down_bus);
    if (up < 0 || down < 0)
      throw std::invalid_argument("line " + std::to_string(l) +
                                  " references an unknown bus");
    down_lines[static_cast<size_t>(up)].push_back(static_cast<int>(l));
    if (up_line[static_cast<size_t>(down)] != -1) {
      // Kept, so validate_radial can name the offender; first wins here.
      continue;
    }
    up_line[static_cast<size_t>(down)] = static_cast<int>(l);
  }
}

double DistributionNetwork::r_pu(int line) const {
  return lines.at(static_cast<size_t>(line)).r_ohm / z_base_ohm();
}

double DistributionNetwork::x_pu(int line) const {
  return lines.at(static_cast<size_t>(line)).x_ohm / z_base_ohm();
}

RadialDiagnostics validate_radial(const DistributionNetwork& dn) {
  RadialDiagnostics diag;
  auto flag = [&](std::string msg) {
    diag.ok = false;
    diag.problems.push_back(std::move(msg));
  };

  int slack = dn.bus_order(dn.slack_bus);
  if (slack < 0) {
    flag("slack bus " + std::to_string(dn.slack_bus) + " is not in the bus set");
    return diag;
  }

  std::vector<int> upstream_count(dn.buses.size(), 0);
  for (const auto& l : dn.lines) {
    int d = dn.bus_order(l.down_bus);
    if (d < 0 || dn.bus_order(l.up_bus) < 0) {
      flag("line " + std::to_string(l.up_bus) + "-" + std::to_string(l.down_bus) +
           " references an unknown bus");
      return diag;
    }
    ++upstream_count[static_cast<size_t>(d)];
  }
  if (upstream_count[static_cast<size_t>(slack)] > 0)
    flag("slack bus " + std::to_string(dn.slack_bus) + " has an upstream line");
  for (size_t b = 0; b < dn.buses.size(); ++b) {
    if (static_cast<int>(b) != slack && upstream_count[b] > 1)
      flag("bus " + std::to_string(dn.buses[b]) + " has " +
           std::to_string(upstream_count[b]) + " upstream lines (cycle or mesh)");
  }

  // Reachability from the slack along up->down orientation.
  std::vector<bool> seen(dn.buses.size(), false);
  std::deque<int> queue{slack};
  seen[static_cast<size_t>(slack)] = true;
  while (!queue.empty()) {
    int b = queue.front();
    queue.pop_front();
    for (const auto& l : dn.lines) {
      if (dn.bus_order(l.up_bus) != b) continue;
      int d = dn.bus_order(l.down_bus);
      if (!seen[static_cast<size_t>(d)]) {
        seen[static_cast<size_t>(d)] = true;
        queue.push_back(d);
      }
    }
  }
  std::vector<int> unreachable;
  for (size_t b = 0; b < dn.buses.size(); ++b)
    if (!seen[b]) unreachable.push_back(dn.buses[b]);
  for (int b : unreachable) flag("bus " + std::to_string(b) + " unreachable");

  // A disconnected component whose buses all have an upstream line is a
  // cycle; name its members so the data file can be fixed.
  if (!unreachable.empty()) {
    std::vector<int> cycle;
    for (int b : unreachable)
      if (upstream_count[static_cast<size_t>(dn.bus_order(b))] >= 1)
        cycle.push_back(b);
    if (cycle.size() == unreachable.size() && !cycle.empty()) {
      std::string msg = "cycle through buses";
      for (int b : cycle) msg += " " + std::to_string(b);
      flag(msg);
    }
  }

  if (diag.ok && dn.lines.size() != dn.buses.size() - 1)
    flag("tree must have exactly " + std::to_string(dn.buses.size() - 1) +
         " lines, found " + std::to_string(dn.lines.size()));
  return diag;
}

GridModel load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file " + path);
  GridModel gm;
  gm.dn.buses.clear();
  std::map<int, double> loads_p, loads_q;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    auto fail = [&](const std::string& msg) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
    };
    if (kw == "base") {
      if (!(ls >> gm.dn.v_base_kv >> gm.dn.s_base_mva)) fail("base needs kV MVA");
      if (gm.dn.v_base_kv <= 0 || gm.dn.s_base_mva <= 0) fail("bases must be > 0");
    } else if (kw == "vref") {
      if (!(ls >> gm.dn.v_ref) || gm.dn.v_ref <= 0) fail("vref needs a positive pu value");
    } else if (kw == "slack") {
      if (!(ls >> gm.dn.slack_bus)) fail("slack needs a bus id");
    } else if (kw == "bus") {
      int id;
      if (!(ls >> id)) fail("bus needs an id");
      gm.dn.buses.push_back(id);
    } else if (kw == "line") {
      Line l;
      if (!(ls >> l.up_bus >> l.down_bus >> l.r_ohm >> l.x_ohm >> l.p_max_kw >>
            l.q_max_kvar))
        fail("line needs up down r x pmax qmax");
      if (l.r_ohm < 0 || l.x_ohm < 0) fail("line impedance must be >= 0");
      if (l.p_max_kw <= 0 || l.q_max_kvar <= 0) fail("line limits must be > 0");
      gm.dn.lines.push_back(l);
    } else if (kw == "load") {
      int bus;
      double p, q;
      if (!(ls >> bus >> p >> q)) fail("load needs bus p q");
      loads_p[bus] = p;
      loads_q[bus] = q;
    } else if (kw == "gen") {
      Generator g;
      if (!(ls >> g.bus >> g.p_min_kw >> g.p_max_kw >> g.q_min_kvar >>
            g.q_max_kvar >> g.cost_per_kwh))
        fail("gen needs bus pmin pmax qmin qmax cost");
      if (g.p_min_kw > g.p_max_kw || g.q_min_kvar > g.q_max_kvar)
        fail("generator bounds inverted");
      ls >> g.name;
      gm.generators.push_back(g);
    } else if (kw == "pv") {
      PvUnit p;
      if (!(ls >> p.bus >> p.capacity_kw)) fail("pv needs bus capacity");
      if (p.capacity_kw <= 0) fail("pv capacity must be > 0");
      gm.pv_units.push_back(p);
    } else if (kw == "stationbus") {
      int node, bus;
      if (!(ls >> node >> bus)) fail("stationbus needs node bus");
      gm.stations.bus_of_station[node] = bus;
    } else {
      fail("unknown record '" + kw + "'");
    }
  }
  if (gm.dn.buses.empty()) throw std::runtime_error(path + ": no buses");
  auto check_bus = [&](int b, const char* what) {
    if (gm.dn.bus_order(b) < 0)
      throw std::runtime_error(path + ": " + what + " references unknown bus " +
                               std::to_string(b));
  };
  for (const auto& g : gm.generators) check_bus(g.bus, "generator");
  for (const auto& p : gm.pv_units) check_bus(p.bus, "pv unit");
  for (const auto& [node, bus] : gm.stations.bus_of_station)
    check_bus(bus, "station map");
  for (const auto& [bus, p] : loads_p) check_bus(bus, "load");

  gm.dn.nominal_p_kw.assign(gm.dn.buses.size(), 0.0);
  gm.dn.nominal_q_kvar.assign(gm.dn.buses.size(), 0.0);
  for (const auto& [bus, p] : loads_p)
    gm.dn.nominal_p_kw[static_cast<size_t>(gm.dn.bus_order(bus))] = p;
  for (const auto& [bus, q] : loads_q)
    gm.dn.nominal_q_kvar[static_cast<size_t>(gm.dn.bus_order(bus))] = q;
  gm.dn.build_index();
  return gm;
}

}  // namespace jrsopt::grid
