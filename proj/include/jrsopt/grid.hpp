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

#ifndef JRSOPT_GRID_HPP
#define JRSOPT_GRID_HPP

#include <map>
#include <string>
#include <vector>

namespace jrsopt::grid {

/// One branch of the radial feeder. Impedances are stored in ohms as read
/// from the data file; per-unit values come from DistributionNetwork.
struct Line {
  int up_bus = 0;
  int down_bus = 0;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
  double p_max_kw = 0.0;    // |P^f| limit
  double q_max_kvar = 0.0;  // |Q^f| limit
};

/// Dispatchable generator. The slack interconnection is modelled as a
/// generator with wide symmetric bounds.
struct Generator {
  int bus = 0;
  double p_min_kw = 0.0;
  double p_max_kw = 0.0;
  double q_min_kvar = 0.0;
  double q_max_kvar = 0.0;
  double cost_per_kwh = 0.0;
  std::string name;
};

struct PvUnit {
  int bus = 0;
  double capacity_kw = 0.0;  // panel rating, clamps sampled availability
};

/// Couples transport charging stations to grid buses.
struct StationPlacement {
  std::map<int, int> bus_of_station;  // transport node -> bus id

  bool covers(const std::vector<int>& station_nodes) const;
};

struct RadialDiagnostics {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Radial feeder with per-unit bases. Buses keep their external ids; the
/// order of `buses` fixes the dense internal ordering used everywhere else.
struct DistributionNetwork {
  std::vector<int> buses;
  int slack_bus = 1;
  double v_base_kv = 12.66;
  double s_base_mva = 10.0;
  double v_ref = 1.0;  // per-unit slack voltage
  std::vector<Line> lines;

  // Nominal bus load at shape coefficient 1, in file order of `buses`.
  std::vector<double> nominal_p_kw;
  std::vector<double> nominal_q_kvar;

  // Derived by build_index().
  std::vector<std::vector<int>> down_lines;  // per bus order: L^down_b
  std::vector<int> up_line;                  // per bus order: l^up_b, -1 at slack

  int bus_order(int bus_id) const;  // dense index, -1 if unknown
  void build_index();

  double z_base_ohm() const { return v_base_kv * v_base_kv / s_base_mva; }
  double s_base_kw() const { return s_base_mva * 1000.0; }
  double r_pu(int line) const;
  double x_pu(int line) const;
};

/// Everything the loader reads from one network file.
struct GridModel {
  DistributionNetwork dn;
  std::vector<Generator> generators;
  std::vector<PvUnit> pv_units;
  StationPlacement stations;
};

/// Tree check rooted at the slack bus. Never throws; problems are named in
/// the diagnostics (unreachable bus, bus with two upstream lines, cycle).
RadialDiagnostics validate_radial(const DistributionNetwork& dn);

/// Reads the documented plain-text schema: `base`, `vref`, `slack`, `bus`,
/// `line`, `load`, `gen`, `pv`, `stationbus` records, '#' comments. Builds
/// indexes and validates bounds; radiality is reported by validate_radial.
GridModel load_grid(const std::string& path);

}  // namespace jrsopt::grid

#endif  // JRSOPT_GRID_HPP
