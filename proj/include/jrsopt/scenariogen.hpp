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

#ifndef JRSOPT_SCENARIOGEN_HPP
#define JRSOPT_SCENARIOGEN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jrsopt/grid.hpp"
#include "jrsopt/topology.hpp"

namespace jrsopt::scen {

/// Per-timestep clamped-normal solar availability model fitted from a
/// days-by-timesteps history matrix (kW of one reference plant).
struct SolarModel {
  Eigen::VectorXd mean_kw;
  Eigen::VectorXd spread_kw;  // sample standard deviation
  double panel_max_kw = 0.0;  // clamp ceiling and scaling reference
};

/// Fits per-timestep mean and spread. Requires >= 2 rows, values >= 0.
SolarModel fit_solar_model(const Eigen::MatrixXd& history_kw, double panel_max_kw);

/// n independent profiles (rows), each timestep drawn from the fitted normal
/// and clamped into [0, panel max]. Pure in (model, n, seed).
Eigen::MatrixXd sample_solar(const SolarModel& model, int n, std::uint64_t seed);

/// Clear-sky bell curve times multiplicative day/step noise, for desk-scale
/// runs without external measurements.
Eigen::MatrixXd synth_solar_history(int days, int timesteps, double panel_max_kw,
                                    std::uint64_t seed);

/// days x |T| comma-separated matrix, '#' comments allowed.
Eigen::MatrixXd load_solar_history_csv(const std::string& path);

/// Weighted solar realizations. pv_max_kw[sc] is (PV units) x |T|.
struct ScenarioSet {
  Eigen::VectorXd probability;
  std::vector<Eigen::MatrixXd> pv_max_kw;

  int scenario_count() const { return static_cast<int>(probability.size()); }
  void validate() const;
};

/// Equal-probability scenarios; each PV unit gets the sampled reference
/// profile rescaled by its own capacity.
ScenarioSet make_scenarios(const SolarModel& model,
                           const std::vector<grid::PvUnit>& pv_units, int count,
                           std::uint64_t seed);

struct EvParams {
  double e_min_kwh = 5.0;
  double e_max_kwh = 60.0;
  double e_init_kwh = 50.0;
  double p_max_kw = 10.0;  // charge and discharge rate cap
};

struct EvFleet {
  std::vector<EvParams> evs;
  double loss_fraction = 0.05;  // charge/discharge loss
  double p_move_kw = 2.0;       // battery draw per traversed moving arc

  int size() const { return static_cast<int>(evs.size()); }
  void validate() const;
};

EvFleet uniform_fleet(int ev_count, const EvParams& params = {},
                      double loss_fraction = 0.05, double p_move_kw = 2.0);

struct CostParams {
  double travel_per_arc = 1.0;      // per moving-arc traversal
  double charge_per_kwh = 0.25;     // price EVs pay
  double discharge_per_kwh = 0.10;  // payment EVs receive

  void validate() const;
};

/// EV k must depart from `node` during timespan `timespan`.
struct JobStop {
  int ev = 0;
  int node = 0;
  int timespan = 0;
};

struct JobSchedule {
  std::vector<JobStop> stops;

  /// Checks node membership, timespan range, and one-stop-per-(ev, timespan).
  void validate(const topo::TransportNetwork& tn, int ev_count, int timespans) const;
  std::vector<JobStop> stops_for(int ev) const;
};

/// Day template: start/end od pair plus two shifts in fixed daytime windows,
/// pools swapped when the day starts at the alternate origin.
struct ScheduleTemplate {
  int window_a_begin_h = 6;
  int window_a_end_h = 12;
  int window_b_begin_h = 14;
  int window_b_end_h = 22;
  int max_resample = 200;  // rejection budget per EV
};

/// Samples one day of stops per EV, rejecting draws that are unreachable
/// even if every trip hits congestion. Pure in (inputs, seed).
JobSchedule sample_schedules(const topo::TransportNetwork& tn,
                             const ScheduleTemplate& tmpl, int ev_count,
                             int timesteps, std::uint64_t seed);

struct CongestionProfile {
  std::vector<int> congested;  // 0/1 per timespan

  bool is_congested(int timespan) const {
    return congested.at(static_cast<size_t>(timespan)) != 0;
  }
};

struct CongestionConfig {
  /// Hour windows [begin, end); a timespan is congested when its starting
  /// hour falls inside any window. Default: morning and evening peaks.
  std::vector<std::pair<int, int>> windows_h = {{7, 9}, {17, 19}};
  /// When >= 0, ignore windows and mark each timespan independently with
  /// this probability instead.
  double random_prob = -1.0;
};

CongestionProfile build_congestion_profile(const CongestionConfig& cfg,
                                           int timesteps,
                                           std::uint64_t seed = 0);

/// Per-bus daily profiles: nominal load times the shape curve (interpolated
/// to |T| points) times one uniform [0.9, 1.1] coefficient per bus.
struct LoadProfiles {
  Eigen::MatrixXd p_kw;    // buses x |T|
  Eigen::MatrixXd q_kvar;  // buses x |T|
};

/// 24-point daily shape curve resampled to `timesteps` by linear
/// interpolation on the hour axis.
Eigen::VectorXd resample_shape(const Eigen::VectorXd& shape24, int timesteps);
Eigen::VectorXd load_shape_file(const std::string& path);
Eigen::VectorXd default_load_shape();

LoadProfiles sample_load(const grid::DistributionNetwork& dn,
                         const Eigen::VectorXd& shape24, int timesteps,
                         std::uint64_t seed);

/// Everything one optimization run needs.
struct ProblemInstance {
  topo::TransportNetwork tn;
  topo::TimeSpaceNetwork tsn;
  grid::DistributionNetwork dn;
  std::vector<grid::Generator> generators;
  std::vector<grid::PvUnit> pv_units;
  grid::StationPlacement stations;
  EvFleet fleet;
  CostParams costs;
  ScenarioSet scenarios;
  Eigen::MatrixXd load_p_kw;    // buses x |T|
  Eigen::MatrixXd load_q_kvar;  // buses x |T|
  JobSchedule schedule;
  CongestionProfile congestion;
  int timesteps = 0;
};

/// Cross-checks horizon lengths, placements and component invariants, then
/// builds the time-space expansion. Throws std::invalid_argument on any
/// mismatch (profile length, unmapped station, bad probabilities, ...).
ProblemInstance assemble_instance(const topo::TransportNetwork& tn,
                                  const grid::GridModel& gm, EvFleet fleet,
                                  CostParams costs, ScenarioSet scenarios,
                                  LoadProfiles loads, JobSchedule schedule,
                                  CongestionProfile congestion, int timesteps);

/// Structured-text round trip with a schema version tag.
void save_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_instance(const std::string& path);

}  // namespace jrsopt::scen

#endif  // JRSOPT_SCENARIOGEN_HPP
